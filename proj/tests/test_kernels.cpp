#include <doctest.h>

#include <cmath>
#include <vector>

#include "qcost/kernels.hpp"
#include "qcost/rng.hpp"

using namespace qcost;
namespace k = qcost::kernels;

namespace {

// Long-double accumulation as the reference for the compensated kernels.
long double naive_sum_ld(const std::vector<double>& xs) {
    long double s = 0.0L;
    for (double x : xs) s += static_cast<long double>(x);
    return s;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double scale) {
    Rng rng(seed);
    std::vector<double> xs(n);
    for (auto& x : xs) x = scale * (rng.uniform01() - 0.3) * std::pow(10.0, rng.uniform(-3, 3));
    return xs;
}

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

struct BackendGuard {
    k::Backend saved = k::active_backend();
    ~BackendGuard() { k::set_backend(saved); }
};

}  // namespace

TEST_CASE("sum matches long-double reference across sizes") {
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 63u, 1000u, 10001u}) {
        const auto xs = random_values(n, 42 + n, 100.0);
        const double expected = static_cast<double>(naive_sum_ld(xs));
        CHECK(close_rel(k::sum(xs), expected, 1e-12));
    }
}

TEST_CASE("dot and deviation kernels match references") {
    const auto xs = random_values(1234, 7, 10.0);
    const auto ys = random_values(1234, 8, 10.0);

    long double dot_ref = 0.0L;
    for (std::size_t i = 0; i < xs.size(); ++i)
        dot_ref += static_cast<long double>(xs[i]) * ys[i];
    CHECK(close_rel(k::dot(xs, ys), static_cast<double>(dot_ref), 1e-12));

    const double mx = k::sum(xs) / static_cast<double>(xs.size());
    const double my = k::sum(ys) / static_cast<double>(ys.size());
    long double ss_ref = 0.0L, sp_ref = 0.0L;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const long double dx = static_cast<long double>(xs[i]) - mx;
        const long double dy = static_cast<long double>(ys[i]) - my;
        ss_ref += dx * dx;
        sp_ref += dx * dy;
    }
    CHECK(close_rel(k::sum_sq_dev(xs, mx), static_cast<double>(ss_ref), 1e-12));
    CHECK(close_rel(k::sum_dev_prod(xs, mx, ys, my), static_cast<double>(sp_ref), 1e-12));
}

TEST_CASE("compensation survives magnitude spread") {
    std::vector<double> xs = {1e16, 1.0, 1.0, -1e16};
    CHECK(k::sum(xs) == 2.0);
}

TEST_CASE("curve kernels match their formulas") {
    std::vector<double> grid;
    Rng rng(11);
    for (int i = 0; i < 1003; ++i) grid.push_back(rng.log_uniform(1e-6, 1e7));
    grid.push_back(0.0);

    const double a = 0.37, b = 2.5, c = 0.81, beta = 0.6;
    std::vector<double> out(grid.size());
    k::rho_vs_eta_prime(a, b, c, beta, grid, out);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double e = grid[i];
        const double expected = a * (b * e + c) / std::sqrt(e * e + 2 * beta * e + 1);
        CHECK(close_rel(out[i], expected, 1e-13));
    }

    const double alpha = -0.4;
    k::rho_vs_eta(alpha, grid, out);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double e = grid[i];
        const double expected = (e + alpha) / std::sqrt(e * e + 2 * alpha * e + 1);
        CHECK(close_rel(out[i], expected, 1e-13));
    }
}

TEST_CASE("scalar and avx2 backends agree") {
    if (!k::backend_available(k::Backend::Avx2)) {
        MESSAGE("avx2 unavailable on this machine; equivalence check skipped");
        return;
    }
    BackendGuard guard;

    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto xs = random_values(4097, seed, 50.0);
        const auto ys = random_values(4097, seed + 100, 50.0);
        const double mx = 0.25, my = -1.5;

        REQUIRE(k::set_backend(k::Backend::Scalar));
        const double sum_s = k::sum(xs);
        const double dot_s = k::dot(xs, ys);
        const double ssd_s = k::sum_sq_dev(xs, mx);
        const double sdp_s = k::sum_dev_prod(xs, mx, ys, my);
        std::vector<double> curve_s(xs.size());
        std::vector<double> abs_eta(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) abs_eta[i] = std::abs(xs[i]);
        k::rho_vs_eta_prime(0.4, 1.7, 0.3, 0.55, abs_eta, curve_s);

        REQUIRE(k::set_backend(k::Backend::Avx2));
        CHECK(close_rel(k::sum(xs), sum_s, 1e-13));
        CHECK(close_rel(k::dot(xs, ys), dot_s, 1e-13));
        CHECK(close_rel(k::sum_sq_dev(xs, mx), ssd_s, 1e-13));
        CHECK(close_rel(k::sum_dev_prod(xs, mx, ys, my), sdp_s, 1e-13));
        std::vector<double> curve_v(xs.size());
        k::rho_vs_eta_prime(0.4, 1.7, 0.3, 0.55, abs_eta, curve_v);
        for (std::size_t i = 0; i < curve_v.size(); ++i) {
            CHECK(close_rel(curve_v[i], curve_s[i], 1e-13));
        }
    }
}

TEST_CASE("backend selection is sticky and reversible") {
    BackendGuard guard;
    REQUIRE(k::set_backend(k::Backend::Scalar));
    CHECK(k::active_backend() == k::Backend::Scalar);
    CHECK(k::backend_name(k::active_backend()) == "scalar");
    if (k::backend_available(k::Backend::Avx2)) {
        REQUIRE(k::set_backend(k::Backend::Avx2));
        CHECK(k::active_backend() == k::Backend::Avx2);
    }
}
