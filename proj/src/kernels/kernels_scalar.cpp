// Scalar reference kernels. These define the semantics the SIMD backends
// must reproduce; keep them simple enough to audit by eye.

#include <cmath>
#include <span>

#include "kernels_impl.hpp"

namespace qcost::kernels::detail {
namespace {

double sum_scalar(std::span<const double> xs) {
    CompensatedSum acc;
    for (double x : xs) acc.add(x);
    return acc.value();
}

double dot_scalar(std::span<const double> xs, std::span<const double> ys) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < xs.size(); ++i) acc.add(xs[i] * ys[i]);
    return acc.value();
}

double sum_sq_dev_scalar(std::span<const double> xs, double mean) {
    CompensatedSum acc;
    for (double x : xs) {
        const double d = x - mean;
        acc.add(d * d);
    }
    return acc.value();
}

double sum_dev_prod_scalar(std::span<const double> xs, double mean_x,
                           std::span<const double> ys, double mean_y) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        acc.add((xs[i] - mean_x) * (ys[i] - mean_y));
    }
    return acc.value();
}

void rho_vs_eta_prime_scalar(double a, double b, double c, double beta,
                             std::span<const double> eta_prime,
                             std::span<double> out) {
    for (std::size_t i = 0; i < eta_prime.size(); ++i) {
        const double e = eta_prime[i];
        out[i] = a * (b * e + c) / std::sqrt(e * e + 2.0 * beta * e + 1.0);
    }
}

void rho_vs_eta_scalar(double alpha, std::span<const double> eta,
                       std::span<double> out) {
    for (std::size_t i = 0; i < eta.size(); ++i) {
        const double e = eta[i];
        out[i] = (e + alpha) / std::sqrt(e * e + 2.0 * alpha * e + 1.0);
    }
}

}  // namespace

const KernelTable scalar_table = {
    sum_scalar,        dot_scalar,
    sum_sq_dev_scalar, sum_dev_prod_scalar,
    rho_vs_eta_prime_scalar, rho_vs_eta_scalar,
};

}  // namespace qcost::kernels::detail
