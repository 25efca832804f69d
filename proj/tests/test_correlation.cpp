#include <doctest.h>

#include <cmath>
#include <vector>

#include "qcost/correlation.hpp"
#include "qcost/error.hpp"
#include "qcost/rng.hpp"
#include "qcost/synth.hpp"
#include "testutil.hpp"

using namespace qcost;

namespace {

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Random feasible correlation targets plus positive scales.
SynthTripleSpec random_spec(Rng& rng, int n) {
    SynthTripleSpec spec;
    spec.n_queries = n;
    do {
        spec.target_corr.leaf_internal = rng.uniform(-0.9, 0.9);
        spec.target_corr.leaf_internal_est = rng.uniform(-0.9, 0.9);
        spec.target_corr.internal_internal_est = rng.uniform(-0.9, 0.9);
    } while (!correlation_feasible(spec.target_corr));
    spec.scale.mean_leaf = rng.uniform(50.0, 500.0);
    spec.scale.mean_internal = rng.uniform(50.0, 500.0);
    spec.scale.mean_internal_est = rng.uniform(50.0, 500.0);
    spec.scale.sd_leaf = rng.uniform(1.0, spec.scale.mean_leaf / 4.0);
    spec.scale.sd_internal = rng.uniform(1.0, spec.scale.mean_internal / 4.0);
    spec.scale.sd_internal_est = rng.uniform(1.0, spec.scale.mean_internal_est / 4.0);
    spec.seed = rng.next();
    return spec;
}

}  // namespace

TEST_CASE("pearson on hand-checked sequences") {
    const std::vector<double> a = {1, 2, 3};
    CHECK(pearson(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<double> neg = {-1, -2, -3};
    CHECK(pearson(a, neg) == doctest::Approx(-1.0).epsilon(1e-12));

    const std::vector<double> xs = {1, 2, 3, 4};
    const std::vector<double> ys = {1, 3, 2, 4};
    CHECK(pearson(xs, ys) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("pearson error paths") {
    const std::vector<double> xs = {1, 2, 3};
    const std::vector<double> flat = {5, 5, 5};
    const std::vector<double> two = {1, 2};
    const std::vector<double> one = {1};
    CHECK_THROWS_WITH_AS(pearson(xs, flat), doctest::Contains("zero variance"), Error);
    CHECK_THROWS_WITH_AS(pearson(xs, two), doctest::Contains("length mismatch"), Error);
    CHECK_THROWS_AS(pearson(one, one), Error);
}

TEST_CASE("spearman is invariant under monotone maps and handles ties") {
    std::vector<double> xs;
    std::vector<double> ys;
    for (int i = 0; i < 20; ++i) {
        xs.push_back(0.3 * i);
        ys.push_back(std::exp(0.3 * i));
    }
    CHECK(spearman(xs, ys) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> rev(xs.rbegin(), xs.rend());
    CHECK(spearman(xs, rev) == doctest::Approx(-1.0).epsilon(1e-12));

    const std::vector<double> tx = {1, 1, 2};
    const std::vector<double> ty = {3, 3, 5};
    CHECK(spearman(tx, ty) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stats on the two-point workload") {
    WorkloadDecomposition d;
    d.queries = {{1, 1, 2, 1}, {2, 2, 4, 2}};
    const CorrelationStats s = stats(d);
    CHECK(s.alpha == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.beta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.gamma == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.eta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.eta_prime == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("constant leaf cost gives eta = 0, constant internal cost errors") {
    WorkloadDecomposition d;
    d.queries = {{5, 1, 10, 2}, {5, 2, 10, 4}, {5, 3, 10, 6}};
    const CorrelationStats s = stats(d);
    CHECK(s.eta == 0.0);
    CHECK(s.eta_prime == 0.0);
    CHECK(s.alpha == 0.0);
    CHECK(s.beta == 0.0);
    CHECK(s.gamma == doctest::Approx(1.0).epsilon(1e-12));

    WorkloadDecomposition bad;
    bad.queries = {{1, 7, 2, 1}, {2, 7, 4, 2}};
    CHECK_THROWS_WITH_AS(stats(bad), doctest::Contains("sigma_I"), Error);

    WorkloadDecomposition bad2;
    bad2.queries = {{1, 1, 2, 3}, {2, 2, 4, 3}};
    CHECK_THROWS_WITH_AS(stats(bad2), doctest::Contains("sigma_I'"), Error);
}

TEST_CASE("doubling the estimated internal cost leaves gamma at 1") {
    WorkloadDecomposition d;
    d.queries = {{1, 1, 0, 2}, {2, 3, 0, 6}, {3, 2, 0, 4}, {1, 5, 0, 10}};
    const CorrelationStats s = stats(d);
    CHECK(s.gamma == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("decompose splits the worked example") {
    const QueryPlan plan = testutil::example_plan(/*with_internal_actuals=*/true);
    const CombinedEstimate est =
        combine(plan, testutil::example_models(), testutil::example_pivot());
    const WorkloadDecomposition d =
        decompose(std::vector{plan}, std::vector{est}, default_backbone());
    REQUIRE(d.queries.size() == 1);
    CHECK(d.queries[0].leaf_actual == 35.0);
    CHECK(d.queries[0].internal_actual == 150.0);
    CHECK(d.queries[0].leaf_estimate == 350.0);
    CHECK(d.queries[0].internal_estimate == 800.0);
    REQUIRE(d.lambda.has_value());
    CHECK(*d.lambda == 10.0);
}

TEST_CASE("decompose with no models puts everything in the optimizer part") {
    const QueryPlan plan = testutil::example_plan(true);
    const CombinedEstimate est = combine(plan, ModelSet{}, std::nullopt);
    const WorkloadDecomposition d =
        decompose(std::vector{plan}, std::vector{est}, default_backbone());
    CHECK(d.queries[0].leaf_estimate == 0.0);
    CHECK(d.queries[0].internal_estimate == est.total);
    CHECK_FALSE(d.lambda.has_value());
}

TEST_CASE("decompose rejects mismatched pivots") {
    const QueryPlan plan = testutil::example_plan(true);
    const auto models = testutil::example_models();
    const CombinedEstimate a = combine(plan, models, testutil::example_pivot());
    const CombinedEstimate b = combine(plan, models, PivotChoice::make(9, 100.0, 20.0));
    CHECK_THROWS_WITH_AS(
        decompose(std::vector{plan, plan}, std::vector{a, b}, default_backbone()),
        doctest::Contains("different pivot"), Error);
}

TEST_CASE("closed form matches direct correlation on synthetic workloads") {
    Rng rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        const SynthTripleSpec spec = random_spec(rng, 200);
        const WorkloadDecomposition d = synth_triples(spec, rng.uniform(0.5, 40.0));
        const CorrelationStats s = stats(d);
        const double direct = pearson(d.plan_actuals(), d.plan_estimates());
        const double closed = rho_closed_form(s.eta, s.eta_prime, s.alpha, s.beta, s.gamma);
        CHECK(close_rel(closed, direct, 1e-9));
    }
}

TEST_CASE("closed form spot values") {
    // alpha = beta = gamma = 0: rho = eta*eta' / sqrt((eta^2+1)(eta'^2+1)).
    CHECK(rho_closed_form(1.0, 1.0, 0, 0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rho_closed_form(1e9, 1e9, 0, 0, 0) == doctest::Approx(1.0).epsilon(1e-8));
    // Degenerate dispersions: only the internal correlation remains.
    CHECK(rho_closed_form(0.0, 0.0, 0.3, -0.2, 0.77) == doctest::Approx(0.77).epsilon(1e-12));
}

TEST_CASE("lower bound values at the reference points") {
    const double inf = 1e12;
    CHECK(close(lower_bound_f(10.0, inf), 9.0 / 11.0, 1e-9));
    CHECK(close(lower_bound_g(10.0, inf), 10.0 / 11.0, 1e-9));
    CHECK(close(lower_bound_f(18.8, inf), 17.8 / 19.8, 1e-9));
    CHECK(close(lower_bound_g(18.8, inf), 18.8 / 19.8, 1e-9));
    CHECK(lower_bound_f(0.0, 0.0) == -1.0);
    CHECK(lower_bound_g(0.0, 0.0) == 0.0);
}

TEST_CASE("bounds hold on their validity domains for every sampled workload") {
    Rng rng(808);
    int f_in_domain = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const SynthTripleSpec spec = random_spec(rng, 150);
        const WorkloadDecomposition d = synth_triples(spec, rng.uniform(0.5, 20.0));
        const CorrelationStats s = stats(d);
        const double rho = pearson(d.plan_actuals(), d.plan_estimates());
        const double f = lower_bound_f(s.eta, s.eta_prime);
        if (f >= 0.0) {
            CHECK(rho >= f - 1e-9);
            ++f_in_domain;
        }
        CHECK(rho >= -1.0 - 1e-12);
        if (s.alpha >= 0 && s.beta >= 0 && s.gamma >= 0) {
            CHECK(rho >= lower_bound_g(s.eta, s.eta_prime) - 1e-9);
        }
    }
    CHECK(f_in_domain > 0);
}

TEST_CASE("outside its domain the f bound genuinely fails") {
    // Feasible statistics with a strongly negative leaf-to-estimate
    // correlation: the correlation lands near -1 while f is only -0.19.
    const double eta = 17.8435, eta_prime = 0.75272;
    const double alpha = 0.15334, beta = -0.99942, gamma = -0.15256;
    REQUIRE(correlation_feasible({alpha, beta, gamma}));
    const double rho = rho_closed_form(eta, eta_prime, alpha, beta, gamma);
    const double f = lower_bound_f(eta, eta_prime);
    CHECK(f < 0.0);      // outside the certified domain
    CHECK(rho < f);      // and the naive inequality indeed fails there
    CHECK(rho >= -1.0);  // the universal floor still holds
}

TEST_CASE("g dominates f and both grow in each argument") {
    for (double eta = 0.0; eta <= 40.0; eta += 0.8) {
        for (double ep = 0.0; ep <= 40.0; ep += 0.8) {
            const double f = lower_bound_f(eta, ep);
            const double g = lower_bound_g(eta, ep);
            CHECK(g > f);
            CHECK(lower_bound_f(eta + 0.4, ep) >= f - 1e-15);
            CHECK(lower_bound_f(eta, ep + 0.4) >= f - 1e-15);
            CHECK(lower_bound_g(eta + 0.4, ep) >= g - 1e-15);
            CHECK(lower_bound_g(eta, ep + 0.4) >= g - 1e-15);
        }
    }
}

TEST_CASE("large-eta' approximation endpoints") {
    CHECK(rho_approx(0.0, 0.4) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(rho_approx(1e9, -0.7) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(rho_approx(1.0, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(rho_approx(1.0, -1.0), Error);
}

TEST_CASE("rho_approx is monotone in eta and pinched between alpha and 1") {
    for (const double alpha : {-0.9, -0.5, 0.0, 0.4, 0.9}) {
        double prev = rho_approx(0.0, alpha);
        for (int i = 1; i <= 2000; ++i) {
            const double eta = 0.02 * i;
            const double rho = rho_approx(eta, alpha);
            CHECK(rho >= prev - 1e-12);
            CHECK(rho >= alpha - 1e-12);
            CHECK(rho <= 1.0 + 1e-12);
            prev = rho;
        }
    }
}

TEST_CASE("closed form converges to the approximation as eta' grows") {
    for (const double eta : {0.0, 0.5, 1.0, 5.0, 50.0}) {
        for (const double alpha : {-0.9, 0.0, 0.9}) {
            for (const double beta : {-0.99, -0.3, 0.3, 0.99}) {
                for (const double gamma : {-0.99, 0.0, 0.99}) {
                    const double gap = std::abs(
                        rho_closed_form(eta, 1e6, alpha, beta, gamma) - rho_approx(eta, alpha));
                    CHECK(gap < 1e-4);
                }
            }
        }
    }
}

TEST_CASE("eta_0 reference values and boundary identity") {
    // Exact value 3.04243...; the common 3-decimal citation is 3.043.
    CHECK(close(eta_0(0.0, 0.05), 3.0424349222966547, 1e-12));
    CHECK(close(eta_0(0.0, 0.05), 3.043, 1e-3));
    CHECK(close(eta_0(-0.31, 0.05), 3.2, 5e-3));

    Rng rng(19);
    for (int i = 0; i < 100; ++i) {
        const double eps = rng.uniform(0.001, 0.5);
        const double alpha = rng.uniform(-0.999, 1.0 - eps);
        const double e0 = eta_0(alpha, eps);
        CHECK(close(rho_approx(e0, alpha), 1.0 - eps, 1e-9));
        CHECK(rho_approx(e0 + 1e-6, alpha) > 1.0 - eps);
    }

    // alpha at the upper admissible end: the defining equality still holds.
    const double eps = 0.05;
    const double e0 = eta_0(1.0 - eps, eps);
    CHECK(close(rho_approx(e0, 1.0 - eps), 1.0 - eps, 1e-9));

    CHECK_THROWS_AS(eta_0(0.99, 0.05), Error);
    CHECK_THROWS_AS(eta_0(0.0, 1.5), Error);
}

TEST_CASE("eta_0_max reference values and dominance") {
    const EtaZeroMax m5 = eta_0_max(0.05);
    CHECK(close(m5.eta0_max, 3.2, 0.05));
    CHECK(close(m5.argmax_alpha, -0.31, 0.05));
    const EtaZeroMax m1 = eta_0_max(0.01);
    CHECK(close(m1.eta0_max, 7.1, 0.05));
    CHECK(close(m1.argmax_alpha, -0.14, 0.05));
    CHECK(close(eta_0_max(0.999999).eta0_max, 1.0, 1e-3));

    Rng rng(23);
    for (int i = 0; i < 200; ++i) {
        const double eps = rng.uniform(0.001, 0.5);
        const EtaZeroMax m = eta_0_max(eps);
        const double alpha = rng.uniform(-1.0, 1.0 - eps);
        CHECK(eta_0(alpha, eps) <= m.eta0_max + 1e-9);
        CHECK(close(eta_0(m.argmax_alpha, eps), m.eta0_max, 1e-6));
    }
}

TEST_CASE("positive-alpha maximum sits below the global one and converges to it") {
    for (int i = 1; i <= 50; ++i) {
        const double eps = i * 0.01;
        CHECK(eta_0_max_positive(eps) < eta_0_max(eps).eta0_max);
        CHECK(close(eta_0_max_positive(eps), eta_0(0.0, eps), 1e-12));
    }
    const double tiny = 1e-6;
    CHECK(eta_0_max_positive(tiny) / eta_0_max(tiny).eta0_max > 0.999);
}

TEST_CASE("stationary point of rho in eta_prime") {
    CHECK(close(eta_prime_0(2.0, 0.5, 0.3, 0.6), 2.14 / 0.45, 1e-9));
    // beta = 0 simplifies to (eta + alpha) / gamma.
    CHECK(close(eta_prime_0(3.0, 0.2, 0.0, 0.4), 3.2 / 0.4, 1e-12));
    CHECK_THROWS_WITH_AS(eta_prime_0(2.0, 0.5, 0.4, 0.2),
                         doctest::Contains("no interior stationary point"), Error);

    // Cross-check as a stationary point by central difference.
    const double eta = 2.0, alpha = 0.5, beta = 0.3, gamma = 0.6;
    const double e0 = eta_prime_0(eta, alpha, beta, gamma);
    const double h = 1e-4 * e0;
    const double slope = (rho_closed_form(eta, e0 + h, alpha, beta, gamma) -
                          rho_closed_form(eta, e0 - h, alpha, beta, gamma)) /
                         (2 * h);
    CHECK(std::abs(slope) < 1e-6);
}

TEST_CASE("rho extrema over eta_prime") {
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(rho_extrema_in_eta_prime(0.5, 0.0, 0.5, 0.5), Error);
        CHECK_THROWS_AS(rho_extrema_in_eta_prime(2.0, 0.0, 1.5, 0.5), Error);
    }
    SUBCASE("maximum dominates the boundary value at zero") {
        Rng rng(31);
        for (int i = 0; i < 100; ++i) {
            CorrTarget t;
            double eta;
            do {
                t.leaf_internal = rng.uniform(-0.99, 0.99);
                t.leaf_internal_est = rng.uniform(0.01, 0.99);
                t.internal_internal_est = rng.uniform(0.01, 0.99);
            } while (!correlation_feasible(t) ||
                     t.internal_internal_est == t.leaf_internal * t.leaf_internal_est);
            eta = rng.uniform(1.0, 30.0);
            const RhoExtrema e = rho_extrema_in_eta_prime(eta, t.leaf_internal,
                                                          t.leaf_internal_est,
                                                          t.internal_internal_est);
            CHECK(e.rho_max >= e.rho_at_0 - 1e-12);
            CHECK(e.rho_max >= e.rho_at_inf - 1e-12);
            CHECK(e.rho_min == std::min(e.rho_at_0, e.rho_at_inf));
        }
    }
    SUBCASE("boundary values coincide when beta*eta + gamma = eta + alpha") {
        // eta = 1 with beta = gamma and 2*beta = 1 + alpha.
        const double alpha = 0.5, beta = 0.75, gamma = 0.75;
        const RhoExtrema e = rho_extrema_in_eta_prime(1.0, alpha, beta, gamma);
        CHECK(close(e.rho_at_0, e.rho_at_inf, 1e-12));
        CHECK(close(e.rho_at_0, 1.5 / std::sqrt(3.0), 1e-12));
    }
    SUBCASE("grid scan stays inside the analytic range") {
        Rng rng(37);
        std::vector<double> grid;
        grid.push_back(0.0);
        for (int i = 0; i < 20000; ++i) grid.push_back(std::exp(rng.uniform(-8.0, 13.8)));
        for (int i = 0; i < 25; ++i) {
            CorrTarget t;
            do {
                t.leaf_internal = rng.uniform(-0.99, 0.99);
                t.leaf_internal_est = rng.uniform(0.01, 0.99);
                t.internal_internal_est = rng.uniform(0.01, 0.99);
            } while (!correlation_feasible(t));
            const double eta = rng.uniform(1.0, 25.0);
            const RhoExtrema e = rho_extrema_in_eta_prime(eta, t.leaf_internal,
                                                          t.leaf_internal_est,
                                                          t.internal_internal_est);
            for (const double ep : grid) {
                const double rho = rho_closed_form(eta, ep, t.leaf_internal,
                                                   t.leaf_internal_est,
                                                   t.internal_internal_est);
                CHECK(rho <= e.rho_max + 1e-9);
                CHECK(rho >= e.rho_min - 1e-9);
            }
        }
    }
}
