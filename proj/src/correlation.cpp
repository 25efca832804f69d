#include "qcost/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "qcost/error.hpp"
#include "qcost/kernels.hpp"

namespace qcost {

namespace {

double mean_of(std::span<const double> xs) {
    return kernels::sum(xs) / static_cast<double>(xs.size());
}

}  // namespace

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw Error("pearson: length mismatch (" + std::to_string(xs.size()) + " vs " +
                    std::to_string(ys.size()) + ")");
    if (xs.size() < 2) throw Error("pearson: need at least 2 points");
    const double mx = mean_of(xs);
    const double my = mean_of(ys);
    const double sxx = kernels::sum_sq_dev(xs, mx);
    const double syy = kernels::sum_sq_dev(ys, my);
    if (sxx <= 0.0) throw Error("pearson: zero variance in first sequence");
    if (syy <= 0.0) throw Error("pearson: zero variance in second sequence");
    const double sxy = kernels::sum_dev_prod(xs, mx, ys, my);
    return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

namespace {

// Average ranks, 1-based; tied runs share the mean rank of the run.
std::vector<double> average_ranks(std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error("spearman: length mismatch");
    if (xs.size() < 2) throw Error("spearman: need at least 2 points");
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    return pearson(rx, ry);
}

std::vector<double> WorkloadDecomposition::leaf_actuals() const {
    std::vector<double> v(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) v[i] = queries[i].leaf_actual;
    return v;
}
std::vector<double> WorkloadDecomposition::internal_actuals() const {
    std::vector<double> v(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) v[i] = queries[i].internal_actual;
    return v;
}
std::vector<double> WorkloadDecomposition::leaf_estimates() const {
    std::vector<double> v(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) v[i] = queries[i].leaf_estimate;
    return v;
}
std::vector<double> WorkloadDecomposition::internal_estimates() const {
    std::vector<double> v(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) v[i] = queries[i].internal_estimate;
    return v;
}
std::vector<double> WorkloadDecomposition::plan_actuals() const {
    std::vector<double> v(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) v[i] = queries[i].plan_actual();
    return v;
}
std::vector<double> WorkloadDecomposition::plan_estimates() const {
    std::vector<double> v(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) v[i] = queries[i].plan_estimate();
    return v;
}

WorkloadDecomposition decompose(std::span<const QueryPlan> plans,
                                std::span<const CombinedEstimate> estimates,
                                const BackboneSet& backbone) {
    if (plans.size() != estimates.size())
        throw Error("decompose: " + std::to_string(plans.size()) + " plans vs " +
                    std::to_string(estimates.size()) + " estimates");

    WorkloadDecomposition d;
    d.queries.reserve(plans.size());
    for (std::size_t i = 0; i < plans.size(); ++i) {
        const QueryPlan& plan = plans[i];
        const CombinedEstimate& est = estimates[i];
        if (plan.query_id != est.query_id)
            throw Error("decompose: plan " + plan.query_id + " paired with estimate for " +
                        est.query_id);
        if (est.pivot) {
            if (!d.lambda) {
                d.lambda = est.pivot->lambda;
            } else if (*d.lambda != est.pivot->lambda) {
                throw Error("decompose: estimate for " + est.query_id +
                            " was computed with a different pivot");
            }
        }

        QueryCosts q;
        q.leaf_actual = actual_leaf_cost(plan, backbone);
        q.internal_actual = actual_internal_cost(plan, backbone);
        std::vector<double> model_contrib;
        std::vector<double> opt_contrib;
        for (const auto& c : est.per_operator) {
            (c.source == CostSource::Model ? model_contrib : opt_contrib)
                .push_back(c.contribution);
        }
        q.leaf_estimate = kernels::sum(model_contrib);
        q.internal_estimate = kernels::sum(opt_contrib);
        d.queries.push_back(q);
    }
    return d;
}

CorrelationStats stats(const WorkloadDecomposition& d) {
    const std::size_t n = d.queries.size();
    if (n < 2) throw Error("stats: need at least 2 queries, got " + std::to_string(n));

    const auto leaf = d.leaf_actuals();
    const auto internal = d.internal_actuals();
    const auto leaf_est = d.leaf_estimates();
    const auto internal_est = d.internal_estimates();

    const double m_l = mean_of(leaf);
    const double m_i = mean_of(internal);
    const double m_lp = mean_of(leaf_est);
    const double m_ip = mean_of(internal_est);

    const double ss_l = kernels::sum_sq_dev(leaf, m_l);
    const double ss_i = kernels::sum_sq_dev(internal, m_i);
    const double ss_lp = kernels::sum_sq_dev(leaf_est, m_lp);
    const double ss_ip = kernels::sum_sq_dev(internal_est, m_ip);

    if (ss_i <= 0.0) throw Error("stats: sigma_I is zero (internal actual cost is constant)");
    if (ss_ip <= 0.0)
        throw Error("stats: sigma_I' is zero (internal estimated cost is constant)");

    const double denom = static_cast<double>(n - 1);
    CorrelationStats s;
    s.lambda = d.lambda;
    s.sigma_L = std::sqrt(ss_l / denom);
    s.sigma_I = std::sqrt(ss_i / denom);
    s.sigma_Lp = std::sqrt(ss_lp / denom);
    s.sigma_Ip = std::sqrt(ss_ip / denom);
    s.eta = s.sigma_L / s.sigma_I;
    s.eta_prime = s.sigma_Lp / s.sigma_Ip;

    // A constant L (or L') carries no correlation; the corresponding terms
    // are multiplied by eta (eta') = 0 everywhere downstream, so zero is the
    // inert choice.
    if (ss_l > 0.0) {
        s.alpha = kernels::sum_dev_prod(leaf, m_l, internal, m_i) /
                  (std::sqrt(ss_l) * std::sqrt(ss_i));
        s.beta = kernels::sum_dev_prod(leaf, m_l, internal_est, m_ip) /
                 (std::sqrt(ss_l) * std::sqrt(ss_ip));
    }
    s.gamma = kernels::sum_dev_prod(internal, m_i, internal_est, m_ip) /
              (std::sqrt(ss_i) * std::sqrt(ss_ip));
    return s;
}

double rho_closed_form(double eta, double eta_prime, double alpha, double beta, double gamma) {
    const double d1 = eta * eta + 2.0 * alpha * eta + 1.0;
    const double d2 = eta_prime * eta_prime + 2.0 * beta * eta_prime + 1.0;
    if (!(d1 > 0.0) || !(d2 > 0.0)) throw Error("rho_closed_form: zero denominator");
    return (eta * eta_prime + alpha * eta_prime + beta * eta + gamma) /
           (std::sqrt(d1) * std::sqrt(d2));
}

double lower_bound_f(double eta, double eta_prime) {
    return (eta * eta_prime - eta_prime - eta - 1.0) / ((eta + 1.0) * (eta_prime + 1.0));
}

double lower_bound_g(double eta, double eta_prime) {
    return (eta / (eta + 1.0)) * (eta_prime / (eta_prime + 1.0));
}

double rho_approx(double eta, double alpha) {
    const double d = eta * eta + 2.0 * alpha * eta + 1.0;
    if (!(d > 0.0)) throw Error("rho_approx: zero denominator (eta = 1, alpha = -1)");
    return (eta + alpha) / std::sqrt(d);
}

double eta_0(double alpha, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw Error("eta_0: eps must be in (0, 1)");
    if (!(alpha >= -1.0 && alpha <= 1.0 - eps))
        throw Error("eta_0: alpha must be in [-1, 1 - eps]");
    const double k = 1.0 / ((1.0 - eps) * (1.0 - eps)) - 1.0;
    return std::sqrt((1.0 - alpha * alpha) / k) - alpha;
}

EtaZeroMax eta_0_max(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw Error("eta_0_max: eps must be in (0, 1)");
    const double root = std::sqrt(1.0 - (1.0 - eps) * (1.0 - eps));
    return {1.0 / root, -root};
}

double eta_0_max_positive(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw Error("eta_0_max_positive: eps must be in (0, 1)");
    return (1.0 - eps) / std::sqrt(1.0 - (1.0 - eps) * (1.0 - eps));
}

BoundTerms bound_terms(double eta, double alpha, double beta, double gamma) {
    const double d = eta * eta + 2.0 * alpha * eta + 1.0;
    if (!(d > 0.0)) throw Error("bound_terms: degenerate (eta, alpha)");
    BoundTerms t;
    t.a = 1.0 / std::sqrt(d);
    t.b = eta + alpha;
    t.c = beta * eta + gamma;
    return t;
}

double eta_prime_0(double eta, double alpha, double beta, double gamma) {
    const double denom = gamma - alpha * beta;
    if (denom == 0.0) throw Error("eta_prime_0: no interior stationary point (gamma == alpha*beta)");
    if (!(eta + alpha > 0.0)) throw Error("eta_prime_0: requires eta + alpha > 0");
    return ((1.0 - beta * beta) * eta + (alpha - beta * gamma)) / denom;
}

RhoExtrema rho_extrema_in_eta_prime(double eta, double alpha, double beta, double gamma) {
    if (!(eta >= 1.0)) throw Error("rho_extrema_in_eta_prime: requires eta >= 1");
    if (!(beta > 0.0 && beta < 1.0 && gamma > 0.0 && gamma < 1.0))
        throw Error("rho_extrema_in_eta_prime: requires 0 < beta, gamma < 1");

    const BoundTerms t = bound_terms(eta, alpha, beta, gamma);
    RhoExtrema e;
    e.stationary_eta_prime = eta_prime_0(eta, alpha, beta, gamma);
    const double num = t.b * t.b + (gamma - alpha * beta) * (gamma - alpha * beta) /
                                       (1.0 - beta * beta);
    const double den = t.b * t.b + (1.0 - alpha * alpha);
    e.rho_max = std::sqrt(num / den);
    e.rho_at_0 = t.a * t.c;
    e.rho_at_inf = t.a * t.b;
    e.rho_min = std::min(e.rho_at_0, e.rho_at_inf);
    return e;
}

}  // namespace qcost
