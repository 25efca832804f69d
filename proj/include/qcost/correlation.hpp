#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qcost/combine.hpp"
#include "qcost/plan.hpp"

namespace qcost {

/// Sample Pearson correlation coefficient. Requires n >= 2, equal lengths,
/// and positive variance on both sides.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Rank-based correlation: Pearson over average ranks (ties share the mean
/// rank of their run).
double spearman(std::span<const double> xs, std::span<const double> ys);

// Per-query split of actual and estimated plan cost into the backbone part
// (L, L') and the rest (I, I'). P = L + I, P' = L' + I'.
struct QueryCosts {
    double leaf_actual = 0.0;        // L
    double internal_actual = 0.0;    // I
    double leaf_estimate = 0.0;      // L'
    double internal_estimate = 0.0;  // I'

    double plan_actual() const { return leaf_actual + internal_actual; }
    double plan_estimate() const { return leaf_estimate + internal_estimate; }
};

struct WorkloadDecomposition {
    std::vector<QueryCosts> queries;
    std::optional<double> lambda;  // pivot scale shared by all estimates

    std::vector<double> leaf_actuals() const;
    std::vector<double> internal_actuals() const;
    std::vector<double> leaf_estimates() const;
    std::vector<double> internal_estimates() const;
    std::vector<double> plan_actuals() const;
    std::vector<double> plan_estimates() const;
};

/// Splits each plan's actual cost by backbone membership and each estimate's
/// total by contribution source. Plans and estimates are paired by position
/// and must agree on query ids; all estimates must share one pivot.
WorkloadDecomposition decompose(std::span<const QueryPlan> plans,
                                std::span<const CombinedEstimate> estimates,
                                const BackboneSet& backbone);

// Workload-level dispersion and correlation summary.
//   eta       = sigma_L  / sigma_I      eta_prime = sigma_L' / sigma_I'
//   alpha     = pearson(L, I)           beta      = pearson(L, I')
//   gamma     = pearson(I, I')
// Sample (n-1) normalization throughout. sigma_I and sigma_I' must be
// positive; a constant L is legal and yields eta = 0 with alpha = beta = 0
// (those correlations are then inert in every formula downstream).
struct CorrelationStats {
    double eta = 0.0;
    double eta_prime = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double sigma_L = 0.0;
    double sigma_I = 0.0;
    double sigma_Lp = 0.0;
    double sigma_Ip = 0.0;
    std::optional<double> lambda;
};

CorrelationStats stats(const WorkloadDecomposition& d);

/// Correlation between actual and estimated plan cost as a closed form of
/// the five workload statistics:
///   (eta*eta' + alpha*eta' + beta*eta + gamma)
///     / (sqrt(eta^2 + 2*alpha*eta + 1) * sqrt(eta'^2 + 2*beta*eta' + 1)).
/// Agrees exactly (up to rounding) with pearson(P, P').
double rho_closed_form(double eta, double eta_prime, double alpha, double beta, double gamma);

/// Worst-case lower bound over all correlation structures:
///   f = (eta*eta' - eta' - eta - 1) / ((eta+1) * (eta'+1)).
/// Certified only where f >= 0 (equivalently (eta-1)(eta'-1) >= 2): there
/// rho >= f for any alpha, beta, gamma in [-1, 1]. Where f < 0 the
/// inequality can fail (e.g. eta = 17.8, eta' = 0.75, alpha = 0.15,
/// beta = -0.999, gamma = -0.15 gives rho = -0.99 < f = -0.19); the only
/// universal floor there is rho >= -1.
double lower_bound_f(double eta, double eta_prime);

/// Lower bound when alpha, beta, gamma are all nonnegative:
///   g = eta/(eta+1) * eta'/(eta'+1). Strictly above f everywhere and valid
/// for every eta, eta' >= 0.
double lower_bound_g(double eta, double eta_prime);

/// Large-eta' limit of rho_closed_form:
///   (eta + alpha) / sqrt(eta^2 + 2*alpha*eta + 1).
double rho_approx(double eta, double alpha);

/// Smallest eta guaranteeing rho_approx > 1 - eps for the given alpha:
///   sqrt((1 - alpha^2) / (1/(1-eps)^2 - 1)) - alpha.
/// Requires 0 < eps < 1 and alpha <= 1 - eps.
double eta_0(double alpha, double eps);

struct EtaZeroMax {
    double eta0_max = 0.0;
    double argmax_alpha = 0.0;
};

/// Maximum of eta_0 over alpha in [-1, 1]:
///   eta0_max = 1 / sqrt(1 - (1-eps)^2) at alpha = -sqrt(1 - (1-eps)^2).
EtaZeroMax eta_0_max(double eps);

/// Maximum of eta_0 over nonnegative alpha, attained at alpha = 0:
///   (1 - eps) / sqrt(1 - (1-eps)^2). Strictly below eta_0_max(eps).
double eta_0_max_positive(double eps);

// Coefficients of rho as a function of eta':
//   rho(eta') = A * (B*eta' + C) / sqrt(eta'^2 + 2*beta*eta' + 1).
struct BoundTerms {
    double a = 0.0;  // 1 / sqrt(eta^2 + 2*alpha*eta + 1)
    double b = 0.0;  // eta + alpha
    double c = 0.0;  // beta*eta + gamma
};

BoundTerms bound_terms(double eta, double alpha, double beta, double gamma);

/// Stationary point of rho in eta':
///   ((1 - beta^2)*eta + (alpha - beta*gamma)) / (gamma - alpha*beta).
/// Throws when gamma == alpha*beta (no interior stationary point).
double eta_prime_0(double eta, double alpha, double beta, double gamma);

struct RhoExtrema {
    double stationary_eta_prime = 0.0;
    double rho_max = 0.0;     // value at the stationary point
    double rho_at_0 = 0.0;    // A*C
    double rho_at_inf = 0.0;  // A*B
    double rho_min = 0.0;     // min of the two boundary values
};

/// Range of rho over eta' >= 0 for fixed (eta, alpha, beta, gamma), valid for
/// eta >= 1 and 0 < beta, gamma < 1:
///   rho_max = sqrt(((eta+alpha)^2 + (gamma-alpha*beta)^2/(1-beta^2))
///                  / ((eta+alpha)^2 + (1-alpha^2))),
/// attained at eta_prime_0; the minimum sits at a boundary.
RhoExtrema rho_extrema_in_eta_prime(double eta, double alpha, double beta, double gamma);

}  // namespace qcost
