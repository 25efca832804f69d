#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "qcost/correlation.hpp"
#include "qcost/feedback.hpp"
#include "qcost/plan.hpp"

namespace qcost {

// Target correlation structure over the triple (L, I, I'): the three
// off-diagonal entries of a symmetric unit-diagonal 3x3 matrix.
struct CorrTarget {
    double leaf_internal = 0.0;        // corr(L, I)
    double leaf_internal_est = 0.0;    // corr(L, I')
    double internal_internal_est = 0.0;  // corr(I, I')
};

/// True iff the implied 3x3 correlation matrix is positive semidefinite
/// (and all entries are in [-1, 1]).
bool correlation_feasible(const CorrTarget& t);

struct SynthScale {
    double mean_leaf = 0.0;
    double mean_internal = 0.0;
    double mean_internal_est = 0.0;
    double sd_leaf = 0.0;
    double sd_internal = 0.0;
    double sd_internal_est = 0.0;
};

struct SynthTripleSpec {
    int n_queries = 0;  // >= 2
    CorrTarget target_corr;
    SynthScale scale;   // positive means, nonnegative sds
    std::uint64_t seed = 0;
};

/// Samples per-query (L, I, I') triples with the target correlation via a
/// Cholesky transform of independent unit normals, resampling any query that
/// draws a negative component. L' is set to lambda * L. Realized statistics
/// are whatever stats() measures, not the targets. Deterministic under seed;
/// throws if the target matrix is not PSD or the rejection rate exceeds 50%.
WorkloadDecomposition synth_triples(const SynthTripleSpec& spec, double lambda);

// True per-kind cost functions over the same 4-term basis the models fit,
// plus observation noise. Backs both plan generation and the what-if oracle.
struct GroundTruth {
    std::map<OperatorKind, std::array<double, 4>> coefficients;
    double noise_sd = 0.0;  // ms

    /// Noise-free cost of the basis at fv; throws for an unknown kind.
    double eval(const OperatorKind& kind, const FeatureVector& fv) const;
};

// Optimizer cost emulation: unit_scale * (c0 + c1 * est_card_out) with
// kind-specific constants. The unit_scale keeps the emitted numbers on a
// deliberately different scale from actual milliseconds.
struct OptCostModel {
    std::map<OperatorKind, std::pair<double, double>> affine;  // kind -> (c0, c1)
    double unit_scale = 100.0;

    double eval(const OperatorKind& kind, double est_card_out) const;
};

struct PlanShape {
    int leaves_per_plan = 3;
    int internals_per_plan = 2;
};

struct CardRange {
    double lo = 10.0;
    double hi = 1e5;
};

/// Random annotated plans with full actuals: log-uniform leaf cardinalities,
/// actual cost from gt (plus Gaussian noise, clamped at zero), optimizer cost
/// from opt. Actual cardinalities equal the estimates. Deterministic under
/// seed; every plan passes validate().
std::vector<QueryPlan> synth_plans(int n_queries, const GroundTruth& gt, PlanShape shape,
                                   CardRange card_range, const OptCostModel& opt,
                                   std::uint64_t seed);

/// Built-in cost functions for the generator CLI: scans linear-ish in rows,
/// joins superlinear, seeks with a high per-row cost.
GroundTruth default_ground_truth(double noise_sd);

/// Built-in optimizer emulation, mis-scaled and blind to superlinear terms.
OptCostModel default_opt_cost_model();

}  // namespace qcost
