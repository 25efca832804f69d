#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qcost/combine.hpp"
#include "qcost/plan.hpp"
#include "qcost/synth.hpp"

namespace qcost {

struct IndexConfiguration {
    std::string id;                  // nonempty
    std::set<std::string> indexes;   // index ids, set semantics

    bool operator==(const IndexConfiguration&) const = default;
};

// Simulated what-if facility: a plan (with optimizer costs and hidden ground
// truth actuals) for every (query, configuration) pair of interest. The
// tuner only ever reads optimizer costs and cardinality estimates from these
// plans; the actuals exist for after-the-fact evaluation.
class WhatIfOracle {
public:
    void put(const std::string& query_id, const std::string& config_id, QueryPlan plan);
    const QueryPlan& plan_for(const std::string& query_id, const std::string& config_id) const;
    bool contains(const std::string& query_id, const std::string& config_id) const;
    std::size_t size() const { return plans_.size(); }

    /// Evaluation-side escape hatch for tests that perturb hidden actuals.
    QueryPlan& mutable_plan_for(const std::string& query_id, const std::string& config_id);

private:
    std::map<std::pair<std::string, std::string>, QueryPlan> plans_;
};

/// 1 - c_new / c_old over estimated costs; requires c_old > 0.
double estimated_improvement(double c_old, double c_new);

/// Same ratio over actual costs.
double actual_improvement(double a_old, double a_new);

/// Sum of actual cost over every operator of the plan.
double actual_plan_cost(const QueryPlan& plan);

enum class Estimator { Optimizer, Combined };

std::string to_string(Estimator mode);

struct TuningOutcome {
    std::string query_id;
    Estimator mode = Estimator::Optimizer;
    std::string old_config;
    std::string new_config;
    double est_improvement = 0.0;
    double act_improvement = 0.0;
    bool recommended = false;
};

/// Evaluates every candidate configuration with the chosen estimator, picks
/// the cheapest (ties break toward fewer indexes, then lexicographic id), and
/// gates the recommendation on estimated improvement exceeding tau. Actual
/// improvement is evaluated from the oracle's hidden actuals either way and
/// never influences the choice.
TuningOutcome tune(const std::string& query_id,
                   std::span<const IndexConfiguration> candidates,
                   const IndexConfiguration& old_config, Estimator mode, double tau,
                   const WhatIfOracle& oracle, const ModelSet& models,
                   const std::optional<PivotChoice>& pivot);

// Histogram of actual improvement in 0.2-wide bins over [-1, 1] plus open
// tails, and the count of regressions (actual improvement below the cut)
// among recommended outcomes.
struct ModeHistogram {
    std::array<std::int64_t, 12> bins{};  // [0]: < -1, [1..10]: steps of 0.2, [11]: > 1
    std::int64_t total = 0;
    std::int64_t recommended = 0;
    std::int64_t regressions = 0;
};

struct RegressionReport {
    double regression_cut = -0.2;
    std::map<Estimator, ModeHistogram> by_mode;
};

RegressionReport regression_report(std::span<const TuningOutcome> outcomes,
                                   double regression_cut);

/// Weighted workload cost: sum over queries of cost_fn(query) * weight.
double workload_cost(std::span<const QueryPlan> workload,
                     const std::function<double(const QueryPlan&)>& cost_fn);

// Per-query inputs for the error carry-over check: weights and the actual
// costs of each query under two configurations.
struct CarryOverInput {
    std::vector<double> weights;
    std::vector<double> actual_old;
    std::vector<double> actual_new;
};

struct CarryOverReport {
    double eps = 0.0;
    // With every per-query relative error pinned to eps exactly.
    double det_workload_error = 0.0;   // equals eps up to rounding
    double det_improvement_gap = 0.0;  // |estimated - actual improvement|
    // With per-query errors drawn i.i.d. uniform(0, 2*eps) (mean eps).
    double stoch_workload_error = 0.0;
    double stoch_standard_error = 0.0;
    bool stoch_within_3se = false;
};

/// Propagates per-query relative estimation error to the workload level, in
/// the deterministic (error identically eps) and stochastic (i.i.d. mean-eps)
/// regimes.
CarryOverReport check_error_carryover(const CarryOverInput& input, double eps,
                                      std::uint64_t seed);

// Seeded end-to-end tuning scenario: nested index configurations over
// synthetic queries, a what-if oracle backed by ground-truth cost functions,
// and an optimizer emulation that is systematically optimistic about index
// seeks. Leaf work dominates by construction.
struct TuningSuiteSpec {
    int n_queries = 100;
    int n_configs = 5;          // chain I_1 c I_2 c ... c I_n
    int leaves_per_plan = 3;
    double card_lo = 200.0;
    double card_hi = 2e5;
    double noise_sd = 0.0;      // ms, on actual operator costs
    std::uint64_t seed = 0;
};

struct TuningSuite {
    std::vector<IndexConfiguration> configs;  // nested, configs[0] = smallest
    std::vector<std::string> query_ids;
    WhatIfOracle oracle;
    GroundTruth ground_truth;
    OptCostModel opt_model;
};

TuningSuite build_tuning_suite(const TuningSuiteSpec& spec);

}  // namespace qcost
