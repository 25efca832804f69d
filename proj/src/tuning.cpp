#include "qcost/tuning.hpp"

#include <algorithm>
#include <cmath>

#include "qcost/error.hpp"
#include "qcost/kernels.hpp"
#include "qcost/rng.hpp"

namespace qcost {

void WhatIfOracle::put(const std::string& query_id, const std::string& config_id,
                       QueryPlan plan) {
    plans_[{query_id, config_id}] = std::move(plan);
}

const QueryPlan& WhatIfOracle::plan_for(const std::string& query_id,
                                        const std::string& config_id) const {
    const auto it = plans_.find({query_id, config_id});
    if (it == plans_.end())
        throw Error("what-if oracle: no plan for query " + query_id + " under configuration " +
                    config_id);
    return it->second;
}

bool WhatIfOracle::contains(const std::string& query_id, const std::string& config_id) const {
    return plans_.count({query_id, config_id}) > 0;
}

QueryPlan& WhatIfOracle::mutable_plan_for(const std::string& query_id,
                                          const std::string& config_id) {
    const auto it = plans_.find({query_id, config_id});
    if (it == plans_.end())
        throw Error("what-if oracle: no plan for query " + query_id + " under configuration " +
                    config_id);
    return it->second;
}

double estimated_improvement(double c_old, double c_new) {
    if (!(c_old > 0.0))
        throw Error("estimated_improvement: old cost must be positive, got " +
                    std::to_string(c_old));
    return 1.0 - c_new / c_old;
}

double actual_improvement(double a_old, double a_new) {
    if (!(a_old > 0.0))
        throw Error("actual_improvement: old cost must be positive, got " +
                    std::to_string(a_old));
    return 1.0 - a_new / a_old;
}

double actual_plan_cost(const QueryPlan& plan) {
    std::vector<double> costs;
    costs.reserve(plan.operators.size());
    for (const auto& o : plan.operators) {
        if (!o.act_cost)
            throw Error("plan " + plan.query_id + ", operator " + std::to_string(o.id) +
                        ": actual cost required but missing");
        costs.push_back(*o.act_cost);
    }
    return kernels::sum(costs);
}

std::string to_string(Estimator mode) {
    return mode == Estimator::Optimizer ? "optimizer" : "combined";
}

namespace {

double optimizer_plan_cost(const QueryPlan& plan) {
    std::vector<double> costs;
    costs.reserve(plan.operators.size());
    for (const auto& o : plan.operators) costs.push_back(o.opt_cost);
    return kernels::sum(costs);
}

double estimate_cost(const QueryPlan& plan, Estimator mode, const ModelSet& models,
                     const std::optional<PivotChoice>& pivot) {
    if (mode == Estimator::Optimizer) return optimizer_plan_cost(plan);
    return combine(plan, models, pivot).total;
}

}  // namespace

TuningOutcome tune(const std::string& query_id,
                   std::span<const IndexConfiguration> candidates,
                   const IndexConfiguration& old_config, Estimator mode, double tau,
                   const WhatIfOracle& oracle, const ModelSet& models,
                   const std::optional<PivotChoice>& pivot) {
    if (candidates.empty()) throw Error("tune: no candidate configurations");
    if (!(tau >= 0.0 && tau < 1.0)) throw Error("tune: tau must be in [0, 1)");
    if (old_config.id.empty()) throw Error("tune: configuration id must be nonempty");

    const IndexConfiguration* best = nullptr;
    double best_cost = 0.0;
    for (const auto& cand : candidates) {
        const double cost =
            estimate_cost(oracle.plan_for(query_id, cand.id), mode, models, pivot);
        const bool better =
            !best || cost < best_cost ||
            (cost == best_cost && (cand.indexes.size() < best->indexes.size() ||
                                   (cand.indexes.size() == best->indexes.size() &&
                                    cand.id < best->id)));
        if (better) {
            best = &cand;
            best_cost = cost;
        }
    }

    const double old_cost =
        estimate_cost(oracle.plan_for(query_id, old_config.id), mode, models, pivot);

    TuningOutcome out;
    out.query_id = query_id;
    out.mode = mode;
    out.old_config = old_config.id;
    out.new_config = best->id;
    out.est_improvement = estimated_improvement(old_cost, best_cost);
    out.recommended = out.est_improvement > tau && best->id != old_config.id;
    out.act_improvement =
        actual_improvement(actual_plan_cost(oracle.plan_for(query_id, old_config.id)),
                           actual_plan_cost(oracle.plan_for(query_id, best->id)));
    return out;
}

RegressionReport regression_report(std::span<const TuningOutcome> outcomes,
                                   double regression_cut) {
    if (outcomes.empty()) throw Error("regression_report: no outcomes");
    RegressionReport report;
    report.regression_cut = regression_cut;
    for (const auto& o : outcomes) {
        ModeHistogram& h = report.by_mode[o.mode];
        const double x = o.act_improvement;
        std::size_t bin;
        if (x < -1.0) {
            bin = 0;
        } else if (x > 1.0) {
            bin = 11;
        } else {
            // x*5 keeps multiples of 0.2 on exact bin boundaries.
            bin = 1 + std::min<std::size_t>(
                          9, static_cast<std::size_t>(std::floor(x * 5.0 + 5.0)));
        }
        h.bins[bin]++;
        h.total++;
        if (o.recommended) {
            h.recommended++;
            if (o.act_improvement < regression_cut) h.regressions++;
        }
    }
    return report;
}

double workload_cost(std::span<const QueryPlan> workload,
                     const std::function<double(const QueryPlan&)>& cost_fn) {
    std::vector<double> weights;
    std::vector<double> costs;
    weights.reserve(workload.size());
    costs.reserve(workload.size());
    for (const auto& plan : workload) {
        if (!(plan.weight > 0.0))
            throw Error("workload_cost: plan " + plan.query_id + " has nonpositive weight");
        weights.push_back(plan.weight);
        costs.push_back(cost_fn(plan));
    }
    return kernels::dot(weights, costs);
}

CarryOverReport check_error_carryover(const CarryOverInput& input, double eps,
                                      std::uint64_t seed) {
    const std::size_t n = input.weights.size();
    if (n == 0) throw Error("check_error_carryover: empty workload");
    if (input.actual_old.size() != n || input.actual_new.size() != n)
        throw Error("check_error_carryover: size mismatch");
    if (eps < 0.0) throw Error("check_error_carryover: eps must be nonnegative");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(input.weights[i] > 0.0))
            throw Error("check_error_carryover: weights must be positive");
        if (!(input.actual_old[i] > 0.0) || !(input.actual_new[i] > 0.0))
            throw Error("check_error_carryover: actual costs must be positive");
    }

    CarryOverReport rep;
    rep.eps = eps;

    const double act_old_w = kernels::dot(input.weights, input.actual_old);
    const double act_new_w = kernels::dot(input.weights, input.actual_new);

    // Deterministic regime: every query's estimate is (1 + eps) * actual.
    {
        std::vector<double> est_old(n), est_new(n);
        for (std::size_t i = 0; i < n; ++i) {
            est_old[i] = (1.0 + eps) * input.actual_old[i];
            est_new[i] = (1.0 + eps) * input.actual_new[i];
        }
        const double est_old_w = kernels::dot(input.weights, est_old);
        const double est_new_w = kernels::dot(input.weights, est_new);
        rep.det_workload_error = est_old_w / act_old_w - 1.0;
        rep.det_improvement_gap = std::abs(estimated_improvement(est_old_w, est_new_w) -
                                           actual_improvement(act_old_w, act_new_w));
    }

    // Stochastic regime: X_k ~ uniform(0, 2*eps), so E[X] = eps. The realized
    // workload error is the (w * a)-weighted mean of X; its standard error is
    // sd(X) * sqrt(sum(w_k a_k)^2) / sum(w_k a_k).
    {
        Rng rng(seed);
        std::vector<double> est_old(n);
        double wa_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = rng.uniform(0.0, 2.0 * eps);
            est_old[i] = (1.0 + x) * input.actual_old[i];
            const double wa = input.weights[i] * input.actual_old[i];
            wa_sq += wa * wa;
        }
        const double est_old_w = kernels::dot(input.weights, est_old);
        rep.stoch_workload_error = est_old_w / act_old_w - 1.0;
        const double sd_x = 2.0 * eps / std::sqrt(12.0);
        rep.stoch_standard_error = sd_x * std::sqrt(wa_sq) / act_old_w;
        rep.stoch_within_3se =
            std::abs(rep.stoch_workload_error - eps) <= 3.0 * rep.stoch_standard_error;
    }
    return rep;
}

namespace {

GroundTruth tuning_ground_truth(double noise_sd) {
    GroundTruth gt;
    gt.noise_sd = noise_sd;
    // Scans are cheap per row; seeks carry a heavy per-row cost (random I/O
    // emulation), so an index only pays off when it prunes hard.
    gt.coefficients[OperatorKind(OpTag::TableScan)] = {5.0, 0.02, 0.01, 0.0};
    gt.coefficients[OperatorKind(OpTag::IndexScan)] = {4.0, 0.018, 0.012, 0.0};
    gt.coefficients[OperatorKind(OpTag::IndexSeek)] = {2.0, 0.15, 0.0, 0.0};
    gt.coefficients[OperatorKind(OpTag::HashJoin)] = {0.5, 0.0002, 0.0001, 0.0};
    gt.coefficients[OperatorKind(OpTag::MergeJoin)] = {0.4, 0.00025, 0.0001, 0.0};
    gt.coefficients[OperatorKind(OpTag::NestedLoopJoin)] = {0.3, 0.0003, 0.0001, 0.0};
    return gt;
}

OptCostModel tuning_opt_model() {
    OptCostModel opt;
    opt.unit_scale = 100.0;
    // The emulated optimizer prices seeks far below their true cost, the
    // classic failure mode that makes index recommendations regress.
    opt.affine[OperatorKind(OpTag::TableScan)] = {1.0, 0.01};
    opt.affine[OperatorKind(OpTag::IndexScan)] = {0.9, 0.009};
    opt.affine[OperatorKind(OpTag::IndexSeek)] = {0.05, 0.0008};
    opt.affine[OperatorKind(OpTag::HashJoin)] = {1.2, 0.006};
    opt.affine[OperatorKind(OpTag::MergeJoin)] = {1.0, 0.005};
    opt.affine[OperatorKind(OpTag::NestedLoopJoin)] = {0.6, 0.009};
    return opt;
}

}  // namespace

TuningSuite build_tuning_suite(const TuningSuiteSpec& spec) {
    if (spec.n_queries < 1) throw Error("tuning suite: need at least 1 query");
    if (spec.n_configs < 1) throw Error("tuning suite: need at least 1 configuration");
    if (spec.leaves_per_plan < 1) throw Error("tuning suite: need at least 1 leaf");
    if (!(spec.card_lo > 0.0) || !(spec.card_hi >= spec.card_lo))
        throw Error("tuning suite: invalid cardinality range");

    TuningSuite suite;
    suite.ground_truth = tuning_ground_truth(spec.noise_sd);
    suite.opt_model = tuning_opt_model();

    // Nested prefix chain I_1 c I_2 c ... over a ranked index list.
    std::vector<std::string> index_ids;
    for (int k = 0; k < spec.n_configs; ++k) index_ids.push_back("i" + std::to_string(k + 1));
    for (int k = 0; k < spec.n_configs; ++k) {
        IndexConfiguration cfg;
        cfg.id = "I" + std::to_string(k + 1);
        cfg.indexes.insert(index_ids.begin(), index_ids.begin() + k + 1);
        suite.configs.push_back(std::move(cfg));
    }

    const std::vector<OperatorKind> join_cycle = {OperatorKind(OpTag::HashJoin),
                                                  OperatorKind(OpTag::MergeJoin),
                                                  OperatorKind(OpTag::NestedLoopJoin)};

    for (int qi = 0; qi < spec.n_queries; ++qi) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(qi)));
        const std::string query_id = "q" + std::to_string(qi);
        suite.query_ids.push_back(query_id);

        const int n_leaves = spec.leaves_per_plan;
        struct LeafSpec {
            double rows;
            double selectivity;
        };
        std::vector<LeafSpec> leaves;
        for (int li = 0; li < n_leaves; ++li) {
            leaves.push_back({rng.log_uniform(spec.card_lo, spec.card_hi),
                              rng.uniform(0.2, 1.0)});
        }
        // Each index targets one leaf of this query and shrinks its output
        // by a factor; factors near 1 are the traps.
        struct IndexEffect {
            int leaf;
            double factor;
        };
        std::vector<IndexEffect> effects;
        for (int k = 0; k < spec.n_configs; ++k) {
            effects.push_back({static_cast<int>(rng.uniform_int(n_leaves)),
                               rng.log_uniform(0.02, 0.9)});
        }
        std::vector<double> join_selectivities;
        for (int ji = 0; ji < std::max(0, n_leaves - 1); ++ji) {
            join_selectivities.push_back(rng.uniform(0.05, 0.5));
        }

        for (const auto& cfg : suite.configs) {
            QueryPlan plan;
            plan.query_id = query_id;
            std::int64_t next_id = 0;

            std::vector<std::int64_t> leaf_ids;
            for (int li = 0; li < n_leaves; ++li) {
                // Best applicable index (smallest factor) wins the access path.
                double factor = 1.0;
                for (int k = 0; k < spec.n_configs; ++k) {
                    if (!cfg.indexes.count(index_ids[k])) continue;
                    if (effects[k].leaf == li) factor = std::min(factor, effects[k].factor);
                }
                PlanOperator o;
                o.id = next_id++;
                o.kind = factor < 1.0 ? OperatorKind(OpTag::IndexSeek)
                                      : OperatorKind(OpTag::TableScan);
                o.est_card_in = leaves[li].rows;
                o.est_card_out = leaves[li].rows * leaves[li].selectivity * factor;
                leaf_ids.push_back(o.id);
                plan.operators.push_back(std::move(o));
            }

            std::int64_t top = leaf_ids[0];
            for (int ji = 0; ji + 1 < n_leaves; ++ji) {
                PlanOperator o;
                o.id = next_id++;
                o.kind = join_cycle[ji % join_cycle.size()];
                o.children = {top, leaf_ids[ji + 1]};
                double in_rows = 0.0;
                for (std::int64_t child : o.children) in_rows += plan.op(child).est_card_out;
                o.est_card_in = in_rows;
                o.est_card_out = in_rows * join_selectivities[ji];
                top = o.id;
                plan.operators.push_back(std::move(o));
            }
            plan.root = top;

            Rng noise(derive_seed(spec.seed, 0x7e57 + static_cast<std::uint64_t>(qi)));
            for (auto& o : plan.operators) {
                o.act_card_in = o.est_card_in;
                o.act_card_out = o.est_card_out;
                double act = suite.ground_truth.eval(o.kind, features_of(o));
                if (suite.ground_truth.noise_sd > 0.0)
                    act += suite.ground_truth.noise_sd * noise.normal();
                o.act_cost = std::max(0.0, act);
                o.opt_cost = suite.opt_model.eval(o.kind, o.est_card_out);
            }
            validate(plan);
            suite.oracle.put(query_id, cfg.id, std::move(plan));
        }
    }
    return suite;
}

}  // namespace qcost
