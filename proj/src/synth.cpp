#include "qcost/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qcost/error.hpp"
#include "qcost/model.hpp"
#include "qcost/rng.hpp"

namespace qcost {

namespace {

struct Chol3 {
    // Lower-triangular factor of the 3x3 correlation matrix.
    double m00 = 1.0, m10 = 0.0, m11 = 0.0, m20 = 0.0, m21 = 0.0, m22 = 0.0;
};

bool cholesky3(const CorrTarget& t, Chol3& out) {
    const double a = t.leaf_internal;
    const double b = t.leaf_internal_est;
    const double c = t.internal_internal_est;
    if (std::abs(a) > 1.0 || std::abs(b) > 1.0 || std::abs(c) > 1.0) return false;
    constexpr double kTol = 1e-12;

    out.m00 = 1.0;
    out.m10 = a;
    double d11 = 1.0 - a * a;
    if (d11 < -kTol) return false;
    d11 = std::max(d11, 0.0);
    out.m11 = std::sqrt(d11);
    out.m20 = b;
    if (out.m11 > 0.0) {
        out.m21 = (c - a * b) / out.m11;
    } else {
        // L and I perfectly correlated: I' must relate to both identically.
        if (std::abs(c - a * b) > 1e-9) return false;
        out.m21 = 0.0;
    }
    double d22 = 1.0 - b * b - out.m21 * out.m21;
    if (d22 < -kTol) return false;
    out.m22 = std::sqrt(std::max(d22, 0.0));
    return true;
}

}  // namespace

bool correlation_feasible(const CorrTarget& t) {
    Chol3 unused;
    return cholesky3(t, unused);
}

WorkloadDecomposition synth_triples(const SynthTripleSpec& spec, double lambda) {
    if (spec.n_queries < 2) throw Error("synth_triples: need at least 2 queries");
    const SynthScale& sc = spec.scale;
    if (!(sc.mean_leaf > 0.0 && sc.mean_internal > 0.0 && sc.mean_internal_est > 0.0))
        throw Error("synth_triples: means must be positive");
    if (sc.sd_leaf < 0.0 || sc.sd_internal < 0.0 || sc.sd_internal_est < 0.0)
        throw Error("synth_triples: standard deviations must be nonnegative");

    Chol3 m;
    if (!cholesky3(spec.target_corr, m))
        throw Error("synth_triples: target correlation matrix is not positive semidefinite");

    WorkloadDecomposition d;
    d.lambda = lambda;
    d.queries.reserve(spec.n_queries);
    std::int64_t draws = 0;
    for (int qi = 0; qi < spec.n_queries; ++qi) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(qi)));
        while (true) {
            ++draws;
            const double z0 = rng.normal();
            const double z1 = rng.normal();
            const double z2 = rng.normal();
            const double leaf = sc.mean_leaf + sc.sd_leaf * (m.m00 * z0);
            const double internal = sc.mean_internal + sc.sd_internal * (m.m10 * z0 + m.m11 * z1);
            const double internal_est =
                sc.mean_internal_est + sc.sd_internal_est * (m.m20 * z0 + m.m21 * z1 + m.m22 * z2);
            if (leaf < 0.0 || internal < 0.0 || internal_est < 0.0) {
                if (draws > 2 * static_cast<std::int64_t>(spec.n_queries)) {
                    throw Error("synth_triples: rejection rate above 50% "
                                "(means too small relative to sds)");
                }
                continue;
            }
            QueryCosts q;
            q.leaf_actual = leaf;
            q.internal_actual = internal;
            q.internal_estimate = internal_est;
            q.leaf_estimate = lambda * leaf;
            d.queries.push_back(q);
            break;
        }
    }
    return d;
}

double GroundTruth::eval(const OperatorKind& kind, const FeatureVector& fv) const {
    const auto it = coefficients.find(kind);
    if (it == coefficients.end())
        throw Error("ground truth: no cost function for kind " + to_string(kind));
    const auto phi = feature_map(fv);
    double y = 0.0;
    for (int j = 0; j < 4; ++j) y += it->second[j] * phi[j];
    return y;
}

double OptCostModel::eval(const OperatorKind& kind, double est_card_out) const {
    const auto it = affine.find(kind);
    if (it == affine.end())
        throw Error("optimizer cost emulation: no constants for kind " + to_string(kind));
    return unit_scale * (it->second.first + it->second.second * est_card_out);
}

namespace {

const std::vector<OperatorKind>& leaf_kind_cycle() {
    static const std::vector<OperatorKind> kinds = {
        OperatorKind(OpTag::TableScan), OperatorKind(OpTag::IndexScan),
        OperatorKind(OpTag::IndexSeek)};
    return kinds;
}

const std::vector<OperatorKind>& join_kind_cycle() {
    static const std::vector<OperatorKind> kinds = {
        OperatorKind(OpTag::HashJoin), OperatorKind(OpTag::MergeJoin),
        OperatorKind(OpTag::NestedLoopJoin)};
    return kinds;
}

const std::vector<OperatorKind>& unary_kind_cycle() {
    static const std::vector<OperatorKind> kinds = {
        OperatorKind(OpTag::Filter), OperatorKind(OpTag::Sort),
        OperatorKind(OpTag::Aggregate)};
    return kinds;
}

}  // namespace

std::vector<QueryPlan> synth_plans(int n_queries, const GroundTruth& gt, PlanShape shape,
                                   CardRange card_range, const OptCostModel& opt,
                                   std::uint64_t seed) {
    if (n_queries < 1) throw Error("synth_plans: need at least 1 query");
    if (shape.leaves_per_plan < 1) throw Error("synth_plans: need at least 1 leaf per plan");
    if (shape.internals_per_plan < 0) throw Error("synth_plans: negative internal count");
    if (shape.leaves_per_plan > 1 && shape.internals_per_plan < 1)
        throw Error("synth_plans: multiple leaves need at least one internal operator");
    if (!(card_range.lo > 0.0) || !(card_range.hi >= card_range.lo))
        throw Error("synth_plans: invalid cardinality range");

    std::vector<QueryPlan> plans;
    plans.reserve(n_queries);
    for (int qi = 0; qi < n_queries; ++qi) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(qi)));
        QueryPlan plan;
        plan.query_id = "q" + std::to_string(qi);

        const int n_leaves = shape.leaves_per_plan;
        const int n_internals = shape.internals_per_plan;
        std::int64_t next_id = 0;

        std::vector<std::int64_t> leaf_ids;
        for (int li = 0; li < n_leaves; ++li) {
            PlanOperator o;
            o.id = next_id++;
            o.kind = leaf_kind_cycle()[li % leaf_kind_cycle().size()];
            const double rows = rng.log_uniform(card_range.lo, card_range.hi);
            const double sel = rng.uniform(0.1, 1.0);
            o.est_card_in = rows;
            o.est_card_out = rows * sel;
            leaf_ids.push_back(o.id);
            plan.operators.push_back(std::move(o));
        }

        // Joins fold the leaves left-deep; if there are fewer joins than
        // leaf gaps the first join goes n-ary. Leftover internals form a
        // unary chain on top.
        const int n_joins = std::min(n_internals, std::max(0, n_leaves - 1));
        std::int64_t top = leaf_ids[0];
        int consumed = 1;
        for (int ji = 0; ji < n_joins; ++ji) {
            PlanOperator o;
            o.id = next_id++;
            o.kind = join_kind_cycle()[ji % join_kind_cycle().size()];
            o.children.push_back(top);
            const int absorb = (ji == 0) ? (n_leaves - 1) - (n_joins - 1) : 1;
            for (int k = 0; k < absorb; ++k) o.children.push_back(leaf_ids[consumed++]);
            double in_rows = 0.0;
            for (std::int64_t child : o.children) in_rows += plan.op(child).est_card_out;
            o.est_card_in = in_rows;
            o.est_card_out = in_rows * rng.uniform(0.05, 1.0);
            top = o.id;
            plan.operators.push_back(std::move(o));
        }
        for (int ui = n_joins; ui < n_internals; ++ui) {
            PlanOperator o;
            o.id = next_id++;
            o.kind = unary_kind_cycle()[(ui - n_joins) % unary_kind_cycle().size()];
            o.children.push_back(top);
            o.est_card_in = plan.op(o.children[0]).est_card_out;
            o.est_card_out = o.est_card_in * rng.uniform(0.1, 1.0);
            top = o.id;
            plan.operators.push_back(std::move(o));
        }
        plan.root = top;

        for (auto& o : plan.operators) {
            o.act_card_in = o.est_card_in;
            o.act_card_out = o.est_card_out;
            double act = gt.eval(o.kind, features_of(o));
            if (gt.noise_sd > 0.0) act += gt.noise_sd * rng.normal();
            o.act_cost = std::max(0.0, act);
            o.opt_cost = opt.eval(o.kind, o.est_card_out);
        }

        validate(plan);
        plans.push_back(std::move(plan));
    }
    return plans;
}

GroundTruth default_ground_truth(double noise_sd) {
    GroundTruth gt;
    gt.noise_sd = noise_sd;
    gt.coefficients[OperatorKind(OpTag::TableScan)] = {2.0, 0.004, 0.006, 0.0};
    gt.coefficients[OperatorKind(OpTag::IndexScan)] = {1.5, 0.005, 0.004, 0.0};
    gt.coefficients[OperatorKind(OpTag::IndexSeek)] = {1.0, 0.012, 0.0, 0.0005};
    gt.coefficients[OperatorKind(OpTag::HashJoin)] = {1.0, 0.001, 0.0008, 0.0};
    gt.coefficients[OperatorKind(OpTag::MergeJoin)] = {0.8, 0.0008, 0.001, 0.0};
    gt.coefficients[OperatorKind(OpTag::NestedLoopJoin)] = {0.5, 0.0012, 0.0, 0.0002};
    gt.coefficients[OperatorKind(OpTag::Filter)] = {0.2, 0.0004, 0.0006, 0.0};
    gt.coefficients[OperatorKind(OpTag::Sort)] = {0.5, 0.0005, 0.0, 0.0003};
    gt.coefficients[OperatorKind(OpTag::Aggregate)] = {0.4, 0.0003, 0.0008, 0.0};
    return gt;
}

OptCostModel default_opt_cost_model() {
    OptCostModel opt;
    opt.unit_scale = 100.0;
    opt.affine[OperatorKind(OpTag::TableScan)] = {1.0, 0.01};
    opt.affine[OperatorKind(OpTag::IndexScan)] = {0.8, 0.008};
    opt.affine[OperatorKind(OpTag::IndexSeek)] = {0.1, 0.002};
    opt.affine[OperatorKind(OpTag::HashJoin)] = {1.2, 0.006};
    opt.affine[OperatorKind(OpTag::MergeJoin)] = {1.0, 0.005};
    opt.affine[OperatorKind(OpTag::NestedLoopJoin)] = {0.6, 0.009};
    opt.affine[OperatorKind(OpTag::Filter)] = {0.1, 0.001};
    opt.affine[OperatorKind(OpTag::Sort)] = {0.9, 0.004};
    opt.affine[OperatorKind(OpTag::Aggregate)] = {0.3, 0.002};
    return opt;
}

}  // namespace qcost
