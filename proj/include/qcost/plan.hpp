#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace qcost {

// Physical operator kinds. Anything outside the built-in set round-trips as
// Other(name) so plans from unfamiliar systems still parse.
enum class OpTag {
    TableScan,
    IndexScan,
    IndexSeek,
    Filter,
    Sort,
    HashJoin,
    NestedLoopJoin,
    MergeJoin,
    Aggregate,
    Other,
};

struct OperatorKind {
    OpTag tag = OpTag::Other;
    std::string other_name;  // set only when tag == Other

    OperatorKind() = default;
    OperatorKind(OpTag t) : tag(t) {}  // NOLINT(google-explicit-constructor)
    static OperatorKind other(std::string name) {
        OperatorKind k;
        k.tag = OpTag::Other;
        k.other_name = std::move(name);
        return k;
    }

    bool operator==(const OperatorKind& rhs) const {
        return tag == rhs.tag && (tag != OpTag::Other || other_name == rhs.other_name);
    }
    bool operator<(const OperatorKind& rhs) const {
        if (tag != rhs.tag) return tag < rhs.tag;
        return tag == OpTag::Other && other_name < rhs.other_name;
    }
};

std::string to_string(const OperatorKind& kind);
OperatorKind kind_from_string(const std::string& name);

/// Whether operators of this kind sit at the leaves of a plan (scans/seeks).
bool is_leaf(const OperatorKind& kind);

/// The operator kinds external models are built for. Defaults to the leaf
/// kinds; configurable but never empty.
using BackboneSet = std::set<OperatorKind>;
BackboneSet default_backbone();

struct PlanOperator {
    std::int64_t id = 0;
    OperatorKind kind;
    double opt_cost = 0.0;                 // optimizer units, abstract
    std::optional<double> act_cost;        // CPU milliseconds
    double est_card_in = 0.0;
    double est_card_out = 0.0;
    std::optional<double> act_card_in;
    std::optional<double> act_card_out;
    std::vector<std::int64_t> children;    // ordered

    bool operator==(const PlanOperator&) const = default;
};

// An annotated operator tree. `operators` keeps document order, which fixes
// iteration order for all downstream sums and tie-breaks. Immutable by
// convention after validate()/parse_plan(); safe to share across threads.
struct QueryPlan {
    std::string query_id;
    double weight = 1.0;     // per-query weight in workload-level costs
    std::int64_t root = 0;
    std::vector<PlanOperator> operators;

    const PlanOperator& op(std::int64_t id) const;
    const PlanOperator* find_op(std::int64_t id) const;

    bool operator==(const QueryPlan&) const = default;
};

/// Checks all structural invariants: unique ids, resolvable children, single
/// parent per non-root, acyclic, nonnegative costs, leaves childless.
/// Throws Error naming the offending operator.
void validate(const QueryPlan& plan);

/// Parses and validates a plan document (see docs/formats in README).
QueryPlan parse_plan(const std::string& text);

/// Serializes a plan to its document form; parse_plan inverts this exactly.
std::string serialize_plan(const QueryPlan& plan);

/// Backbone operators of the plan in document order.
std::vector<PlanOperator> leaf_operators(const QueryPlan& plan, const BackboneSet& backbone);

/// Sum of actual cost over backbone operators (L). Throws if any operator in
/// the set lacks an actual cost.
double actual_leaf_cost(const QueryPlan& plan, const BackboneSet& backbone);

/// Sum of actual cost over the remaining operators (I). Same error contract.
double actual_internal_cost(const QueryPlan& plan, const BackboneSet& backbone);

}  // namespace qcost
