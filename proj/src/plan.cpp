#include "qcost/plan.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "qcost/error.hpp"
#include "qcost/kernels.hpp"

namespace qcost {

using nlohmann::json;

namespace {

const std::map<std::string, OpTag>& name_to_tag() {
    static const std::map<std::string, OpTag> m = {
        {"TableScan", OpTag::TableScan},
        {"IndexScan", OpTag::IndexScan},
        {"IndexSeek", OpTag::IndexSeek},
        {"Filter", OpTag::Filter},
        {"Sort", OpTag::Sort},
        {"HashJoin", OpTag::HashJoin},
        {"NestedLoopJoin", OpTag::NestedLoopJoin},
        {"MergeJoin", OpTag::MergeJoin},
        {"Aggregate", OpTag::Aggregate},
    };
    return m;
}

}  // namespace

std::string to_string(const OperatorKind& kind) {
    switch (kind.tag) {
        case OpTag::TableScan: return "TableScan";
        case OpTag::IndexScan: return "IndexScan";
        case OpTag::IndexSeek: return "IndexSeek";
        case OpTag::Filter: return "Filter";
        case OpTag::Sort: return "Sort";
        case OpTag::HashJoin: return "HashJoin";
        case OpTag::NestedLoopJoin: return "NestedLoopJoin";
        case OpTag::MergeJoin: return "MergeJoin";
        case OpTag::Aggregate: return "Aggregate";
        case OpTag::Other: return kind.other_name;
    }
    return kind.other_name;
}

OperatorKind kind_from_string(const std::string& name) {
    const auto it = name_to_tag().find(name);
    if (it != name_to_tag().end()) return OperatorKind(it->second);
    return OperatorKind::other(name);
}

bool is_leaf(const OperatorKind& kind) {
    return kind.tag == OpTag::TableScan || kind.tag == OpTag::IndexScan ||
           kind.tag == OpTag::IndexSeek;
}

BackboneSet default_backbone() {
    return {OperatorKind(OpTag::TableScan), OperatorKind(OpTag::IndexScan),
            OperatorKind(OpTag::IndexSeek)};
}

const PlanOperator& QueryPlan::op(std::int64_t id) const {
    if (const PlanOperator* p = find_op(id)) return *p;
    throw Error("plan " + query_id + ": no operator with id " + std::to_string(id));
}

const PlanOperator* QueryPlan::find_op(std::int64_t id) const {
    for (const auto& o : operators) {
        if (o.id == id) return &o;
    }
    return nullptr;
}

void validate(const QueryPlan& plan) {
    if (plan.operators.empty()) throw Error("plan " + plan.query_id + ": no operators");
    if (!(plan.weight > 0.0)) throw Error("plan " + plan.query_id + ": weight must be positive");

    std::unordered_map<std::int64_t, const PlanOperator*> by_id;
    for (const auto& o : plan.operators) {
        if (!by_id.emplace(o.id, &o).second) {
            throw Error("plan " + plan.query_id + ": duplicate operator id " +
                        std::to_string(o.id));
        }
    }
    if (!by_id.count(plan.root)) {
        throw Error("plan " + plan.query_id + ": root id " + std::to_string(plan.root) +
                    " does not resolve");
    }

    std::unordered_map<std::int64_t, int> parents;
    for (const auto& o : plan.operators) {
        const std::string where = "plan " + plan.query_id + ", operator " + std::to_string(o.id);
        if (o.opt_cost < 0.0) throw Error(where + ": negative opt_cost");
        if (o.act_cost && *o.act_cost < 0.0) throw Error(where + ": negative act_cost");
        if (o.est_card_in < 0.0 || o.est_card_out < 0.0)
            throw Error(where + ": negative estimated cardinality");
        if ((o.act_card_in && *o.act_card_in < 0.0) || (o.act_card_out && *o.act_card_out < 0.0))
            throw Error(where + ": negative actual cardinality");
        if (is_leaf(o.kind) && !o.children.empty())
            throw Error(where + ": leaf kind with children");
        for (std::int64_t child : o.children) {
            if (child == o.id) throw Error(where + ": cycle detected (self child)");
            if (!by_id.count(child))
                throw Error(where + ": dangling child id " + std::to_string(child));
            parents[child]++;
        }
    }

    for (const auto& o : plan.operators) {
        const int n_parents = parents.count(o.id) ? parents.at(o.id) : 0;
        if (o.id == plan.root) {
            if (n_parents != 0)
                throw Error("plan " + plan.query_id + ": root operator " +
                            std::to_string(o.id) + " has a parent");
        } else if (n_parents != 1) {
            throw Error("plan " + plan.query_id + ": operator " + std::to_string(o.id) +
                        " has " + std::to_string(n_parents) + " parents (expected 1)");
        }
    }

    // Every non-root has exactly one parent and the root has none; a cycle
    // would need an extra in-edge somewhere, so reachability from the root is
    // the remaining check.
    std::unordered_set<std::int64_t> seen;
    std::vector<std::int64_t> stack = {plan.root};
    while (!stack.empty()) {
        const std::int64_t id = stack.back();
        stack.pop_back();
        if (!seen.insert(id).second) {
            throw Error("plan " + plan.query_id + ": cycle detected at operator " +
                        std::to_string(id));
        }
        for (std::int64_t child : by_id.at(id)->children) stack.push_back(child);
    }
    if (seen.size() != plan.operators.size()) {
        for (const auto& o : plan.operators) {
            if (!seen.count(o.id))
                throw Error("plan " + plan.query_id + ": operator " + std::to_string(o.id) +
                            " unreachable from root");
        }
    }
}

QueryPlan parse_plan(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("malformed plan document: ") + e.what());
    }
    if (!doc.is_object()) throw Error("malformed plan document: expected a JSON object");

    QueryPlan plan;
    try {
        plan.query_id = doc.at("query_id").get<std::string>();
        plan.weight = doc.value("weight", 1.0);
        plan.root = doc.at("root").get<std::int64_t>();
        for (const auto& jop : doc.at("operators")) {
            PlanOperator o;
            o.id = jop.at("id").get<std::int64_t>();
            o.kind = kind_from_string(jop.at("kind").get<std::string>());
            o.opt_cost = jop.at("opt_cost").get<double>();
            if (jop.contains("act_cost")) o.act_cost = jop.at("act_cost").get<double>();
            o.est_card_in = jop.at("est_card_in").get<double>();
            o.est_card_out = jop.at("est_card_out").get<double>();
            if (jop.contains("act_card_in")) o.act_card_in = jop.at("act_card_in").get<double>();
            if (jop.contains("act_card_out"))
                o.act_card_out = jop.at("act_card_out").get<double>();
            o.children = jop.value("children", std::vector<std::int64_t>{});
            plan.operators.push_back(std::move(o));
        }
    } catch (const json::exception& e) {
        throw Error(std::string("malformed plan document: ") + e.what());
    }
    validate(plan);
    return plan;
}

std::string serialize_plan(const QueryPlan& plan) {
    json doc;
    doc["query_id"] = plan.query_id;
    doc["weight"] = plan.weight;
    doc["root"] = plan.root;
    json ops = json::array();
    for (const auto& o : plan.operators) {
        json jop;
        jop["id"] = o.id;
        jop["kind"] = to_string(o.kind);
        jop["opt_cost"] = o.opt_cost;
        if (o.act_cost) jop["act_cost"] = *o.act_cost;
        jop["est_card_in"] = o.est_card_in;
        jop["est_card_out"] = o.est_card_out;
        if (o.act_card_in) jop["act_card_in"] = *o.act_card_in;
        if (o.act_card_out) jop["act_card_out"] = *o.act_card_out;
        jop["children"] = o.children;
        ops.push_back(std::move(jop));
    }
    doc["operators"] = std::move(ops);
    return doc.dump();
}

std::vector<PlanOperator> leaf_operators(const QueryPlan& plan, const BackboneSet& backbone) {
    std::vector<PlanOperator> out;
    for (const auto& o : plan.operators) {
        if (backbone.count(o.kind)) out.push_back(o);
    }
    return out;
}

namespace {

double sum_act_cost(const QueryPlan& plan, const BackboneSet& backbone, bool want_backbone) {
    std::vector<double> costs;
    costs.reserve(plan.operators.size());
    for (const auto& o : plan.operators) {
        if ((backbone.count(o.kind) != 0) != want_backbone) continue;
        if (!o.act_cost) {
            throw Error("plan " + plan.query_id + ", operator " + std::to_string(o.id) +
                        ": actual cost required but missing");
        }
        costs.push_back(*o.act_cost);
    }
    return kernels::sum(costs);
}

}  // namespace

double actual_leaf_cost(const QueryPlan& plan, const BackboneSet& backbone) {
    return sum_act_cost(plan, backbone, true);
}

double actual_internal_cost(const QueryPlan& plan, const BackboneSet& backbone) {
    return sum_act_cost(plan, backbone, false);
}

}  // namespace qcost
