#include "qcost/combine.hpp"

#include <json.hpp>

#include "qcost/error.hpp"

namespace qcost {

using nlohmann::json;

PivotChoice PivotChoice::make(std::int64_t record_id, double opt_cost, double act_cost) {
    if (!(act_cost > 0.0)) {
        throw Error("pivot record " + std::to_string(record_id) +
                    ": actual cost must be positive, got " + std::to_string(act_cost));
    }
    if (opt_cost < 0.0) {
        throw Error("pivot record " + std::to_string(record_id) + ": negative optimizer cost");
    }
    PivotChoice p;
    p.record_id = record_id;
    p.opt_cost = opt_cost;
    p.act_cost = act_cost;
    p.lambda = opt_cost / act_cost;
    return p;
}

PivotChoice pick_pivot(const FeedbackStore& store, PivotEligibility eligibility) {
    const FeedbackRecord* best = nullptr;
    double best_lambda = -1.0;
    for (const auto& r : store.records()) {
        if (r.act_cost < eligibility.min_act_cost_ms || r.act_cost <= 0.0) continue;
        const double lambda = r.opt_cost / r.act_cost;
        // Strict > keeps the earliest record on ties.
        if (lambda > best_lambda) {
            best_lambda = lambda;
            best = &r;
        }
    }
    if (!best) {
        throw Error("pick_pivot: no eligible feedback record (min actual cost " +
                    std::to_string(eligibility.min_act_cost_ms) + " ms)");
    }
    return PivotChoice::make(best->record_id, best->opt_cost, best->act_cost);
}

double relative_cost(double extcost, const PivotChoice& pivot) {
    return extcost / pivot.act_cost;
}

CombinedEstimate combine(const QueryPlan& plan, const ModelSet& models,
                         const std::optional<PivotChoice>& pivot) {
    CombinedEstimate est;
    est.query_id = plan.query_id;
    est.per_operator.reserve(plan.operators.size());

    bool used_model = false;
    for (const auto& op : plan.operators) {
        OperatorContribution c;
        c.id = op.id;
        if (const OperatorModel* model = models.find(op.kind)) {
            if (!pivot) {
                throw Error("combine: plan " + plan.query_id + ", operator " +
                            std::to_string(op.id) + " has a model but no pivot was given");
            }
            c.source = CostSource::Model;
            c.raw = model->predict(features_of(op));
            c.contribution = relative_cost(c.raw, *pivot) * pivot->opt_cost;
            used_model = true;
        } else {
            c.source = CostSource::Optimizer;
            c.raw = op.opt_cost;
            c.contribution = op.opt_cost;
        }
        est.total += c.contribution;
        est.per_operator.push_back(c);
    }
    if (used_model) est.pivot = pivot;
    return est;
}

std::string CombinedEstimate::to_json() const {
    json j;
    j["query_id"] = query_id;
    j["total"] = total;
    if (pivot) {
        json p;
        p["record_id"] = pivot->record_id;
        p["opt_cost"] = pivot->opt_cost;
        p["act_cost"] = pivot->act_cost;
        p["lambda"] = pivot->lambda;
        j["pivot"] = std::move(p);
    }
    json ops = json::array();
    for (const auto& c : per_operator) {
        json jc;
        jc["id"] = c.id;
        jc["source"] = c.source == CostSource::Model ? "model" : "optimizer";
        jc["raw"] = c.raw;
        jc["contribution"] = c.contribution;
        ops.push_back(std::move(jc));
    }
    j["per_operator"] = std::move(ops);
    return j.dump();
}

CombinedEstimate CombinedEstimate::from_json(const std::string& text) {
    CombinedEstimate est;
    try {
        const json j = json::parse(text);
        est.query_id = j.at("query_id").get<std::string>();
        est.total = j.at("total").get<double>();
        if (j.contains("pivot")) {
            const auto& p = j.at("pivot");
            est.pivot = PivotChoice::make(p.at("record_id").get<std::int64_t>(),
                                          p.at("opt_cost").get<double>(),
                                          p.at("act_cost").get<double>());
        }
        for (const auto& jc : j.at("per_operator")) {
            OperatorContribution c;
            c.id = jc.at("id").get<std::int64_t>();
            const auto source = jc.at("source").get<std::string>();
            if (source == "model") {
                c.source = CostSource::Model;
            } else if (source == "optimizer") {
                c.source = CostSource::Optimizer;
            } else {
                throw Error("estimate for " + est.query_id + ": unknown source '" + source + "'");
            }
            c.raw = jc.at("raw").get<double>();
            c.contribution = jc.at("contribution").get<double>();
            est.per_operator.push_back(c);
        }
    } catch (const json::exception& e) {
        throw Error(std::string("malformed estimate document: ") + e.what());
    }
    return est;
}

}  // namespace qcost
