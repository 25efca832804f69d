#include "qcost/feedback.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "qcost/error.hpp"

namespace qcost {

using nlohmann::json;

FeatureVector features_of(const PlanOperator& op) {
    FeatureVector fv;
    fv.est_card_in = op.est_card_in;
    fv.est_card_out = op.est_card_out;
    fv.act_card_in = op.act_card_in;
    fv.act_card_out = op.act_card_out;
    return fv;
}

FeedbackStore::FeedbackStore(BackboneSet backbone) : backbone_(std::move(backbone)) {
    if (backbone_.empty()) throw Error("feedback store: backbone set must not be empty");
}

int FeedbackStore::ingest(const QueryPlan& plan) {
    int added = 0;
    for (const auto& op : plan.operators) {
        if (!backbone_.count(op.kind)) continue;
        if (!op.act_cost) continue;  // unmeasured operators are skipped silently
        FeedbackRecord rec;
        rec.record_id = next_id_++;
        rec.kind = op.kind;
        rec.features = features_of(op);
        rec.opt_cost = op.opt_cost;
        rec.act_cost = *op.act_cost;
        records_.push_back(std::move(rec));
        ++added;
    }
    return added;
}

bool FeedbackStore::has_sufficient_feedback(const OperatorKind& kind, int threshold) const {
    if (threshold < 1) throw Error("feedback store: sufficiency threshold must be >= 1");
    std::int64_t n = 0;
    for (const auto& r : records_) {
        if (r.kind == kind && ++n >= threshold) return true;
    }
    return false;
}

std::map<OperatorKind, std::int64_t> FeedbackStore::counts_by_kind() const {
    std::map<OperatorKind, std::int64_t> counts;
    for (const auto& r : records_) counts[r.kind]++;
    return counts;
}

std::vector<FeedbackRecord> FeedbackStore::records_of(const OperatorKind& kind) const {
    std::vector<FeedbackRecord> out;
    for (const auto& r : records_) {
        if (r.kind == kind) out.push_back(r);
    }
    return out;
}

void FeedbackStore::dump(std::ostream& out) const {
    for (const auto& r : records_) {
        json j;
        j["record_id"] = r.record_id;
        j["kind"] = to_string(r.kind);
        json f;
        f["est_card_in"] = r.features.est_card_in;
        f["est_card_out"] = r.features.est_card_out;
        if (r.features.act_card_in) f["act_card_in"] = *r.features.act_card_in;
        if (r.features.act_card_out) f["act_card_out"] = *r.features.act_card_out;
        j["features"] = std::move(f);
        j["opt_cost"] = r.opt_cost;
        j["act_cost"] = r.act_cost;
        out << j.dump() << '\n';
    }
}

FeedbackStore FeedbackStore::load(std::istream& in, BackboneSet backbone) {
    FeedbackStore store(std::move(backbone));
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            FeedbackRecord rec;
            rec.record_id = j.at("record_id").get<std::int64_t>();
            rec.kind = kind_from_string(j.at("kind").get<std::string>());
            const auto& f = j.at("features");
            rec.features.est_card_in = f.at("est_card_in").get<double>();
            rec.features.est_card_out = f.at("est_card_out").get<double>();
            if (f.contains("act_card_in"))
                rec.features.act_card_in = f.at("act_card_in").get<double>();
            if (f.contains("act_card_out"))
                rec.features.act_card_out = f.at("act_card_out").get<double>();
            rec.opt_cost = j.at("opt_cost").get<double>();
            rec.act_cost = j.at("act_cost").get<double>();
            if (rec.opt_cost < 0.0 || rec.act_cost < 0.0)
                throw Error("negative cost");
            if (!store.backbone_.count(rec.kind))
                throw Error("kind " + to_string(rec.kind) + " is not in the backbone set");
            store.next_id_ = std::max(store.next_id_, rec.record_id + 1);
            store.records_.push_back(std::move(rec));
        } catch (const json::exception& e) {
            throw Error("feedback line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error("feedback line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return store;
}

}  // namespace qcost
