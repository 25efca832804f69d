#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "qcost/plan.hpp"

namespace qcost {

/// Minimum records per operator kind before a model is considered trainable.
inline constexpr int kDefaultSufficiencyThreshold = 10;

// Cardinality features of one executed operator. Estimated cardinalities are
// always present (they exist at estimation time); actuals only when the
// executor reported them.
struct FeatureVector {
    double est_card_in = 0.0;
    double est_card_out = 0.0;
    std::optional<double> act_card_in;
    std::optional<double> act_card_out;

    bool operator==(const FeatureVector&) const = default;
};

FeatureVector features_of(const PlanOperator& op);

struct FeedbackRecord {
    std::int64_t record_id = 0;
    OperatorKind kind;
    FeatureVector features;
    double opt_cost = 0.0;  // optimizer units
    double act_cost = 0.0;  // CPU milliseconds

    bool operator==(const FeedbackRecord&) const = default;
};

// Append-only repository of operator-level execution feedback. Records keep
// insertion order with monotonically increasing ids; the store is a plain
// value, so a copy is a consistent snapshot. Concurrent readers are fine,
// writers need exclusive access.
class FeedbackStore {
public:
    explicit FeedbackStore(BackboneSet backbone = default_backbone());

    /// Harvests one record per backbone operator carrying an actual cost;
    /// operators without actuals are skipped. Returns the number added.
    int ingest(const QueryPlan& plan);

    /// True iff at least `threshold` records of this kind are stored.
    bool has_sufficient_feedback(const OperatorKind& kind, int threshold) const;

    std::span<const FeedbackRecord> records() const { return records_; }
    const BackboneSet& backbone() const { return backbone_; }
    std::map<OperatorKind, std::int64_t> counts_by_kind() const;

    /// Records of one kind, insertion order.
    std::vector<FeedbackRecord> records_of(const OperatorKind& kind) const;

    /// JSON-lines dump/load, one record per line. load() appends and renumbers
    /// nothing: record ids come from the file.
    void dump(std::ostream& out) const;
    static FeedbackStore load(std::istream& in, BackboneSet backbone = default_backbone());

private:
    BackboneSet backbone_;
    std::vector<FeedbackRecord> records_;
    std::int64_t next_id_ = 0;
};

}  // namespace qcost
