#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "qcost/feedback.hpp"
#include "qcost/plan.hpp"

namespace qcost {

/// Regression basis evaluated on estimated cardinalities:
///   [1, C_out, C_in, C_in * log2(1 + C_in)].
/// One linear and one superlinear term; actual cardinalities are ignored so
/// training and estimation see the same inputs.
std::array<double, 4> feature_map(const FeatureVector& fv);

// Per-kind external cost model: a least-squares fit of actual cost (ms)
// against feature_map. Immutable once trained.
struct OperatorModel {
    OperatorKind kind;
    std::array<double, 4> coefficients{};
    std::int64_t trained_on = 0;
    double residual_rms = 0.0;       // ms
    bool ridge_fallback = false;     // rank-deficient design, ridge-damped fit

    /// Model estimate of actual cost, clamped below at zero.
    double predict(const FeatureVector& fv) const;
};

/// Fits a model to records of a single kind. Requires at least `threshold`
/// records, all of the same kind. A rank-deficient design (fewer independent
/// feature rows than coefficients) falls back to ridge regression with
/// damping 1e-6 and marks the model accordingly.
OperatorModel train(std::span<const FeedbackRecord> records,
                    int threshold = kDefaultSufficiencyThreshold);

// Trained models keyed by operator kind. Deterministic iteration order.
class ModelSet {
public:
    ModelSet() = default;

    void insert(OperatorModel model);
    const OperatorModel* find(const OperatorKind& kind) const;
    bool empty() const { return models_.empty(); }
    std::size_t size() const { return models_.size(); }
    auto begin() const { return models_.begin(); }
    auto end() const { return models_.end(); }

    std::string to_json() const;
    static ModelSet from_json(const std::string& text);

private:
    std::map<OperatorKind, OperatorModel> models_;
};

/// Trains one model per backbone kind with sufficient feedback; kinds below
/// the threshold are skipped.
ModelSet train_all(const FeedbackStore& store, int threshold = kDefaultSufficiencyThreshold);

}  // namespace qcost
