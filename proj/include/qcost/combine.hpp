#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcost/feedback.hpp"
#include "qcost/model.hpp"
#include "qcost/plan.hpp"

namespace qcost {

// The feedback record whose (optimizer cost, actual cost) pair anchors the
// unit conversion between model estimates (ms) and optimizer units.
// lambda = opt_cost / act_cost.
struct PivotChoice {
    std::int64_t record_id = 0;
    double opt_cost = 0.0;
    double act_cost = 0.0;  // > 0, enforced at construction
    double lambda = 0.0;

    static PivotChoice make(std::int64_t record_id, double opt_cost, double act_cost);

    bool operator==(const PivotChoice&) const = default;
};

struct PivotEligibility {
    // Records cheaper than this are too noise-dominated to anchor the scale.
    double min_act_cost_ms = 1.0;
};

/// Picks the eligible record maximizing opt_cost / act_cost; ties break
/// toward the lowest record id. Selected once per store snapshot, not per
/// plan, so the scale factor is a workload-level constant.
PivotChoice pick_pivot(const FeedbackStore& store, PivotEligibility eligibility = {});

enum class CostSource { Model, Optimizer };

struct OperatorContribution {
    std::int64_t id = 0;
    CostSource source = CostSource::Optimizer;
    double raw = 0.0;           // model prediction (ms) or optimizer cost
    double contribution = 0.0;  // optimizer units
};

// Plan cost estimate with per-operator provenance. total is the plain
// document-order sum of contributions.
struct CombinedEstimate {
    std::string query_id;
    double total = 0.0;
    std::vector<OperatorContribution> per_operator;
    std::optional<PivotChoice> pivot;

    std::string to_json() const;
    static CombinedEstimate from_json(const std::string& text);
};

/// Model estimate relative to the pivot's actual cost.
double relative_cost(double extcost, const PivotChoice& pivot);

/// Estimates plan cost by mixing sources: operators whose kind has a model
/// contribute relative_cost(prediction) * pivot.opt_cost; everything else
/// contributes its optimizer cost. With no applicable model the result is the
/// plain optimizer sum. Throws if a model applies but no pivot is given.
CombinedEstimate combine(const QueryPlan& plan, const ModelSet& models,
                         const std::optional<PivotChoice>& pivot);

}  // namespace qcost
