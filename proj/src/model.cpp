#include "qcost/model.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "qcost/error.hpp"

namespace qcost {

using nlohmann::json;

std::array<double, 4> feature_map(const FeatureVector& fv) {
    const double c_in = fv.est_card_in;
    const double c_out = fv.est_card_out;
    return {1.0, c_out, c_in, c_in * std::log2(1.0 + c_in)};
}

double OperatorModel::predict(const FeatureVector& fv) const {
    const auto phi = feature_map(fv);
    double y = 0.0;
    for (int j = 0; j < 4; ++j) y += coefficients[j] * phi[j];
    return std::max(0.0, y);
}

namespace {

constexpr int kTerms = 4;
constexpr double kRidgeDamping = 1e-6;

// Dense column-major design matrix for the solver below.
struct Design {
    std::vector<double> a;  // n x 4, column-major
    std::vector<double> y;  // n
    std::size_t n = 0;

    double& at(std::size_t row, int col) { return a[static_cast<std::size_t>(col) * n + row]; }
    double at(std::size_t row, int col) const {
        return a[static_cast<std::size_t>(col) * n + row];
    }
};

// Householder QR with column equilibration. Returns false when the design is
// numerically rank-deficient.
bool solve_qr(Design d, std::array<double, 4>& coeffs) {
    const std::size_t n = d.n;
    std::array<double, kTerms> scale{};
    for (int j = 0; j < kTerms; ++j) {
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += d.at(i, j) * d.at(i, j);
        norm = std::sqrt(norm);
        scale[j] = norm > 0.0 ? norm : 1.0;
        for (std::size_t i = 0; i < n; ++i) d.at(i, j) /= scale[j];
    }

    std::array<double, kTerms> rdiag{};
    for (int j = 0; j < kTerms; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < n; ++i) norm += d.at(i, j) * d.at(i, j);
        norm = std::sqrt(norm);
        if (norm < 1e-10) return false;  // equilibrated columns have norm ~1
        if (d.at(j, j) > 0.0) norm = -norm;
        for (std::size_t i = j; i < n; ++i) d.at(i, j) /= -norm;
        d.at(j, j) += 1.0;
        rdiag[j] = norm;

        for (int k = j + 1; k < kTerms; ++k) {
            double s = 0.0;
            for (std::size_t i = j; i < n; ++i) s += d.at(i, j) * d.at(i, k);
            s = -s / d.at(j, j);
            for (std::size_t i = j; i < n; ++i) d.at(i, k) += s * d.at(i, j);
        }
        double s = 0.0;
        for (std::size_t i = j; i < n; ++i) s += d.at(i, j) * d.y[i];
        s = -s / d.at(j, j);
        for (std::size_t i = j; i < n; ++i) d.y[i] += s * d.at(i, j);
    }

    for (int j = 0; j < kTerms; ++j) {
        if (std::abs(rdiag[j]) < 1e-8) return false;
    }
    std::array<double, kTerms> beta{};
    for (int j = kTerms - 1; j >= 0; --j) {
        double s = d.y[j];
        for (int k = j + 1; k < kTerms; ++k) s -= d.at(j, k) * beta[k];
        beta[j] = s / rdiag[j];
    }
    for (int j = 0; j < kTerms; ++j) coeffs[j] = beta[j] / scale[j];
    return true;
}

// Ridge fallback on the equilibrated normal equations, solved by Cholesky.
void solve_ridge(const Design& d, std::array<double, 4>& coeffs) {
    const std::size_t n = d.n;
    std::array<double, kTerms> scale{};
    for (int j = 0; j < kTerms; ++j) {
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += d.at(i, j) * d.at(i, j);
        norm = std::sqrt(norm);
        scale[j] = norm > 0.0 ? norm : 1.0;
    }

    double g[kTerms][kTerms] = {};
    std::array<double, kTerms> rhs{};
    for (int j = 0; j < kTerms; ++j) {
        for (int k = j; k < kTerms; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += d.at(i, j) * d.at(i, k);
            g[j][k] = g[k][j] = s / (scale[j] * scale[k]);
        }
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += d.at(i, j) * d.y[i];
        rhs[j] = s / scale[j];
        g[j][j] += kRidgeDamping;
    }

    double l[kTerms][kTerms] = {};
    for (int j = 0; j < kTerms; ++j) {
        double diag = g[j][j];
        for (int k = 0; k < j; ++k) diag -= l[j][k] * l[j][k];
        l[j][j] = std::sqrt(std::max(diag, kRidgeDamping * 1e-3));
        for (int i = j + 1; i < kTerms; ++i) {
            double s = g[i][j];
            for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            l[i][j] = s / l[j][j];
        }
    }
    std::array<double, kTerms> z{};
    for (int j = 0; j < kTerms; ++j) {
        double s = rhs[j];
        for (int k = 0; k < j; ++k) s -= l[j][k] * z[k];
        z[j] = s / l[j][j];
    }
    std::array<double, kTerms> beta{};
    for (int j = kTerms - 1; j >= 0; --j) {
        double s = z[j];
        for (int k = j + 1; k < kTerms; ++k) s -= l[k][j] * beta[k];
        beta[j] = s / l[j][j];
    }
    for (int j = 0; j < kTerms; ++j) coeffs[j] = beta[j] / scale[j];
}

}  // namespace

OperatorModel train(std::span<const FeedbackRecord> records, int threshold) {
    if (records.empty()) throw Error("train: no records");
    const OperatorKind kind = records.front().kind;
    for (const auto& r : records) {
        if (!(r.kind == kind)) {
            throw Error("train: mixed operator kinds (" + to_string(kind) + " vs " +
                        to_string(r.kind) + ")");
        }
    }
    if (static_cast<std::int64_t>(records.size()) < threshold) {
        throw Error("train: insufficient feedback for " + to_string(kind) + ": " +
                    std::to_string(records.size()) + " records, threshold " +
                    std::to_string(threshold));
    }

    Design d;
    d.n = records.size();
    d.a.resize(d.n * kTerms);
    d.y.resize(d.n);
    for (std::size_t i = 0; i < d.n; ++i) {
        const auto phi = feature_map(records[i].features);
        for (int j = 0; j < kTerms; ++j) d.at(i, j) = phi[j];
        d.y[i] = records[i].act_cost;
    }

    OperatorModel model;
    model.kind = kind;
    model.trained_on = static_cast<std::int64_t>(records.size());
    if (!solve_qr(d, model.coefficients)) {
        solve_ridge(d, model.coefficients);
        model.ridge_fallback = true;
    }

    double ssr = 0.0;
    for (std::size_t i = 0; i < d.n; ++i) {
        const auto phi = feature_map(records[i].features);
        double fit = 0.0;
        for (int j = 0; j < kTerms; ++j) fit += model.coefficients[j] * phi[j];
        const double r = records[i].act_cost - fit;
        ssr += r * r;
    }
    model.residual_rms = std::sqrt(ssr / static_cast<double>(d.n));
    return model;
}

void ModelSet::insert(OperatorModel model) { models_[model.kind] = std::move(model); }

const OperatorModel* ModelSet::find(const OperatorKind& kind) const {
    const auto it = models_.find(kind);
    return it == models_.end() ? nullptr : &it->second;
}

std::string ModelSet::to_json() const {
    json arr = json::array();
    for (const auto& [kind, m] : models_) {
        json j;
        j["kind"] = to_string(kind);
        j["coefficients"] = m.coefficients;
        j["trained_on"] = m.trained_on;
        j["residual_rms"] = m.residual_rms;
        arr.push_back(std::move(j));
    }
    return arr.dump();
}

ModelSet ModelSet::from_json(const std::string& text) {
    ModelSet set;
    json arr;
    try {
        arr = json::parse(text);
        for (const auto& j : arr) {
            OperatorModel m;
            m.kind = kind_from_string(j.at("kind").get<std::string>());
            const auto coeffs = j.at("coefficients").get<std::vector<double>>();
            if (coeffs.size() != 4) throw Error("model for " + to_string(m.kind) +
                                                ": expected 4 coefficients");
            std::copy(coeffs.begin(), coeffs.end(), m.coefficients.begin());
            m.trained_on = j.at("trained_on").get<std::int64_t>();
            m.residual_rms = j.at("residual_rms").get<double>();
            set.insert(std::move(m));
        }
    } catch (const json::exception& e) {
        throw Error(std::string("malformed model file: ") + e.what());
    }
    return set;
}

ModelSet train_all(const FeedbackStore& store, int threshold) {
    ModelSet set;
    for (const auto& [kind, count] : store.counts_by_kind()) {
        if (count < threshold) continue;
        set.insert(train(store.records_of(kind), threshold));
    }
    return set;
}

}  // namespace qcost
