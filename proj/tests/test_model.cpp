#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qcost/error.hpp"
#include "qcost/model.hpp"
#include "qcost/rng.hpp"

using namespace qcost;

namespace {

FeedbackRecord make_record(std::int64_t id, double c_in, double c_out, double act) {
    FeedbackRecord r;
    r.record_id = id;
    r.kind = OperatorKind(OpTag::TableScan);
    r.features.est_card_in = c_in;
    r.features.est_card_out = c_out;
    r.opt_cost = 1.0;
    r.act_cost = act;
    return r;
}

// Records whose actual cost is an exact function of the basis.
std::vector<FeedbackRecord> in_span_records(int n, const std::array<double, 4>& coeffs,
                                            std::uint64_t seed) {
    Rng rng(seed);
    std::vector<FeedbackRecord> records;
    for (int i = 0; i < n; ++i) {
        const double c_in = rng.log_uniform(1.0, 1e4);
        const double c_out = c_in * rng.uniform(0.05, 1.0);
        FeatureVector fv;
        fv.est_card_in = c_in;
        fv.est_card_out = c_out;
        const auto phi = feature_map(fv);
        double act = 0.0;
        for (int j = 0; j < 4; ++j) act += coeffs[j] * phi[j];
        records.push_back(make_record(i, c_in, c_out, act));
    }
    return records;
}

}  // namespace

TEST_CASE("feature map values") {
    FeatureVector fv;
    CHECK(feature_map(fv) == std::array<double, 4>{1.0, 0.0, 0.0, 0.0});

    fv.est_card_in = 1.0;
    fv.est_card_out = 1.0;
    CHECK(feature_map(fv) == std::array<double, 4>{1.0, 1.0, 1.0, 1.0});

    fv.est_card_in = 3.0;
    fv.est_card_out = 2.0;
    const auto phi = feature_map(fv);
    CHECK(phi[0] == 1.0);
    CHECK(phi[1] == 2.0);
    CHECK(phi[2] == 3.0);
    CHECK(phi[3] == doctest::Approx(6.0).epsilon(1e-12));  // 3 * log2(4)
}

TEST_CASE("training recovers an affine cost exactly") {
    std::vector<FeedbackRecord> records;
    Rng rng(5);
    for (int i = 0; i < 30; ++i) {
        const double c_in = rng.uniform(1.0, 500.0);
        const double c_out = rng.uniform(1.0, 400.0);
        records.push_back(make_record(i, c_in, c_out, 2.0 + 0.5 * c_out));
    }
    const OperatorModel m = train(records);
    CHECK(m.trained_on == 30);
    CHECK_FALSE(m.ridge_fallback);
    CHECK(m.residual_rms < 1e-6);
    CHECK(std::abs(m.coefficients[0] - 2.0) < 1e-6);
    CHECK(std::abs(m.coefficients[1] - 0.5) < 1e-6);
    CHECK(std::abs(m.coefficients[2]) < 1e-6);
    CHECK(std::abs(m.coefficients[3]) < 1e-6);
}

TEST_CASE("constant target predicts the constant inside the training hull") {
    std::vector<FeedbackRecord> records;
    Rng rng(6);
    for (int i = 0; i < 25; ++i) {
        records.push_back(make_record(i, rng.uniform(1.0, 1000.0), rng.uniform(1.0, 800.0), 7.0));
    }
    const OperatorModel m = train(records);
    for (int i = 0; i < 50; ++i) {
        FeatureVector fv;
        fv.est_card_in = rng.uniform(1.0, 1000.0);
        fv.est_card_out = rng.uniform(1.0, 800.0);
        CHECK(m.predict(fv) == doctest::Approx(7.0).epsilon(1e-6));
    }
}

TEST_CASE("insufficient records is an error") {
    auto records = in_span_records(3, {1, 0, 0, 0}, 9);
    CHECK_THROWS_WITH_AS(train(records, 10), doctest::Contains("insufficient"), Error);
}

TEST_CASE("mixed kinds are rejected") {
    auto records = in_span_records(12, {1, 0, 0, 0}, 10);
    records[4].kind = OperatorKind(OpTag::IndexSeek);
    CHECK_THROWS_WITH_AS(train(records), doctest::Contains("mixed"), Error);
}

TEST_CASE("identical feature rows trigger the ridge fallback") {
    std::vector<FeedbackRecord> records;
    for (int i = 0; i < 15; ++i) records.push_back(make_record(i, 100.0, 50.0, 9.0 + 0.1 * i));
    const OperatorModel m = train(records);
    CHECK(m.ridge_fallback);
    // The damped fit still lands near the mean response at the shared row.
    FeatureVector fv;
    fv.est_card_in = 100.0;
    fv.est_card_out = 50.0;
    CHECK(m.predict(fv) == doctest::Approx(9.7).epsilon(0.05));
}

TEST_CASE("prediction clamps below at zero") {
    OperatorModel m;
    m.kind = OperatorKind(OpTag::TableScan);
    m.coefficients = {-5.0, 0.0, 0.0, 0.0};
    FeatureVector fv;
    fv.est_card_in = 10.0;
    fv.est_card_out = 10.0;
    CHECK(m.predict(fv) == 0.0);

    m.coefficients = {0.0, 0.0, 0.0, 0.0};
    CHECK(m.predict(fv) == 0.0);

    m.coefficients = {2.0, 0.5, 0.0, 0.0};
    CHECK(m.predict(fv) == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("in-span targets are reproduced to 1e-6 relative") {
    const std::array<double, 4> truth = {1.5, 0.03, 0.004, 0.0007};
    const auto records = in_span_records(60, truth, 123);
    const OperatorModel m = train(records);
    CHECK(m.residual_rms < 1e-6);
    for (const auto& r : records) {
        const double pred = m.predict(r.features);
        CHECK(std::abs(pred - r.act_cost) <= 1e-6 * std::max(1.0, std::abs(r.act_cost)));
    }
}

TEST_CASE("training is permutation-invariant to 1e-9 relative") {
    const std::array<double, 4> truth = {2.0, 0.01, 0.002, 0.0004};
    auto records = in_span_records(200, truth, 77);
    // Perturb targets so the fit is not exact and order effects could show.
    Rng rng(78);
    for (auto& r : records) r.act_cost *= 1.0 + 0.05 * (rng.uniform01() - 0.5);

    const OperatorModel base = train(records);
    for (std::uint64_t shuffle_seed : {1u, 2u, 3u, 4u, 5u}) {
        auto shuffled = records;
        Rng sh(shuffle_seed);
        for (std::size_t i = shuffled.size(); i > 1; --i) {
            std::swap(shuffled[i - 1], shuffled[sh.uniform_int(i)]);
        }
        const OperatorModel m = train(shuffled);
        for (int j = 0; j < 4; ++j) {
            const double scale = std::max(1e-12, std::abs(base.coefficients[j]));
            CHECK(std::abs(m.coefficients[j] - base.coefficients[j]) / scale < 1e-9);
        }
    }
}

TEST_CASE("model set round-trips through json") {
    ModelSet set;
    OperatorModel m;
    m.kind = OperatorKind(OpTag::IndexSeek);
    m.coefficients = {1.0, 2.0, 3.0, 4.0};
    m.trained_on = 42;
    m.residual_rms = 0.125;
    set.insert(m);
    m.kind = OperatorKind::other("BitmapHeapScan");
    set.insert(m);

    const ModelSet back = ModelSet::from_json(set.to_json());
    REQUIRE(back.size() == 2);
    const OperatorModel* seek = back.find(OperatorKind(OpTag::IndexSeek));
    REQUIRE(seek != nullptr);
    CHECK(seek->coefficients == std::array<double, 4>{1.0, 2.0, 3.0, 4.0});
    CHECK(seek->trained_on == 42);
    CHECK(seek->residual_rms == 0.125);
    CHECK(back.find(OperatorKind::other("BitmapHeapScan")) != nullptr);
    CHECK(back.find(OperatorKind(OpTag::Sort)) == nullptr);
}
