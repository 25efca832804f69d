#include <doctest.h>

#include <cmath>

#include "qcost/error.hpp"
#include "qcost/kernels.hpp"
#include "qcost/plan.hpp"
#include "qcost/rng.hpp"
#include "qcost/synth.hpp"
#include "testutil.hpp"

using namespace qcost;
using testutil::example_plan;

TEST_CASE("example plan parses to a five-operator tree") {
    const std::string doc = serialize_plan(example_plan());
    const QueryPlan plan = parse_plan(doc);
    CHECK(plan.operators.size() == 5);
    CHECK(plan.root == 5);
    CHECK(plan.op(1).kind == OperatorKind(OpTag::TableScan));
    CHECK(plan.op(3).act_cost == 20.0);
    CHECK(plan.op(5).children == std::vector<std::int64_t>{4, 3});
    CHECK(plan.weight == 1.0);
}

TEST_CASE("single-operator plan is valid") {
    const QueryPlan plan = parse_plan(R"({
        "query_id": "tiny", "root": 0,
        "operators": [{"id": 0, "kind": "TableScan", "opt_cost": 7.0,
                       "est_card_in": 10, "est_card_out": 4, "children": []}]})");
    CHECK(plan.operators.size() == 1);
    CHECK(plan.op(0).kind == OperatorKind(OpTag::TableScan));
}

TEST_CASE("self-loop child is rejected as a cycle") {
    const std::string doc = R"({
        "query_id": "bad", "root": 2,
        "operators": [
            {"id": 2, "kind": "Sort", "opt_cost": 1.0,
             "est_card_in": 1, "est_card_out": 1, "children": [2]}]})";
    CHECK_THROWS_WITH_AS(parse_plan(doc), doctest::Contains("cycle"), Error);
}

TEST_CASE("dangling child id is reported with the operator") {
    const std::string doc = R"({
        "query_id": "bad", "root": 1,
        "operators": [
            {"id": 1, "kind": "Sort", "opt_cost": 1.0,
             "est_card_in": 1, "est_card_out": 1, "children": [9]}]})";
    CHECK_THROWS_WITH_AS(parse_plan(doc), doctest::Contains("dangling child id 9"), Error);
}

TEST_CASE("negative cost is rejected") {
    QueryPlan plan = example_plan();
    plan.operators[0].opt_cost = -1.0;
    CHECK_THROWS_WITH_AS(validate(plan), doctest::Contains("operator 1"), Error);

    plan = example_plan();
    plan.operators[1].act_cost = -0.5;
    CHECK_THROWS_WITH_AS(validate(plan), doctest::Contains("negative act_cost"), Error);
}

TEST_CASE("duplicate ids, orphans, and leaf children are rejected") {
    QueryPlan plan = example_plan();
    plan.operators[1].id = 1;
    CHECK_THROWS_WITH_AS(validate(plan), doctest::Contains("duplicate"), Error);

    plan = example_plan();
    plan.operators[4].children = {4};  // O3 orphaned
    CHECK_THROWS_WITH_AS(validate(plan), doctest::Contains("operator 3"), Error);

    plan = example_plan();
    plan.operators[0].children = {2};
    CHECK_THROWS_WITH_AS(validate(plan), doctest::Contains("leaf kind"), Error);
}

TEST_CASE("unknown kind maps to Other and round-trips") {
    const std::string doc = R"({
        "query_id": "other", "root": 0,
        "operators": [{"id": 0, "kind": "BitmapHeapScan", "opt_cost": 1.0,
                       "est_card_in": 1, "est_card_out": 1, "children": []}]})";
    const QueryPlan plan = parse_plan(doc);
    CHECK(plan.op(0).kind == OperatorKind::other("BitmapHeapScan"));
    CHECK(to_string(plan.op(0).kind) == "BitmapHeapScan");
    CHECK(parse_plan(serialize_plan(plan)) == plan);
}

TEST_CASE("backbone selection in document order") {
    const QueryPlan plan = example_plan();

    SUBCASE("default backbone picks the three scans") {
        const auto leaves = leaf_operators(plan, default_backbone());
        REQUIRE(leaves.size() == 3);
        CHECK(leaves[0].id == 1);
        CHECK(leaves[1].id == 2);
        CHECK(leaves[2].id == 3);
    }
    SUBCASE("narrow backbone") {
        const auto leaves = leaf_operators(plan, {OperatorKind(OpTag::TableScan)});
        REQUIRE(leaves.size() == 1);
        CHECK(leaves[0].id == 1);
    }
    SUBCASE("all kinds selects every operator") {
        BackboneSet all;
        for (const auto& o : plan.operators) all.insert(o.kind);
        CHECK(leaf_operators(plan, all).size() == plan.operators.size());
    }
}

TEST_CASE("leaf and internal actual cost sums") {
    const QueryPlan plan = example_plan(/*with_internal_actuals=*/true);
    const BackboneSet backbone = default_backbone();
    CHECK(actual_leaf_cost(plan, backbone) == 35.0);
    CHECK(actual_internal_cost(plan, backbone) == 150.0);

    SUBCASE("missing actual cost is an error naming the operator") {
        const QueryPlan no_acts = example_plan(false);
        CHECK_THROWS_WITH_AS(actual_internal_cost(no_acts, backbone),
                             doctest::Contains("operator 4"), Error);
    }
    SUBCASE("all-leaf plan has zero internal cost") {
        QueryPlan flat;
        flat.query_id = "flat";
        flat.root = 0;
        PlanOperator o;
        o.id = 0;
        o.kind = OperatorKind(OpTag::TableScan);
        o.act_cost = 1.5;
        flat.operators = {o};
        CHECK(actual_internal_cost(flat, backbone) == 0.0);
    }
    SUBCASE("fractional costs add exactly") {
        QueryPlan three;
        three.query_id = "three";
        PlanOperator scan;
        scan.kind = OperatorKind(OpTag::TableScan);
        scan.act_cost = 1.5;
        for (int i = 0; i < 3; ++i) {
            scan.id = i + 1;
            three.operators.push_back(scan);
        }
        PlanOperator join;
        join.id = 0;
        join.kind = OperatorKind(OpTag::HashJoin);
        join.act_cost = 0.0;
        join.children = {1, 2, 3};
        three.operators.push_back(join);
        three.root = 0;
        validate(three);
        CHECK(actual_leaf_cost(three, backbone) == 4.5);
    }
}

TEST_CASE("backbone split partitions the plan and sums are exact") {
    const GroundTruth gt = default_ground_truth(0.3);
    const auto plans = synth_plans(40, gt, PlanShape{4, 3}, CardRange{5.0, 5e4},
                                   default_opt_cost_model(), 2024);
    const BackboneSet backbone = default_backbone();
    for (const auto& plan : plans) {
        const auto leaves = leaf_operators(plan, backbone);
        std::size_t internal = 0;
        for (const auto& o : plan.operators) {
            if (!backbone.count(o.kind)) ++internal;
        }
        CHECK(leaves.size() + internal == plan.operators.size());

        std::vector<double> all;
        for (const auto& o : plan.operators) all.push_back(*o.act_cost);
        const double total = kernels::sum(all);
        // L and I are faithfully rounded subset sums; their sum can sit one
        // ulp away from the independently accumulated whole-plan total.
        const double lhs = actual_leaf_cost(plan, backbone) + actual_internal_cost(plan, backbone);
        CHECK(std::abs(lhs - total) <= std::ldexp(std::abs(total), -52));
    }
}

TEST_CASE("serialize/parse round-trip is the identity on synthetic plans") {
    const auto plans = synth_plans(25, default_ground_truth(1.0), PlanShape{3, 2},
                                   CardRange{2.0, 1e5}, default_opt_cost_model(), 99);
    for (const auto& plan : plans) {
        const QueryPlan back = parse_plan(serialize_plan(plan));
        CHECK(back == plan);
        CHECK(serialize_plan(back) == serialize_plan(plan));
    }
}
