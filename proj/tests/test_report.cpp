#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "iob/model_io.hpp"
#include "iob/oracle.hpp"
#include "iob/report.hpp"
#include "test_helpers.hpp"

using namespace iob;

TEST_CASE("single-block global bound equals the local bound") {
    FfgParams p;
    p.n_agents = 2;
    p.horizon = 2;
    auto model = test::share(make_ffg(p));
    Partition part = make_partition(model, {{0, 1, 2}});
    for (BoundType type : {BoundType::mmdp, BoundType::mpomdp, BoundType::decpomdp}) {
        double global = global_bound(part, type);
        double local = compute_sp_bound(part.sps[0], type).value;
        CHECK(global == doctest::Approx(local).epsilon(1e-12));
    }
}

TEST_CASE("zero-reward models have zero global bounds") {
    FfgParams p;
    p.n_agents = 2;
    p.horizon = 2;
    p.reward_per_level = {0, 0, 0};
    auto model = test::share(make_ffg(p));
    Partition part = make_partition(model, {{0}, {1}, {2}});
    CHECK(global_bound(part, BoundType::mmdp) == 0.0);
}

TEST_CASE("global bounds upper-bound the optimum for every partition") {
    FfgParams p;
    p.n_agents = 2;
    p.horizon = 2;
    auto model = test::share(make_ffg(p));
    double optimum = brute_force_optimal(flatten(*model)).value;
    std::vector<std::vector<std::vector<int>>> partitions = {
        {{0, 1, 2}}, {{0}, {1, 2}}, {{0, 1}, {2}}, {{0}, {1}, {2}}, {{0, 2}, {1}}};
    for (const auto& blocks : partitions) {
        Partition part = make_partition(model, blocks);
        for (BoundType type : {BoundType::mmdp, BoundType::mpomdp, BoundType::decpomdp})
            CHECK(global_bound(part, type) >= optimum - 1e-9);
    }
}

TEST_CASE("best partition takes the minimum, first on ties") {
    FfgParams p;
    p.n_agents = 3;
    p.horizon = 2;
    auto model = test::share(make_ffg(p));
    std::vector<std::vector<std::vector<int>>> candidates = {
        {{0}, {1}, {2}, {3}},  // four singleton sub-problems
        {{0, 1, 2, 3}},        // whole problem
    };
    PartitionChoice choice = best_partition_bound(model, candidates, BoundType::mmdp);
    double coarse = global_bound(make_partition(model, candidates[0]), BoundType::mmdp);
    double fine = global_bound(make_partition(model, candidates[1]), BoundType::mmdp);
    CHECK(choice.bound == doctest::Approx(std::min(coarse, fine)));
    CHECK(choice.index == (fine <= coarse ? 1 : 0));

    PartitionChoice tie = best_partition_bound(model, {candidates[0], candidates[0]}, BoundType::mmdp);
    CHECK(tie.index == 0);
    CHECK_THROWS_AS(best_partition_bound(model, {}, BoundType::mmdp), std::invalid_argument);
}

TEST_CASE("larger sub-problems tighten the bound") {
    FfgParams p;
    p.n_agents = 4;
    p.horizon = 2;
    auto model = test::share(make_ffg(p));
    double fine = global_bound(make_partition(model, {{0}, {1}, {2}, {3}, {4}}), BoundType::mmdp);
    double coarse = global_bound(make_partition(model, {{0, 1, 2}, {3, 4}}), BoundType::mmdp);
    CHECK(coarse <= fine + 1e-9);
}

TEST_CASE("eaf reproduces the published table values") {
    CHECK(std::round(eaf(-360.00, -382.47) * 100.0) / 100.0 == doctest::Approx(1.06));
    CHECK(std::round(eaf(-72.00, -71.99) * 100.0) / 100.0 == doctest::Approx(1.00));
    CHECK(eaf(5.0, 5.0) == doctest::Approx(1.0));
}

TEST_CASE("eaf is symmetric and rejects mixed signs") {
    CHECK(eaf(-3.0, -4.5) == doctest::Approx(eaf(-4.5, -3.0)));
    CHECK_THROWS_AS(eaf(-1.0, 1.0), SignMismatch);
    CHECK_THROWS_AS(eaf(0.0, -1.0), SignMismatch);
    CHECK(eaf(-2.0, -2.0) >= 1.0);
}

TEST_CASE("reports round-trip through json") {
    FfgParams p;
    p.n_agents = 2;
    p.horizon = 2;
    auto model = test::share(make_ffg(p));
    Partition part = make_partition(model, {{0, 1}, {2}});
    BoundReport report = global_bound_report(part, BoundType::mmdp);
    report.heuristic = HeuristicValue{-9.5, "random", "mc", 1000, 7, 0.02};
    report.eaf_value = eaf(report.global_bound, report.heuristic->value);

    double sum = 0.0;
    for (const SpBoundEntry& e : report.entries) sum += e.value;
    CHECK(std::abs(report.global_bound - sum) <= 1e-12);

    Json j = report_to_json(report, false);
    BoundReport back = report_from_json(j);
    CHECK(report_to_json(back, false).dump() == j.dump());
    CHECK(back.global_bound == report.global_bound);
    CHECK(back.entries.size() == report.entries.size());
    CHECK(back.heuristic->value == report.heuristic->value);
}

TEST_CASE("influence sweep rows are reproducible and trend with p") {
    FfgParams p;
    p.n_agents = 3;
    p.horizon = 2;
    std::vector<SweepRow> rows = influence_strength_sweep(p, {0.0, 0.5, 1.0}, 2, BoundType::mmdp);
    REQUIRE(rows.size() == 3);
    // Default generator has p_extinguish2 = 1: the p=1 row is the default bound.
    DomainSubproblem d = make_ffg_edge_sp(p, 2);
    CHECK(rows[2].bound == doctest::Approx(compute_sp_bound(d.sp, BoundType::mmdp).value));
    // Optimism beats the exact value everywhere (negative-cost domain).
    for (const SweepRow& r : rows) CHECK(r.ratio >= 1.0 - 1e-12);
    CHECK(rows[2].ratio > rows[0].ratio);
    CHECK_THROWS_AS(influence_strength_sweep(p, {}, 2, BoundType::mmdp), std::invalid_argument);
}
