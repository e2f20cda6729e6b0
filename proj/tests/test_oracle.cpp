#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "iob/domains.hpp"
#include "iob/oracle.hpp"
#include "test_helpers.hpp"

using namespace iob;

namespace {

FlatModel ffg_flat(int n_agents, int horizon) {
    FfgParams p;
    p.n_agents = n_agents;
    p.horizon = horizon;
    return flatten(make_ffg(p));
}

FactoredDecPomdp zero_reward_ffg(int n_agents, int horizon) {
    FfgParams p;
    p.n_agents = n_agents;
    p.horizon = horizon;
    p.reward_per_level = {0.0, 0.0, 0.0};
    return make_ffg(p);
}

// Swaps the two agents of a 2-agent model, remapping every id reference.
FactoredDecPomdp swap_agents(FactoredDecPomdp m) {
    std::swap(m.agents[0], m.agents[1]);
    std::swap(m.observation_cpts[0], m.observation_cpts[1]);
    auto remap = [](std::vector<int>& ids) {
        for (int& id : ids) id = id == 0 ? 1 : id == 1 ? 0 : id;
    };
    for (Cpt& cpt : m.transition_cpts) remap(cpt.parent_agents);
    for (Cpt& cpt : m.observation_cpts) remap(cpt.parent_agents);
    for (LocalReward& r : m.rewards) remap(r.agent_scope);
    return m;
}

}  // namespace

TEST_CASE("zero rewards evaluate to zero") {
    FlatModel flat = flatten(zero_reward_ffg(2, 2));
    JointPolicy pi = random_policy(flat, 1);
    CHECK(exact_policy_value(flat, pi).total == 0.0);
    CHECK(brute_force_optimal(flat).value == 0.0);
    CHECK(qmmdp_value(flat).value == 0.0);
}

TEST_CASE("deterministic model and policy accumulate on-path rewards") {
    FactoredDecPomdp m = test::tiny_model();
    m.horizon = 3;
    // Deterministic dynamics: f0' = f0, f1' flips; observations fixed.
    m.transition_cpts[0].table = {1, 0, 1, 0, 0, 1, 0, 1};
    m.transition_cpts[1].table = {0, 1, 1, 0};
    m.observation_cpts[0].table = {1, 0, 1, 0, 1, 0, 1, 0};
    m.b0 = {{1.0, 0.0}, {0.0, 1.0}};
    FlatModel flat = flatten(m);
    JointPolicy pi;
    pi.actions = {{{0}, {0, 0}, {0, 0, 0, 0}}};
    // Path: (0,1) -> (0,0) -> (0,1) -> (0,0); rewards R(0,a0,f1') each stage.
    double expected = m.rewards[0].table[0] + m.rewards[0].table[1] + m.rewards[0].table[0];
    PolicyValue v = exact_policy_value(flat, pi);
    CHECK(v.total == doctest::Approx(expected).epsilon(1e-12));
    double block_sum = 0.0;
    for (double b : v.per_block) block_sum += b;
    CHECK(block_sum == doctest::Approx(v.total).epsilon(1e-12));
}

TEST_CASE("monte carlo agrees with the exact value within 3 sigma") {
    FlatModel flat = ffg_flat(2, 2);
    JointPolicy pi = random_policy(flat, 42);
    double exact = exact_policy_value(flat, pi).total;
    McValue mc = monte_carlo_value(flat, pi, 100000, 7);
    CHECK(std::abs(mc.mean - exact) <= 3.0 * mc.std_error + 1e-12);
}

TEST_CASE("monte carlo is reproducible and exact on deterministic systems") {
    FlatModel flat = ffg_flat(2, 2);
    JointPolicy pi = random_policy(flat, 3);
    McValue a = monte_carlo_value(flat, pi, 500, 11);
    McValue b = monte_carlo_value(flat, pi, 500, 11);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);

    FactoredDecPomdp det = test::tiny_model();
    det.transition_cpts[0].table = {1, 0, 1, 0, 0, 1, 0, 1};
    det.transition_cpts[1].table = {0, 1, 1, 0};
    det.observation_cpts[0].table = {1, 0, 1, 0, 1, 0, 1, 0};
    det.b0 = {{1.0, 0.0}, {0.0, 1.0}};
    FlatModel dflat = flatten(det);
    JointPolicy dpi;
    dpi.actions = {{{1}, {0, 0}}};
    McValue mc = monte_carlo_value(dflat, dpi, 50, 5);
    CHECK(mc.std_error == 0.0);
    CHECK(mc.mean == doctest::Approx(exact_policy_value(dflat, dpi).total).epsilon(1e-12));
}

TEST_CASE("standard error halves when quadrupling the sample size") {
    FlatModel flat = ffg_flat(2, 2);
    JointPolicy pi = random_policy(flat, 9);
    for (std::uint64_t rep = 0; rep < 3; ++rep) {
        McValue small = monte_carlo_value(flat, pi, 4000, 100 + rep);
        McValue large = monte_carlo_value(flat, pi, 16000, 200 + rep);
        double ratio = large.std_error / small.std_error;
        CHECK(ratio > 0.4);
        CHECK(ratio < 0.62);
    }
}

TEST_CASE("horizon-1 brute force picks the best joint action under b0") {
    FlatModel flat = ffg_flat(2, 1);
    OracleResult res = brute_force_optimal(flat);
    double best = -1e300;
    for (Index ja = 0; ja < flat.n_actions; ++ja) {
        double v = 0.0;
        for (Index s = 0; s < flat.n_states; ++s)
            for (Index s2 = 0; s2 < flat.n_states; ++s2)
                v += flat.b0[s] * flat.t(s, ja, s2) * flat.r(s, ja, s2);
        best = std::max(best, v);
    }
    CHECK(res.value == doctest::Approx(best).epsilon(1e-12));
    CHECK(res.policies_evaluated == flat.n_actions);
}

TEST_CASE("argmax policy evaluates back to the reported optimum") {
    FlatModel flat = ffg_flat(2, 2);
    OracleResult res = brute_force_optimal(flat);
    CHECK(exact_policy_value(flat, res.argmax).total == doctest::Approx(res.value).epsilon(1e-10));
}

TEST_CASE("brute force equals exhaustive evaluation of every policy") {
    // Independent route: enumerate 1-agent policies by hand at h=2.
    FfgParams p;
    p.n_agents = 1;
    p.horizon = 2;
    FlatModel flat = flatten(make_ffg(p));
    double best = -1e300;
    for (int a0 = 0; a0 < 2; ++a0)
        for (int a10 = 0; a10 < 2; ++a10)
            for (int a11 = 0; a11 < 2; ++a11) {
                JointPolicy pi;
                pi.actions = {{{a0}, {a10, a11}}};
                best = std::max(best, exact_policy_value(flat, pi).total);
            }
    OracleResult res = brute_force_optimal(flat);
    CHECK(res.value == doctest::Approx(best).epsilon(1e-12));
    CHECK(res.policies_evaluated == 8);
}

TEST_CASE("perfect observations from a known start reduce to Q-MMDP") {
    FfgParams p;
    p.n_agents = 1;
    p.horizon = 2;
    FactoredDecPomdp m = make_ffg(p);
    // Point-mass start, both houses burning at level 1.
    m.b0 = {{0.0, 1.0, 0.0}, {0.0, 1.0, 0.0}};
    // Identity observation of the full next state (9 values).
    m.agents[0].observations = {"s0", "s1", "s2", "s3", "s4", "s5", "s6", "s7", "s8"};
    Cpt obs;
    obs.parent_factors_next = {0, 1};
    obs.child_cardinality = 9;
    obs.table.assign(81, 0.0);
    for (Index s = 0; s < 9; ++s) obs.table[s * 9 + s] = 1.0;
    m.observation_cpts[0] = obs;
    REQUIRE(validate_model(m).empty());

    FlatModel flat = flatten(m);
    CHECK(brute_force_optimal(flat).value == doctest::Approx(qmmdp_value(flat).value).epsilon(1e-9));
}

TEST_CASE("relabeling agents leaves the optimal value unchanged") {
    FfgParams p;
    p.n_agents = 2;
    p.horizon = 2;
    FactoredDecPomdp m = make_ffg(p);
    FlatModel flat = flatten(m);
    FlatModel swapped = flatten(swap_agents(m));
    CHECK(brute_force_optimal(flat).value ==
          doctest::Approx(brute_force_optimal(swapped).value).epsilon(1e-10));
}

TEST_CASE("value chain: optimal <= belief-tree MPOMDP <= Q-MMDP") {
    FlatModel flat = ffg_flat(2, 2);
    double dec = brute_force_optimal(flat).value;
    double mpomdp = mpomdp_belief_tree_value(flat, flat.b0, flat.horizon);
    double mmdp = qmmdp_value(flat).value;
    CHECK(dec <= mpomdp + 1e-9);
    CHECK(mpomdp <= mmdp + 1e-9);
}

TEST_CASE("locally-optimal value of the whole problem is the optimum") {
    FfgParams p;
    p.n_agents = 2;
    p.horizon = 2;
    auto model = test::share(make_ffg(p));
    FlatModel flat = flatten(*model);
    SubProblem whole = test::whole_problem_sp(model);
    CHECK(locally_optimal_value(flat, whole) ==
          doctest::Approx(brute_force_optimal(flat).value).epsilon(1e-12));

    SubProblem empty_rewards = extract_subproblem(model, {0, 1}, {0, 1, 2}, {});
    CHECK(locally_optimal_value(flat, empty_rewards) == 0.0);
}

TEST_CASE("locally-optimal value can exceed the optimal policy's local share") {
    FfgParams p;
    p.n_agents = 3;
    p.horizon = 2;
    auto model = test::share(make_ffg(p));
    FlatModel flat = flatten(*model);
    SubProblem edge = extract_subproblem(model, {0, 1}, {0, 1, 2}, {0, 1, 2});
    OracleResult res = brute_force_optimal(flat);
    double share = 0.0;
    for (int l : edge.rewards) share += res.per_block[static_cast<Index>(l)];
    CHECK(locally_optimal_value(flat, edge) >= share - 1e-9);
}

TEST_CASE("q-mmdp upper-bounds the decentralized optimum") {
    FlatModel flat = ffg_flat(2, 2);
    CHECK(qmmdp_value(flat).value >= brute_force_optimal(flat).value - 1e-9);
}

TEST_CASE("flattened whole-problem sub-problem matches the model flatten") {
    FfgParams p;
    p.n_agents = 2;
    auto model = test::share(make_ffg(p));
    SubProblem whole = test::whole_problem_sp(model);
    FlatModel a = flatten(*model);
    FlatModel b = flatten_subproblem(whole);
    REQUIRE(a.n_states == b.n_states);
    CHECK(a.transition == b.transition);
    CHECK(a.observation == b.observation);
    CHECK(a.reward == b.reward);
    CHECK(a.b0 == b.b0);
}

TEST_CASE("brute force rejects policy spaces above the cap") {
    FlatModel flat = ffg_flat(2, 3);
    CHECK_THROWS_AS(brute_force_optimal(flat, 1000), CapExceeded);
}

TEST_CASE("heuristic policies are valid and bounded by the optimum") {
    FlatModel flat = ffg_flat(2, 2);
    double opt = brute_force_optimal(flat).value;
    CHECK(exact_policy_value(flat, random_policy(flat, 4)).total <= opt + 1e-9);
    CHECK(exact_policy_value(flat, greedy_mmdp_policy(flat)).total <= opt + 1e-9);
}
