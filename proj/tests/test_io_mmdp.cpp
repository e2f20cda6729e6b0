#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iob/domains.hpp"
#include "iob/io_mmdp.hpp"
#include "iob/oracle.hpp"
#include "test_helpers.hpp"

using namespace iob;

namespace {

// Independent route: one backup evaluated through the local evaluators, with
// the influence pinned to a single source.
double fixed_u_backup(const SubProblem& sp, Index u_index, const std::vector<int>& x,
                      const std::vector<int>& a, const std::vector<double>& v_next) {
    InfluenceSource u = decode_influence(sp, u_index);
    double sum = 0.0;
    for (Index ti = 0; ti < sp.local_states.size(); ++ti) {
        std::vector<int> x2 = sp.local_states.decode(ti);
        double p = local_transition_prob(sp, x, a, u, x2);
        if (p == 0.0) continue;
        sum += p * (local_reward(sp, x, a, x2) + v_next[ti]);
    }
    return sum;
}

}  // namespace

TEST_CASE("horizon-1 edge sub-problem matches a hand-rolled enumeration") {
    FfgParams p;
    p.n_agents = 2;
    p.horizon = 1;
    DomainSubproblem d = make_ffg_edge_sp(p, 1);  // 2 houses, 1 agent
    LocalDynamics dyn = build_local_dynamics(d.sp);
    QTable q = io_qmmdp_backup(dyn, 0, {});

    MixedRadix uspace = influence_space(d.sp);
    std::vector<double> zeros(d.sp.local_states.size(), 0.0);
    for (Index xi = 0; xi < d.sp.local_states.size(); ++xi)
        for (Index ai = 0; ai < d.sp.local_actions.size(); ++ai) {
            double best = -1e300;
            for (Index ui = 0; ui < uspace.size(); ++ui)
                best = std::max(best, fixed_u_backup(d.sp, ui, d.sp.local_states.decode(xi),
                                                     d.sp.local_actions.decode(ai), zeros));
            CHECK(q.q(xi, ai) == doctest::Approx(best).epsilon(1e-12));
        }
}

TEST_CASE("backup dominates every fixed influence source") {
    FfgParams p;
    p.n_agents = 3;
    p.horizon = 2;
    DomainSubproblem d = make_ffg_edge_sp(p, 2);
    LocalDynamics dyn = build_local_dynamics(d.sp);

    // A nontrivial continuation: one prior backup from the terminal stage.
    QTable q1 = io_qmmdp_backup(dyn, 1, {});
    QTable q0 = io_qmmdp_backup(dyn, 0, q1.values);

    std::vector<double> v_next(dyn.states.size());
    for (Index x2 = 0; x2 < dyn.states.size(); ++x2) {
        double best = q1.q(x2, 0);
        for (Index a2 = 1; a2 < dyn.actions.size(); ++a2) best = std::max(best, q1.q(x2, a2));
        v_next[x2] = best;
    }
    MixedRadix uspace = influence_space(d.sp);
    for (Index xi = 0; xi < dyn.states.size(); ++xi)
        for (Index ai = 0; ai < dyn.actions.size(); ++ai)
            for (Index ui = 0; ui < uspace.size(); ++ui) {
                double fixed = fixed_u_backup(d.sp, ui, dyn.states.decode(xi),
                                              dyn.actions.decode(ai), v_next);
                CHECK(q0.q(xi, ai) >= fixed - 1e-9);
            }
}

TEST_CASE("all-zero rewards give an all-zero table") {
    FfgParams p;
    p.n_agents = 2;
    p.reward_per_level = {0.0, 0.0, 0.0};
    DomainSubproblem d = make_ffg_edge_sp(p, 1);
    MmdpBound b = io_qmmdp_bound(d.sp);
    CHECK(b.bound == 0.0);
    for (const QTable& q : b.q_by_stage)
        for (double v : q.values) CHECK(v == 0.0);
}

TEST_CASE("whole-problem bound equals flat Q-MMDP value iteration") {
    for (int h : {1, 2, 3}) {
        FfgParams p;
        p.n_agents = 2;
        p.horizon = h;
        auto model = test::share(make_ffg(p));
        SubProblem whole = test::whole_problem_sp(model);
        double io = io_qmmdp_bound(whole).bound;
        double flat = qmmdp_value(flatten(*model)).value;
        CHECK(io == doctest::Approx(flat).epsilon(1e-12));
    }
}

TEST_CASE("operation counter matches |u|*|X|*|A| exactly") {
    FfgParams p;
    p.n_agents = 3;
    p.horizon = 3;
    DomainSubproblem d = make_ffg_edge_sp(p, 2);
    CHECK(backup_op_counter(d.sp) == 6 * 27 * 4);
    MmdpBound b = io_qmmdp_bound(d.sp);
    for (std::uint64_t ops : b.ops_per_stage) CHECK(ops == 648);

    SubProblem whole = test::whole_problem_sp(d.model);
    CHECK(backup_op_counter(whole) == whole.local_states.size() * whole.local_actions.size());

    FfgParams p4;
    p4.n_agents = 4;
    DomainSubproblem internal = make_ffg_internal_sp(p4, 2);
    CHECK(backup_op_counter(internal.sp) == 36 * 27 * 4);
}

TEST_CASE("backups are deterministic and thread-count independent") {
    FfgParams p;
    p.n_agents = 3;
    p.horizon = 3;
    DomainSubproblem d = make_ffg_edge_sp(p, 2);
    MmdpOptions serial;
    serial.n_threads = 1;
    MmdpOptions wide;
    wide.n_threads = 4;
    MmdpBound a = io_qmmdp_bound(d.sp, serial);
    MmdpBound b = io_qmmdp_bound(d.sp, wide);
    CHECK(a.bound == b.bound);
    for (Index t = 0; t < a.q_by_stage.size(); ++t) {
        CHECK(a.q_by_stage[t].values == b.q_by_stage[t].values);
        CHECK(a.q_by_stage[t].argmax_u == b.q_by_stage[t].argmax_u);
    }
}

TEST_CASE("argmax ties break toward the lowest influence index") {
    FfgParams p;
    p.n_agents = 2;
    p.reward_per_level = {0.0, 0.0, 0.0};  // every u ties at zero
    DomainSubproblem d = make_ffg_edge_sp(p, 1);
    LocalDynamics dyn = build_local_dynamics(d.sp);
    QTable q = io_qmmdp_backup(dyn, 0, {});
    for (Index u : q.argmax_u) CHECK(u == 0);
}

TEST_CASE("decoupled optimism equals joint optimism without shared parents") {
    FfgParams p;
    p.n_agents = 4;
    p.horizon = 2;
    DomainSubproblem d = make_ffg_internal_sp(p, 2);
    MmdpOptions joint;
    MmdpOptions dec;
    dec.influence = InfluenceMode::decoupled;
    CHECK(io_qmmdp_bound(d.sp, joint).bound ==
          doctest::Approx(io_qmmdp_bound(d.sp, dec).bound).epsilon(1e-12));
}

TEST_CASE("decoupled optimism can only loosen the bound under shared parents") {
    // Two NLAFs sharing one external factor that pulls them in opposite
    // directions: the joint max must commit to one value, the decoupled max
    // takes both.
    FactoredDecPomdp m;
    m.name = "shared";
    m.horizon = 1;
    m.agents.push_back({{"a0"}, {"o0"}});
    m.factors = {{"f0", 2}, {"f1", 2}, {"f2", 2}};
    Cpt t0;  // f0' = f2
    t0.parent_factors_prev = {2};
    t0.child_cardinality = 2;
    t0.table = {1, 0, 0, 1};
    Cpt t1;  // f1' = not f2
    t1.parent_factors_prev = {2};
    t1.child_cardinality = 2;
    t1.table = {0, 1, 1, 0};
    Cpt t2;  // f2 self-loop
    t2.parent_factors_prev = {2};
    t2.child_cardinality = 2;
    t2.table = {1, 0, 0, 1};
    m.transition_cpts = {t0, t1, t2};
    Cpt obs;
    obs.child_cardinality = 1;
    obs.table = {1.0};
    m.observation_cpts = {obs};
    LocalReward r0;  // +1 when f0' = 1
    r0.next_factor_scope = {0};
    r0.table = {0.0, 1.0};
    LocalReward r1;  // +1 when f1' = 1
    r1.next_factor_scope = {1};
    r1.table = {0.0, 1.0};
    m.rewards = {r0, r1};
    m.b0 = {{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}};
    REQUIRE(validate_model(m).empty());

    auto model = test::share(std::move(m));
    SubProblem sp = extract_subproblem(model, {0}, {0, 1}, {0, 1});
    REQUIRE(sp.nlaf_factors.size() == 2);
    REQUIRE(influence_source_space_size(sp) == 2);

    MmdpOptions joint;
    MmdpOptions dec;
    dec.influence = InfluenceMode::decoupled;
    double vj = io_qmmdp_bound(sp, joint).bound;
    double vd = io_qmmdp_bound(sp, dec).bound;
    CHECK(vj == doctest::Approx(1.0));  // one of the two rewards
    CHECK(vd == doctest::Approx(2.0));  // both, incompatibly
    CHECK(vd >= vj);
}
