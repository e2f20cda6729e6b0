#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iob/domains.hpp"
#include "iob/model_io.hpp"
#include "iob/subproblem.hpp"

using namespace iob;

TEST_CASE("ffg topology: n_agents+1 houses with line-shaped CPT parents") {
    FfgParams p;
    p.n_agents = 4;
    FactoredDecPomdp m = make_ffg(p);
    CHECK(m.n_factors() == 5);
    CHECK(validate_model(m).empty());

    const Cpt& middle = m.transition_cpts[2];
    CHECK(middle.parent_factors_prev == std::vector<int>{1, 2, 3});
    CHECK(middle.parent_agents == std::vector<int>{1, 2});

    const Cpt& first = m.transition_cpts[0];
    CHECK(first.parent_factors_prev == std::vector<int>{0, 1});
    CHECK(first.parent_agents == std::vector<int>{0});
}

TEST_CASE("two agents at a burning house extinguish it with probability one") {
    FfgParams p;
    p.n_agents = 2;
    FactoredDecPomdp m = make_ffg(p);
    // House 1 is visited by agent 0 going right and agent 1 going left.
    for (int x0 = 0; x0 < 3; ++x0)
        for (int x1 = 0; x1 < 3; ++x1)
            for (int x2 = 0; x2 < 3; ++x2) {
                JointState s = {x0, x1, x2};
                double mass = 0.0;
                for (int n0 = 0; n0 < 3; ++n0)
                    for (int n2 = 0; n2 < 3; ++n2)
                        mass += joint_transition_prob(m, s, {1, 0}, {n0, 0, n2});
                CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
            }
}

TEST_CASE("single-agent ffg has two houses and no external parents") {
    FfgParams p;
    p.n_agents = 1;
    auto model = std::make_shared<const FactoredDecPomdp>(make_ffg(p));
    CHECK(model->n_factors() == 2);
    SubProblem sp = extract_subproblem(model, {0}, {0, 1}, {0, 1});
    CHECK(sp.nlaf_factors.empty());
}

TEST_CASE("edge sub-problem: last house carries the influence") {
    FfgParams p;
    p.n_agents = 3;
    DomainSubproblem d = make_ffg_edge_sp(p, 2);
    CHECK(d.sp.factors == std::vector<int>{0, 1, 2});
    CHECK(d.sp.nlaf_factors == std::vector<int>{2});
    CHECK(d.sp.ext_factors == std::vector<int>{3});
    CHECK(d.sp.ext_agents == std::vector<int>{2});
    CHECK(influence_source_space_size(d.sp) == 6);
}

TEST_CASE("internal sub-problem: both end houses carry influence") {
    FfgParams p;
    p.n_agents = 4;
    DomainSubproblem d = make_ffg_internal_sp(p, 2);
    CHECK(d.sp.factors == std::vector<int>{1, 2, 3});
    CHECK(d.sp.nlaf_factors == std::vector<int>{1, 3});
    CHECK(influence_source_space_size(d.sp) == 36);
}

TEST_CASE("sub-problem constructors reject degenerate sizes") {
    FfgParams p;
    p.n_agents = 2;
    CHECK_THROWS_AS(make_ffg_edge_sp(p, 2), std::invalid_argument);
    CHECK_THROWS_AS(make_ffg_internal_sp(p, 1), std::invalid_argument);
    FfgParams bad;
    bad.n_agents = 0;
    CHECK_THROWS_AS(make_ffg(bad), std::invalid_argument);
    bad.n_agents = 2;
    bad.p_spread = 1.5;
    CHECK_THROWS_AS(make_ffg(bad), std::invalid_argument);
}

TEST_CASE("aloha line topology couples neighboring senders") {
    AlohaParams p;
    p.n_islands = 3;
    FactoredDecPomdp m = make_aloha(p);
    CHECK(validate_model(m).empty());
    CHECK(m.n_factors() == 3);
    CHECK(m.transition_cpts[0].parent_agents == std::vector<int>{0, 1});
    CHECK(m.transition_cpts[1].parent_agents == std::vector<int>{0, 1, 2});
    CHECK(m.transition_cpts[1].parent_factors_prev == std::vector<int>{1});
}

TEST_CASE("smallest aloha instance is valid") {
    AlohaParams p;
    p.n_islands = 2;
    CHECK(validate_model(make_aloha(p)).empty());
}

TEST_CASE("aloha rejects unknown topology tags") {
    AlohaParams p;
    p.topology = "grid";
    CHECK_THROWS_AS(make_aloha(p), std::invalid_argument);
}

TEST_CASE("generators are deterministic documents") {
    FfgParams p;
    p.n_agents = 2;
    std::string a = model_to_json(make_ffg(p)).dump(2);
    std::string b = model_to_json(make_ffg(p)).dump(2);
    CHECK(a == b);

    AlohaParams q;
    q.n_islands = 3;
    CHECK(model_to_json(make_aloha(q)).dump(2) == model_to_json(make_aloha(q)).dump(2));
}

TEST_CASE("model documents round-trip") {
    FfgParams p;
    p.n_agents = 2;
    FactoredDecPomdp m = make_ffg(p);
    Json j = model_to_json(m);
    FactoredDecPomdp back = model_from_json(j);
    CHECK(model_to_json(back).dump() == j.dump());
    CHECK(validate_model(back).empty());
}
