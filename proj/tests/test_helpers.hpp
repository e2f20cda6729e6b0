#pragma once

#include <memory>
#include <random>

#include "iob/domains.hpp"
#include "iob/model.hpp"
#include "iob/subproblem.hpp"

namespace iob::test {

/// Hand-built 2-factor, 1-agent model with distinct CPT entries, used where
/// a value must be computable by hand. Factor cards {2, 2}, 2 actions,
/// 2 observations.
inline FactoredDecPomdp tiny_model() {
    FactoredDecPomdp m;
    m.name = "tiny";
    m.horizon = 2;
    m.agents.push_back({{"a0", "a1"}, {"o0", "o1"}});
    m.factors.push_back({"f0", 2});
    m.factors.push_back({"f1", 2});

    // f0' depends on (f0, action): rows f0=0,a=0 / f0=0,a=1 / f0=1,a=0 / f0=1,a=1
    Cpt t0;
    t0.parent_factors_prev = {0};
    t0.parent_agents = {0};
    t0.child_cardinality = 2;
    t0.table = {0.3, 0.7, 0.6, 0.4, 0.9, 0.1, 0.2, 0.8};
    m.transition_cpts.push_back(t0);

    // f1' depends on (f1) only.
    Cpt t1;
    t1.parent_factors_prev = {1};
    t1.child_cardinality = 2;
    t1.table = {0.5, 0.5, 0.25, 0.75};
    m.transition_cpts.push_back(t1);

    // Observation depends on (f0', action).
    Cpt o0;
    o0.parent_factors_next = {0};
    o0.parent_agents = {0};
    o0.child_cardinality = 2;
    o0.table = {0.8, 0.2, 0.1, 0.9, 0.55, 0.45, 0.35, 0.65};
    m.observation_cpts.push_back(o0);

    LocalReward r;
    r.factor_scope = {0};
    r.agent_scope = {0};
    r.next_factor_scope = {1};
    r.table = {1.0, -2.0, 0.5, 3.0, -1.0, 0.25, 2.0, -0.5};
    m.rewards.push_back(r);

    m.b0 = {{0.4, 0.6}, {0.7, 0.3}};
    return m;
}

inline std::shared_ptr<const FactoredDecPomdp> share(FactoredDecPomdp m) {
    return std::make_shared<const FactoredDecPomdp>(std::move(m));
}

inline SubProblem whole_problem_sp(std::shared_ptr<const FactoredDecPomdp> model) {
    std::vector<int> agents, factors, rewards;
    for (Index i = 0; i < model->n_agents(); ++i) agents.push_back(static_cast<int>(i));
    for (Index f = 0; f < model->n_factors(); ++f) factors.push_back(static_cast<int>(f));
    for (Index l = 0; l < model->n_rewards(); ++l) rewards.push_back(static_cast<int>(l));
    return extract_subproblem(std::move(model), agents, factors, rewards);
}

inline std::vector<double> random_belief(std::mt19937_64& rng, Index n) {
    std::vector<double> b(n);
    double sum = 0.0;
    std::uniform_real_distribution<double> unit(1e-6, 1.0);
    for (Index i = 0; i < n; ++i) sum += (b[i] = unit(rng));
    for (Index i = 0; i < n; ++i) b[i] /= sum;
    return b;
}

}  // namespace iob::test
