#pragma once

#include <memory>
#include <string>
#include <vector>

#include "iob/model.hpp"

namespace iob {

/// External parents of one non-locally affected factor, in CPT order.
struct NlafInfluence {
    int factor = -1;
    std::vector<int> ext_parent_factors;
    std::vector<int> ext_parent_agents;
};

/// A slice <agents, factors, rewards> of a factored Dec-POMDP. Factors whose
/// CPT parents all lie inside the slice are OLAFs; the rest are NLAFs, and
/// the union of their external parents spans the influence-source space.
struct SubProblem {
    std::shared_ptr<const FactoredDecPomdp> model;
    std::vector<int> agents;   // sorted ids
    std::vector<int> factors;  // sorted ids
    std::vector<int> rewards;  // sorted ids

    std::vector<int> olaf_factors;
    std::vector<int> nlaf_factors;
    std::vector<NlafInfluence> influence;

    // Deduplicated union of external parents; a single influence-source
    // assignment instantiates all NLAFs jointly.
    std::vector<int> ext_factors;
    std::vector<int> ext_agents;

    MixedRadix local_states;        // over `factors`
    MixedRadix local_actions;       // over `agents`
    MixedRadix local_observations;  // over `agents`

    const FactoredDecPomdp& m() const { return *model; }
    bool whole_problem() const { return nlaf_factors.empty(); }
    int factor_position(int factor_id) const;  // -1 when not a member
    int agent_position(int agent_id) const;

    /// "agents=0,1|factors=0,1,2|rewards=0,1,2"
    std::string signature() const;
};

/// One joint instantiation of the external parents, aligned with
/// sp.ext_factors / sp.ext_agents.
struct InfluenceSource {
    std::vector<int> factor_values;
    std::vector<int> agent_actions;
};

/// Mixed radix over (ext_factors, ext_agents); its indices order the
/// influence-source space, lowest index first for tie-breaking.
MixedRadix influence_space(const SubProblem& sp);

/// |u|: product of external parent cardinalities, shared parents counted
/// once. Empty influence space yields 1.
Index influence_source_space_size(const SubProblem& sp);

InfluenceSource decode_influence(const SubProblem& sp, Index u_index);

/// Slices the model and classifies factors. Throws
/// ObservationDependenceViolation / RewardDependenceViolation when the
/// structural assumptions fail; subsets are sorted and deduplicated.
SubProblem extract_subproblem(std::shared_ptr<const FactoredDecPomdp> model, std::vector<int> agents,
                              std::vector<int> factors, std::vector<int> rewards);

/// Product of member-factor CPT entries with external parents pinned to u.
/// x, x_next index sp.factors order; a_c indexes sp.agents order. Throws
/// std::invalid_argument when u does not instantiate the full space.
double local_transition_prob(const SubProblem& sp, const std::vector<int>& x, const std::vector<int>& a_c,
                             const InfluenceSource& u, const std::vector<int>& x_next);

double local_observation_prob(const SubProblem& sp, const std::vector<int>& a_c,
                              const std::vector<int>& x_next, const std::vector<int>& o_c);

/// Sum over the SP's reward components.
double local_reward(const SubProblem& sp, const std::vector<int>& x, const std::vector<int>& a_c,
                    const std::vector<int>& x_next);

/// Product marginal of b0 on the SP's factors, indexed by local state.
std::vector<double> local_b0(const SubProblem& sp);

enum class ClosureRule {
    /// Add only what assumptions 1-2 force: reward scopes, then observation
    /// parents of included agents, to fixpoint.
    reward_scope,
    /// Additionally include every agent compatible with assumption 1 that
    /// acts on an included factor (default).
    covering_agents,
};

struct Partition {
    std::shared_ptr<const FactoredDecPomdp> model;
    std::vector<std::vector<int>> blocks;  // reward ids per block
    std::vector<SubProblem> sps;
};

/// Closes each reward block into a valid SubProblem. Blocks must cover the
/// reward set exactly once; throws std::invalid_argument otherwise.
Partition make_partition(std::shared_ptr<const FactoredDecPomdp> model,
                         std::vector<std::vector<int>> blocks,
                         ClosureRule rule = ClosureRule::covering_agents);

/// Dense per-SP dynamics shared by the bound engines.
///
/// trans is laid out [u][x][a][x'], reward [x][a][x'], obsprob [a][x'][o].
/// In decoupled mode the u axis runs over independent per-NLAF
/// instantiations (shared external parents counted per NLAF), which can only
/// loosen the optimism; with no shared parents it coincides with the joint
/// space.
struct LocalDynamics {
    MixedRadix states, actions, observations;
    Index n_u = 1;
    std::vector<double> trans;
    std::vector<double> reward;
    std::vector<double> obsprob;

    double t(Index u, Index x, Index a, Index x2) const {
        return trans[((u * states.size() + x) * actions.size() + a) * states.size() + x2];
    }
    const double* t_row(Index u, Index x, Index a) const {
        return trans.data() + ((u * states.size() + x) * actions.size() + a) * states.size();
    }
    double r(Index x, Index a, Index x2) const {
        return reward[(x * actions.size() + a) * states.size() + x2];
    }
    const double* r_row(Index x, Index a) const {
        return reward.data() + (x * actions.size() + a) * states.size();
    }
    double o(Index a, Index x2, Index ob) const {
        return obsprob[(a * states.size() + x2) * observations.size() + ob];
    }
};

enum class InfluenceMode { joint, decoupled };

inline constexpr Index kDefaultDynamicsCellCap = 300000000;

LocalDynamics build_local_dynamics(const SubProblem& sp, InfluenceMode mode = InfluenceMode::joint,
                                   Index cell_cap = kDefaultDynamicsCellCap);

}  // namespace iob
