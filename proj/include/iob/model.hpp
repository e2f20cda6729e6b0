#pragma once

#include <string>
#include <utility>
#include <vector>

#include "iob/common.hpp"

namespace iob {

// Value indices, one per factor (states) or per agent (actions/observations).
using JointState = std::vector<int>;
using JointAction = std::vector<int>;
using JointObservation = std::vector<int>;

struct FactorSpec {
    std::string name;
    int cardinality = 0;
};

struct AgentSpec {
    std::vector<std::string> actions;
    std::vector<std::string> observations;
};

/// Conditional probability table of a 2DBN node.
///
/// Rows are indexed row-major over the concatenated parent list
/// (parent_factors_prev, parent_factors_next, parent_agents), first listed
/// parent varying slowest. Each row is a distribution over child values.
struct Cpt {
    std::vector<int> parent_factors_prev;  // stage-t factors
    std::vector<int> parent_factors_next;  // stage-(t+1) factors; observation CPTs only
    std::vector<int> parent_agents;        // action parents
    int child_cardinality = 0;
    std::vector<double> table;             // row_count() * child_cardinality

    Index row_count() const {
        return child_cardinality == 0 ? 0 : table.size() / static_cast<Index>(child_cardinality);
    }
    const double* row(Index r) const { return table.data() + r * static_cast<Index>(child_cardinality); }
};

/// A local reward component R_l(x_scope, a_scope, x'_scope). The table is
/// row-major over (factor_scope, agent_scope, next_factor_scope).
struct LocalReward {
    std::vector<int> factor_scope;       // stage t
    std::vector<int> agent_scope;
    std::vector<int> next_factor_scope;  // stage t+1
    std::vector<double> table;
};

struct Provenance {
    std::string generator;
    std::vector<std::pair<std::string, std::string>> params;
};

/// A factored Dec-POMDP as a two-stage dynamic Bayesian network: one
/// transition CPT per factor, one observation CPT per agent, additive local
/// rewards, and a product-form initial distribution.
struct FactoredDecPomdp {
    std::string name;
    std::vector<AgentSpec> agents;
    std::vector<FactorSpec> factors;
    std::vector<Cpt> transition_cpts;   // aligned with factors
    std::vector<Cpt> observation_cpts;  // aligned with agents
    std::vector<LocalReward> rewards;
    std::vector<std::vector<double>> b0;  // per-factor marginals
    int horizon = 1;
    double gamma = 1.0;
    Provenance provenance;

    Index n_agents() const { return agents.size(); }
    Index n_factors() const { return factors.size(); }
    Index n_rewards() const { return rewards.size(); }
    int factor_card(int f) const { return factors[static_cast<Index>(f)].cardinality; }
    int n_actions(int i) const { return static_cast<int>(agents[static_cast<Index>(i)].actions.size()); }
    int n_observations(int i) const {
        return static_cast<int>(agents[static_cast<Index>(i)].observations.size());
    }

    MixedRadix state_space() const;
    MixedRadix action_space() const;
    MixedRadix observation_space() const;
};

struct Violation {
    std::string where;
    std::string message;
};

/// Structural and stochasticity checks; empty result iff the model honors
/// every type invariant. Violations are data, not errors.
std::vector<Violation> validate_model(const FactoredDecPomdp& m);

/// Product over factor CPTs of the entry for s_next given parents drawn
/// from (s, a). Throws std::out_of_range on bad indices.
double joint_transition_prob(const FactoredDecPomdp& m, const JointState& s, const JointAction& a,
                             const JointState& s_next);

/// Product over agent observation CPTs given (a, s_next).
double joint_observation_prob(const FactoredDecPomdp& m, const JointAction& a,
                              const JointState& s_next, const JointObservation& o);

/// Sum of local reward tables evaluated on their restricted scopes.
double joint_reward(const FactoredDecPomdp& m, const JointState& s, const JointAction& a,
                    const JointState& s_next);

/// Value of a single reward component on (s, a, s').
double local_reward_value(const FactoredDecPomdp& m, const LocalReward& r, const JointState& s,
                          const JointAction& a, const JointState& s_next);

/// Explicit-state rendering of a factored model. States, joint actions and
/// joint observations are row-major mixed-radix indices over the declared
/// factor/agent orders.
struct FlatModel {
    Index n_states = 0;
    Index n_actions = 0;
    Index n_obs = 0;
    std::vector<int> factor_cards;
    std::vector<int> action_cards;  // per agent
    std::vector<int> obs_cards;     // per agent
    std::vector<double> transition;               // [s][a][s']
    std::vector<double> observation;              // [a][s'][o]
    std::vector<double> reward;                   // [s][a][s'], all blocks summed
    std::vector<std::vector<double>> block_reward;  // per LocalReward, same layout
    std::vector<double> b0;
    int horizon = 1;
    double gamma = 1.0;

    double t(Index s, Index a, Index s2) const { return transition[(s * n_actions + a) * n_states + s2]; }
    double o(Index a, Index s2, Index ob) const { return observation[(a * n_states + s2) * n_obs + ob]; }
    double r(Index s, Index a, Index s2) const { return reward[(s * n_actions + a) * n_states + s2]; }
    double rb(Index block, Index s, Index a, Index s2) const {
        return block_reward[block][(s * n_actions + a) * n_states + s2];
    }

    MixedRadix state_space() const { return MixedRadix(factor_cards); }
    MixedRadix action_space() const { return MixedRadix(action_cards); }
    MixedRadix observation_space() const { return MixedRadix(obs_cards); }
};

inline constexpr Index kDefaultFlattenCap = 10000;

/// Enumerates the joint state space into dense tables that agree with the
/// factored evaluators entry by entry. Throws CapExceeded when the state
/// count is above state_cap.
FlatModel flatten(const FactoredDecPomdp& m, Index state_cap = kDefaultFlattenCap);

}  // namespace iob
