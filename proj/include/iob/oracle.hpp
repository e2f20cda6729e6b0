#pragma once

#include <cstdint>
#include <vector>

#include "iob/model.hpp"
#include "iob/subproblem.hpp"

namespace iob {

/// A deterministic decentralized joint policy: actions[i][t][r] is agent i's
/// action at stage t after own-observation history with rank r. Ranks encode
/// histories base |O_i|, earliest observation most significant.
struct JointPolicy {
    std::vector<std::vector<std::vector<int>>> actions;

    int horizon() const { return actions.empty() ? 0 : static_cast<int>(actions[0].size()); }
    Index n_agents() const { return actions.size(); }
};

struct PolicyValue {
    double total = 0.0;
    std::vector<double> per_block;  // one contribution per LocalReward
};

/// Exact expectation by forward enumeration of (state, joint observation
/// history) distributions over stages.
PolicyValue exact_policy_value(const FlatModel& flat, const JointPolicy& pi);

struct McValue {
    double mean = 0.0;
    double std_error = 0.0;
    Index n_sims = 0;
};

/// Seeded Monte-Carlo estimate of a policy's value; the RNG stream of each
/// simulation is derived from (seed, sim index) so runs are reproducible.
McValue monte_carlo_value(const FlatModel& flat, const JointPolicy& pi, Index n_sims,
                          std::uint64_t seed);

inline constexpr Index kDefaultPolicyCap = 10000000;

struct OracleResult {
    double value = 0.0;
    JointPolicy argmax;
    std::vector<double> per_block;  // block decomposition of the optimum
    Index policies_evaluated = 0;
    Index subtree_vectors = 0;
};

/// Exhaustive optimum over all deterministic joint policies, with memoized
/// sub-tree value vectors so the scan itself is a table walk. Ties break
/// toward the first policy in enumeration order. Throws CapExceeded when the
/// joint policy count is above cap.
OracleResult brute_force_optimal(const FlatModel& flat, Index cap = kDefaultPolicyCap);

/// V^LO_c: the maximum over all joint policies of the value restricted to
/// the sub-problem's reward components. flat must come from the SP's parent
/// model.
double locally_optimal_value(const FlatModel& flat, const SubProblem& sp,
                             Index cap = kDefaultPolicyCap);

struct QmmdpResult {
    double value = 0.0;
    std::vector<std::vector<double>> q;  // per stage, [s][a]
};

/// Classical fully-observable Q-MMDP value iteration on the flat model.
QmmdpResult qmmdp_value(const FlatModel& flat);

/// Exact finite-horizon MPOMDP value at a belief by exhaustive belief-tree
/// expansion with steps_to_go stages remaining.
double mpomdp_belief_tree_value(const FlatModel& flat, const std::vector<double>& belief,
                                int steps_to_go);

/// Closed sub-problem (no NLAFs) as an explicit-state model; block rewards
/// are indexed by position in sp.rewards.
FlatModel flatten_subproblem(const SubProblem& sp, Index state_cap = kDefaultFlattenCap);

/// Uniformly random action at every history, drawn from a single stream
/// seeded with `seed`.
JointPolicy random_policy(const FlatModel& flat, std::uint64_t seed);

/// Open-loop greedy policy against the Q-MMDP tables: at each stage plays
/// the joint action maximizing expected Q under the action-conditioned state
/// distribution, ignoring observations.
JointPolicy greedy_mmdp_policy(const FlatModel& flat);

}  // namespace iob
