#pragma once

#include <cstdint>
#include <vector>

#include "iob/subproblem.hpp"

namespace iob {

/// Stage-t decision rule: one action map per SP agent, indexed by that
/// agent's own observation-history rank (base |O_i|, earliest observation
/// most significant). Decentralization is structural: an entry can only be
/// looked up with the owning agent's history.
struct DecisionRule {
    std::vector<std::vector<int>> actions_by_agent;
};

/// One decision rule per stage 0..h-1; the stage-t rule's maps have
/// |O_i|^t entries.
struct LocalJointPolicy {
    std::vector<DecisionRule> rules;

    int horizon() const { return static_cast<int>(rules.size()); }
};

inline constexpr Index kDefaultJointPolicyCap = 1000000;

/// Complete, duplicate-free enumeration of deterministic local joint
/// policies in a fixed canonical order. Throws CapExceeded when the joint
/// count is above cap.
class LocalPolicyEnumerator {
public:
    LocalPolicyEnumerator(const SubProblem& sp, int horizon, Index cap = kDefaultJointPolicyCap);

    Index count() const { return count_; }

    /// Fills the policy with rank `index` in enumeration order.
    LocalJointPolicy policy(Index index) const;

    /// Streams the next policy; returns false when exhausted.
    bool next(LocalJointPolicy& out);

private:
    const SubProblem* sp_;
    int horizon_;
    Index count_ = 1;
    Index cursor_ = 0;
    std::vector<Index> stage0_counts_;  // per agent
};

/// Per-stage plan-time value tables. per_stage[t] has one entry per
/// (joint observation history, local state): index = hist * |X_c| + x.
struct PtEvaluation {
    std::vector<std::vector<double>> per_stage;

    const std::vector<double>& stage0() const { return per_stage[0]; }
};

/// Influence-optimistic evaluation of one local joint policy on the
/// plan-time sub-problem: backward recursion from stage h-1 (immediate
/// rewards) to 0, one max over the influence sources per (state, history)
/// cell per stage.
PtEvaluation io_pt_evaluate(const SubProblem& sp, const LocalJointPolicy& pi);

struct DecOptions {
    Index policy_cap = kDefaultJointPolicyCap;
    unsigned n_threads = 0;
};

struct DecBound {
    double bound = 0.0;
    LocalJointPolicy argmax;
    Index policies_evaluated = 0;
    Index subtree_vectors = 0;
    std::uint64_t memo_hits = 0;
};

/// V-hat^D: max over all local joint policies of <b0_c, stage-0 vector>.
/// Shared policy sub-trees are evaluated once through memoized sub-tree
/// value vectors; ties break toward the lowest policy rank.
DecBound io_qdecpomdp_bound(const SubProblem& sp, const DecOptions& opts = {});

}  // namespace iob
