#pragma once

#include <cstdint>
#include <vector>

#include "iob/subproblem.hpp"

namespace iob {

/// A value vector over local states, tagged with the policy fragment that
/// induced it: the action plus, per joint observation, the index of the
/// chosen successor vector in the next stage's set.
struct ValueVector {
    std::vector<double> values;
    int action = -1;
    std::vector<int> successors;
};

struct VectorSet {
    int stage = 0;
    std::vector<ValueVector> vectors;
};

/// Removes exact duplicates and entrywise-dominated vectors only; the
/// pointwise maximum over the set (hence the value at every belief) is
/// unchanged. Survivors keep their relative order.
VectorSet prune(const VectorSet& set);

/// nu^{ao}(x) = sum_x' O(o|a,x') T(x'|x,a) nu(x'). Requires a fully
/// specified transition model (no influence sources).
ValueVector regular_backproject(const LocalDynamics& dyn, const std::vector<double>& nu, Index a,
                                Index o);

/// Influence-optimistic back-projection: per state an independent max over
/// the joint influence-source space, ties resolved toward the lowest source
/// index.
ValueVector io_backproject(const LocalDynamics& dyn, const std::vector<double>& nu, Index a, Index o);

enum class DpMode { io, regular };

inline constexpr Index kDefaultVectorCap = 200000;

struct DpOptions {
    Index vector_cap = kDefaultVectorCap;
    unsigned n_threads = 0;  // 0 = hardware default
    /// Filter working sets down to a minimal representation with exact
    /// witness linear programs (value-preserving). Without it, cross-sums of
    /// pointwise-maximal vectors overrun the cap beyond horizon 2.
    bool lp_prune = true;
};

struct DpStats {
    std::vector<Index> vectors_per_stage;      // post-prune, index 0 = stage 0
    std::vector<Index> candidates_per_stage;   // pre-prune cross-sum sizes
    std::uint64_t backprojections = 0;         // (vector, action, observation) triples
    std::uint64_t influence_evals = 0;         // u-instantiations examined
};

struct DpResult {
    std::vector<VectorSet> sets;  // index = stage
    DpStats stats;
};

/// Exact finite-horizon value-vector dynamic programming. Stage h-1 holds
/// the immediate-reward vectors r_a; every earlier stage cross-sums one
/// back-projected vector per observation over all next-stage choices, adds
/// r_a, and prunes. io mode uses influence-optimistic back-projections;
/// regular mode requires a sub-problem without NLAFs and reproduces the
/// exact MPOMDP solution. Throws CapExceeded when a cross-sum would exceed
/// opts.vector_cap.
DpResult dp_solve(const SubProblem& sp, DpMode mode, const DpOptions& opts = {});

struct MpomdpBound {
    double bound = 0.0;
    DpStats stats;
};

/// V-hat^P: max_nu <b0_c, nu> over the stage-0 set of dp_solve in io mode.
MpomdpBound io_qmpomdp_bound(const SubProblem& sp, const DpOptions& opts = {});

/// Regular-mode value at the initial belief (exact MPOMDP value of a closed
/// sub-problem).
MpomdpBound regular_qmpomdp_value(const SubProblem& sp, const DpOptions& opts = {});

namespace detail {

/// max over the belief simplex of min_w <b, phi - w>; positive iff phi
/// improves on the set somewhere. Fills the maximizing belief.
double witness_delta(const std::vector<const std::vector<double>*>& w_set,
                     const std::vector<double>& phi, std::vector<double>& witness);

/// Minimal value-preserving subset (Lark's filter); returns indices kept.
std::vector<Index> lark_filter(const std::vector<const std::vector<double>*>& vecs);

}  // namespace detail

}  // namespace iob
