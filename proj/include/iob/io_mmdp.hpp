#pragma once

#include <cstdint>
#include <vector>

#include "iob/subproblem.hpp"

namespace iob {

/// Stage-indexed action values over local states.
struct QTable {
    int stage = 0;
    Index n_states = 0;
    Index n_actions = 0;
    std::vector<double> values;    // [x][a]
    std::vector<Index> argmax_u;   // influence source chosen per (x, a)

    double q(Index x, Index a) const { return values[x * n_actions + a]; }
};

struct MmdpOptions {
    InfluenceMode influence = InfluenceMode::joint;
    unsigned n_threads = 0;  // 0 = hardware default
};

/// One influence-optimistic dynamic-programming backup: for every (x, a) the
/// influence sources are chosen to maximize the expected one-step value.
/// q_next empty means the terminal all-zero table. op_count, when given,
/// receives the number of inner-loop evaluations (|u| * |X| * |A|).
QTable io_qmmdp_backup(const LocalDynamics& dyn, int stage, const std::vector<double>& q_next,
                       const MmdpOptions& opts = {}, std::uint64_t* op_count = nullptr);

/// Predicted inner-loop evaluations of one backup stage.
Index backup_op_counter(const SubProblem& sp);

struct MmdpBound {
    double bound = 0.0;
    std::vector<QTable> q_by_stage;           // index 0 = stage 0
    std::vector<std::uint64_t> ops_per_stage;
};

/// The IO-Q-MMDP upper bound: full-horizon backward induction followed by
/// max_a <b0_c, Q_0(., a)>.
MmdpBound io_qmmdp_bound(const SubProblem& sp, const MmdpOptions& opts = {});

}  // namespace iob
