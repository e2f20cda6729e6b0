#include "iob/io_mmdp.hpp"

#include <atomic>

namespace iob {

QTable io_qmmdp_backup(const LocalDynamics& dyn, int stage, const std::vector<double>& q_next,
                       const MmdpOptions& opts, std::uint64_t* op_count) {
    const Index nx = dyn.states.size(), na = dyn.actions.size();
    if (!q_next.empty() && q_next.size() != nx * na)
        throw std::invalid_argument("io_qmmdp_backup: q_next dimensions do not match the sub-problem");

    QTable q;
    q.stage = stage;
    q.n_states = nx;
    q.n_actions = na;
    q.values.assign(nx * na, 0.0);
    q.argmax_u.assign(nx * na, 0);

    // Greedy continuation per next state.
    std::vector<double> v_next(nx, 0.0);
    if (!q_next.empty()) {
        for (Index x2 = 0; x2 < nx; ++x2) {
            double best = q_next[x2 * na];
            for (Index a2 = 1; a2 < na; ++a2) best = std::max(best, q_next[x2 * na + a2]);
            v_next[x2] = best;
        }
    }

    unsigned threads = opts.n_threads == 0 ? default_threads() : opts.n_threads;
    parallel_chunks(nx, threads, [&](Index begin, Index end) {
        for (Index x = begin; x < end; ++x) {
            for (Index a = 0; a < na; ++a) {
                const double* rew = dyn.r_row(x, a);
                double best = 0.0;
                Index best_u = 0;
                for (Index u = 0; u < dyn.n_u; ++u) {
                    const double* tp = dyn.t_row(u, x, a);
                    double sum = 0.0;
                    for (Index x2 = 0; x2 < nx; ++x2) sum += tp[x2] * (rew[x2] + v_next[x2]);
                    if (u == 0 || sum > best) {
                        best = sum;
                        best_u = u;
                    }
                }
                q.values[x * na + a] = best;
                q.argmax_u[x * na + a] = best_u;
            }
        }
    });
    if (op_count) *op_count += static_cast<std::uint64_t>(dyn.n_u) * nx * na;
    return q;
}

Index backup_op_counter(const SubProblem& sp) {
    return influence_source_space_size(sp) * sp.local_states.size() * sp.local_actions.size();
}

MmdpBound io_qmmdp_bound(const SubProblem& sp, const MmdpOptions& opts) {
    LocalDynamics dyn = build_local_dynamics(sp, opts.influence);
    const double gamma = sp.m().gamma;
    const int h = sp.m().horizon;

    MmdpBound out;
    out.q_by_stage.assign(static_cast<Index>(h), QTable{});
    out.ops_per_stage.assign(static_cast<Index>(h), 0);

    std::vector<double> q_next;  // empty = terminal zeros
    for (int t = h - 1; t >= 0; --t) {
        std::uint64_t ops = 0;
        // Discounting folds into the continuation values handed to the backup.
        std::vector<double> scaled = q_next;
        if (gamma != 1.0)
            for (double& v : scaled) v *= gamma;
        QTable q = io_qmmdp_backup(dyn, t, scaled, opts, &ops);
        out.ops_per_stage[static_cast<Index>(t)] = ops;
        q_next = q.values;
        out.q_by_stage[static_cast<Index>(t)] = std::move(q);
    }

    std::vector<double> b0 = local_b0(sp);
    const QTable& q0 = out.q_by_stage[0];
    double best = 0.0;
    for (Index a = 0; a < q0.n_actions; ++a) {
        double v = 0.0;
        for (Index x = 0; x < q0.n_states; ++x) v += b0[x] * q0.q(x, a);
        if (a == 0 || v > best) best = v;
    }
    out.bound = best;
    return out;
}

}  // namespace iob
