#include "iob/vector_dp.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <numeric>
#include <unordered_map>

namespace iob {

namespace {

bool dominates(const std::vector<double>& w, const std::vector<double>& v) {
    for (Index k = 0; k < v.size(); ++k)
        if (w[k] < v[k]) return false;
    return true;
}

std::uint64_t hash_values(const std::vector<double>& v) {
    std::uint64_t h = 1469598103934665603ULL;
    for (double d : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof(bits));
        h = (h ^ bits) * 1099511628211ULL;
    }
    return h;
}

// Keeps, per distinct value table, the first occurrence index; fills
// `representative` so callers can remap provenance.
template <class Vec>
std::vector<Index> dedupe_indices(const std::vector<Vec>& items,
                                  const std::function<const std::vector<double>&(const Vec&)>& values) {
    std::vector<Index> keep;
    std::unordered_map<std::uint64_t, std::vector<Index>> buckets;
    for (Index i = 0; i < items.size(); ++i) {
        const std::vector<double>& v = values(items[i]);
        auto& bucket = buckets[hash_values(v)];
        bool dup = false;
        for (Index j : bucket)
            if (values(items[j]) == v) {
                dup = true;
                break;
            }
        if (!dup) {
            bucket.push_back(i);
            keep.push_back(i);
        }
    }
    return keep;
}

// Pointwise-dominance filter over already-deduplicated vectors. A dominator
// must have a strictly larger coordinate sum, so candidates are checked
// against undominated vectors in descending-sum order only.
std::vector<bool> dominated_mask(const std::vector<const std::vector<double>*>& vecs) {
    const Index n = vecs.size();
    std::vector<double> sums(n, 0.0);
    for (Index i = 0; i < n; ++i)
        sums[i] = std::accumulate(vecs[i]->begin(), vecs[i]->end(), 0.0);
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return sums[a] > sums[b]; });

    std::vector<bool> dominated(n, false);
    for (Index pi = 0; pi < n; ++pi) {
        Index i = order[pi];
        for (Index pj = 0; pj < pi; ++pj) {
            Index j = order[pj];
            if (dominated[j] || sums[j] <= sums[i]) continue;
            if (dominates(*vecs[j], *vecs[i])) {
                dominated[i] = true;
                break;
            }
        }
    }
    return dominated;
}

}  // namespace

namespace detail {

// Witness search for Lark-style filtering: delta = max over the belief
// simplex of min_w <b, phi - w>. The last belief coordinate is eliminated
// through the simplex constraint and delta is shifted to be nonnegative, so
// the all-slack basis is feasible and a single primal phase with Bland's
// rule suffices. Returns delta (clamped to keep-the-vector on a rare pivot
// cap bail-out) and fills the witness belief.
double witness_delta(const std::vector<const std::vector<double>*>& w_set,
                     const std::vector<double>& phi, std::vector<double>& witness) {
    const Index n = phi.size();
    if (w_set.empty()) {
        witness.assign(n, 1.0 / static_cast<double>(n));
        return 1.0;
    }
    const Index m = w_set.size();

    double shift = 1.0;
    for (Index w = 0; w < m; ++w)
        for (Index s = 0; s < n; ++s) shift = std::max(shift, std::abs(phi[s] - (*w_set[w])[s]) + 1.0);

    // Vars: b_0..b_{n-2}, d (= delta + shift), all >= 0.
    // Row w: sum_s b_s (d_w[last] - d_w[s]) + d <= shift + d_w[last]
    // Row m: sum_s b_s <= 1
    const Index nv = n;  // n-1 belief vars + d
    const Index n_cols = nv + m + 1;
    const Index rhs = n_cols;
    const Index rows = m + 1;
    std::vector<std::vector<double>> tab(rows, std::vector<double>(n_cols + 1, 0.0));
    for (Index w = 0; w < m; ++w) {
        double d_last = phi[n - 1] - (*w_set[w])[n - 1];
        for (Index s = 0; s + 1 < n; ++s) tab[w][s] = d_last - (phi[s] - (*w_set[w])[s]);
        tab[w][n - 1] = 1.0;  // d
        tab[w][nv + w] = 1.0;
        tab[w][rhs] = shift + d_last;
    }
    for (Index s = 0; s + 1 < n; ++s) tab[m][s] = 1.0;
    tab[m][nv + m] = 1.0;
    tab[m][rhs] = 1.0;

    std::vector<Index> basis(rows);
    for (Index r = 0; r < rows; ++r) basis[r] = nv + r;

    // Objective: max d. obj holds reduced costs; obj[rhs] the negated value.
    std::vector<double> obj(n_cols + 1, 0.0);
    obj[n - 1] = 1.0;

    const double eps = 1e-11;
    bool bailed = false;
    for (Index pivots = 0;; ++pivots) {
        if (pivots > 200 * (rows + n_cols)) {
            bailed = true;
            break;
        }
        Index enter = n_cols;
        for (Index j = 0; j < n_cols; ++j)
            if (obj[j] > eps) {
                enter = j;  // Bland: lowest improving index
                break;
            }
        if (enter == n_cols) break;
        Index leave = rows;
        double best_ratio = 0.0;
        for (Index r = 0; r < rows; ++r) {
            if (tab[r][enter] <= eps) continue;
            double ratio = tab[r][rhs] / tab[r][enter];
            if (leave == rows || ratio < best_ratio - 1e-12 ||
                (std::abs(ratio - best_ratio) <= 1e-12 && basis[r] < basis[leave])) {
                leave = r;
                best_ratio = ratio;
            }
        }
        if (leave == rows) break;  // unbounded; cannot happen here
        std::vector<double>& prow = tab[leave];
        double inv = 1.0 / prow[enter];
        for (double& v : prow) v *= inv;
        for (Index r = 0; r < rows; ++r) {
            if (r == leave || tab[r][enter] == 0.0) continue;
            double f = tab[r][enter];
            for (Index j = 0; j <= n_cols; ++j) tab[r][j] -= f * prow[j];
        }
        if (obj[enter] != 0.0) {
            double f = obj[enter];
            for (Index j = 0; j <= n_cols; ++j) obj[j] -= f * prow[j];
        }
        basis[leave] = enter;
    }

    witness.assign(n, 0.0);
    for (Index r = 0; r < rows; ++r)
        if (basis[r] + 1 < n) witness[basis[r]] = std::max(0.0, tab[r][rhs]);
    double mass = 0.0;
    for (Index s = 0; s + 1 < n; ++s) mass += witness[s];
    witness[n - 1] = std::max(0.0, 1.0 - mass);
    mass += witness[n - 1];
    if (mass > 0.0)
        for (double& v : witness) v /= mass;

    if (bailed) return 1.0;  // keep the candidate; only ever enlarges the set
    return -obj[rhs] - shift;
}

// Value-preserving subset selection. Candidates are visited strongest
// coordinate-sum first; a candidate is dropped only with a proof that the
// kept set already covers it everywhere. Drop proofs come from witness LPs
// over a constraint subset grown cutting-plane style (fewer constraints can
// only raise delta, so a nonpositive subset delta is a valid proof), and
// most keeps are certified cheaply against cached witness beliefs.
std::vector<Index> lark_filter(const std::vector<const std::vector<double>*>& vecs) {
    if (vecs.size() <= 1) {
        std::vector<Index> all(vecs.size());
        std::iota(all.begin(), all.end(), Index{0});
        return all;
    }
    const Index n = vecs[0]->size();

    std::vector<double> sums(vecs.size(), 0.0);
    for (Index i = 0; i < vecs.size(); ++i)
        sums[i] = std::accumulate(vecs[i]->begin(), vecs[i]->end(), 0.0);
    std::vector<Index> order(vecs.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return sums[a] > sums[b]; });

    std::vector<Index> kept;
    std::vector<const std::vector<double>*> kept_vecs;
    std::vector<std::vector<double>> witnesses;   // one per kept vector
    std::vector<double> max_at_witness;           // current kept max there

    auto dot = [n](const std::vector<double>& b, const std::vector<double>& v) {
        double s = 0.0;
        for (Index k = 0; k < n; ++k) s += b[k] * v[k];
        return s;
    };

    std::vector<double> witness;
    for (Index idx : order) {
        const std::vector<double>& phi = *vecs[idx];

        bool dropped = false;
        for (const std::vector<double>* w : kept_vecs) {
            bool dom = true;
            for (Index s = 0; s < n && dom; ++s) dom = (*w)[s] >= phi[s];
            if (dom) {
                dropped = true;
                break;
            }
        }
        if (dropped) continue;

        bool keep = false;
        std::vector<double> keep_witness;
        for (Index j = 0; j < witnesses.size() && !keep; ++j) {
            if (dot(witnesses[j], phi) > max_at_witness[j] + 1e-12) {
                keep = true;
                keep_witness = witnesses[j];
            }
        }

        if (!keep && !dropped) {
            std::vector<const std::vector<double>*> subset;
            std::vector<char> in_subset(kept.size(), 0);
            while (true) {
                double delta = witness_delta(subset, phi, witness);
                if (delta <= 1e-12) {
                    dropped = true;
                    break;
                }
                // Check the subset witness against the whole kept set.
                double best = -std::numeric_limits<double>::infinity();
                Index blocker = kept.size();
                for (Index j = 0; j < kept.size(); ++j) {
                    double v = dot(witness, *kept_vecs[j]);
                    if (v > best) {
                        best = v;
                        blocker = j;
                    }
                }
                if (kept.empty() || dot(witness, phi) > best + 1e-12) {
                    keep = true;
                    keep_witness = witness;
                    break;
                }
                if (in_subset[blocker]) {
                    keep = true;  // numerically stuck: keeping is always sound
                    keep_witness = witness;
                    break;
                }
                in_subset[blocker] = 1;
                subset.push_back(kept_vecs[blocker]);
            }
        }

        if (keep) {
            for (Index j = 0; j < witnesses.size(); ++j)
                max_at_witness[j] = std::max(max_at_witness[j], dot(witnesses[j], phi));
            kept.push_back(idx);
            kept_vecs.push_back(vecs[idx]);
            double here = dot(keep_witness, phi);
            for (const std::vector<double>* w : kept_vecs)
                here = std::max(here, dot(keep_witness, *w));
            witnesses.push_back(std::move(keep_witness));
            max_at_witness.push_back(here);
        }
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

}  // namespace detail

namespace {

// Shared filter chain: dedupe, pointwise dominance, then the optional exact
// witness filter. Returns surviving indices into `vecs`, in original order.
std::vector<Index> filter_chain(const std::vector<const std::vector<double>*>& vecs, bool lp) {
    std::vector<Index> alive;
    {
        std::unordered_map<std::uint64_t, std::vector<Index>> buckets;
        for (Index i = 0; i < vecs.size(); ++i) {
            auto& bucket = buckets[hash_values(*vecs[i])];
            bool dup = false;
            for (Index j : bucket)
                if (*vecs[j] == *vecs[i]) {
                    dup = true;
                    break;
                }
            if (!dup) {
                bucket.push_back(i);
                alive.push_back(i);
            }
        }
    }
    std::vector<const std::vector<double>*> deduped;
    deduped.reserve(alive.size());
    for (Index i : alive) deduped.push_back(vecs[i]);
    std::vector<bool> dominated = dominated_mask(deduped);
    std::vector<Index> maximal;
    std::vector<const std::vector<double>*> maximal_vecs;
    for (Index k = 0; k < alive.size(); ++k)
        if (!dominated[k]) {
            maximal.push_back(alive[k]);
            maximal_vecs.push_back(deduped[k]);
        }
    if (!lp) return maximal;
    std::vector<Index> kept = detail::lark_filter(maximal_vecs);
    std::vector<Index> out;
    out.reserve(kept.size());
    for (Index k : kept) out.push_back(maximal[k]);
    return out;
}

}  // namespace

VectorSet prune(const VectorSet& set) {
    VectorSet out;
    out.stage = set.stage;
    std::function<const std::vector<double>&(const ValueVector&)> vals =
        [](const ValueVector& v) -> const std::vector<double>& { return v.values; };
    std::vector<Index> kept = dedupe_indices(set.vectors, vals);
    std::vector<const std::vector<double>*> vecs;
    vecs.reserve(kept.size());
    for (Index i : kept) vecs.push_back(&set.vectors[i].values);
    std::vector<bool> dominated = dominated_mask(vecs);
    for (Index k = 0; k < kept.size(); ++k)
        if (!dominated[k]) out.vectors.push_back(set.vectors[kept[k]]);
    return out;
}

ValueVector regular_backproject(const LocalDynamics& dyn, const std::vector<double>& nu, Index a,
                                Index o) {
    if (dyn.n_u != 1)
        throw std::invalid_argument("regular_backproject: sub-problem has influence sources");
    return io_backproject(dyn, nu, a, o);
}

ValueVector io_backproject(const LocalDynamics& dyn, const std::vector<double>& nu, Index a, Index o) {
    const Index nx = dyn.states.size();
    if (nu.size() != nx) throw std::invalid_argument("io_backproject: vector length mismatch");
    ValueVector out;
    out.action = static_cast<int>(a);
    out.values.assign(nx, 0.0);
    std::vector<double> weighted(nx);
    for (Index x2 = 0; x2 < nx; ++x2) weighted[x2] = dyn.o(a, x2, o) * nu[x2];
    for (Index x = 0; x < nx; ++x) {
        double best = 0.0;
        for (Index u = 0; u < dyn.n_u; ++u) {
            const double* tp = dyn.t_row(u, x, a);
            double sum = 0.0;
            for (Index x2 = 0; x2 < nx; ++x2) sum += tp[x2] * weighted[x2];
            if (u == 0 || sum > best) best = sum;
        }
        out.values[x] = best;
    }
    return out;
}

namespace {

// Immediate-reward vector; the max over u folds in because rewards may
// depend on the next state.
ValueVector reward_vector(const LocalDynamics& dyn, Index a) {
    const Index nx = dyn.states.size();
    ValueVector out;
    out.action = static_cast<int>(a);
    out.values.assign(nx, 0.0);
    for (Index x = 0; x < nx; ++x) {
        const double* rew = dyn.r_row(x, a);
        double best = 0.0;
        for (Index u = 0; u < dyn.n_u; ++u) {
            const double* tp = dyn.t_row(u, x, a);
            double sum = 0.0;
            for (Index x2 = 0; x2 < nx; ++x2) sum += tp[x2] * rew[x2];
            if (u == 0 || sum > best) best = sum;
        }
        out.values[x] = best;
    }
    return out;
}

struct Tagged {
    std::vector<double> values;
    std::vector<int> successors;
};

}  // namespace

namespace {

// Backward vector recursion from stage h-1 down to `down_to`. Bound
// computations stop at stage 1: the stage-0 value at a fixed belief
// separates per observation, so the final cross-sum never has to be built.
DpResult dp_backward(const SubProblem& sp, const LocalDynamics& dyn, DpMode mode,
                     const DpOptions& opts, int down_to) {
    if (mode == DpMode::regular && !sp.whole_problem())
        throw std::invalid_argument(
            "dp_solve: regular mode needs a fully specified sub-problem (no NLAFs)");

    const Index nx = dyn.states.size(), na = dyn.actions.size(), no = dyn.observations.size();
    const int h = sp.m().horizon;
    const double gamma = sp.m().gamma;
    unsigned threads = opts.n_threads == 0 ? default_threads() : opts.n_threads;

    DpResult res;
    res.sets.assign(static_cast<Index>(h), VectorSet{});
    res.stats.vectors_per_stage.assign(static_cast<Index>(h), 0);
    res.stats.candidates_per_stage.assign(static_cast<Index>(h), 0);

    auto filter_tagged = [&](std::vector<Tagged>& items) {
        std::vector<const std::vector<double>*> vecs;
        vecs.reserve(items.size());
        for (const Tagged& it : items) vecs.push_back(&it.values);
        std::vector<Index> kept = filter_chain(vecs, opts.lp_prune);
        std::vector<Tagged> out;
        out.reserve(kept.size());
        for (Index i : kept) out.push_back(std::move(items[i]));
        items.swap(out);
    };

    for (int t = h - 1; t >= down_to; --t) {
        VectorSet stage_set;
        stage_set.stage = t;

        if (t == h - 1) {
            for (Index a = 0; a < na; ++a) stage_set.vectors.push_back(reward_vector(dyn, a));
            res.stats.candidates_per_stage[static_cast<Index>(t)] = stage_set.vectors.size();
        } else {
            const VectorSet& next = res.sets[static_cast<Index>(t + 1)];
            for (Index a = 0; a < na; ++a) {
                // Back-project the entire next set per observation, then
                // filter before cross-summing.
                std::vector<std::vector<Tagged>> w_ao(no);
                for (Index o = 0; o < no; ++o) {
                    std::vector<Tagged> projected(next.vectors.size());
                    parallel_chunks(next.vectors.size(), threads, [&](Index begin, Index end) {
                        for (Index vi = begin; vi < end; ++vi) {
                            ValueVector bp = io_backproject(dyn, next.vectors[vi].values, a, o);
                            if (gamma != 1.0)
                                for (double& x : bp.values) x *= gamma;
                            projected[vi].values = std::move(bp.values);
                            projected[vi].successors = {static_cast<int>(vi)};
                        }
                    });
                    res.stats.backprojections += next.vectors.size();
                    res.stats.influence_evals += next.vectors.size() * dyn.n_u;
                    filter_tagged(projected);
                    if (std::getenv("IOB_DP_TRACE"))
                        std::fprintf(stderr, "t=%d a=%zu o=%zu w_ao=%zu\n", t, a, o, projected.size());
                    w_ao[o] = std::move(projected);
                }

                // Fold smallest sets first; successor slots stay per
                // observation regardless of fold order.
                std::vector<Index> fold_order(no);
                std::iota(fold_order.begin(), fold_order.end(), Index{0});
                std::stable_sort(fold_order.begin(), fold_order.end(),
                                 [&](Index l, Index r) { return w_ao[l].size() < w_ao[r].size(); });

                ValueVector r_a = reward_vector(dyn, a);
                std::vector<Tagged> partial(1);
                partial[0].values = std::move(r_a.values);
                partial[0].successors.assign(no, -1);
                for (Index k = 0; k < no; ++k) {
                    Index o = fold_order[k];
                    if (partial.size() * w_ao[o].size() > opts.vector_cap)
                        throw CapExceeded("dp_solve: cross-sum for stage " + std::to_string(t) +
                                          " would exceed " + std::to_string(opts.vector_cap) +
                                          " vectors");
                    std::vector<Tagged> grown;
                    grown.reserve(partial.size() * w_ao[o].size());
                    for (const Tagged& g : partial)
                        for (const Tagged& w : w_ao[o]) {
                            Tagged nw;
                            nw.values.resize(nx);
                            for (Index x = 0; x < nx; ++x) nw.values[x] = g.values[x] + w.values[x];
                            nw.successors = g.successors;
                            nw.successors[o] = w.successors[0];
                            grown.push_back(std::move(nw));
                        }
                    res.stats.candidates_per_stage[static_cast<Index>(t)] += grown.size();
                    Index pre = grown.size();
                    filter_tagged(grown);
                    if (std::getenv("IOB_DP_TRACE"))
                        std::fprintf(stderr, "t=%d a=%zu fold %zu/%zu: %zu -> %zu\n", t, a, k + 1, no,
                                     pre, grown.size());
                    partial.swap(grown);
                }
                for (Tagged& g : partial) {
                    ValueVector v;
                    v.values = std::move(g.values);
                    v.action = static_cast<int>(a);
                    v.successors = std::move(g.successors);
                    stage_set.vectors.push_back(std::move(v));
                }
            }
        }

        {
            std::vector<const std::vector<double>*> vecs;
            vecs.reserve(stage_set.vectors.size());
            for (const ValueVector& v : stage_set.vectors) vecs.push_back(&v.values);
            std::vector<Index> kept = filter_chain(vecs, opts.lp_prune);
            VectorSet filtered;
            filtered.stage = t;
            for (Index i : kept) filtered.vectors.push_back(std::move(stage_set.vectors[i]));
            res.sets[static_cast<Index>(t)] = std::move(filtered);
        }
        if (res.sets[static_cast<Index>(t)].vectors.empty())
            throw std::logic_error("dp_solve: empty vector set");
        if (res.sets[static_cast<Index>(t)].vectors.size() > opts.vector_cap)
            throw CapExceeded("dp_solve: stage " + std::to_string(t) + " holds " +
                              std::to_string(res.sets[static_cast<Index>(t)].vectors.size()) +
                              " vectors, cap is " + std::to_string(opts.vector_cap));
        res.stats.vectors_per_stage[static_cast<Index>(t)] =
            res.sets[static_cast<Index>(t)].vectors.size();
    }
    return res;
}

// Exact value of the stage-t vector set at one (unnormalized) belief for a
// fully specified model: the back-projection is linear in nu, so the
// cross-sum maximum separates per observation and recursion runs on pushed
// beliefs instead of materialized sets.
double set_max_linear(const LocalDynamics& dyn, const std::vector<double>& beta, int t, int h,
                      double gamma, DpStats& stats) {
    const Index nx = dyn.states.size(), na = dyn.actions.size(), no = dyn.observations.size();
    double best = 0.0;
    bool first = true;
    std::vector<double> pushed(nx);
    for (Index a = 0; a < na; ++a) {
        double q = 0.0;
        for (Index x = 0; x < nx; ++x) {
            if (beta[x] == 0.0) continue;
            const double* tp = dyn.t_row(0, x, a);
            const double* rew = dyn.r_row(x, a);
            double sum = 0.0;
            for (Index x2 = 0; x2 < nx; ++x2) sum += tp[x2] * rew[x2];
            q += beta[x] * sum;
        }
        if (t + 1 < h) {
            for (Index o = 0; o < no; ++o) {
                bool any = false;
                for (Index x2 = 0; x2 < nx; ++x2) {
                    double mass = 0.0;
                    for (Index x = 0; x < nx; ++x) {
                        if (beta[x] == 0.0) continue;
                        mass += beta[x] * dyn.t(0, x, a, x2);
                    }
                    pushed[x2] = mass * dyn.o(a, x2, o);
                    any |= pushed[x2] != 0.0;
                }
                ++stats.backprojections;
                ++stats.influence_evals;
                if (any) q += gamma * set_max_linear(dyn, pushed, t + 1, h, gamma, stats);
            }
        }
        if (first || q > best) {
            best = q;
            first = false;
        }
    }
    return best;
}

// Exact max of <b0, io_bp(g, a, o)> over all stage-1 policy fragments
// g = r_a1 + gamma * sum_o1 w_choice(o1) at horizon 3, without materializing
// the stage-1 vector set (whose pruned size explodes on multi-agent
// sub-problems). Works in the (x, u)-lifted space, where the functional is
// a b0-weighted per-state max over influence sources of sums of
// per-component tables; monotonicity there gives an admissible
// envelope bound for depth-first branch and bound over the per-observation
// choices. Filtering the option lists first is sound: the functional is a
// max over selector-pushforward beliefs of linear evaluations, so
// belief-wise domination covers it.
double stage1_fragment_max(const LocalDynamics& dyn, const std::vector<double>& b0,
                           const std::vector<std::vector<double>>& r1,
                           const std::vector<std::vector<std::vector<std::vector<double>>>>& w_opts,
                           Index a, Index o) {
    const Index nx = dyn.states.size(), na = dyn.actions.size(), no = dyn.observations.size();
    const Index nu = dyn.n_u, slice = nx * nu;

    // Lift a stage-1 vector component v into E(x,u) = sum_x' O(o|a,x')
    // T_u(x'|x,a) v(x').
    std::vector<double> weighted(nx);
    auto lift = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (Index x2 = 0; x2 < nx; ++x2) weighted[x2] = dyn.o(a, x2, o) * v[x2];
        out.assign(slice, 0.0);
        for (Index x = 0; x < nx; ++x)
            for (Index u = 0; u < nu; ++u) {
                const double* tp = dyn.t_row(u, x, a);
                double sum = 0.0;
                for (Index x2 = 0; x2 < nx; ++x2) sum += tp[x2] * weighted[x2];
                out[x * nu + u] = sum;
            }
    };

    auto eval = [&](const std::vector<double>& acc) {
        double total = 0.0;
        for (Index x = 0; x < nx; ++x) {
            if (b0[x] == 0.0) continue;
            const double* row = acc.data() + x * nu;
            double best = row[0];
            for (Index u = 1; u < nu; ++u) best = std::max(best, row[u]);
            total += b0[x] * best;
        }
        return total;
    };

    double incumbent = -std::numeric_limits<double>::infinity();
    std::vector<double> er;
    std::vector<std::vector<std::vector<double>>> ew(no);  // [o1][option]
    std::vector<std::vector<double>> acc(no + 1, std::vector<double>(slice));

    for (Index a1 = 0; a1 < na; ++a1) {
        lift(r1[a1], er);
        std::vector<std::vector<double>> suffix_env(no + 1, std::vector<double>(slice, 0.0));
        std::vector<std::vector<Index>> option_order(no);
        for (Index o1 = 0; o1 < no; ++o1) {
            const auto& opts1 = w_opts[a1][o1];
            ew[o1].assign(opts1.size(), {});
            for (Index j = 0; j < opts1.size(); ++j) lift(opts1[j], ew[o1][j]);
            // Options dominated componentwise in the lifted space never help.
            std::vector<char> drop(opts1.size(), 0);
            for (Index j = 0; j < opts1.size(); ++j)
                for (Index k = 0; k < opts1.size() && !drop[j]; ++k) {
                    if (k == j || drop[k]) continue;
                    bool dom = true;
                    for (Index c = 0; c < slice && dom; ++c) dom = ew[o1][k][c] >= ew[o1][j][c];
                    if (dom && (k < j || ew[o1][k] != ew[o1][j])) drop[j] = 1;
                }
            std::vector<std::pair<double, Index>> scored;
            for (Index j = 0; j < opts1.size(); ++j) {
                if (drop[j]) continue;
                scored.push_back({eval(ew[o1][j]), j});
            }
            std::stable_sort(scored.begin(), scored.end(),
                             [](const auto& l, const auto& r) { return l.first > r.first; });
            for (const auto& [score, j] : scored) option_order[o1].push_back(j);
        }
        for (Index k = no; k-- > 0;) {
            std::vector<double>& env = suffix_env[k];
            env = suffix_env[k + 1];
            for (Index c = 0; c < slice; ++c) {
                double best = ew[k][option_order[k][0]][c];
                for (Index j = 1; j < option_order[k].size(); ++j)
                    best = std::max(best, ew[k][option_order[k][j]][c]);
                env[c] += best;
            }
        }

        // Depth-first over observation slots. The envelope-completed value
        // at depth no is the exact leaf value, so bounding and leaf
        // evaluation fuse into one pass.
        auto bounded_value = [&](const std::vector<double>& partial, Index depth) {
            double total = 0.0;
            const std::vector<double>& env = suffix_env[depth];
            for (Index x = 0; x < nx; ++x) {
                if (b0[x] == 0.0) continue;
                const double* row = partial.data() + x * nu;
                const double* erow = env.data() + x * nu;
                double best = row[0] + erow[0];
                for (Index u = 1; u < nu; ++u) best = std::max(best, row[u] + erow[u]);
                total += b0[x] * best;
            }
            return total;
        };

        std::function<void(Index)> dfs = [&](Index depth) {
            for (Index j : option_order[depth]) {
                std::vector<double>& child = acc[depth + 1];
                const std::vector<double>& chosen = ew[depth][j];
                for (Index c = 0; c < slice; ++c) child[c] = acc[depth][c] + chosen[c];
                double ub = bounded_value(child, depth + 1);
                if (depth + 1 == no)
                    incumbent = std::max(incumbent, ub);  // exact leaf value
                else if (ub > incumbent)
                    dfs(depth + 1);
            }
        };
        acc[0] = er;
        if (no == 0)
            incumbent = std::max(incumbent, eval(er));
        else if (bounded_value(er, 0) > incumbent)
            dfs(0);
    }
    return incumbent;
}

MpomdpBound bound_at_b0(const SubProblem& sp, DpMode mode, const DpOptions& opts) {
    LocalDynamics dyn = build_local_dynamics(sp);
    const Index na = dyn.actions.size(), no = dyn.observations.size();
    const int h = sp.m().horizon;
    const double gamma = sp.m().gamma;
    std::vector<double> b0 = local_b0(sp);

    auto dot_b0 = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (Index x = 0; x < b0.size(); ++x) s += b0[x] * v[x];
        return s;
    };

    MpomdpBound out;
    if (dyn.n_u == 1) {
        if (mode == DpMode::regular && !sp.whole_problem())
            throw std::invalid_argument(
                "dp_solve: regular mode needs a fully specified sub-problem (no NLAFs)");
        out.stats.vectors_per_stage.assign(static_cast<Index>(h), 0);
        out.stats.candidates_per_stage.assign(static_cast<Index>(h), 0);
        out.bound = set_max_linear(dyn, b0, 0, h, gamma, out.stats);
        return out;
    }

    if (h == 3) {
        // The horizon-3 stage-1 vector sets of multi-agent sub-problems are
        // too large to materialize; maximize the stage-0 functionals over
        // the stage-1 fragment space directly.
        out.stats.vectors_per_stage.assign(static_cast<Index>(h), 0);
        out.stats.candidates_per_stage.assign(static_cast<Index>(h), 0);

        std::vector<std::vector<double>> r1(na);
        for (Index a1 = 0; a1 < na; ++a1) r1[a1] = reward_vector(dyn, a1).values;
        std::vector<std::vector<std::vector<std::vector<double>>>> w_opts(
            na, std::vector<std::vector<std::vector<double>>>(no));
        for (Index a1 = 0; a1 < na; ++a1)
            for (Index o1 = 0; o1 < no; ++o1) {
                std::vector<std::vector<double>> options(na);
                for (Index a2 = 0; a2 < na; ++a2) {
                    ValueVector bp = io_backproject(dyn, r1[a2], a1, o1);
                    if (gamma != 1.0)
                        for (double& v : bp.values) v *= gamma;
                    options[a2] = std::move(bp.values);
                }
                out.stats.backprojections += na;
                out.stats.influence_evals += na * dyn.n_u;
                std::vector<const std::vector<double>*> ptrs;
                for (const auto& v : options) ptrs.push_back(&v);
                for (Index k : filter_chain(ptrs, opts.lp_prune))
                    w_opts[a1][o1].push_back(std::move(options[k]));
            }

        unsigned threads = opts.n_threads == 0 ? default_threads() : opts.n_threads;
        std::vector<double> m_table(na * no, 0.0);
        parallel_chunks(na * no, threads, [&](Index begin, Index end) {
            for (Index k = begin; k < end; ++k)
                m_table[k] = stage1_fragment_max(dyn, b0, r1, w_opts, k / no, k % no);
        });

        bool first = true;
        for (Index a = 0; a < na; ++a) {
            double q = dot_b0(reward_vector(dyn, a).values);
            for (Index o = 0; o < no; ++o) q += gamma * m_table[a * no + o];
            if (first || q > out.bound) {
                out.bound = q;
                first = false;
            }
        }
        return out;
    }

    DpResult dp = dp_backward(sp, dyn, mode, opts, h > 1 ? 1 : 0);
    if (h == 1) {
        bool first = true;
        for (const ValueVector& v : dp.sets[0].vectors) {
            double val = dot_b0(v.values);
            if (first || val > out.bound) {
                out.bound = val;
                first = false;
            }
        }
        out.stats = std::move(dp.stats);
        return out;
    }

    // Q(b0, a) = <b0, r_a> + gamma * sum_o max_nu <b0, backproject(nu, a, o)>.
    const VectorSet& next = dp.sets[1];
    unsigned threads = opts.n_threads == 0 ? default_threads() : opts.n_threads;
    std::vector<double> vals(next.vectors.size());
    bool first = true;
    for (Index a = 0; a < na; ++a) {
        double q = dot_b0(reward_vector(dyn, a).values);
        for (Index o = 0; o < no; ++o) {
            parallel_chunks(next.vectors.size(), threads, [&](Index begin, Index end) {
                for (Index vi = begin; vi < end; ++vi)
                    vals[vi] = dot_b0(io_backproject(dyn, next.vectors[vi].values, a, o).values);
            });
            double best = 0.0;
            for (Index vi = 0; vi < vals.size(); ++vi)
                if (vi == 0 || vals[vi] > best) best = vals[vi];
            dp.stats.backprojections += next.vectors.size();
            dp.stats.influence_evals += next.vectors.size() * dyn.n_u;
            q += gamma * best;
        }
        if (first || q > out.bound) {
            out.bound = q;
            first = false;
        }
    }
    out.stats = std::move(dp.stats);
    return out;
}

}  // namespace

DpResult dp_solve(const SubProblem& sp, DpMode mode, const DpOptions& opts) {
    LocalDynamics dyn = build_local_dynamics(sp);
    return dp_backward(sp, dyn, mode, opts, 0);
}

MpomdpBound io_qmpomdp_bound(const SubProblem& sp, const DpOptions& opts) {
    return bound_at_b0(sp, DpMode::io, opts);
}

MpomdpBound regular_qmpomdp_value(const SubProblem& sp, const DpOptions& opts) {
    return bound_at_b0(sp, DpMode::regular, opts);
}

}  // namespace iob
