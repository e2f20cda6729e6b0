#include "iob/plan_time_dp.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <unordered_map>

namespace iob {

namespace {

Index int_pow(Index base, Index exp) {
    Index r = 1;
    while (exp--) r *= base;
    return r;
}

Index tree_nodes(Index branch, int depth) {
    Index total = 0, layer = 1;
    for (int t = 0; t < depth; ++t) {
        total += layer;
        layer *= branch;
    }
    return total;
}

// Number of stage-t policy subtrees of agent i, saturating above `limit`.
Index subtree_count(Index n_actions, Index n_obs, int h, int t, Index limit) {
    Index nodes = tree_nodes(n_obs, h - t);
    Index n = 1;
    for (Index k = 0; k < nodes; ++k) {
        n *= n_actions;
        if (n > limit) return limit + 1;
    }
    return n;
}

// Subtree ranks at stage t pack (action, child_0..child_{|O|-1}) with the
// action varying slowest and children ranked in the stage-(t+1) space.
int subtree_action(Index rank, Index child_count, Index n_obs) {
    return static_cast<int>(rank / int_pow(child_count, n_obs));
}

Index subtree_child(Index rank, Index child_count, Index n_obs, Index obs) {
    Index rest = rank % int_pow(child_count, n_obs);
    return (rest / int_pow(child_count, n_obs - 1 - obs)) % child_count;
}

void expand_rank(const SubProblem& sp, int h, Index agent_pos, int t, Index rank, Index hist,
                 LocalJointPolicy& out) {
    Index n_obs = static_cast<Index>(sp.local_observations.card(agent_pos));
    Index n_act = static_cast<Index>(sp.local_actions.card(agent_pos));
    Index child_count =
        t + 1 < h ? subtree_count(n_act, n_obs, h, t + 1, kDefaultJointPolicyCap * 2) : 1;
    int action = t + 1 < h ? subtree_action(rank, child_count, n_obs) : static_cast<int>(rank);
    out.rules[static_cast<Index>(t)].actions_by_agent[agent_pos][hist] = action;
    if (t + 1 >= h) return;
    for (Index o = 0; o < n_obs; ++o)
        expand_rank(sp, h, agent_pos, t + 1, subtree_child(rank, child_count, n_obs, o),
                    hist * n_obs + o, out);
}

LocalJointPolicy empty_policy(const SubProblem& sp, int h) {
    LocalJointPolicy pi;
    pi.rules.resize(static_cast<Index>(h));
    for (int t = 0; t < h; ++t) {
        pi.rules[static_cast<Index>(t)].actions_by_agent.resize(sp.agents.size());
        for (Index i = 0; i < sp.agents.size(); ++i)
            pi.rules[static_cast<Index>(t)].actions_by_agent[i].assign(
                int_pow(static_cast<Index>(sp.local_observations.card(i)), static_cast<Index>(t)), 0);
    }
    return pi;
}

}  // namespace

LocalPolicyEnumerator::LocalPolicyEnumerator(const SubProblem& sp, int horizon, Index cap)
    : sp_(&sp), horizon_(horizon) {
    if (horizon < 1) throw std::invalid_argument("policy enumeration needs horizon >= 1");
    for (Index i = 0; i < sp.agents.size(); ++i) {
        Index n = subtree_count(static_cast<Index>(sp.local_actions.card(i)),
                                static_cast<Index>(sp.local_observations.card(i)), horizon, 0, cap);
        if (n > cap || count_ > cap / std::max<Index>(n, 1))
            throw CapExceeded("policy enumeration: joint policy count exceeds cap " +
                              std::to_string(cap));
        stage0_counts_.push_back(n);
        count_ *= n;
    }
    if (count_ > cap)
        throw CapExceeded("policy enumeration: joint policy count exceeds cap " + std::to_string(cap));
}

LocalJointPolicy LocalPolicyEnumerator::policy(Index index) const {
    LocalJointPolicy pi = empty_policy(*sp_, horizon_);
    for (Index i = stage0_counts_.size(); i-- > 0;) {
        Index rank = index % stage0_counts_[i];
        index /= stage0_counts_[i];
        expand_rank(*sp_, horizon_, i, 0, rank, 0, pi);
    }
    return pi;
}

bool LocalPolicyEnumerator::next(LocalJointPolicy& out) {
    if (cursor_ >= count_) return false;
    out = policy(cursor_++);
    return true;
}

PtEvaluation io_pt_evaluate(const SubProblem& sp, const LocalJointPolicy& pi) {
    const int h = sp.m().horizon;
    if (pi.horizon() != h) throw std::invalid_argument("io_pt_evaluate: policy horizon mismatch");
    for (int t = 0; t < h; ++t) {
        if (pi.rules[static_cast<Index>(t)].actions_by_agent.size() != sp.agents.size())
            throw std::invalid_argument("io_pt_evaluate: decision rule agent count mismatch");
        for (Index i = 0; i < sp.agents.size(); ++i)
            if (pi.rules[static_cast<Index>(t)].actions_by_agent[i].size() !=
                int_pow(static_cast<Index>(sp.local_observations.card(i)), static_cast<Index>(t)))
                throw std::invalid_argument("io_pt_evaluate: stage-" + std::to_string(t) +
                                            " rule domain does not cover histories of length " +
                                            std::to_string(t));
    }

    LocalDynamics dyn = build_local_dynamics(sp);
    const Index nx = dyn.states.size(), no = dyn.observations.size();
    const double gamma = sp.m().gamma;

    // Per-agent history ranks of each joint history, built forward.
    std::vector<std::vector<std::vector<Index>>> agent_ranks(static_cast<Index>(h));
    agent_ranks[0] = {std::vector<Index>(sp.agents.size(), 0)};
    std::vector<std::vector<int>> obs_digits(no);
    for (Index o = 0; o < no; ++o) dyn.observations.decode(o, obs_digits[o]);
    for (int t = 1; t < h; ++t) {
        const auto& prev = agent_ranks[static_cast<Index>(t - 1)];
        auto& cur = agent_ranks[static_cast<Index>(t)];
        cur.resize(prev.size() * no);
        for (Index hi = 0; hi < prev.size(); ++hi)
            for (Index o = 0; o < no; ++o) {
                std::vector<Index>& ranks = cur[hi * no + o];
                ranks.resize(sp.agents.size());
                for (Index i = 0; i < sp.agents.size(); ++i)
                    ranks[i] = prev[hi][i] * static_cast<Index>(sp.local_observations.card(i)) +
                               static_cast<Index>(obs_digits[o][i]);
            }
    }

    PtEvaluation ev;
    ev.per_stage.assign(static_cast<Index>(h), {});
    std::vector<double> next;  // stage t+1 table
    for (int t = h - 1; t >= 0; --t) {
        const auto& hists = agent_ranks[static_cast<Index>(t)];
        std::vector<double> cur(hists.size() * nx, 0.0);
        for (Index hi = 0; hi < hists.size(); ++hi) {
            Index a = 0;
            for (Index i = 0; i < sp.agents.size(); ++i)
                a = a * static_cast<Index>(sp.local_actions.card(i)) +
                    static_cast<Index>(pi.rules[static_cast<Index>(t)].actions_by_agent[i][hists[hi][i]]);
            for (Index x = 0; x < nx; ++x) {
                const double* rew = dyn.r_row(x, a);
                double best = 0.0;
                for (Index u = 0; u < dyn.n_u; ++u) {
                    const double* tp = dyn.t_row(u, x, a);
                    double sum = 0.0;
                    for (Index x2 = 0; x2 < nx; ++x2) {
                        double p = tp[x2];
                        if (p == 0.0) continue;
                        double cont = 0.0;
                        if (t + 1 < h) {
                            for (Index o = 0; o < no; ++o) {
                                double op = dyn.o(a, x2, o);
                                if (op == 0.0) continue;
                                cont += op * next[(hi * no + o) * nx + x2];
                            }
                        }
                        sum += p * (rew[x2] + gamma * cont);
                    }
                    if (u == 0 || sum > best) best = sum;
                }
                cur[hi * nx + x] = best;
            }
        }
        ev.per_stage[static_cast<Index>(t)] = cur;
        next.swap(cur);
    }
    return ev;
}

DecBound io_qdecpomdp_bound(const SubProblem& sp, const DecOptions& opts) {
    const int h = sp.m().horizon;
    LocalPolicyEnumerator enumerator(sp, h, opts.policy_cap);
    LocalDynamics dyn = build_local_dynamics(sp);
    const Index nx = dyn.states.size(), na = dyn.actions.size(), no = dyn.observations.size();
    const Index nu = dyn.n_u;
    const Index n_agents = sp.agents.size();
    const double gamma = sp.m().gamma;
    std::vector<double> b0 = local_b0(sp);

    DecBound res;

    // Stage-t joint subtree value vectors w[js][x], built backward to stage 1.
    std::vector<Index> per_agent_t(n_agents), per_agent_t1(n_agents);
    auto counts_at = [&](int t, std::vector<Index>& out) {
        for (Index i = 0; i < n_agents; ++i)
            out[i] = subtree_count(static_cast<Index>(sp.local_actions.card(i)),
                                   static_cast<Index>(sp.local_observations.card(i)), h, t,
                                   opts.policy_cap * 2);
    };

    std::vector<std::vector<int>> obs_digits(no);
    for (Index o = 0; o < no; ++o) dyn.observations.decode(o, obs_digits[o]);

    std::vector<std::vector<double>> w_next;  // stage t+1 vectors
    for (int t = h - 1; t >= 1; --t) {
        counts_at(t, per_agent_t);
        if (t + 1 < h) counts_at(t + 1, per_agent_t1);
        Index n_joint = 1;
        for (Index i = 0; i < n_agents; ++i) n_joint *= per_agent_t[i];
        std::vector<Index> child_strides(n_agents, 1);
        for (Index i = n_agents; i-- > 1;)
            child_strides[i - 1] = child_strides[i] * (t + 1 < h ? per_agent_t1[i] : 1);

        std::vector<std::vector<double>> w_cur(n_joint);
        res.subtree_vectors += n_joint;
        unsigned threads = opts.n_threads == 0 ? default_threads() : opts.n_threads;
        parallel_chunks(n_joint, threads, [&](Index begin, Index end) {
            std::vector<Index> rank(n_agents);
            std::vector<double> cont(nx);
            for (Index js = begin; js < end; ++js) {
                Index rest = js;
                for (Index i = n_agents; i-- > 0;) {
                    rank[i] = rest % per_agent_t[i];
                    rest /= per_agent_t[i];
                }
                Index a = 0;
                for (Index i = 0; i < n_agents; ++i) {
                    Index child_count = t + 1 < h ? per_agent_t1[i] : 1;
                    int act = t + 1 < h
                                  ? subtree_action(rank[i], child_count,
                                                   static_cast<Index>(sp.local_observations.card(i)))
                                  : static_cast<int>(rank[i]);
                    a = a * static_cast<Index>(sp.local_actions.card(i)) + static_cast<Index>(act);
                }
                std::fill(cont.begin(), cont.end(), 0.0);
                if (t + 1 < h) {
                    for (Index o = 0; o < no; ++o) {
                        Index child_js = 0;
                        for (Index i = 0; i < n_agents; ++i)
                            child_js += subtree_child(rank[i], per_agent_t1[i],
                                                      static_cast<Index>(sp.local_observations.card(i)),
                                                      static_cast<Index>(obs_digits[o][i])) *
                                        child_strides[i];
                        const std::vector<double>& wc = w_next[child_js];
                        for (Index x2 = 0; x2 < nx; ++x2) cont[x2] += dyn.o(a, x2, o) * wc[x2];
                    }
                }
                std::vector<double>& w = w_cur[js];
                w.assign(nx, 0.0);
                for (Index x = 0; x < nx; ++x) {
                    const double* rew = dyn.r_row(x, a);
                    double best = 0.0;
                    for (Index u = 0; u < nu; ++u) {
                        const double* tp = dyn.t_row(u, x, a);
                        double sum = 0.0;
                        for (Index x2 = 0; x2 < nx; ++x2)
                            sum += tp[x2] * (rew[x2] + gamma * cont[x2]);
                        if (u == 0 || sum > best) best = sum;
                    }
                    w[x] = best;
                }
            }
        });
        res.memo_hits += static_cast<std::uint64_t>(n_joint) * (t + 1 < h ? no : 0);
        w_next.swap(w_cur);
    }

    // base[x][u] = influence-conditioned expected immediate reward at stage 0.
    std::vector<double> base(na * nx * nu, 0.0);
    for (Index a = 0; a < na; ++a)
        for (Index x = 0; x < nx; ++x) {
            const double* rew = dyn.r_row(x, a);
            for (Index u = 0; u < nu; ++u) {
                const double* tp = dyn.t_row(u, x, a);
                double sum = 0.0;
                for (Index x2 = 0; x2 < nx; ++x2) sum += tp[x2] * rew[x2];
                base[(a * nx + x) * nu + u] = sum;
            }
        }

    if (h == 1) {
        // One decision per agent; scan joint actions directly.
        bool first = true;
        Index best_a = 0;
        for (Index a = 0; a < na; ++a) {
            double v = 0.0;
            for (Index x = 0; x < nx; ++x) {
                double m = 0.0;
                for (Index u = 0; u < nu; ++u) m = u == 0 ? base[(a * nx + x) * nu] : std::max(m, base[(a * nx + x) * nu + u]);
                v += b0[x] * m;
            }
            ++res.policies_evaluated;
            if (first || v > res.bound) {
                first = false;
                res.bound = v;
                best_a = a;
            }
        }
        res.argmax = empty_policy(sp, 1);
        std::vector<int> digits;
        sp.local_actions.decode(best_a, digits);
        for (Index i = 0; i < n_agents; ++i) res.argmax.rules[0].actions_by_agent[i][0] = digits[i];
        return res;
    }

    // Deduplicate stage-1 vectors into classes for the G tables.
    counts_at(1, per_agent_t1);
    Index n_js1 = 1;
    for (Index i = 0; i < n_agents; ++i) n_js1 *= per_agent_t1[i];
    std::vector<Index> cls_of(n_js1, 0);
    std::vector<const std::vector<double>*> classes;
    {
        std::unordered_map<std::uint64_t, std::vector<Index>> buckets;
        auto hash_vec = [](const std::vector<double>& v) {
            std::uint64_t hsh = 1469598103934665603ULL;
            for (double d : v) {
                std::uint64_t bits;
                std::memcpy(&bits, &d, sizeof(bits));
                hsh = (hsh ^ bits) * 1099511628211ULL;
            }
            return hsh;
        };
        for (Index js = 0; js < n_js1; ++js) {
            auto& bucket = buckets[hash_vec(w_next[js])];
            bool found = false;
            for (Index c : bucket)
                if (*classes[c] == w_next[js]) {
                    cls_of[js] = c;
                    found = true;
                    break;
                }
            if (!found) {
                cls_of[js] = classes.size();
                bucket.push_back(classes.size());
                classes.push_back(&w_next[js]);
            }
        }
    }
    const Index n_cls = classes.size();

    std::vector<Index> js1_strides(n_agents, 1);
    for (Index i = n_agents; i-- > 1;) js1_strides[i - 1] = js1_strides[i] * per_agent_t1[i];

    // Odometer digits: one (observation -> stage-1 subtree) choice per
    // (agent, own observation).
    Index n_digits = 0;
    for (Index i = 0; i < n_agents; ++i) n_digits += static_cast<Index>(sp.local_observations.card(i));
    std::vector<Index> digit_agent(n_digits), digit_obs(n_digits), digit_card(n_digits);
    Index combos = 1;
    {
        Index d = 0;
        for (Index i = 0; i < n_agents; ++i)
            for (int o = 0; o < sp.local_observations.card(i); ++o, ++d) {
                digit_agent[d] = i;
                digit_obs[d] = static_cast<Index>(o);
                digit_card[d] = per_agent_t1[i];
                combos *= per_agent_t1[i];
            }
    }

    const Index slice = nx * nu;  // [x][u] blocks
    if (no * n_cls * slice > 200000000)
        throw CapExceeded("io_qdecpomdp_bound: stage-0 table would need " +
                          std::to_string(no * n_cls * slice) + " cells");

    double best_value = 0.0;
    Index best_ja = 0;
    bool have_best = false;
    std::vector<Index> best_digits;

    std::vector<double> g_table(no * n_cls * slice);
    for (Index ja = 0; ja < na; ++ja) {
        // G[o][cls][x][u] = sum_x' P_u(x'|x,ja) O(o|ja,x') w_cls(x'), so a
        // policy evaluation is base plus |O| contiguous slice additions.
        unsigned threads = opts.n_threads == 0 ? default_threads() : opts.n_threads;
        parallel_chunks(no * n_cls, threads, [&](Index begin, Index end) {
            std::vector<double> weighted(nx);
            for (Index oc = begin; oc < end; ++oc) {
                Index o = oc / n_cls, c = oc % n_cls;
                const std::vector<double>& w = *classes[c];
                for (Index x2 = 0; x2 < nx; ++x2) weighted[x2] = dyn.o(ja, x2, o) * w[x2];
                double* out = g_table.data() + oc * slice;
                for (Index x = 0; x < nx; ++x)
                    for (Index u = 0; u < nu; ++u) {
                        const double* tp = dyn.t_row(u, x, ja);
                        double sum = 0.0;
                        for (Index x2 = 0; x2 < nx; ++x2) sum += tp[x2] * weighted[x2];
                        out[x * nu + u] = sum;
                    }
            }
        });

        const double* base_ja = base.data() + ja * slice;
        struct ChunkBest {
            double value = 0.0;
            bool have = false;
            std::vector<Index> digits;
        };
        unsigned scan_threads = opts.n_threads == 0 ? default_threads() : opts.n_threads;
        Index n_chunks = std::min<Index>(combos, scan_threads == 0 ? 1 : scan_threads);
        std::vector<ChunkBest> chunk_best(n_chunks);
        parallel_chunks(n_chunks, scan_threads, [&](Index cb, Index ce) {
            for (Index chunk = cb; chunk < ce; ++chunk) {
                Index begin = combos * chunk / n_chunks;
                Index end = combos * (chunk + 1) / n_chunks;
                std::vector<Index> digits(n_digits, 0);
                {
                    Index rest = begin;
                    for (Index d = n_digits; d-- > 0;) {
                        digits[d] = rest % digit_card[d];
                        rest /= digit_card[d];
                    }
                }
                std::vector<Index> js1_of_obs(no, 0);
                auto rebuild = [&]() {
                    std::fill(js1_of_obs.begin(), js1_of_obs.end(), 0);
                    for (Index d = 0; d < n_digits; ++d) {
                        Index i = digit_agent[d], oi = digit_obs[d];
                        for (Index o = 0; o < no; ++o)
                            if (static_cast<Index>(obs_digits[o][i]) == oi)
                                js1_of_obs[o] += digits[d] * js1_strides[i];
                    }
                };
                rebuild();
                std::vector<double> acc(slice);
                ChunkBest& best = chunk_best[chunk];
                for (Index combo = begin; combo < end; ++combo) {
                    std::memcpy(acc.data(), base_ja, slice * sizeof(double));
                    for (Index o = 0; o < no; ++o) {
                        const double* g = g_table.data() + (o * n_cls + cls_of[js1_of_obs[o]]) * slice;
                        for (Index k = 0; k < slice; ++k) acc[k] += gamma * g[k];
                    }
                    double v = 0.0;
                    for (Index x = 0; x < nx; ++x) {
                        const double* row = acc.data() + x * nu;
                        double m = row[0];
                        for (Index u = 1; u < nu; ++u) m = std::max(m, row[u]);
                        v += b0[x] * m;
                    }
                    if (!best.have || v > best.value) {
                        best.have = true;
                        best.value = v;
                        best.digits = digits;
                    }
                    if (combo + 1 == end) break;
                    for (Index d = n_digits; d-- > 0;) {
                        Index i = digit_agent[d], oi = digit_obs[d];
                        for (Index o = 0; o < no; ++o)
                            if (static_cast<Index>(obs_digits[o][i]) == oi)
                                js1_of_obs[o] -= digits[d] * js1_strides[i];
                        bool carried = digits[d] + 1 == digit_card[d];
                        digits[d] = carried ? 0 : digits[d] + 1;
                        for (Index o = 0; o < no; ++o)
                            if (static_cast<Index>(obs_digits[o][i]) == oi)
                                js1_of_obs[o] += digits[d] * js1_strides[i];
                        if (!carried) break;
                    }
                }
            }
        });
        res.policies_evaluated += combos;
        res.memo_hits += static_cast<std::uint64_t>(combos) * no;
        // Chunks are visited in enumeration order, so a strictly-greater
        // accept keeps the lowest-rank policy on ties.
        for (const ChunkBest& cb : chunk_best) {
            if (!cb.have) continue;
            if (!have_best || cb.value > best_value) {
                have_best = true;
                best_value = cb.value;
                best_ja = ja;
                best_digits = cb.digits;
            }
        }
    }

    res.bound = best_value;
    res.argmax = empty_policy(sp, h);
    std::vector<int> ja_digits;
    sp.local_actions.decode(best_ja, ja_digits);
    {
        Index d = 0;
        for (Index i = 0; i < n_agents; ++i) {
            res.argmax.rules[0].actions_by_agent[i][0] = ja_digits[i];
            for (int o = 0; o < sp.local_observations.card(i); ++o, ++d)
                expand_rank(sp, h, i, 1, best_digits[d], static_cast<Index>(o), res.argmax);
        }
    }
    return res;
}

}  // namespace iob
