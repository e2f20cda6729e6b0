#include "iob/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace iob {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Number of nodes of a depth-d policy tree over `branch` observations.
Index tree_nodes(Index branch, int depth) {
    Index total = 0, layer = 1;
    for (int t = 0; t < depth; ++t) {
        total += layer;
        layer *= branch;
    }
    return total;
}

Index int_pow(Index base, Index exp) {
    Index r = 1;
    while (exp--) r *= base;
    return r;
}

// Per-agent subtree counts per stage: counts[i][t] = |A_i|^(nodes of the
// (h-t)-deep tree). Saturates at `limit` to keep products overflow-safe.
std::vector<std::vector<Index>> subtree_counts(const FlatModel& flat, Index limit) {
    int h = flat.horizon;
    std::vector<std::vector<Index>> counts(flat.action_cards.size());
    for (Index i = 0; i < flat.action_cards.size(); ++i) {
        counts[i].assign(static_cast<Index>(h), 0);
        for (int t = 0; t < h; ++t) {
            Index nodes = tree_nodes(static_cast<Index>(flat.obs_cards[i]), h - t);
            Index n = 1;
            for (Index k = 0; k < nodes; ++k) {
                n *= static_cast<Index>(flat.action_cards[i]);
                if (n > limit) {
                    n = limit + 1;
                    break;
                }
            }
            counts[i][static_cast<Index>(t)] = n;
        }
    }
    return counts;
}

// Subtree rank layout at stage t: digits (action, child_0 .. child_{|O|-1})
// with child digits ranked in the stage-(t+1) space; action varies slowest.
int subtree_action(Index rank, Index child_count, Index n_obs) {
    return static_cast<int>(rank / int_pow(child_count, n_obs));
}

Index subtree_child(Index rank, Index child_count, Index n_obs, Index obs) {
    Index rest = rank % int_pow(child_count, n_obs);
    return (rest / int_pow(child_count, n_obs - 1 - obs)) % child_count;
}

void expand_subtree(const FlatModel& flat, const std::vector<std::vector<Index>>& counts, Index agent,
                    int t, Index rank, Index hist_rank, JointPolicy& out) {
    int h = flat.horizon;
    Index n_obs = static_cast<Index>(flat.obs_cards[agent]);
    Index child_count = t + 1 < h ? counts[agent][static_cast<Index>(t + 1)] : 1;
    int action = t + 1 < h ? subtree_action(rank, child_count, n_obs) : static_cast<int>(rank);
    out.actions[agent][static_cast<Index>(t)][hist_rank] = action;
    if (t + 1 >= h) return;
    for (Index o = 0; o < n_obs; ++o)
        expand_subtree(flat, counts, agent, t + 1, subtree_child(rank, child_count, n_obs, o),
                       hist_rank * n_obs + o, out);
}

JointPolicy empty_policy(const FlatModel& flat) {
    JointPolicy pi;
    pi.actions.resize(flat.action_cards.size());
    for (Index i = 0; i < flat.action_cards.size(); ++i) {
        pi.actions[i].resize(static_cast<Index>(flat.horizon));
        Index hists = 1;
        for (int t = 0; t < flat.horizon; ++t) {
            pi.actions[i][static_cast<Index>(t)].assign(hists, 0);
            hists *= static_cast<Index>(flat.obs_cards[i]);
        }
    }
    return pi;
}

// Core of the exhaustive scan, parameterized by the reward table so V^LO
// reuses it with block-restricted rewards.
OracleResult brute_force_core(const FlatModel& flat, const std::vector<double>& reward, Index cap) {
    const Index nS = flat.n_states, nA = flat.n_actions, nO = flat.n_obs, nAg = flat.action_cards.size();
    const int h = flat.horizon;
    auto counts = subtree_counts(flat, cap);

    Index total_policies = 1;
    for (Index i = 0; i < nAg; ++i) {
        if (counts[i][0] > cap || total_policies > cap / std::max<Index>(counts[i][0], 1))
            throw CapExceeded("brute_force_optimal: joint policy count exceeds cap " +
                              std::to_string(cap));
        total_policies *= counts[i][0];
    }
    if (total_policies > cap)
        throw CapExceeded("brute_force_optimal: joint policy count exceeds cap " + std::to_string(cap));

    auto r_at = [&](Index s, Index a, Index s2) { return reward[(s * nA + a) * nS + s2]; };

    OracleResult res;
    MixedRadix joint_actions = flat.action_space();
    std::vector<int> ja_digits;

    if (h == 1) {
        for (Index ja = 0; ja < nA; ++ja) {
            double v = 0.0;
            for (Index s = 0; s < nS; ++s) {
                if (flat.b0[s] == 0.0) continue;
                double inner = 0.0;
                for (Index s2 = 0; s2 < nS; ++s2) inner += flat.t(s, ja, s2) * r_at(s, ja, s2);
                v += flat.b0[s] * inner;
            }
            ++res.policies_evaluated;
            if (ja == 0 || v > res.value) {
                res.value = v;
                res.argmax = empty_policy(flat);
                joint_actions.decode(ja, ja_digits);
                for (Index i = 0; i < nAg; ++i) res.argmax.actions[i][0][0] = ja_digits[i];
            }
        }
        PolicyValue pv = exact_policy_value(flat, res.argmax);
        res.per_block = pv.per_block;
        return res;
    }

    // W[t][joint subtree rank] value vectors, built from the last stage back
    // to stage 1; the stage-0 layer is folded into the policy scan below.
    std::vector<Index> joint_count(static_cast<Index>(h), 1);
    for (int t = 1; t < h; ++t)
        for (Index i = 0; i < nAg; ++i) joint_count[static_cast<Index>(t)] *= counts[i][static_cast<Index>(t)];

    std::vector<std::vector<double>> w_next, w_cur;
    std::vector<Index> agent_rank(nAg), child_rank(nAg);
    for (int t = h - 1; t >= 1; --t) {
        Index n_joint = joint_count[static_cast<Index>(t)];
        std::vector<Index> radices(nAg);
        for (Index i = 0; i < nAg; ++i) radices[i] = counts[i][static_cast<Index>(t)];
        w_cur.assign(n_joint, std::vector<double>(nS, 0.0));
        res.subtree_vectors += n_joint;

        std::vector<Index> child_strides(nAg, 1);
        for (int i = static_cast<int>(nAg) - 2; i >= 0; --i)
            child_strides[static_cast<Index>(i)] =
                child_strides[static_cast<Index>(i) + 1] * (t + 1 < h ? counts[static_cast<Index>(i) + 1][static_cast<Index>(t + 1)] : 1);

        std::vector<int> obs_digits;
        MixedRadix joint_obs = flat.observation_space();
        for (Index js = 0; js < n_joint; ++js) {
            Index rest = js;
            for (int i = static_cast<int>(nAg) - 1; i >= 0; --i) {
                agent_rank[static_cast<Index>(i)] = rest % radices[static_cast<Index>(i)];
                rest /= radices[static_cast<Index>(i)];
            }
            Index ja = 0;
            for (Index i = 0; i < nAg; ++i) {
                Index child_count = t + 1 < h ? counts[i][static_cast<Index>(t + 1)] : 1;
                int action = t + 1 < h
                                 ? subtree_action(agent_rank[i], child_count, static_cast<Index>(flat.obs_cards[i]))
                                 : static_cast<int>(agent_rank[i]);
                ja = ja * static_cast<Index>(flat.action_cards[i]) + static_cast<Index>(action);
            }
            std::vector<double>& w = w_cur[js];
            for (Index s = 0; s < nS; ++s) {
                double v = 0.0;
                for (Index s2 = 0; s2 < nS; ++s2) {
                    double tp = flat.t(s, ja, s2);
                    if (tp == 0.0) continue;
                    double cont = 0.0;
                    if (t + 1 < h) {
                        for (Index o = 0; o < nO; ++o) {
                            double op = flat.o(ja, s2, o);
                            if (op == 0.0) continue;
                            joint_obs.decode(o, obs_digits);
                            Index child_js = 0;
                            for (Index i = 0; i < nAg; ++i) {
                                Index cc = counts[i][static_cast<Index>(t + 1)];
                                child_js += subtree_child(agent_rank[i], cc,
                                                          static_cast<Index>(flat.obs_cards[i]),
                                                          static_cast<Index>(obs_digits[i])) *
                                            child_strides[i];
                            }
                            cont += op * w_next[child_js][s2];
                        }
                    }
                    v += tp * (r_at(s, ja, s2) + flat.gamma * cont);
                }
                w[s] = v;
            }
        }
        w_next.swap(w_cur);
    }

    // Stage-0 fold: C and H tables make each policy an |O|-term lookup sum.
    Index n_js1 = joint_count[1];
    std::vector<double> c_table(nA, 0.0);
    std::vector<double> h_table(nA * nO * n_js1, 0.0);
    std::vector<double> mass(nA * nS, 0.0);  // Pr(s2 | b0, ja)
    for (Index ja = 0; ja < nA; ++ja) {
        double c = 0.0;
        for (Index s = 0; s < nS; ++s) {
            if (flat.b0[s] == 0.0) continue;
            for (Index s2 = 0; s2 < nS; ++s2) {
                double w = flat.b0[s] * flat.t(s, ja, s2);
                c += w * r_at(s, ja, s2);
                mass[ja * nS + s2] += w;
            }
        }
        c_table[ja] = c;
    }
    for (Index ja = 0; ja < nA; ++ja)
        for (Index o = 0; o < nO; ++o)
            for (Index js = 0; js < n_js1; ++js) {
                double v = 0.0;
                const std::vector<double>& w = w_next[js];
                for (Index s2 = 0; s2 < nS; ++s2) {
                    double m = mass[ja * nS + s2];
                    if (m == 0.0) continue;
                    v += m * flat.o(ja, s2, o) * w[s2];
                }
                h_table[(ja * nO + o) * n_js1 + js] = v;
            }

    // Scan all joint policies: outer loop over the stage-0 joint action,
    // inner odometer over per-agent (observation -> stage-1 subtree) maps.
    std::vector<Index> js1_strides(nAg, 1);
    for (int i = static_cast<int>(nAg) - 2; i >= 0; --i)
        js1_strides[static_cast<Index>(i)] = js1_strides[static_cast<Index>(i) + 1] * counts[static_cast<Index>(i) + 1][1];

    MixedRadix joint_obs = flat.observation_space();
    std::vector<std::vector<int>> obs_decode(nO);
    for (Index o = 0; o < nO; ++o) joint_obs.decode(o, obs_decode[o]);

    Index n_digits = 0;
    for (Index i = 0; i < nAg; ++i) n_digits += static_cast<Index>(flat.obs_cards[i]);
    std::vector<Index> digit_agent(n_digits), digit_obs(n_digits), digit_card(n_digits);
    Index combos = 1;
    {
        Index d = 0;
        for (Index i = 0; i < nAg; ++i)
            for (int o = 0; o < flat.obs_cards[i]; ++o, ++d) {
                digit_agent[d] = i;
                digit_obs[d] = static_cast<Index>(o);
                digit_card[d] = counts[i][1];
                combos *= counts[i][1];
            }
    }

    bool have_best = false;
    double best_value = 0.0;
    Index best_ja = 0;
    std::vector<Index> best_digits;

    std::vector<Index> digits(n_digits, 0);
    std::vector<Index> js1_of_obs(nO, 0);
    for (Index ja = 0; ja < nA; ++ja) {
        std::fill(digits.begin(), digits.end(), 0);
        std::fill(js1_of_obs.begin(), js1_of_obs.end(), 0);
        const double* h_ja = h_table.data() + ja * nO * n_js1;
        for (Index combo = 0; combo < combos; ++combo) {
            double v = c_table[ja];
            for (Index o = 0; o < nO; ++o) v += flat.gamma * h_ja[o * n_js1 + js1_of_obs[o]];
            ++res.policies_evaluated;
            if (!have_best || v > best_value) {
                have_best = true;
                best_value = v;
                best_ja = ja;
                best_digits = digits;
            }
            if (combo + 1 == combos) break;
            // Advance the odometer, maintaining js1_of_obs incrementally.
            for (Index d = n_digits; d-- > 0;) {
                Index i = digit_agent[d], oi = digit_obs[d];
                for (Index o = 0; o < nO; ++o)
                    if (static_cast<Index>(obs_decode[o][i]) == oi)
                        js1_of_obs[o] -= digits[d] * js1_strides[i];
                bool carried = digits[d] + 1 == digit_card[d];
                digits[d] = carried ? 0 : digits[d] + 1;
                for (Index o = 0; o < nO; ++o)
                    if (static_cast<Index>(obs_decode[o][i]) == oi)
                        js1_of_obs[o] += digits[d] * js1_strides[i];
                if (!carried) break;
            }
        }
    }

    res.value = best_value;
    res.argmax = empty_policy(flat);
    joint_actions.decode(best_ja, ja_digits);
    {
        Index d = 0;
        for (Index i = 0; i < nAg; ++i) {
            res.argmax.actions[i][0][0] = ja_digits[i];
            for (int o = 0; o < flat.obs_cards[i]; ++o, ++d) {
                Index child = best_digits.empty() ? 0 : best_digits[d];
                expand_subtree(flat, counts, i, 1, child, static_cast<Index>(o), res.argmax);
            }
        }
    }
    return res;
}

}  // namespace

PolicyValue exact_policy_value(const FlatModel& flat, const JointPolicy& pi) {
    const Index nS = flat.n_states, nO = flat.n_obs, nAg = flat.action_cards.size();
    if (pi.n_agents() != nAg || pi.horizon() != flat.horizon)
        throw std::invalid_argument("policy shape does not match model");

    struct Slot {
        std::vector<Index> agent_ranks;
        std::vector<double> prob;  // over states
    };
    std::vector<Slot> layer(1);
    layer[0].agent_ranks.assign(nAg, 0);
    layer[0].prob = flat.b0;

    MixedRadix joint_obs = flat.observation_space();
    std::vector<std::vector<int>> obs_decode(nO);
    for (Index o = 0; o < nO; ++o) joint_obs.decode(o, obs_decode[o]);

    PolicyValue out;
    out.per_block.assign(flat.block_reward.size(), 0.0);
    double discount = 1.0;
    for (int t = 0; t < flat.horizon; ++t) {
        bool last = t + 1 == flat.horizon;
        std::vector<Slot> next;
        if (!last) next.resize(layer.size() * nO);
        for (Index hi = 0; hi < layer.size(); ++hi) {
            Slot& slot = layer[hi];
            Index ja = 0;
            for (Index i = 0; i < nAg; ++i)
                ja = ja * static_cast<Index>(flat.action_cards[i]) +
                     static_cast<Index>(pi.actions[i][static_cast<Index>(t)][slot.agent_ranks[i]]);
            for (Index s = 0; s < nS; ++s) {
                double p = slot.prob[s];
                if (p == 0.0) continue;
                for (Index s2 = 0; s2 < nS; ++s2) {
                    double tp = flat.t(s, ja, s2);
                    if (tp == 0.0) continue;
                    double w = p * tp;
                    out.total += discount * w * flat.r(s, ja, s2);
                    for (Index l = 0; l < out.per_block.size(); ++l)
                        out.per_block[l] += discount * w * flat.rb(l, s, ja, s2);
                    if (!last) {
                        for (Index o = 0; o < nO; ++o) {
                            double op = flat.o(ja, s2, o);
                            if (op == 0.0) continue;
                            Slot& ns = next[hi * nO + o];
                            if (ns.prob.empty()) {
                                ns.prob.assign(nS, 0.0);
                                ns.agent_ranks.resize(nAg);
                                for (Index i = 0; i < nAg; ++i)
                                    ns.agent_ranks[i] = slot.agent_ranks[i] * static_cast<Index>(flat.obs_cards[i]) +
                                                        static_cast<Index>(obs_decode[o][i]);
                            }
                            ns.prob[s2] += w * op;
                        }
                    }
                }
            }
        }
        if (!last) {
            // Drop unreachable histories to keep layers sparse.
            std::vector<Slot> compact;
            compact.reserve(next.size());
            for (Slot& s : next)
                if (!s.prob.empty()) compact.push_back(std::move(s));
            layer.swap(compact);
        }
        discount *= flat.gamma;
    }
    return out;
}

McValue monte_carlo_value(const FlatModel& flat, const JointPolicy& pi, Index n_sims,
                          std::uint64_t seed) {
    if (n_sims < 1) throw std::invalid_argument("monte_carlo_value: n_sims must be >= 1");
    const Index nS = flat.n_states, nO = flat.n_obs, nAg = flat.action_cards.size();
    MixedRadix joint_obs = flat.observation_space();
    std::vector<std::vector<int>> obs_decode(nO);
    for (Index o = 0; o < nO; ++o) joint_obs.decode(o, obs_decode[o]);

    auto sample = [](const double* weights, Index n, double roll) {
        double acc = 0.0;
        for (Index k = 0; k < n; ++k) {
            acc += weights[k];
            if (roll < acc) return k;
        }
        return n - 1;
    };

    double sum = 0.0, sum_sq = 0.0;
    std::vector<Index> ranks(nAg);
    for (Index sim = 0; sim < n_sims; ++sim) {
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64(sim)));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Index s = sample(flat.b0.data(), nS, unit(rng));
        std::fill(ranks.begin(), ranks.end(), 0);
        double ret = 0.0, discount = 1.0;
        for (int t = 0; t < flat.horizon; ++t) {
            Index ja = 0;
            for (Index i = 0; i < nAg; ++i)
                ja = ja * static_cast<Index>(flat.action_cards[i]) +
                     static_cast<Index>(pi.actions[i][static_cast<Index>(t)][ranks[i]]);
            Index s2 = sample(flat.transition.data() + (s * flat.n_actions + ja) * nS, nS, unit(rng));
            ret += discount * flat.r(s, ja, s2);
            Index o = sample(flat.observation.data() + (ja * nS + s2) * nO, nO, unit(rng));
            for (Index i = 0; i < nAg; ++i)
                ranks[i] = ranks[i] * static_cast<Index>(flat.obs_cards[i]) +
                           static_cast<Index>(obs_decode[o][i]);
            s = s2;
            discount *= flat.gamma;
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    McValue out;
    out.n_sims = n_sims;
    out.mean = sum / static_cast<double>(n_sims);
    if (n_sims > 1) {
        double var = (sum_sq - sum * sum / static_cast<double>(n_sims)) / static_cast<double>(n_sims - 1);
        out.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(n_sims));
    }
    return out;
}

OracleResult brute_force_optimal(const FlatModel& flat, Index cap) {
    OracleResult res = brute_force_core(flat, flat.reward, cap);
    PolicyValue pv = exact_policy_value(flat, res.argmax);
    res.per_block = pv.per_block;
    return res;
}

double locally_optimal_value(const FlatModel& flat, const SubProblem& sp, Index cap) {
    std::vector<double> restricted(flat.reward.size(), 0.0);
    for (Index k = 0; k < sp.rewards.size(); ++k) {
        const std::vector<double>& block = flat.block_reward[static_cast<Index>(sp.rewards[k])];
        for (Index c = 0; c < restricted.size(); ++c) restricted[c] += block[c];
    }
    return brute_force_core(flat, restricted, cap).value;
}

QmmdpResult qmmdp_value(const FlatModel& flat) {
    const Index nS = flat.n_states, nA = flat.n_actions;
    QmmdpResult res;
    res.q.assign(static_cast<Index>(flat.horizon), std::vector<double>(nS * nA, 0.0));
    std::vector<double> v_next(nS, 0.0);
    for (int t = flat.horizon - 1; t >= 0; --t) {
        std::vector<double>& q = res.q[static_cast<Index>(t)];
        for (Index s = 0; s < nS; ++s)
            for (Index a = 0; a < nA; ++a) {
                double sum = 0.0;
                for (Index s2 = 0; s2 < nS; ++s2) {
                    double tp = flat.t(s, a, s2);
                    if (tp == 0.0) continue;
                    sum += tp * (flat.r(s, a, s2) + flat.gamma * v_next[s2]);
                }
                q[s * nA + a] = sum;
            }
        for (Index s = 0; s < nS; ++s) {
            double best = q[s * nA];
            for (Index a = 1; a < nA; ++a) best = std::max(best, q[s * nA + a]);
            v_next[s] = best;
        }
    }
    // Q-MMDP evaluated at the initial belief: one joint action for b0.
    double best = 0.0;
    for (Index a = 0; a < nA; ++a) {
        double v = 0.0;
        for (Index s = 0; s < nS; ++s) v += flat.b0[s] * res.q[0][s * nA + a];
        if (a == 0 || v > best) best = v;
    }
    res.value = best;
    return res;
}

double mpomdp_belief_tree_value(const FlatModel& flat, const std::vector<double>& belief,
                                int steps_to_go) {
    if (steps_to_go <= 0) return 0.0;
    const Index nS = flat.n_states, nA = flat.n_actions, nO = flat.n_obs;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> next_belief(nS);
    for (Index a = 0; a < nA; ++a) {
        double immediate = 0.0;
        std::vector<double> pushed(nS, 0.0);  // pre-observation state mass
        for (Index s = 0; s < nS; ++s) {
            double p = belief[s];
            if (p == 0.0) continue;
            for (Index s2 = 0; s2 < nS; ++s2) {
                double tp = flat.t(s, a, s2);
                if (tp == 0.0) continue;
                immediate += p * tp * flat.r(s, a, s2);
                pushed[s2] += p * tp;
            }
        }
        double cont = 0.0;
        if (steps_to_go > 1) {
            for (Index o = 0; o < nO; ++o) {
                double mass = 0.0;
                for (Index s2 = 0; s2 < nS; ++s2) {
                    next_belief[s2] = pushed[s2] * flat.o(a, s2, o);
                    mass += next_belief[s2];
                }
                if (mass == 0.0) continue;
                for (Index s2 = 0; s2 < nS; ++s2) next_belief[s2] /= mass;
                cont += mass * mpomdp_belief_tree_value(flat, next_belief, steps_to_go - 1);
            }
        }
        best = std::max(best, immediate + flat.gamma * cont);
    }
    return best;
}

FlatModel flatten_subproblem(const SubProblem& sp, Index state_cap) {
    if (!sp.whole_problem())
        throw std::invalid_argument("flatten_subproblem: sub-problem has non-locally affected factors");
    if (sp.local_states.size() > state_cap)
        throw CapExceeded("flatten_subproblem: " + std::to_string(sp.local_states.size()) +
                          " states exceeds cap " + std::to_string(state_cap));
    LocalDynamics dyn = build_local_dynamics(sp);
    FlatModel flat;
    flat.n_states = dyn.states.size();
    flat.n_actions = dyn.actions.size();
    flat.n_obs = dyn.observations.size();
    flat.factor_cards = dyn.states.cards();
    flat.action_cards = dyn.actions.cards();
    flat.obs_cards = dyn.observations.cards();
    flat.horizon = sp.m().horizon;
    flat.gamma = sp.m().gamma;
    flat.transition = dyn.trans;  // n_u == 1
    flat.observation = dyn.obsprob;
    flat.reward = dyn.reward;
    flat.b0 = local_b0(sp);

    flat.block_reward.assign(sp.rewards.size(), std::vector<double>(flat.reward.size(), 0.0));
    std::vector<int> x, a, x2;
    for (Index xi = 0; xi < flat.n_states; ++xi) {
        dyn.states.decode(xi, x);
        for (Index ai = 0; ai < flat.n_actions; ++ai) {
            dyn.actions.decode(ai, a);
            for (Index ti = 0; ti < flat.n_states; ++ti) {
                dyn.states.decode(ti, x2);
                for (Index k = 0; k < sp.rewards.size(); ++k) {
                    const LocalReward& r = sp.m().rewards[static_cast<Index>(sp.rewards[k])];
                    Index cell = 0;
                    for (int f : r.factor_scope)
                        cell = cell * static_cast<Index>(sp.m().factor_card(f)) +
                               static_cast<Index>(x[static_cast<Index>(sp.factor_position(f))]);
                    for (int i : r.agent_scope)
                        cell = cell * static_cast<Index>(sp.m().n_actions(i)) +
                               static_cast<Index>(a[static_cast<Index>(sp.agent_position(i))]);
                    for (int f : r.next_factor_scope)
                        cell = cell * static_cast<Index>(sp.m().factor_card(f)) +
                               static_cast<Index>(x2[static_cast<Index>(sp.factor_position(f))]);
                    flat.block_reward[k][(xi * flat.n_actions + ai) * flat.n_states + ti] = r.table[cell];
                }
            }
        }
    }
    return flat;
}

JointPolicy random_policy(const FlatModel& flat, std::uint64_t seed) {
    JointPolicy pi = empty_policy(flat);
    std::mt19937_64 rng(splitmix64(seed));
    for (Index i = 0; i < pi.actions.size(); ++i)
        for (Index t = 0; t < pi.actions[i].size(); ++t)
            for (Index r = 0; r < pi.actions[i][t].size(); ++r)
                pi.actions[i][t][r] = static_cast<int>(rng() % static_cast<Index>(flat.action_cards[i]));
    return pi;
}

JointPolicy greedy_mmdp_policy(const FlatModel& flat) {
    QmmdpResult q = qmmdp_value(flat);
    JointPolicy pi = empty_policy(flat);
    const Index nS = flat.n_states, nA = flat.n_actions;
    std::vector<double> dist = flat.b0, next(nS);
    MixedRadix joint_actions = flat.action_space();
    std::vector<int> digits;
    for (int t = 0; t < flat.horizon; ++t) {
        Index best_a = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (Index a = 0; a < nA; ++a) {
            double v = 0.0;
            for (Index s = 0; s < nS; ++s) v += dist[s] * q.q[static_cast<Index>(t)][s * nA + a];
            if (v > best_v) {
                best_v = v;
                best_a = a;
            }
        }
        joint_actions.decode(best_a, digits);
        for (Index i = 0; i < pi.actions.size(); ++i)
            std::fill(pi.actions[i][static_cast<Index>(t)].begin(),
                      pi.actions[i][static_cast<Index>(t)].end(), digits[i]);
        std::fill(next.begin(), next.end(), 0.0);
        for (Index s = 0; s < nS; ++s) {
            if (dist[s] == 0.0) continue;
            for (Index s2 = 0; s2 < nS; ++s2) next[s2] += dist[s] * flat.t(s, best_a, s2);
        }
        dist.swap(next);
    }
    return pi;
}

}  // namespace iob
