#include "iob/subproblem.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace iob {

namespace {

std::vector<int> sorted_unique(std::vector<int> ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

bool contains(const std::vector<int>& sorted_ids, int id) {
    return std::binary_search(sorted_ids.begin(), sorted_ids.end(), id);
}

void check_ids(const std::vector<int>& ids, Index limit, const char* what) {
    for (int id : ids)
        if (id < 0 || static_cast<Index>(id) >= limit)
            throw std::invalid_argument(std::string(what) + " id out of range: " + std::to_string(id));
}

std::string join(const std::vector<int>& ids) {
    std::ostringstream os;
    for (Index i = 0; i < ids.size(); ++i) {
        if (i) os << ",";
        os << ids[i];
    }
    return os.str();
}

}  // namespace

int SubProblem::factor_position(int factor_id) const {
    auto it = std::lower_bound(factors.begin(), factors.end(), factor_id);
    if (it == factors.end() || *it != factor_id) return -1;
    return static_cast<int>(it - factors.begin());
}

int SubProblem::agent_position(int agent_id) const {
    auto it = std::lower_bound(agents.begin(), agents.end(), agent_id);
    if (it == agents.end() || *it != agent_id) return -1;
    return static_cast<int>(it - agents.begin());
}

std::string SubProblem::signature() const {
    return "agents=" + join(agents) + "|factors=" + join(factors) + "|rewards=" + join(rewards);
}

MixedRadix influence_space(const SubProblem& sp) {
    std::vector<int> cards;
    cards.reserve(sp.ext_factors.size() + sp.ext_agents.size());
    for (int f : sp.ext_factors) cards.push_back(sp.m().factor_card(f));
    for (int i : sp.ext_agents) cards.push_back(sp.m().n_actions(i));
    return MixedRadix(std::move(cards));
}

Index influence_source_space_size(const SubProblem& sp) { return influence_space(sp).size(); }

InfluenceSource decode_influence(const SubProblem& sp, Index u_index) {
    MixedRadix space = influence_space(sp);
    std::vector<int> vals = space.decode(u_index);
    InfluenceSource u;
    u.factor_values.assign(vals.begin(), vals.begin() + static_cast<long>(sp.ext_factors.size()));
    u.agent_actions.assign(vals.begin() + static_cast<long>(sp.ext_factors.size()), vals.end());
    return u;
}

SubProblem extract_subproblem(std::shared_ptr<const FactoredDecPomdp> model, std::vector<int> agents,
                              std::vector<int> factors, std::vector<int> rewards) {
    if (!model) throw std::invalid_argument("extract_subproblem: null model");
    const FactoredDecPomdp& m = *model;
    check_ids(agents, m.n_agents(), "agent");
    check_ids(factors, m.n_factors(), "factor");
    check_ids(rewards, m.n_rewards(), "reward");

    SubProblem sp;
    sp.model = std::move(model);
    sp.agents = sorted_unique(std::move(agents));
    sp.factors = sorted_unique(std::move(factors));
    sp.rewards = sorted_unique(std::move(rewards));

    // Assumption 1: observation parents of every included agent are included.
    for (int i : sp.agents) {
        const Cpt& cpt = m.observation_cpts[static_cast<Index>(i)];
        for (int f : cpt.parent_factors_prev)
            if (!contains(sp.factors, f))
                throw ObservationDependenceViolation("agent " + std::to_string(i) +
                                                     " observes factor " + std::to_string(f) +
                                                     " outside the sub-problem");
        for (int f : cpt.parent_factors_next)
            if (!contains(sp.factors, f))
                throw ObservationDependenceViolation("agent " + std::to_string(i) +
                                                     " observes factor " + std::to_string(f) +
                                                     " outside the sub-problem");
        for (int j : cpt.parent_agents)
            if (!contains(sp.agents, j))
                throw ObservationDependenceViolation("agent " + std::to_string(i) +
                                                     "'s observation depends on agent " +
                                                     std::to_string(j) + " outside the sub-problem");
    }

    // Assumption 2: reward scopes stay inside the slice.
    for (int l : sp.rewards) {
        const LocalReward& r = m.rewards[static_cast<Index>(l)];
        for (int f : r.factor_scope)
            if (!contains(sp.factors, f))
                throw RewardDependenceViolation("reward " + std::to_string(l) + " is scoped on factor " +
                                                std::to_string(f) + " outside the sub-problem");
        for (int f : r.next_factor_scope)
            if (!contains(sp.factors, f))
                throw RewardDependenceViolation("reward " + std::to_string(l) + " is scoped on factor " +
                                                std::to_string(f) + " outside the sub-problem");
        for (int i : r.agent_scope)
            if (!contains(sp.agents, i))
                throw RewardDependenceViolation("reward " + std::to_string(l) + " is scoped on agent " +
                                                std::to_string(i) + " outside the sub-problem");
    }

    std::set<int> ext_f, ext_a;
    for (int f : sp.factors) {
        const Cpt& cpt = m.transition_cpts[static_cast<Index>(f)];
        NlafInfluence inf;
        inf.factor = f;
        for (int pf : cpt.parent_factors_prev)
            if (!contains(sp.factors, pf)) inf.ext_parent_factors.push_back(pf);
        for (int pa : cpt.parent_agents)
            if (!contains(sp.agents, pa)) inf.ext_parent_agents.push_back(pa);
        if (inf.ext_parent_factors.empty() && inf.ext_parent_agents.empty()) {
            sp.olaf_factors.push_back(f);
        } else {
            sp.nlaf_factors.push_back(f);
            ext_f.insert(inf.ext_parent_factors.begin(), inf.ext_parent_factors.end());
            ext_a.insert(inf.ext_parent_agents.begin(), inf.ext_parent_agents.end());
            sp.influence.push_back(std::move(inf));
        }
    }
    sp.ext_factors.assign(ext_f.begin(), ext_f.end());
    sp.ext_agents.assign(ext_a.begin(), ext_a.end());

    std::vector<int> state_cards, action_cards, obs_cards;
    for (int f : sp.factors) state_cards.push_back(m.factor_card(f));
    for (int i : sp.agents) {
        action_cards.push_back(m.n_actions(i));
        obs_cards.push_back(m.n_observations(i));
    }
    sp.local_states = MixedRadix(std::move(state_cards));
    sp.local_actions = MixedRadix(std::move(action_cards));
    sp.local_observations = MixedRadix(std::move(obs_cards));
    return sp;
}

namespace {

// Resolves one CPT parent value from local state/action vectors plus an
// influence assignment.
struct LocalLookup {
    const SubProblem& sp;
    const std::vector<int>* x = nullptr;
    const std::vector<int>* x_next = nullptr;
    const std::vector<int>* a_c = nullptr;
    const InfluenceSource* u = nullptr;

    int factor_prev(int f) const {
        int pos = sp.factor_position(f);
        if (pos >= 0) return (*x)[static_cast<Index>(pos)];
        for (Index k = 0; k < sp.ext_factors.size(); ++k)
            if (sp.ext_factors[k] == f) return u->factor_values[k];
        throw std::invalid_argument("influence assignment does not cover factor " + std::to_string(f));
    }
    int factor_next(int f) const {
        int pos = sp.factor_position(f);
        if (pos < 0) throw std::invalid_argument("next-stage parent outside sub-problem");
        return (*x_next)[static_cast<Index>(pos)];
    }
    int action(int i) const {
        int pos = sp.agent_position(i);
        if (pos >= 0) return (*a_c)[static_cast<Index>(pos)];
        for (Index k = 0; k < sp.ext_agents.size(); ++k)
            if (sp.ext_agents[k] == i) return u->agent_actions[k];
        throw std::invalid_argument("influence assignment does not cover agent " + std::to_string(i));
    }
};

Index cpt_row(const Cpt& cpt, const FactoredDecPomdp& m, const LocalLookup& look) {
    Index row = 0;
    for (int f : cpt.parent_factors_prev)
        row = row * static_cast<Index>(m.factor_card(f)) + static_cast<Index>(look.factor_prev(f));
    for (int f : cpt.parent_factors_next)
        row = row * static_cast<Index>(m.factor_card(f)) + static_cast<Index>(look.factor_next(f));
    for (int i : cpt.parent_agents)
        row = row * static_cast<Index>(m.n_actions(i)) + static_cast<Index>(look.action(i));
    return row;
}

}  // namespace

double local_transition_prob(const SubProblem& sp, const std::vector<int>& x, const std::vector<int>& a_c,
                             const InfluenceSource& u, const std::vector<int>& x_next) {
    if (u.factor_values.size() != sp.ext_factors.size() || u.agent_actions.size() != sp.ext_agents.size())
        throw std::invalid_argument("influence assignment does not instantiate the full influence space");
    if (x.size() != sp.factors.size() || x_next.size() != sp.factors.size() ||
        a_c.size() != sp.agents.size())
        throw std::out_of_range("local vector length mismatch");
    LocalLookup look{sp, &x, &x_next, &a_c, &u};
    double p = 1.0;
    for (Index k = 0; k < sp.factors.size(); ++k) {
        const Cpt& cpt = sp.m().transition_cpts[static_cast<Index>(sp.factors[k])];
        p *= cpt.row(cpt_row(cpt, sp.m(), look))[x_next[k]];
        if (p == 0.0) return 0.0;
    }
    return p;
}

double local_observation_prob(const SubProblem& sp, const std::vector<int>& a_c,
                              const std::vector<int>& x_next, const std::vector<int>& o_c) {
    if (o_c.size() != sp.agents.size() || x_next.size() != sp.factors.size() ||
        a_c.size() != sp.agents.size())
        throw std::out_of_range("local vector length mismatch");
    LocalLookup look{sp, nullptr, &x_next, &a_c, nullptr};
    double p = 1.0;
    for (Index k = 0; k < sp.agents.size(); ++k) {
        const Cpt& cpt = sp.m().observation_cpts[static_cast<Index>(sp.agents[k])];
        p *= cpt.row(cpt_row(cpt, sp.m(), look))[o_c[k]];
        if (p == 0.0) return 0.0;
    }
    return p;
}

double local_reward(const SubProblem& sp, const std::vector<int>& x, const std::vector<int>& a_c,
                    const std::vector<int>& x_next) {
    double total = 0.0;
    for (int l : sp.rewards) {
        const LocalReward& r = sp.m().rewards[static_cast<Index>(l)];
        Index cell = 0;
        for (int f : r.factor_scope)
            cell = cell * static_cast<Index>(sp.m().factor_card(f)) +
                   static_cast<Index>(x[static_cast<Index>(sp.factor_position(f))]);
        for (int i : r.agent_scope)
            cell = cell * static_cast<Index>(sp.m().n_actions(i)) +
                   static_cast<Index>(a_c[static_cast<Index>(sp.agent_position(i))]);
        for (int f : r.next_factor_scope)
            cell = cell * static_cast<Index>(sp.m().factor_card(f)) +
                   static_cast<Index>(x_next[static_cast<Index>(sp.factor_position(f))]);
        total += r.table[cell];
    }
    return total;
}

std::vector<double> local_b0(const SubProblem& sp) {
    std::vector<double> b(sp.local_states.size(), 0.0);
    std::vector<int> x;
    for (Index xi = 0; xi < b.size(); ++xi) {
        sp.local_states.decode(xi, x);
        double p = 1.0;
        for (Index k = 0; k < sp.factors.size(); ++k)
            p *= sp.m().b0[static_cast<Index>(sp.factors[k])][static_cast<Index>(x[k])];
        b[xi] = p;
    }
    return b;
}

Partition make_partition(std::shared_ptr<const FactoredDecPomdp> model,
                         std::vector<std::vector<int>> blocks, ClosureRule rule) {
    if (!model) throw std::invalid_argument("make_partition: null model");
    const FactoredDecPomdp& m = *model;

    std::vector<int> seen(m.n_rewards(), 0);
    for (const auto& block : blocks) {
        if (block.empty()) throw std::invalid_argument("make_partition: empty block");
        for (int l : block) {
            if (l < 0 || static_cast<Index>(l) >= m.n_rewards())
                throw std::invalid_argument("make_partition: reward id out of range: " + std::to_string(l));
            if (seen[static_cast<Index>(l)]++)
                throw std::invalid_argument("make_partition: reward " + std::to_string(l) +
                                            " appears in more than one block");
        }
    }
    for (Index l = 0; l < m.n_rewards(); ++l)
        if (!seen[l])
            throw std::invalid_argument("make_partition: reward " + std::to_string(l) +
                                        " is not covered by any block");

    Partition part;
    part.model = model;
    part.blocks = blocks;
    for (const auto& block : blocks) {
        std::set<int> factors, agents;
        for (int l : block) {
            const LocalReward& r = m.rewards[static_cast<Index>(l)];
            factors.insert(r.factor_scope.begin(), r.factor_scope.end());
            factors.insert(r.next_factor_scope.begin(), r.next_factor_scope.end());
            agents.insert(r.agent_scope.begin(), r.agent_scope.end());
        }
        // Assumption-1 closure: observation parents of included agents.
        bool changed = true;
        while (changed) {
            changed = false;
            for (int i : std::vector<int>(agents.begin(), agents.end())) {
                const Cpt& cpt = m.observation_cpts[static_cast<Index>(i)];
                for (int f : cpt.parent_factors_prev) changed |= factors.insert(f).second;
                for (int f : cpt.parent_factors_next) changed |= factors.insert(f).second;
                for (int j : cpt.parent_agents) changed |= agents.insert(j).second;
            }
            if (rule == ClosureRule::covering_agents) {
                for (Index i = 0; i < m.n_agents(); ++i) {
                    int ai = static_cast<int>(i);
                    if (agents.count(ai)) continue;
                    const Cpt& obs = m.observation_cpts[i];
                    bool compatible = true;
                    for (int f : obs.parent_factors_prev) compatible &= factors.count(f) > 0;
                    for (int f : obs.parent_factors_next) compatible &= factors.count(f) > 0;
                    for (int j : obs.parent_agents) compatible &= (j == ai || agents.count(j) > 0);
                    if (!compatible) continue;
                    bool acts_inside = false;
                    for (int f : std::vector<int>(factors.begin(), factors.end())) {
                        const Cpt& tr = m.transition_cpts[static_cast<Index>(f)];
                        for (int j : tr.parent_agents) acts_inside |= (j == ai);
                    }
                    if (acts_inside) changed |= agents.insert(ai).second;
                }
            }
        }
        part.sps.push_back(extract_subproblem(model, std::vector<int>(agents.begin(), agents.end()),
                                              std::vector<int>(factors.begin(), factors.end()),
                                              std::vector<int>(block)));
    }
    return part;
}

namespace {

struct ParentSlot {
    enum Kind { local_factor, local_agent, ext_dim } kind;
    Index index;  // position in local state / local action / u digit list
    int card;
};

}  // namespace

LocalDynamics build_local_dynamics(const SubProblem& sp, InfluenceMode mode, Index cell_cap) {
    const FactoredDecPomdp& m = sp.m();
    LocalDynamics dyn;
    dyn.states = sp.local_states;
    dyn.actions = sp.local_actions;
    dyn.observations = sp.local_observations;

    // Influence digits: joint mode deduplicates shared external parents,
    // decoupled mode gives every NLAF its own copies.
    std::vector<int> u_cards;
    std::vector<std::vector<ParentSlot>> slots(sp.factors.size());
    auto ext_dim_joint = [&](int f, bool is_factor, int id) -> Index {
        (void)f;
        if (is_factor) {
            for (Index k = 0; k < sp.ext_factors.size(); ++k)
                if (sp.ext_factors[k] == id) return k;
        } else {
            for (Index k = 0; k < sp.ext_agents.size(); ++k)
                if (sp.ext_agents[k] == id) return sp.ext_factors.size() + k;
        }
        throw std::logic_error("external parent not found");
    };
    if (mode == InfluenceMode::joint) {
        for (int f : sp.ext_factors) u_cards.push_back(m.factor_card(f));
        for (int i : sp.ext_agents) u_cards.push_back(m.n_actions(i));
    }
    // Per-NLAF dim bases for decoupled mode, filled while walking factors.
    std::vector<Index> nlaf_base;
    if (mode == InfluenceMode::decoupled) {
        for (const NlafInfluence& inf : sp.influence) {
            nlaf_base.push_back(u_cards.size());
            for (int f : inf.ext_parent_factors) u_cards.push_back(m.factor_card(f));
            for (int i : inf.ext_parent_agents) u_cards.push_back(m.n_actions(i));
        }
    }
    auto ext_dim = [&](int member_pos, bool is_factor, int id) -> Index {
        if (mode == InfluenceMode::joint) return ext_dim_joint(member_pos, is_factor, id);
        for (Index n = 0; n < sp.influence.size(); ++n) {
            const NlafInfluence& inf = sp.influence[n];
            if (inf.factor != sp.factors[static_cast<Index>(member_pos)]) continue;
            Index dim = nlaf_base[n];
            for (int f : inf.ext_parent_factors) {
                if (is_factor && f == id) return dim;
                ++dim;
            }
            for (int i : inf.ext_parent_agents) {
                if (!is_factor && i == id) return dim;
                ++dim;
            }
        }
        throw std::logic_error("external parent not found");
    };

    for (Index k = 0; k < sp.factors.size(); ++k) {
        const Cpt& cpt = m.transition_cpts[static_cast<Index>(sp.factors[k])];
        for (int pf : cpt.parent_factors_prev) {
            int pos = sp.factor_position(pf);
            if (pos >= 0)
                slots[k].push_back({ParentSlot::local_factor, static_cast<Index>(pos), m.factor_card(pf)});
            else
                slots[k].push_back({ParentSlot::ext_dim, ext_dim(static_cast<int>(k), true, pf),
                                    m.factor_card(pf)});
        }
        for (int pa : cpt.parent_agents) {
            int pos = sp.agent_position(pa);
            if (pos >= 0)
                slots[k].push_back({ParentSlot::local_agent, static_cast<Index>(pos), m.n_actions(pa)});
            else
                slots[k].push_back({ParentSlot::ext_dim, ext_dim(static_cast<int>(k), false, pa),
                                    m.n_actions(pa)});
        }
    }

    MixedRadix u_space(u_cards);
    dyn.n_u = u_space.size();

    const Index nx = dyn.states.size(), na = dyn.actions.size(), no = dyn.observations.size();
    if (dyn.n_u * nx * na * nx > cell_cap)
        throw CapExceeded("local dynamics table would need " +
                          std::to_string(dyn.n_u * nx * na * nx) + " cells, cap is " +
                          std::to_string(cell_cap));

    // Decoded digit tables to avoid re-decoding in the hot loops.
    std::vector<std::vector<int>> xs(nx), as(na), us(dyn.n_u);
    for (Index xi = 0; xi < nx; ++xi) dyn.states.decode(xi, xs[xi]);
    for (Index ai = 0; ai < na; ++ai) dyn.actions.decode(ai, as[ai]);
    for (Index ui = 0; ui < dyn.n_u; ++ui) u_space.decode(ui, us[ui]);

    dyn.trans.assign(dyn.n_u * nx * na * nx, 0.0);
    std::vector<const double*> rows(sp.factors.size());
    for (Index ui = 0; ui < dyn.n_u; ++ui) {
        for (Index xi = 0; xi < nx; ++xi) {
            for (Index ai = 0; ai < na; ++ai) {
                for (Index k = 0; k < sp.factors.size(); ++k) {
                    const Cpt& cpt = m.transition_cpts[static_cast<Index>(sp.factors[k])];
                    Index row = 0;
                    for (const ParentSlot& slot : slots[k]) {
                        int v = slot.kind == ParentSlot::local_factor ? xs[xi][slot.index]
                                : slot.kind == ParentSlot::local_agent ? as[ai][slot.index]
                                                                       : us[ui][slot.index];
                        row = row * static_cast<Index>(slot.card) + static_cast<Index>(v);
                    }
                    rows[k] = cpt.row(row);
                }
                double* out = dyn.trans.data() + ((ui * nx + xi) * na + ai) * nx;
                for (Index ti = 0; ti < nx; ++ti) {
                    double p = 1.0;
                    for (Index k = 0; k < sp.factors.size(); ++k) p *= rows[k][xs[ti][k]];
                    out[ti] = p;
                }
            }
        }
    }

    dyn.reward.assign(nx * na * nx, 0.0);
    for (Index xi = 0; xi < nx; ++xi)
        for (Index ai = 0; ai < na; ++ai) {
            double* out = dyn.reward.data() + (xi * na + ai) * nx;
            for (Index ti = 0; ti < nx; ++ti) out[ti] = local_reward(sp, xs[xi], as[ai], xs[ti]);
        }

    dyn.obsprob.assign(na * nx * no, 0.0);
    std::vector<int> ob;
    for (Index ai = 0; ai < na; ++ai)
        for (Index ti = 0; ti < nx; ++ti)
            for (Index oi = 0; oi < no; ++oi) {
                dyn.observations.decode(oi, ob);
                dyn.obsprob[(ai * nx + ti) * no + oi] = local_observation_prob(sp, as[ai], xs[ti], ob);
            }
    return dyn;
}

}  // namespace iob
