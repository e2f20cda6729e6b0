#include "iob/model.hpp"

#include <cmath>
#include <sstream>

namespace iob {

namespace {

std::string row_name(const char* kind, int id, Index row) {
    std::ostringstream os;
    os << kind << "[" << id << "] row " << row;
    return os.str();
}

// Row index of a CPT for a concrete (s, s_next, a) instantiation.
Index cpt_row_index(const Cpt& cpt, const FactoredDecPomdp& m, const JointState* s,
                    const JointState* s_next, const JointAction* a) {
    Index row = 0;
    for (int f : cpt.parent_factors_prev) {
        int v = (*s)[static_cast<Index>(f)];
        if (v < 0 || v >= m.factor_card(f)) throw std::out_of_range("factor value out of range");
        row = row * static_cast<Index>(m.factor_card(f)) + static_cast<Index>(v);
    }
    for (int f : cpt.parent_factors_next) {
        int v = (*s_next)[static_cast<Index>(f)];
        if (v < 0 || v >= m.factor_card(f)) throw std::out_of_range("factor value out of range");
        row = row * static_cast<Index>(m.factor_card(f)) + static_cast<Index>(v);
    }
    for (int i : cpt.parent_agents) {
        int v = (*a)[static_cast<Index>(i)];
        if (v < 0 || v >= m.n_actions(i)) throw std::out_of_range("action value out of range");
        row = row * static_cast<Index>(m.n_actions(i)) + static_cast<Index>(v);
    }
    return row;
}

Index expected_rows(const Cpt& cpt, const FactoredDecPomdp& m) {
    Index rows = 1;
    for (int f : cpt.parent_factors_prev) rows *= static_cast<Index>(m.factor_card(f));
    for (int f : cpt.parent_factors_next) rows *= static_cast<Index>(m.factor_card(f));
    for (int i : cpt.parent_agents) rows *= static_cast<Index>(m.n_actions(i));
    return rows;
}

bool ids_valid(const std::vector<int>& ids, Index limit) {
    for (int id : ids)
        if (id < 0 || static_cast<Index>(id) >= limit) return false;
    return true;
}

}  // namespace

MixedRadix FactoredDecPomdp::state_space() const {
    std::vector<int> cards;
    cards.reserve(factors.size());
    for (const auto& f : factors) cards.push_back(f.cardinality);
    return MixedRadix(std::move(cards));
}

MixedRadix FactoredDecPomdp::action_space() const {
    std::vector<int> cards;
    cards.reserve(agents.size());
    for (const auto& ag : agents) cards.push_back(static_cast<int>(ag.actions.size()));
    return MixedRadix(std::move(cards));
}

MixedRadix FactoredDecPomdp::observation_space() const {
    std::vector<int> cards;
    cards.reserve(agents.size());
    for (const auto& ag : agents) cards.push_back(static_cast<int>(ag.observations.size()));
    return MixedRadix(std::move(cards));
}

std::vector<Violation> validate_model(const FactoredDecPomdp& m) {
    std::vector<Violation> out;
    auto add = [&out](std::string where, std::string message) {
        out.push_back({std::move(where), std::move(message)});
    };

    if (m.horizon < 1) add("horizon", "horizon must be >= 1");
    if (!(m.gamma > 0.0) || m.gamma > 1.0) add("gamma", "gamma must lie in (0, 1]");
    for (Index f = 0; f < m.n_factors(); ++f)
        if (m.factors[f].cardinality < 1) add("factors[" + std::to_string(f) + "]", "cardinality must be >= 1");
    for (Index i = 0; i < m.n_agents(); ++i) {
        if (m.agents[i].actions.empty()) add("agents[" + std::to_string(i) + "]", "no actions declared");
        if (m.agents[i].observations.empty())
            add("agents[" + std::to_string(i) + "]", "no observations declared");
    }
    if (m.transition_cpts.size() != m.n_factors())
        add("transition_cpts", "expected one CPT per factor");
    if (m.observation_cpts.size() != m.n_agents())
        add("observation_cpts", "expected one CPT per agent");

    auto check_cpt = [&](const Cpt& cpt, const char* kind, int id, int child_card) {
        std::string who = std::string(kind) + "[" + std::to_string(id) + "]";
        if (!ids_valid(cpt.parent_factors_prev, m.n_factors()) ||
            !ids_valid(cpt.parent_factors_next, m.n_factors()) ||
            !ids_valid(cpt.parent_agents, m.n_agents())) {
            add(who, "parent id out of range");
            return;
        }
        if (cpt.child_cardinality != child_card) {
            add(who, "child cardinality does not match declaration");
            return;
        }
        Index rows = expected_rows(cpt, m);
        if (cpt.table.size() != rows * static_cast<Index>(child_card)) {
            add(who, "table size does not equal parent-instantiation count times child cardinality");
            return;
        }
        for (Index r = 0; r < rows; ++r) {
            double sum = 0.0;
            bool in_range = true;
            for (int v = 0; v < child_card; ++v) {
                double p = cpt.row(r)[v];
                if (p < 0.0 || p > 1.0 || !std::isfinite(p)) in_range = false;
                sum += p;
            }
            if (!in_range) add(row_name(kind, id, r), "probability outside [0, 1]");
            if (std::abs(sum - 1.0) > kProbTolerance)
                add(row_name(kind, id, r), "row sums to " + std::to_string(sum) + ", expected 1");
        }
    };

    for (Index f = 0; f < m.transition_cpts.size() && f < m.n_factors(); ++f) {
        const Cpt& cpt = m.transition_cpts[f];
        if (!cpt.parent_factors_next.empty())
            add("transition_cpt[" + std::to_string(f) + "]",
                "transition CPTs may not condition on stage-(t+1) factors");
        check_cpt(cpt, "transition_cpt", static_cast<int>(f), m.factor_card(static_cast<int>(f)));
    }
    for (Index i = 0; i < m.observation_cpts.size() && i < m.n_agents(); ++i)
        check_cpt(m.observation_cpts[i], "observation_cpt", static_cast<int>(i),
                  m.n_observations(static_cast<int>(i)));

    for (Index l = 0; l < m.n_rewards(); ++l) {
        const LocalReward& r = m.rewards[l];
        std::string who = "reward[" + std::to_string(l) + "]";
        if (!ids_valid(r.factor_scope, m.n_factors()) || !ids_valid(r.next_factor_scope, m.n_factors())) {
            add(who, "factor scope references an undeclared factor");
            continue;
        }
        if (!ids_valid(r.agent_scope, m.n_agents())) {
            add(who, "agent scope references an undeclared agent");
            continue;
        }
        Index cells = 1;
        for (int f : r.factor_scope) cells *= static_cast<Index>(m.factor_card(f));
        for (int i : r.agent_scope) cells *= static_cast<Index>(m.n_actions(i));
        for (int f : r.next_factor_scope) cells *= static_cast<Index>(m.factor_card(f));
        if (r.table.size() != cells) add(who, "table length does not equal product of scope cardinalities");
    }

    if (m.b0.size() != m.n_factors()) {
        add("b0", "expected one marginal per factor");
    } else {
        for (Index f = 0; f < m.n_factors(); ++f) {
            if (m.b0[f].size() != static_cast<Index>(m.factor_card(static_cast<int>(f)))) {
                add("b0[" + std::to_string(f) + "]", "marginal length does not match factor cardinality");
                continue;
            }
            double sum = 0.0;
            for (double p : m.b0[f]) sum += p;
            if (std::abs(sum - 1.0) > kProbTolerance)
                add("b0[" + std::to_string(f) + "]", "marginal sums to " + std::to_string(sum) + ", expected 1");
        }
    }
    return out;
}

double joint_transition_prob(const FactoredDecPomdp& m, const JointState& s, const JointAction& a,
                             const JointState& s_next) {
    if (s.size() != m.n_factors() || s_next.size() != m.n_factors() || a.size() != m.n_agents())
        throw std::out_of_range("joint vector length mismatch");
    double p = 1.0;
    for (Index f = 0; f < m.n_factors(); ++f) {
        const Cpt& cpt = m.transition_cpts[f];
        int v = s_next[f];
        if (v < 0 || v >= cpt.child_cardinality) throw std::out_of_range("next-state value out of range");
        p *= cpt.row(cpt_row_index(cpt, m, &s, nullptr, &a))[v];
        if (p == 0.0) return 0.0;
    }
    return p;
}

double joint_observation_prob(const FactoredDecPomdp& m, const JointAction& a,
                              const JointState& s_next, const JointObservation& o) {
    if (o.size() != m.n_agents() || s_next.size() != m.n_factors() || a.size() != m.n_agents())
        throw std::out_of_range("joint vector length mismatch");
    double p = 1.0;
    for (Index i = 0; i < m.n_agents(); ++i) {
        const Cpt& cpt = m.observation_cpts[i];
        int v = o[i];
        if (v < 0 || v >= cpt.child_cardinality) throw std::out_of_range("observation value out of range");
        p *= cpt.row(cpt_row_index(cpt, m, nullptr, &s_next, &a))[v];
        if (p == 0.0) return 0.0;
    }
    return p;
}

double local_reward_value(const FactoredDecPomdp& m, const LocalReward& r, const JointState& s,
                          const JointAction& a, const JointState& s_next) {
    Index cell = 0;
    for (int f : r.factor_scope) cell = cell * static_cast<Index>(m.factor_card(f)) + static_cast<Index>(s[static_cast<Index>(f)]);
    for (int i : r.agent_scope) cell = cell * static_cast<Index>(m.n_actions(i)) + static_cast<Index>(a[static_cast<Index>(i)]);
    for (int f : r.next_factor_scope)
        cell = cell * static_cast<Index>(m.factor_card(f)) + static_cast<Index>(s_next[static_cast<Index>(f)]);
    return r.table[cell];
}

double joint_reward(const FactoredDecPomdp& m, const JointState& s, const JointAction& a,
                    const JointState& s_next) {
    double total = 0.0;
    for (const LocalReward& r : m.rewards) total += local_reward_value(m, r, s, a, s_next);
    return total;
}

FlatModel flatten(const FactoredDecPomdp& m, Index state_cap) {
    MixedRadix states = m.state_space();
    if (states.size() > state_cap)
        throw CapExceeded("flatten: " + std::to_string(states.size()) + " states exceeds cap " +
                          std::to_string(state_cap));
    MixedRadix actions = m.action_space();
    MixedRadix obs = m.observation_space();

    FlatModel flat;
    flat.n_states = states.size();
    flat.n_actions = actions.size();
    flat.n_obs = obs.size();
    flat.factor_cards = states.cards();
    flat.action_cards = actions.cards();
    flat.obs_cards = obs.cards();
    flat.horizon = m.horizon;
    flat.gamma = m.gamma;

    flat.transition.assign(flat.n_states * flat.n_actions * flat.n_states, 0.0);
    flat.observation.assign(flat.n_actions * flat.n_states * flat.n_obs, 0.0);
    flat.reward.assign(flat.n_states * flat.n_actions * flat.n_states, 0.0);
    flat.block_reward.assign(m.n_rewards(), std::vector<double>(flat.reward.size(), 0.0));

    JointState s, s2;
    JointAction a;
    JointObservation ob;
    for (Index si = 0; si < flat.n_states; ++si) {
        states.decode(si, s);
        for (Index ai = 0; ai < flat.n_actions; ++ai) {
            actions.decode(ai, a);
            for (Index ti = 0; ti < flat.n_states; ++ti) {
                states.decode(ti, s2);
                Index cell = (si * flat.n_actions + ai) * flat.n_states + ti;
                flat.transition[cell] = joint_transition_prob(m, s, a, s2);
                double total = 0.0;
                for (Index l = 0; l < m.n_rewards(); ++l) {
                    double v = local_reward_value(m, m.rewards[l], s, a, s2);
                    flat.block_reward[l][cell] = v;
                    total += v;
                }
                flat.reward[cell] = total;
            }
        }
    }
    for (Index ai = 0; ai < flat.n_actions; ++ai) {
        actions.decode(ai, a);
        for (Index ti = 0; ti < flat.n_states; ++ti) {
            states.decode(ti, s2);
            for (Index oi = 0; oi < flat.n_obs; ++oi) {
                obs.decode(oi, ob);
                flat.observation[(ai * flat.n_states + ti) * flat.n_obs + oi] =
                    joint_observation_prob(m, a, s2, ob);
            }
        }
    }

    flat.b0.assign(flat.n_states, 0.0);
    for (Index si = 0; si < flat.n_states; ++si) {
        states.decode(si, s);
        double p = 1.0;
        for (Index f = 0; f < m.n_factors(); ++f) p *= m.b0[f][static_cast<Index>(s[f])];
        flat.b0[si] = p;
    }
    return flat;
}

}  // namespace iob
