#include "iob/domains.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace iob {

namespace {

void check_prob(double p, const char* name) {
    if (p < 0.0 || p > 1.0)
        throw std::invalid_argument(std::string(name) + " must lie in [0, 1], got " + std::to_string(p));
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::string fmt(const std::vector<double>& v) {
    std::ostringstream os;
    for (Index i = 0; i < v.size(); ++i) {
        if (i) os << ",";
        os << v[i];
    }
    return os.str();
}

}  // namespace

FactoredDecPomdp make_ffg(const FfgParams& p) {
    if (p.n_agents < 1) throw std::invalid_argument("ffg: n_agents must be >= 1");
    if (p.n_fire_levels < 2) throw std::invalid_argument("ffg: n_fire_levels must be >= 2");
    if (p.horizon < 1) throw std::invalid_argument("ffg: horizon must be >= 1");
    check_prob(p.p_extinguish2, "p_extinguish2");
    check_prob(p.p_extinguish1, "p_extinguish1");
    check_prob(p.p_ignite, "p_ignite");
    check_prob(p.p_self_ignite, "p_self_ignite");
    check_prob(p.p_spread, "p_spread");
    check_prob(p.p_up_alone, "p_up_alone");
    if (p.p_flames.empty()) throw std::invalid_argument("ffg: p_flames must not be empty");
    for (double q : p.p_flames) check_prob(q, "p_flames");

    const int levels = p.n_fire_levels;
    const int houses = p.n_agents + 1;
    std::vector<double> reward_per_level = p.reward_per_level;
    if (reward_per_level.empty()) {
        reward_per_level.resize(static_cast<Index>(levels));
        for (int v = 0; v < levels; ++v) reward_per_level[static_cast<Index>(v)] = -v;
    }
    if (reward_per_level.size() != static_cast<Index>(levels))
        throw std::invalid_argument("ffg: reward_per_level length must equal n_fire_levels");

    FactoredDecPomdp m;
    m.name = "ffg-" + std::to_string(p.n_agents);
    m.horizon = p.horizon;
    for (int i = 0; i < p.n_agents; ++i) m.agents.push_back({{"left", "right"}, {"flames", "noflames"}});
    for (int h = 0; h < houses; ++h) m.factors.push_back({"house" + std::to_string(h), levels});

    auto flame_prob = [&](int level) {
        Index idx = std::min<Index>(static_cast<Index>(level), p.p_flames.size() - 1);
        return p.p_flames[idx];
    };

    // Next level of an attended or unattended house; mass accumulated per
    // level so the p_extinguish2 < 1 fall-through reuses the 1-agent rule.
    auto next_level_dist = [&](int cur, int n_at, bool burning_neighbor) {
        std::vector<double> d(static_cast<Index>(levels), 0.0);
        auto one_agent = [&](double mass) {
            if (cur == 0)
                d[0] += mass;
            else {
                d[static_cast<Index>(cur - 1)] += mass * p.p_extinguish1;
                d[static_cast<Index>(cur)] += mass * (1.0 - p.p_extinguish1);
            }
        };
        if (n_at >= 2) {
            d[0] += p.p_extinguish2;
            if (p.p_extinguish2 < 1.0) one_agent(1.0 - p.p_extinguish2);
        } else if (n_at == 1) {
            one_agent(1.0);
        } else if (cur == 0) {
            double up = burning_neighbor ? p.p_ignite : p.p_self_ignite;
            d[0] += 1.0 - up;
            d[1] += up;
        } else {
            double up = burning_neighbor ? p.p_spread : p.p_up_alone;
            if (cur == levels - 1) up = 0.0;
            d[static_cast<Index>(cur)] += 1.0 - up;
            if (cur < levels - 1) d[static_cast<Index>(cur + 1)] += up;
        }
        return d;
    };

    for (int h = 0; h < houses; ++h) {
        Cpt cpt;
        cpt.child_cardinality = levels;
        for (int f : {h - 1, h, h + 1})
            if (f >= 0 && f < houses) cpt.parent_factors_prev.push_back(f);
        for (int i : {h - 1, h})
            if (i >= 0 && i < p.n_agents) cpt.parent_agents.push_back(i);

        std::vector<int> cards;
        for (Index k = 0; k < cpt.parent_factors_prev.size(); ++k) cards.push_back(levels);
        for (Index k = 0; k < cpt.parent_agents.size(); ++k) cards.push_back(2);
        MixedRadix rows(cards);
        cpt.table.assign(rows.size() * static_cast<Index>(levels), 0.0);
        std::vector<int> vals;
        for (Index r = 0; r < rows.size(); ++r) {
            rows.decode(r, vals);
            int cur = 0;
            bool burning_neighbor = false;
            for (Index k = 0; k < cpt.parent_factors_prev.size(); ++k) {
                int f = cpt.parent_factors_prev[k];
                if (f == h)
                    cur = vals[k];
                else if (vals[k] > 0)
                    burning_neighbor = true;
            }
            int n_at = 0;
            for (Index k = 0; k < cpt.parent_agents.size(); ++k) {
                int i = cpt.parent_agents[k];
                int action = vals[cpt.parent_factors_prev.size() + k];
                if (i + action == h) ++n_at;
            }
            std::vector<double> d = next_level_dist(cur, n_at, burning_neighbor);
            std::copy(d.begin(), d.end(), cpt.table.begin() + static_cast<long>(r * static_cast<Index>(levels)));
        }
        m.transition_cpts.push_back(std::move(cpt));
    }

    for (int i = 0; i < p.n_agents; ++i) {
        Cpt cpt;
        cpt.child_cardinality = 2;
        cpt.parent_factors_next = {i, i + 1};
        cpt.parent_agents = {i};
        MixedRadix rows({levels, levels, 2});
        cpt.table.assign(rows.size() * 2, 0.0);
        std::vector<int> vals;
        for (Index r = 0; r < rows.size(); ++r) {
            rows.decode(r, vals);
            int visited_level = vals[2] == 0 ? vals[0] : vals[1];
            double pf = flame_prob(visited_level);
            cpt.table[r * 2] = pf;
            cpt.table[r * 2 + 1] = 1.0 - pf;
        }
        m.observation_cpts.push_back(std::move(cpt));
    }

    for (int h = 0; h < houses; ++h) {
        LocalReward r;
        r.next_factor_scope = {h};
        r.table = reward_per_level;
        m.rewards.push_back(std::move(r));
    }

    m.b0.assign(static_cast<Index>(houses),
                std::vector<double>(static_cast<Index>(levels), 1.0 / levels));

    m.provenance.generator = "ffg";
    m.provenance.params = {{"n_agents", std::to_string(p.n_agents)},
                           {"n_fire_levels", std::to_string(levels)},
                           {"p_extinguish2", fmt(p.p_extinguish2)},
                           {"p_extinguish1", fmt(p.p_extinguish1)},
                           {"p_ignite", fmt(p.p_ignite)},
                           {"p_self_ignite", fmt(p.p_self_ignite)},
                           {"p_spread", fmt(p.p_spread)},
                           {"p_up_alone", fmt(p.p_up_alone)},
                           {"p_flames", fmt(p.p_flames)},
                           {"reward_per_level", fmt(reward_per_level)},
                           {"horizon", std::to_string(p.horizon)}};
    return m;
}

FactoredDecPomdp make_aloha(const AlohaParams& p) {
    if (p.n_islands < 2) throw std::invalid_argument("aloha: n_islands must be >= 2");
    if (p.topology != "line") throw std::invalid_argument("aloha: unknown topology '" + p.topology + "'");
    if (p.backlog_cardinality < 2) throw std::invalid_argument("aloha: backlog_cardinality must be >= 2");
    if (p.horizon < 1) throw std::invalid_argument("aloha: horizon must be >= 1");
    check_prob(p.p_arrive, "p_arrive");
    check_prob(p.p_tx_success, "p_tx_success");
    check_prob(p.p_obs_correct, "p_obs_correct");

    const int B = p.backlog_cardinality;
    std::vector<double> reward_per_backlog = p.reward_per_backlog;
    if (reward_per_backlog.empty()) {
        reward_per_backlog.resize(static_cast<Index>(B));
        for (int v = 0; v < B; ++v) reward_per_backlog[static_cast<Index>(v)] = -v;
    }
    if (reward_per_backlog.size() != static_cast<Index>(B))
        throw std::invalid_argument("aloha: reward_per_backlog length must equal backlog_cardinality");

    FactoredDecPomdp m;
    m.name = "aloha-" + std::to_string(p.n_islands);
    m.horizon = p.horizon;
    for (int i = 0; i < p.n_islands; ++i) m.agents.push_back({{"idle", "send"}, {"quiet", "busy"}});
    for (int i = 0; i < p.n_islands; ++i) m.factors.push_back({"backlog" + std::to_string(i), B});

    for (int i = 0; i < p.n_islands; ++i) {
        Cpt cpt;
        cpt.child_cardinality = B;
        cpt.parent_factors_prev = {i};
        for (int j : {i - 1, i, i + 1})
            if (j >= 0 && j < p.n_islands) cpt.parent_agents.push_back(j);

        std::vector<int> cards = {B};
        for (Index k = 0; k < cpt.parent_agents.size(); ++k) cards.push_back(2);
        MixedRadix rows(cards);
        cpt.table.assign(rows.size() * static_cast<Index>(B), 0.0);
        std::vector<int> vals;
        for (Index r = 0; r < rows.size(); ++r) {
            rows.decode(r, vals);
            int backlog = vals[0];
            bool sends = false, neighbor_sends = false;
            for (Index k = 0; k < cpt.parent_agents.size(); ++k) {
                if (cpt.parent_agents[k] == i)
                    sends = vals[1 + k] == 1;
                else if (vals[1 + k] == 1)
                    neighbor_sends = true;
            }
            double p_depart = (sends && backlog > 0 && !neighbor_sends) ? p.p_tx_success : 0.0;
            double* row = cpt.table.data() + r * static_cast<Index>(B);
            for (int depart = 0; depart <= 1; ++depart) {
                double pd = depart ? p_depart : 1.0 - p_depart;
                if (pd == 0.0) continue;
                for (int arrive = 0; arrive <= 1; ++arrive) {
                    double pa = arrive ? p.p_arrive : 1.0 - p.p_arrive;
                    if (pa == 0.0) continue;
                    int next = std::clamp(backlog - depart + arrive, 0, B - 1);
                    row[next] += pd * pa;
                }
            }
        }
        m.transition_cpts.push_back(std::move(cpt));
    }

    for (int i = 0; i < p.n_islands; ++i) {
        Cpt cpt;
        cpt.child_cardinality = 2;
        cpt.parent_factors_next = {i};
        cpt.table.assign(static_cast<Index>(B) * 2, 0.0);
        for (int b = 0; b < B; ++b) {
            double busy = b > 0 ? p.p_obs_correct : 1.0 - p.p_obs_correct;
            cpt.table[static_cast<Index>(b) * 2] = 1.0 - busy;
            cpt.table[static_cast<Index>(b) * 2 + 1] = busy;
        }
        m.observation_cpts.push_back(std::move(cpt));
    }

    for (int i = 0; i < p.n_islands; ++i) {
        LocalReward r;
        r.next_factor_scope = {i};
        r.table = reward_per_backlog;
        m.rewards.push_back(std::move(r));
    }

    m.b0.assign(static_cast<Index>(p.n_islands), std::vector<double>(static_cast<Index>(B), 1.0 / B));

    m.provenance.generator = "aloha";
    m.provenance.params = {{"n_islands", std::to_string(p.n_islands)},
                           {"topology", p.topology},
                           {"backlog_cardinality", std::to_string(B)},
                           {"p_arrive", fmt(p.p_arrive)},
                           {"p_tx_success", fmt(p.p_tx_success)},
                           {"p_obs_correct", fmt(p.p_obs_correct)},
                           {"reward_per_backlog", fmt(reward_per_backlog)},
                           {"horizon", std::to_string(p.horizon)}};
    return m;
}

namespace {

std::vector<int> range(int first, int last) {  // inclusive
    std::vector<int> out;
    for (int v = first; v <= last; ++v) out.push_back(v);
    return out;
}

}  // namespace

DomainSubproblem make_ffg_edge_sp(const FfgParams& p, int n_sp_agents) {
    if (n_sp_agents < 1 || n_sp_agents >= p.n_agents)
        throw std::invalid_argument("edge sub-problem needs 1 <= n_sp_agents < n_agents");
    auto model = std::make_shared<const FactoredDecPomdp>(make_ffg(p));
    SubProblem sp = extract_subproblem(model, range(0, n_sp_agents - 1), range(0, n_sp_agents),
                                       range(0, n_sp_agents));
    return {model, std::move(sp)};
}

DomainSubproblem make_ffg_internal_sp(const FfgParams& p, int n_sp_agents) {
    if (n_sp_agents < 1 || n_sp_agents > p.n_agents - 2)
        throw std::invalid_argument("internal sub-problem needs 1 <= n_sp_agents <= n_agents - 2");
    auto model = std::make_shared<const FactoredDecPomdp>(make_ffg(p));
    SubProblem sp = extract_subproblem(model, range(1, n_sp_agents), range(1, n_sp_agents + 1),
                                       range(1, n_sp_agents + 1));
    return {model, std::move(sp)};
}

}  // namespace iob
