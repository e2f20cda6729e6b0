#pragma once

#include <memory>
#include <string>
#include <vector>

#include "iob/model.hpp"
#include "iob/subproblem.hpp"

namespace iob {

/// FireFightingGraph generator parameters. The benchmark family fixes the
/// topology (n agents, n+1 houses in a line, agent i acts on houses i and
/// i+1); every probability is an explicit parameter with the defaults below,
/// stamped into the generated document's provenance.
struct FfgParams {
    int n_agents = 2;
    int n_fire_levels = 3;
    /// Two agents at a burning house extinguish it completely.
    double p_extinguish2 = 1.0;
    /// One agent at a burning house lowers the level by one.
    double p_extinguish1 = 0.3;
    /// Unattended level-0 house with a burning neighbor ignites.
    double p_ignite = 0.8;
    /// Unattended level-0 house without burning neighbors ignites.
    double p_self_ignite = 0.0;
    /// Unattended burning house with a burning neighbor climbs one level.
    double p_spread = 0.4;
    /// Unattended burning house without burning neighbors climbs one level.
    double p_up_alone = 0.2;
    /// Pr(observe flames | next level), indexed by level; levels beyond the
    /// vector reuse its last entry.
    std::vector<double> p_flames = {0.35, 0.5, 0.65};
    /// Reward per next-stage fire level; empty means -level.
    std::vector<double> reward_per_level;
    int horizon = 3;
};

struct AlohaParams {
    int n_islands = 3;
    std::string topology = "line";
    int backlog_cardinality = 3;
    /// A new packet joins an island's backlog each stage.
    double p_arrive = 0.5;
    /// A send with no neighboring send drains one packet.
    double p_tx_success = 0.9;
    /// Pr(observing own backlog state correctly).
    double p_obs_correct = 0.9;
    /// Reward per next-stage backlog size; empty means -backlog.
    std::vector<double> reward_per_backlog;
    int horizon = 3;
};

/// Builds the n_agents FFG instance: n_agents+1 fire-level factors, binary
/// {left, right} actions, binary {flames, noflames} observations, one local
/// reward per house, uniform per-house initial marginals.
FactoredDecPomdp make_ffg(const FfgParams& p);

/// Builds the line-topology Aloha instance: one backlog factor per island,
/// {idle, send} actions, neighbor sends collide, noisy own-backlog sensing.
FactoredDecPomdp make_aloha(const AlohaParams& p);

struct DomainSubproblem {
    std::shared_ptr<const FactoredDecPomdp> model;
    SubProblem sp;
};

/// The leftmost n_sp_agents agents of an FFG instance together with houses
/// 0..n_sp_agents; exactly the last house receives incoming influence.
/// Requires n_sp_agents < p.n_agents.
DomainSubproblem make_ffg_edge_sp(const FfgParams& p, int n_sp_agents);

/// Agents 1..n_sp_agents with houses 1..n_sp_agents+1; both end houses
/// receive incoming influence. Requires n_sp_agents <= p.n_agents - 2.
DomainSubproblem make_ffg_internal_sp(const FfgParams& p, int n_sp_agents);

}  // namespace iob
