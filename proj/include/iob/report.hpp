#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iob/domains.hpp"
#include "iob/plan_time_dp.hpp"
#include "iob/subproblem.hpp"
#include "iob/vector_dp.hpp"

namespace iob {

inline constexpr const char* kToolVersion = "iob 0.1.0";

enum class BoundType { mmdp, mpomdp, decpomdp };

const char* bound_type_name(BoundType t);
BoundType parse_bound_type(const std::string& name);

struct BoundOptions {
    Index vector_cap = kDefaultVectorCap;
    Index policy_cap = kDefaultJointPolicyCap;
    InfluenceMode influence = InfluenceMode::joint;
    unsigned n_threads = 0;
};

struct SpBoundResult {
    double value = 0.0;
    Index influence_count = 1;
    double wall_ms = 0.0;
};

/// Dispatches to the IO-Q-MMDP / IO-Q-MPOMDP / IO-Q-Dec-POMDP engine.
SpBoundResult compute_sp_bound(const SubProblem& sp, BoundType type, const BoundOptions& opts = {});

struct SpBoundEntry {
    std::string sp_signature;
    BoundType type = BoundType::mmdp;
    double value = 0.0;
    Index influence_count = 1;
    double wall_ms = 0.0;
};

struct HeuristicValue {
    double value = 0.0;
    std::string method;      // heuristic policy name
    std::string evaluation;  // "exact" or "mc"
    Index sims = 0;
    std::uint64_t seed = 0;
    double std_error = 0.0;
};

/// Everything needed to reproduce a published number: resolved generator
/// parameters travel with the report, and the global bound always equals the
/// sum of the per-SP bounds.
struct BoundReport {
    std::string model_id;
    Provenance provenance;
    std::vector<std::vector<int>> blocks;
    std::vector<SpBoundEntry> entries;
    double global_bound = 0.0;
    std::optional<HeuristicValue> heuristic;
    std::optional<double> eaf_value;
    std::string tool_version = kToolVersion;
};

/// V-hat^IO = sum of per-SP bounds over a reward partition.
double global_bound(const Partition& partition, BoundType type, const BoundOptions& opts = {});

BoundReport global_bound_report(const Partition& partition, BoundType type,
                                const BoundOptions& opts = {});

struct PartitionChoice {
    double bound = 0.0;
    Index index = 0;  // argmin position in the candidate list
};

/// Minimum (tightest upper bound) over candidate partitions; ties keep the
/// first listed. Throws std::invalid_argument on an empty candidate list.
PartitionChoice best_partition_bound(std::shared_ptr<const FactoredDecPomdp> model,
                                     const std::vector<std::vector<std::vector<int>>>& partitions,
                                     BoundType type, const BoundOptions& opts = {});

/// Empirical approximation factor max{ub/heur, heur/ub}. Throws SignMismatch
/// unless both values are nonzero and share a sign.
double eaf(double v_ub, double v_heur);

struct SweepRow {
    double p_extinguish2 = 0.0;
    double bound = 0.0;
    double exact = 0.0;
    double ratio = 0.0;  // exact / bound
};

/// Influence-strength study: for each p, the chosen bound on the
/// n_sp_agents-agent edge sub-problem of FFG(params.n_agents) against the
/// brute-force optimum of the standalone FFG(n_sp_agents) with the same
/// dynamics.
std::vector<SweepRow> influence_strength_sweep(const FfgParams& params,
                                               const std::vector<double>& p_values, int n_sp_agents,
                                               BoundType type, const BoundOptions& opts = {});

}  // namespace iob
