#include "iob/report.hpp"

#include <chrono>
#include <cmath>

#include "iob/io_mmdp.hpp"
#include "iob/oracle.hpp"

namespace iob {

const char* bound_type_name(BoundType t) {
    switch (t) {
        case BoundType::mmdp: return "mmdp";
        case BoundType::mpomdp: return "mpomdp";
        case BoundType::decpomdp: return "decpomdp";
    }
    return "?";
}

BoundType parse_bound_type(const std::string& name) {
    if (name == "mmdp") return BoundType::mmdp;
    if (name == "mpomdp") return BoundType::mpomdp;
    if (name == "decpomdp") return BoundType::decpomdp;
    throw std::invalid_argument("unknown bound type '" + name + "'");
}

SpBoundResult compute_sp_bound(const SubProblem& sp, BoundType type, const BoundOptions& opts) {
    auto start = std::chrono::steady_clock::now();
    SpBoundResult res;
    res.influence_count = influence_source_space_size(sp);
    switch (type) {
        case BoundType::mmdp: {
            MmdpOptions mo;
            mo.influence = opts.influence;
            mo.n_threads = opts.n_threads;
            res.value = io_qmmdp_bound(sp, mo).bound;
            break;
        }
        case BoundType::mpomdp: {
            DpOptions dpo;
            dpo.vector_cap = opts.vector_cap;
            dpo.n_threads = opts.n_threads;
            res.value = io_qmpomdp_bound(sp, dpo).bound;
            break;
        }
        case BoundType::decpomdp: {
            DecOptions dco;
            dco.policy_cap = opts.policy_cap;
            dco.n_threads = opts.n_threads;
            res.value = io_qdecpomdp_bound(sp, dco).bound;
            break;
        }
    }
    res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                      .count();
    return res;
}

double global_bound(const Partition& partition, BoundType type, const BoundOptions& opts) {
    double total = 0.0;
    for (const SubProblem& sp : partition.sps) total += compute_sp_bound(sp, type, opts).value;
    return total;
}

BoundReport global_bound_report(const Partition& partition, BoundType type, const BoundOptions& opts) {
    BoundReport report;
    report.model_id = partition.model->name;
    report.provenance = partition.model->provenance;
    report.blocks = partition.blocks;
    double total = 0.0;
    for (const SubProblem& sp : partition.sps) {
        SpBoundResult r = compute_sp_bound(sp, type, opts);
        SpBoundEntry e;
        e.sp_signature = sp.signature();
        e.type = type;
        e.value = r.value;
        e.influence_count = r.influence_count;
        e.wall_ms = r.wall_ms;
        report.entries.push_back(std::move(e));
        total += r.value;
    }
    report.global_bound = total;
    return report;
}

PartitionChoice best_partition_bound(std::shared_ptr<const FactoredDecPomdp> model,
                                     const std::vector<std::vector<std::vector<int>>>& partitions,
                                     BoundType type, const BoundOptions& opts) {
    if (partitions.empty()) throw std::invalid_argument("best_partition_bound: no candidate partitions");
    PartitionChoice best;
    bool first = true;
    for (Index k = 0; k < partitions.size(); ++k) {
        Partition part = make_partition(model, partitions[k]);
        double v = global_bound(part, type, opts);
        if (first || v < best.bound) {
            first = false;
            best.bound = v;
            best.index = k;
        }
    }
    return best;
}

double eaf(double v_ub, double v_heur) {
    if (v_ub == 0.0 || v_heur == 0.0 || std::signbit(v_ub) != std::signbit(v_heur))
        throw SignMismatch("eaf needs two nonzero values of the same sign, got " +
                           std::to_string(v_ub) + " and " + std::to_string(v_heur));
    return std::max(v_ub / v_heur, v_heur / v_ub);
}

std::vector<SweepRow> influence_strength_sweep(const FfgParams& params,
                                               const std::vector<double>& p_values, int n_sp_agents,
                                               BoundType type, const BoundOptions& opts) {
    if (p_values.empty()) throw std::invalid_argument("influence_strength_sweep: empty p list");
    if (n_sp_agents >= params.n_agents)
        throw std::invalid_argument("influence_strength_sweep: need n_sp_agents < n_agents");
    std::vector<SweepRow> rows;
    for (double p : p_values) {
        FfgParams at_p = params;
        at_p.p_extinguish2 = p;

        DomainSubproblem edge = make_ffg_edge_sp(at_p, n_sp_agents);
        SweepRow row;
        row.p_extinguish2 = p;
        row.bound = compute_sp_bound(edge.sp, type, opts).value;

        FfgParams standalone = at_p;
        standalone.n_agents = n_sp_agents;
        FlatModel flat = flatten(make_ffg(standalone));
        row.exact = brute_force_optimal(flat).value;

        if (row.bound == 0.0)
            throw std::invalid_argument("influence_strength_sweep: bound is zero, ratio undefined");
        row.ratio = row.exact / row.bound;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace iob
