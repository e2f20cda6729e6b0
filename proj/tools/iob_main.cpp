// Command-line front end: benchmark generation, sub-problem slicing,
// influence-optimistic bounds, oracle solving, and report assembly.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <iostream>

#include "iob/domains.hpp"
#include "iob/io_mmdp.hpp"
#include "iob/model_io.hpp"
#include "iob/oracle.hpp"
#include "iob/plan_time_dp.hpp"
#include "iob/report.hpp"
#include "iob/vector_dp.hpp"

using namespace iob;

namespace {

struct CliError : std::runtime_error {
    explicit CliError(const std::string& msg) : std::runtime_error(msg) {}
};

std::string format_sig(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void emit(const Json& j, const std::string& out_file) {
    if (out_file.empty())
        std::cout << j.dump(2) << "\n";
    else
        save_document(out_file, j);
}

FactoredDecPomdp load_model_checked(const std::string& path, int horizon_override) {
    Json j = load_document(path, "iob-model");
    FactoredDecPomdp m = model_from_json(j);
    if (horizon_override > 0) m.horizon = horizon_override;
    std::vector<Violation> violations = validate_model(m);
    if (!violations.empty()) {
        Json out;
        out["violations"] = violations_to_json(violations);
        std::cerr << out.dump(2) << "\n";
        throw CliError(path + ": model validation failed");
    }
    return m;
}

std::vector<int> parse_ids(const std::string& csv) {
    std::vector<int> out;
    std::string token;
    for (char c : csv + ",") {
        if (c == ',') {
            if (!token.empty()) out.push_back(std::stoi(token));
            token.clear();
        } else {
            token += c;
        }
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& csv) {
    std::vector<double> out;
    std::string token;
    for (char c : csv + ",") {
        if (c == ',') {
            if (!token.empty()) out.push_back(std::stod(token));
            token.clear();
        } else {
            token += c;
        }
    }
    return out;
}

std::vector<std::vector<int>> parse_blocks(const std::string& spec) {
    std::vector<std::vector<int>> blocks;
    std::string chunk;
    for (char c : spec + ";") {
        if (c == ';') {
            if (!chunk.empty()) blocks.push_back(parse_ids(chunk));
            chunk.clear();
        } else {
            chunk += c;
        }
    }
    return blocks;
}

Json local_policy_to_json(const LocalJointPolicy& pi) {
    Json rules = Json::array();
    for (const DecisionRule& r : pi.rules) {
        Json rj;
        rj["actions_by_agent"] = r.actions_by_agent;
        rules.push_back(std::move(rj));
    }
    Json j;
    j["rules"] = std::move(rules);
    return j;
}

int run(int argc, char** argv) {
    CLI::App app{"influence-optimistic upper bounds for factored Dec-POMDPs"};
    app.require_subcommand(1);
    app.fallthrough(true);

    std::string out_format = "json";
    std::string out_file;
    std::uint64_t seed = 1;
    Index cap = 0;  // 0 = per-command default
    unsigned threads = 0;
    bool timings = false;
    app.add_option("--out", out_format, "output format: json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--out-file", out_file, "write the result document here instead of stdout");
    app.add_option("--seed", seed, "random seed for sampling commands");
    app.add_option("--cap", cap, "override the enumeration/state cap of the command");
    app.add_option("--threads", threads, "worker threads (0 = hardware)");
    app.add_flag("--timings", timings, "include wall-clock timings in reports");

    // generate ffg|aloha
    auto* generate = app.add_subcommand("generate", "emit a benchmark model document");
    FfgParams ffg;
    auto* gen_ffg = generate->add_subcommand("ffg", "FireFightingGraph family");
    gen_ffg->add_option("--agents", ffg.n_agents)->required();
    gen_ffg->add_option("--fire-levels", ffg.n_fire_levels);
    gen_ffg->add_option("--horizon", ffg.horizon);
    gen_ffg->add_option("--p-extinguish2", ffg.p_extinguish2);
    gen_ffg->add_option("--p-extinguish1", ffg.p_extinguish1);
    gen_ffg->add_option("--p-ignite", ffg.p_ignite);
    gen_ffg->add_option("--p-self-ignite", ffg.p_self_ignite);
    gen_ffg->add_option("--p-spread", ffg.p_spread);
    gen_ffg->add_option("--p-up-alone", ffg.p_up_alone);
    std::string ffg_flames, ffg_rewards;
    gen_ffg->add_option("--p-flames", ffg_flames, "per-level flame probabilities, comma separated");
    gen_ffg->add_option("--rewards", ffg_rewards, "per-level rewards, comma separated");

    AlohaParams aloha;
    auto* gen_aloha = generate->add_subcommand("aloha", "line-topology Aloha family");
    gen_aloha->add_option("--islands", aloha.n_islands)->required();
    gen_aloha->add_option("--topology", aloha.topology);
    gen_aloha->add_option("--backlog", aloha.backlog_cardinality);
    gen_aloha->add_option("--horizon", aloha.horizon);
    gen_aloha->add_option("--p-arrive", aloha.p_arrive);
    gen_aloha->add_option("--p-tx-success", aloha.p_tx_success);
    gen_aloha->add_option("--p-obs-correct", aloha.p_obs_correct);
    std::string aloha_rewards;
    gen_aloha->add_option("--rewards", aloha_rewards, "per-backlog rewards, comma separated");

    // sp extract | partition
    auto* sp_cmd = app.add_subcommand("sp", "sub-problem tooling");
    auto* sp_extract = sp_cmd->add_subcommand("extract", "slice a sub-problem out of a model");
    std::string sx_model, sx_agents, sx_factors, sx_rewards;
    int sx_edge = -1, sx_internal = -1, sx_horizon = 0;
    sp_extract->add_option("--model", sx_model)->required();
    sp_extract->add_option("--agents", sx_agents);
    sp_extract->add_option("--factors", sx_factors);
    sp_extract->add_option("--rewards", sx_rewards);
    sp_extract->add_option("--ffg-edge", sx_edge, "edge slice with this many agents");
    sp_extract->add_option("--ffg-internal", sx_internal, "internal slice with this many agents");
    sp_extract->add_option("--horizon", sx_horizon, "override the model horizon");

    auto* sp_partition = sp_cmd->add_subcommand("partition", "close reward blocks into sub-problems");
    std::string px_model, px_blocks, px_closure = "covering_agents";
    int px_horizon = 0;
    sp_partition->add_option("--model", px_model)->required();
    sp_partition->add_option("--blocks", px_blocks, "e.g. \"0,1,2;3,4\"")->required();
    sp_partition->add_option("--closure", px_closure)
        ->check(CLI::IsMember({"covering_agents", "reward_scope"}));
    sp_partition->add_option("--horizon", px_horizon);

    // bound mmdp|mpomdp|decpomdp
    auto* bound_cmd = app.add_subcommand("bound", "influence-optimistic local bounds");
    std::string bd_sp;
    int bd_horizon = 0;
    bool bd_decoupled = false;
    std::string bd_type;
    for (const char* name : {"mmdp", "mpomdp", "decpomdp"}) {
        auto* sub = bound_cmd->add_subcommand(name);
        sub->add_option("--sp", bd_sp)->required();
        sub->add_option("--horizon", bd_horizon);
        if (std::string(name) == "mmdp")
            sub->add_flag("--decoupled", bd_decoupled,
                          "maximize influence sources per NLAF instead of jointly");
        sub->callback([&bd_type, name] { bd_type = name; });
    }

    // global
    auto* global_cmd = app.add_subcommand("global", "sum per-SP bounds over a partition");
    std::string gl_partition, gl_bound = "mmdp", gl_heur, gl_eval = "exact";
    Index gl_sims = 10000;
    global_cmd->add_option("--partition", gl_partition)->required();
    global_cmd->add_option("--bound", gl_bound)->check(CLI::IsMember({"mmdp", "mpomdp", "decpomdp"}));
    global_cmd->add_option("--heur", gl_heur, "heuristic policy: random or greedy-mmdp")
        ->check(CLI::IsMember({"random", "greedy-mmdp"}));
    global_cmd->add_option("--eval", gl_eval, "heuristic evaluation: exact or mc")
        ->check(CLI::IsMember({"exact", "mc"}));
    global_cmd->add_option("--sims", gl_sims);

    // oracle solve|eval|mc
    auto* oracle_cmd = app.add_subcommand("oracle", "ground-truth machinery at desk scale");
    std::string or_model, or_policy;
    int or_horizon = 0;
    Index or_sims = 10000;
    auto* or_solve = oracle_cmd->add_subcommand("solve", "exhaustive optimal joint policy");
    or_solve->add_option("--model", or_model)->required();
    or_solve->add_option("--horizon", or_horizon);
    auto* or_eval = oracle_cmd->add_subcommand("eval", "exact policy value");
    or_eval->add_option("--model", or_model)->required();
    or_eval->add_option("--policy", or_policy)->required();
    or_eval->add_option("--horizon", or_horizon);
    auto* or_mc = oracle_cmd->add_subcommand("mc", "Monte-Carlo policy value");
    or_mc->add_option("--model", or_model)->required();
    or_mc->add_option("--policy", or_policy)->required();
    or_mc->add_option("--sims", or_sims);
    or_mc->add_option("--horizon", or_horizon);

    // eaf
    auto* eaf_cmd = app.add_subcommand("eaf", "empirical approximation factor");
    double eaf_ub = 0.0, eaf_heur = 0.0;
    eaf_cmd->add_option("--ub", eaf_ub)->required();
    eaf_cmd->add_option("--heur", eaf_heur)->required();

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "influence-strength study on FFG edge slices");
    int sw_agents = 3, sw_sp_agents = 2, sw_horizon = 2;
    std::string sw_p = "0,0.5,1", sw_bound = "mmdp";
    sweep_cmd->add_option("--agents", sw_agents, "agents of the parent FFG instance");
    sweep_cmd->add_option("--sp-agents", sw_sp_agents, "agents of the edge slice");
    sweep_cmd->add_option("--horizon", sw_horizon);
    sweep_cmd->add_option("--p-values", sw_p, "comma-separated p_extinguish2 values");
    sweep_cmd->add_option("--bound", sw_bound)->check(CLI::IsMember({"mmdp", "mpomdp", "decpomdp"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    BoundOptions bopts;
    if (cap > 0) {
        bopts.vector_cap = cap;
        bopts.policy_cap = cap;
    }
    bopts.n_threads = threads;

    if (gen_ffg->parsed() || gen_aloha->parsed()) {
        FactoredDecPomdp m;
        if (gen_ffg->parsed()) {
            if (!ffg_flames.empty()) ffg.p_flames = parse_doubles(ffg_flames);
            if (!ffg_rewards.empty()) ffg.reward_per_level = parse_doubles(ffg_rewards);
            m = make_ffg(ffg);
        } else {
            if (!aloha_rewards.empty()) aloha.reward_per_backlog = parse_doubles(aloha_rewards);
            m = make_aloha(aloha);
        }
        emit(model_to_json(m), out_file);
        return 0;
    }

    if (sp_extract->parsed()) {
        auto model = std::make_shared<const FactoredDecPomdp>(load_model_checked(sx_model, sx_horizon));
        std::vector<int> agents, factors, rewards;
        if (sx_edge >= 0 || sx_internal >= 0) {
            int k = sx_edge >= 0 ? sx_edge : sx_internal;
            int first = sx_edge >= 0 ? 0 : 1;
            int n_agents = static_cast<int>(model->n_agents());
            if (k < 1 || first + k + (sx_internal >= 0 ? 1 : 0) > n_agents)
                throw CliError("slice does not fit into the model");
            for (int i = first; i < first + k; ++i) agents.push_back(i);
            for (int f = first; f <= first + k; ++f) factors.push_back(f);
            rewards = factors;
        } else {
            agents = parse_ids(sx_agents);
            factors = parse_ids(sx_factors);
            rewards = parse_ids(sx_rewards);
        }
        SubProblem sp = extract_subproblem(model, agents, factors, rewards);
        emit(subproblem_to_json(sp), out_file);
        return 0;
    }

    if (sp_partition->parsed()) {
        auto model = std::make_shared<const FactoredDecPomdp>(load_model_checked(px_model, px_horizon));
        ClosureRule rule = px_closure == "reward_scope" ? ClosureRule::reward_scope
                                                        : ClosureRule::covering_agents;
        Partition part = make_partition(model, parse_blocks(px_blocks), rule);
        emit(partition_to_json(part, rule), out_file);
        return 0;
    }

    if (!bd_type.empty()) {
        Json doc = load_document(bd_sp, "iob-subproblem");
        if (bd_horizon > 0) doc["model"]["horizon"] = bd_horizon;
        LoadedSubproblem loaded = subproblem_from_json(doc);
        std::vector<Violation> violations = validate_model(*loaded.model);
        if (!violations.empty()) throw CliError(bd_sp + ": embedded model validation failed");

        Json j;
        j["format"] = "iob-bound";
        j["tool_version"] = kToolVersion;
        j["sp"] = loaded.sp.signature();
        j["type"] = bd_type;
        j["horizon"] = loaded.model->horizon;
        j["influence_sources"] = influence_source_space_size(loaded.sp);
        auto start = std::chrono::steady_clock::now();
        if (bd_type == "mmdp") {
            MmdpOptions mo;
            mo.influence = bd_decoupled ? InfluenceMode::decoupled : InfluenceMode::joint;
            mo.n_threads = threads;
            MmdpBound b = io_qmmdp_bound(loaded.sp, mo);
            j["bound"] = b.bound;
            j["ops_per_stage"] = b.ops_per_stage;
            j["predicted_ops_per_stage"] = backup_op_counter(loaded.sp);
        } else if (bd_type == "mpomdp") {
            DpOptions dpo;
            dpo.n_threads = threads;
            if (cap > 0) dpo.vector_cap = cap;
            MpomdpBound b = io_qmpomdp_bound(loaded.sp, dpo);
            j["bound"] = b.bound;
            j["vectors_per_stage"] = b.stats.vectors_per_stage;
            j["backprojections"] = b.stats.backprojections;
            j["influence_evals"] = b.stats.influence_evals;
        } else {
            DecOptions dco;
            dco.n_threads = threads;
            if (cap > 0) dco.policy_cap = cap;
            DecBound b = io_qdecpomdp_bound(loaded.sp, dco);
            j["bound"] = b.bound;
            j["policies_evaluated"] = b.policies_evaluated;
            j["subtree_vectors"] = b.subtree_vectors;
            j["memo_hits"] = b.memo_hits;
            j["argmax_policy"] = local_policy_to_json(b.argmax);
        }
        if (timings)
            j["wall_ms"] =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
        if (out_format == "csv") {
            std::cout << "sp,type,bound\n"
                      << loaded.sp.signature() << "," << bd_type << ","
                      << format_sig(j["bound"].get<double>()) << "\n";
        } else {
            emit(j, out_file);
        }
        return 0;
    }

    if (global_cmd->parsed()) {
        Partition part = partition_from_json(load_document(gl_partition, "iob-partition"));
        std::vector<Violation> violations = validate_model(*part.model);
        if (!violations.empty()) throw CliError("embedded model validation failed");
        BoundType type = parse_bound_type(gl_bound);
        BoundReport report = global_bound_report(part, type, bopts);
        if (!gl_heur.empty()) {
            FlatModel flat = flatten(*part.model, cap > 0 ? cap : kDefaultFlattenCap);
            JointPolicy pi = gl_heur == "random" ? random_policy(flat, seed) : greedy_mmdp_policy(flat);
            HeuristicValue h;
            h.method = gl_heur;
            h.evaluation = gl_eval;
            if (gl_eval == "exact") {
                h.value = exact_policy_value(flat, pi).total;
            } else {
                McValue mc = monte_carlo_value(flat, pi, gl_sims, seed);
                h.value = mc.mean;
                h.std_error = mc.std_error;
                h.sims = gl_sims;
                h.seed = seed;
            }
            report.heuristic = h;
            report.eaf_value = eaf(report.global_bound, h.value);
        }
        if (out_format == "csv") {
            std::cout << "global_bound," << format_sig(report.global_bound) << "\n";
            if (report.heuristic) {
                std::cout << "heuristic," << format_sig(report.heuristic->value) << "\n";
                std::cout << "eaf," << format_sig(*report.eaf_value) << "\n";
            }
        } else {
            emit(report_to_json(report, timings), out_file);
        }
        return 0;
    }

    if (or_solve->parsed() || or_eval->parsed() || or_mc->parsed()) {
        FactoredDecPomdp m = load_model_checked(or_model, or_horizon);
        FlatModel flat = flatten(m, cap > 0 ? cap : kDefaultFlattenCap);
        Json j;
        j["format"] = "iob-oracle";
        j["tool_version"] = kToolVersion;
        j["model_id"] = m.name;
        if (or_solve->parsed()) {
            OracleResult res = brute_force_optimal(flat, cap > 0 ? cap : kDefaultPolicyCap);
            j["command"] = "solve";
            j["value"] = res.value;
            j["per_block"] = res.per_block;
            j["policies_evaluated"] = res.policies_evaluated;
            j["argmax_policy"] = policy_to_json(res.argmax);
        } else {
            JointPolicy pi = policy_from_json(load_document(or_policy, "iob-policy"));
            if (or_eval->parsed()) {
                PolicyValue v = exact_policy_value(flat, pi);
                j["command"] = "eval";
                j["value"] = v.total;
                j["per_block"] = v.per_block;
            } else {
                McValue mc = monte_carlo_value(flat, pi, or_sims, seed);
                j["command"] = "mc";
                j["mean"] = mc.mean;
                j["std_error"] = mc.std_error;
                j["sims"] = mc.n_sims;
                j["seed"] = seed;
            }
        }
        if (out_format == "csv") {
            double v = j.contains("value") ? j["value"].get<double>() : j["mean"].get<double>();
            std::cout << "value," << format_sig(v) << "\n";
        } else {
            emit(j, out_file);
        }
        return 0;
    }

    if (eaf_cmd->parsed()) {
        double v = eaf(eaf_ub, eaf_heur);
        if (out_format == "csv") {
            std::cout << "eaf," << format_sig(v) << "\n";
        } else {
            Json j;
            j["format"] = "iob-eaf";
            j["ub"] = eaf_ub;
            j["heur"] = eaf_heur;
            j["eaf"] = v;
            emit(j, out_file);
        }
        return 0;
    }

    if (sweep_cmd->parsed()) {
        FfgParams params;
        params.n_agents = sw_agents;
        params.horizon = sw_horizon;
        std::vector<SweepRow> rows =
            influence_strength_sweep(params, parse_doubles(sw_p), sw_sp_agents,
                                     parse_bound_type(sw_bound), bopts);
        if (out_format == "csv") {
            std::cout << "p_extinguish2,bound,exact,ratio\n";
            for (const SweepRow& r : rows)
                std::cout << format_sig(r.p_extinguish2) << "," << format_sig(r.bound) << ","
                          << format_sig(r.exact) << "," << format_sig(r.ratio) << "\n";
        } else {
            Json arr = Json::array();
            for (const SweepRow& r : rows) {
                Json rj;
                rj["p_extinguish2"] = r.p_extinguish2;
                rj["bound"] = r.bound;
                rj["exact"] = r.exact;
                rj["ratio"] = r.ratio;
                arr.push_back(std::move(rj));
            }
            Json j;
            j["format"] = "iob-sweep";
            j["bound_type"] = sw_bound;
            j["horizon"] = sw_horizon;
            j["sp_agents"] = sw_sp_agents;
            j["rows"] = std::move(arr);
            emit(j, out_file);
        }
        return 0;
    }

    throw CliError("no subcommand executed");
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CapExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ObservationDependenceViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const RewardDependenceViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SignMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
