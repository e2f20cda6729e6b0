#include "iob/model_io.hpp"

#include <fstream>

namespace iob {

namespace {

Json cpt_to_json(const Cpt& cpt) {
    Json j;
    j["parent_factors_prev"] = cpt.parent_factors_prev;
    j["parent_factors_next"] = cpt.parent_factors_next;
    j["parent_agents"] = cpt.parent_agents;
    Json rows = Json::array();
    for (Index r = 0; r < cpt.row_count(); ++r) {
        Json row = Json::array();
        for (int v = 0; v < cpt.child_cardinality; ++v) row.push_back(cpt.row(r)[v]);
        rows.push_back(std::move(row));
    }
    j["table"] = std::move(rows);
    return j;
}

Cpt cpt_from_json(const Json& j, int child_cardinality) {
    Cpt cpt;
    cpt.parent_factors_prev = j.value("parent_factors_prev", std::vector<int>{});
    cpt.parent_factors_next = j.value("parent_factors_next", std::vector<int>{});
    cpt.parent_agents = j.value("parent_agents", std::vector<int>{});
    cpt.child_cardinality = child_cardinality;
    for (const Json& row : j.at("table"))
        for (const Json& v : row) cpt.table.push_back(v.get<double>());
    return cpt;
}

}  // namespace

Json model_to_json(const FactoredDecPomdp& m) {
    Json j;
    j["format"] = "iob-model";
    j["version"] = 1;
    j["name"] = m.name;
    if (!m.provenance.generator.empty()) {
        Json prov;
        prov["generator"] = m.provenance.generator;
        Json params;
        for (const auto& [k, v] : m.provenance.params) params[k] = v;
        prov["params"] = std::move(params);
        j["provenance"] = std::move(prov);
    }
    j["horizon"] = m.horizon;
    j["gamma"] = m.gamma;

    Json agents = Json::array();
    for (const AgentSpec& a : m.agents) {
        Json aj;
        aj["actions"] = a.actions;
        aj["observations"] = a.observations;
        agents.push_back(std::move(aj));
    }
    j["agents"] = std::move(agents);

    Json factors = Json::array();
    for (const FactorSpec& f : m.factors) {
        Json fj;
        fj["name"] = f.name;
        fj["cardinality"] = f.cardinality;
        factors.push_back(std::move(fj));
    }
    j["factors"] = std::move(factors);

    Json tcpts = Json::array();
    for (Index f = 0; f < m.transition_cpts.size(); ++f) {
        Json cj = cpt_to_json(m.transition_cpts[f]);
        cj.erase("parent_factors_next");
        Json with_id;
        with_id["factor"] = static_cast<int>(f);
        with_id.update(cj);
        tcpts.push_back(std::move(with_id));
    }
    j["transition_cpts"] = std::move(tcpts);

    Json ocpts = Json::array();
    for (Index i = 0; i < m.observation_cpts.size(); ++i) {
        Json cj = cpt_to_json(m.observation_cpts[i]);
        Json with_id;
        with_id["agent"] = static_cast<int>(i);
        with_id.update(cj);
        ocpts.push_back(std::move(with_id));
    }
    j["observation_cpts"] = std::move(ocpts);

    Json rewards = Json::array();
    for (const LocalReward& r : m.rewards) {
        Json rj;
        rj["factor_scope"] = r.factor_scope;
        rj["agent_scope"] = r.agent_scope;
        rj["next_factor_scope"] = r.next_factor_scope;
        rj["table"] = r.table;
        rewards.push_back(std::move(rj));
    }
    j["rewards"] = std::move(rewards);
    j["b0"] = m.b0;
    return j;
}

FactoredDecPomdp model_from_json(const Json& j) {
    if (j.value("format", "") != "iob-model")
        throw std::invalid_argument("document is not an iob-model");
    FactoredDecPomdp m;
    m.name = j.value("name", "");
    m.horizon = j.at("horizon").get<int>();
    m.gamma = j.value("gamma", 1.0);
    if (j.contains("provenance")) {
        m.provenance.generator = j["provenance"].value("generator", "");
        if (j["provenance"].contains("params"))
            for (auto it = j["provenance"]["params"].begin(); it != j["provenance"]["params"].end(); ++it)
                m.provenance.params.emplace_back(it.key(), it.value().get<std::string>());
    }
    for (const Json& aj : j.at("agents")) {
        AgentSpec a;
        a.actions = aj.at("actions").get<std::vector<std::string>>();
        a.observations = aj.at("observations").get<std::vector<std::string>>();
        m.agents.push_back(std::move(a));
    }
    for (const Json& fj : j.at("factors"))
        m.factors.push_back({fj.at("name").get<std::string>(), fj.at("cardinality").get<int>()});

    m.transition_cpts.resize(m.n_factors());
    for (const Json& cj : j.at("transition_cpts")) {
        int f = cj.at("factor").get<int>();
        if (f < 0 || static_cast<Index>(f) >= m.n_factors())
            throw std::invalid_argument("transition CPT references undeclared factor");
        m.transition_cpts[static_cast<Index>(f)] = cpt_from_json(cj, m.factor_card(f));
    }
    m.observation_cpts.resize(m.n_agents());
    for (const Json& cj : j.at("observation_cpts")) {
        int i = cj.at("agent").get<int>();
        if (i < 0 || static_cast<Index>(i) >= m.n_agents())
            throw std::invalid_argument("observation CPT references undeclared agent");
        m.observation_cpts[static_cast<Index>(i)] = cpt_from_json(cj, m.n_observations(i));
    }
    for (const Json& rj : j.at("rewards")) {
        LocalReward r;
        r.factor_scope = rj.value("factor_scope", std::vector<int>{});
        r.agent_scope = rj.value("agent_scope", std::vector<int>{});
        r.next_factor_scope = rj.value("next_factor_scope", std::vector<int>{});
        r.table = rj.at("table").get<std::vector<double>>();
        m.rewards.push_back(std::move(r));
    }
    m.b0 = j.at("b0").get<std::vector<std::vector<double>>>();
    return m;
}

Json subproblem_to_json(const SubProblem& sp) {
    Json j;
    j["format"] = "iob-subproblem";
    j["version"] = 1;
    j["model"] = model_to_json(sp.m());
    j["agents"] = sp.agents;
    j["factors"] = sp.factors;
    j["rewards"] = sp.rewards;
    return j;
}

LoadedSubproblem subproblem_from_json(const Json& j) {
    if (j.value("format", "") != "iob-subproblem")
        throw std::invalid_argument("document is not an iob-subproblem");
    auto model = std::make_shared<const FactoredDecPomdp>(model_from_json(j.at("model")));
    SubProblem sp = extract_subproblem(model, j.at("agents").get<std::vector<int>>(),
                                       j.at("factors").get<std::vector<int>>(),
                                       j.at("rewards").get<std::vector<int>>());
    return {model, std::move(sp)};
}

namespace {

const char* closure_name(ClosureRule rule) {
    return rule == ClosureRule::reward_scope ? "reward_scope" : "covering_agents";
}

ClosureRule closure_from_name(const std::string& name) {
    if (name == "reward_scope") return ClosureRule::reward_scope;
    if (name == "covering_agents") return ClosureRule::covering_agents;
    throw std::invalid_argument("unknown closure rule '" + name + "'");
}

}  // namespace

Json partition_to_json(const Partition& part, ClosureRule rule) {
    Json j;
    j["format"] = "iob-partition";
    j["version"] = 1;
    j["model"] = model_to_json(*part.model);
    j["closure"] = closure_name(rule);
    j["blocks"] = part.blocks;
    return j;
}

Partition partition_from_json(const Json& j) {
    if (j.value("format", "") != "iob-partition")
        throw std::invalid_argument("document is not an iob-partition");
    auto model = std::make_shared<const FactoredDecPomdp>(model_from_json(j.at("model")));
    return make_partition(model, j.at("blocks").get<std::vector<std::vector<int>>>(),
                          closure_from_name(j.value("closure", "covering_agents")));
}

Json policy_to_json(const JointPolicy& pi) {
    Json j;
    j["format"] = "iob-policy";
    j["version"] = 1;
    Json agents = Json::array();
    for (const auto& per_stage : pi.actions) {
        Json aj;
        aj["actions_by_stage"] = per_stage;
        agents.push_back(std::move(aj));
    }
    j["agents"] = std::move(agents);
    return j;
}

JointPolicy policy_from_json(const Json& j) {
    if (j.value("format", "") != "iob-policy")
        throw std::invalid_argument("document is not an iob-policy");
    JointPolicy pi;
    for (const Json& aj : j.at("agents"))
        pi.actions.push_back(aj.at("actions_by_stage").get<std::vector<std::vector<int>>>());
    return pi;
}

Json report_to_json(const BoundReport& report, bool include_timings) {
    Json j;
    j["format"] = "iob-report";
    j["version"] = 1;
    j["tool_version"] = report.tool_version;
    j["model_id"] = report.model_id;
    if (!report.provenance.generator.empty()) {
        Json prov;
        prov["generator"] = report.provenance.generator;
        Json params;
        for (const auto& [k, v] : report.provenance.params) params[k] = v;
        prov["params"] = std::move(params);
        j["provenance"] = std::move(prov);
    }
    j["blocks"] = report.blocks;
    Json entries = Json::array();
    for (const SpBoundEntry& e : report.entries) {
        Json ej;
        ej["sp"] = e.sp_signature;
        ej["type"] = bound_type_name(e.type);
        ej["value"] = e.value;
        ej["influence_sources"] = e.influence_count;
        if (include_timings) ej["wall_ms"] = e.wall_ms;
        entries.push_back(std::move(ej));
    }
    j["bounds"] = std::move(entries);
    j["global_bound"] = report.global_bound;
    if (report.heuristic) {
        Json hj;
        hj["value"] = report.heuristic->value;
        hj["method"] = report.heuristic->method;
        hj["evaluation"] = report.heuristic->evaluation;
        if (report.heuristic->evaluation == "mc") {
            hj["sims"] = report.heuristic->sims;
            hj["seed"] = report.heuristic->seed;
            hj["std_error"] = report.heuristic->std_error;
        }
        j["heuristic"] = std::move(hj);
    }
    if (report.eaf_value) j["eaf"] = *report.eaf_value;
    return j;
}

BoundReport report_from_json(const Json& j) {
    if (j.value("format", "") != "iob-report")
        throw std::invalid_argument("document is not an iob-report");
    BoundReport report;
    report.tool_version = j.value("tool_version", "");
    report.model_id = j.value("model_id", "");
    if (j.contains("provenance")) {
        report.provenance.generator = j["provenance"].value("generator", "");
        if (j["provenance"].contains("params"))
            for (auto it = j["provenance"]["params"].begin(); it != j["provenance"]["params"].end(); ++it)
                report.provenance.params.emplace_back(it.key(), it.value().get<std::string>());
    }
    report.blocks = j.value("blocks", std::vector<std::vector<int>>{});
    for (const Json& ej : j.at("bounds")) {
        SpBoundEntry e;
        e.sp_signature = ej.at("sp").get<std::string>();
        e.type = parse_bound_type(ej.at("type").get<std::string>());
        e.value = ej.at("value").get<double>();
        e.influence_count = ej.at("influence_sources").get<Index>();
        e.wall_ms = ej.value("wall_ms", 0.0);
        report.entries.push_back(std::move(e));
    }
    report.global_bound = j.at("global_bound").get<double>();
    if (j.contains("heuristic")) {
        HeuristicValue h;
        h.value = j["heuristic"].at("value").get<double>();
        h.method = j["heuristic"].value("method", "");
        h.evaluation = j["heuristic"].value("evaluation", "exact");
        h.sims = j["heuristic"].value("sims", Index{0});
        h.seed = j["heuristic"].value("seed", std::uint64_t{0});
        h.std_error = j["heuristic"].value("std_error", 0.0);
        report.heuristic = h;
    }
    if (j.contains("eaf")) report.eaf_value = j["eaf"].get<double>();
    return report;
}

Json violations_to_json(const std::vector<Violation>& violations) {
    Json arr = Json::array();
    for (const Violation& v : violations) {
        Json vj;
        vj["where"] = v.where;
        vj["message"] = v.message;
        arr.push_back(std::move(vj));
    }
    return arr;
}

Json load_document(const std::string& path, const std::string& expected_format) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    Json j = Json::parse(in);
    if (!expected_format.empty() && j.value("format", "") != expected_format)
        throw std::invalid_argument(path + " is not a " + expected_format + " document");
    return j;
}

void save_document(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

}  // namespace iob
