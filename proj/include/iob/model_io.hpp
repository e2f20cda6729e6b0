#pragma once

#include <json.hpp>
#include <memory>
#include <string>

#include "iob/model.hpp"
#include "iob/oracle.hpp"
#include "iob/plan_time_dp.hpp"
#include "iob/report.hpp"
#include "iob/subproblem.hpp"

namespace iob {

// Insertion-ordered JSON keeps document output byte-stable across runs.
using Json = nlohmann::ordered_json;

Json model_to_json(const FactoredDecPomdp& m);
FactoredDecPomdp model_from_json(const Json& j);

struct LoadedSubproblem {
    std::shared_ptr<const FactoredDecPomdp> model;
    SubProblem sp;
};

/// Sub-problem documents embed the model and reference subsets by id;
/// loading re-runs extraction, so structural violations surface here.
Json subproblem_to_json(const SubProblem& sp);
LoadedSubproblem subproblem_from_json(const Json& j);

Json partition_to_json(const Partition& part, ClosureRule rule);
Partition partition_from_json(const Json& j);

Json policy_to_json(const JointPolicy& pi);
JointPolicy policy_from_json(const Json& j);

Json report_to_json(const BoundReport& report, bool include_timings);
BoundReport report_from_json(const Json& j);

Json violations_to_json(const std::vector<Violation>& violations);

/// Parses a document file and checks its "format" tag.
Json load_document(const std::string& path, const std::string& expected_format);
void save_document(const std::string& path, const Json& j);

}  // namespace iob
