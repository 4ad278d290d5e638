#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "htp/common.hpp"
#include "htp/dataset.hpp"
#include "htp/metrics.hpp"
#include "htp/model_gateway.hpp"
#include "htp/outline_builder.hpp"
#include "htp/planning_pipeline.hpp"
#include "htp/rule_library.hpp"

namespace htp {

struct RunConfig {
  std::string library;
  /// "http", "replay:<file or dir>" or "record:<file or dir>". A directory
  /// holds one transcript per instance, `<id>.jsonl`.
  std::string backend = "http";
  BuilderParams params;
  PipelineParams pipeline;
  std::string knowledge;  // manifest; instances may name their own
  std::string out = "out";
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  std::string templates_dir;
  GatewayConfig gateway;
  HttpConfig http;

  /// Throws ConfigError for a missing library, knowledge manifest or template
  /// directory, a malformed backend spec, or zero jobs.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Backend for one run. `instance_id` picks `<id>.jsonl` when the backend
/// reference is a directory. Throws ConfigError or IoFailure.
std::shared_ptr<Backend> make_backend(const RunConfig& cfg, const std::string& instance_id = "");

/// Exit status for an error code: 64 config, 65 data, 66 input files, 69
/// backend, 70 otherwise.
int exit_code_for(Errc code);

struct InstanceRun {
  std::optional<BuildResult> build;
  std::optional<PlanningOutcome> outcome;
  std::optional<FinalPlan> plan;
  Usage usage;
};

/// Outline, planning and plan generation for one query, writing outline.txt,
/// trace.json, plan.txt and plan.json into `dir`. On an error the trace
/// gathered so far is written before the error propagates. `backend`
/// replaces the one named by cfg.backend.
InstanceRun run_instance(const RunConfig& cfg, std::shared_ptr<const RuleLibrary> library, const std::string& query,
                         PlanFormat format, const KnowledgeBase& knowledge, const std::string& dir,
                         const std::string& instance_id = "", std::shared_ptr<Backend> backend = nullptr);

struct InstanceReport {
  std::string id;
  std::string dir;  // relative to the output directory
  bool delivered = false;
  PlanVerdict verdict;
  Usage usage;
  std::string error;  // error code name, empty on success
  std::string message;
  double wall_seconds = 0.0;
};

struct RunReport {
  Benchmark benchmark = Benchmark::Blocksworld;
  std::vector<InstanceReport> instances;  // dataset order
  MetricsReport metrics;
  Usage usage;
};

/// report.json carries no wall times; those go to timings.json.
nlohmann::json to_json(const RunReport& r, const RunConfig& cfg, const std::string& dataset_name);
std::string render_report(const RunReport& r);

/// Plans and evaluates every instance, then writes report.json, report.txt
/// and timings.json under cfg.out. Instance failures are recorded as
/// undelivered plans. Throws SchemaError or EmptyInput for a bad dataset.
RunReport run_bench(const RunConfig& cfg, const std::string& dataset_path, Benchmark benchmark);

/// Verdict of one delivered or undelivered plan under the benchmark's evaluator.
PlanVerdict evaluate_instance(const Instance& inst, const std::optional<FinalPlan>& plan, const KnowledgeBase& kb);

/// Per-iteration summary and the outline of a trace.json. Throws IoFailure or MalformedTrace.
std::string inspect_trace(const std::string& trace_path);

}  // namespace htp
