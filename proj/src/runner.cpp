#include "htp/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "htp/common.hpp"
#include "htp/evaluators.hpp"
#include "htp/executors.hpp"

namespace fs = std::filesystem;

namespace htp {

namespace {

std::pair<std::string, std::string> split_backend(const std::string& spec) {
  auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, ""};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

std::string per_instance(const std::string& ref, const std::string& id) {
  if (!id.empty() && fs::is_directory(ref)) return (fs::path(ref) / (id + ".jsonl")).string();
  return ref;
}

nlohmann::json usage_json(const Usage& u) {
  return {{"prompt_tokens", u.prompt_tokens}, {"completion_tokens", u.completion_tokens}};
}

void write_trace(const std::string& dir, const BuildTrace* build, const PlanningOutcome* outcome,
                 const FinalPlan* plan, const std::string& error, const Usage& usage) {
  nlohmann::json doc{{"build", build ? to_json(*build) : nlohmann::json(nullptr)},
                     {"pipeline", outcome ? to_json(*outcome) : nlohmann::json(nullptr)},
                     {"plan", plan ? to_json(*plan) : nlohmann::json(nullptr)},
                     {"error", error},
                     {"usage", usage_json(usage)}};
  text::write_file((fs::path(dir) / "trace.json").string(), doc.dump(2) + "\n");
}

}  // namespace

void RunConfig::validate() const {
  if (library.empty()) throw Error(Errc::ConfigError, "no rule library given");
  if (!fs::is_regular_file(library)) throw Error(Errc::ConfigError, "rule library not found: " + library);
  if (!knowledge.empty() && !fs::is_regular_file(knowledge))
    throw Error(Errc::ConfigError, "knowledge manifest not found: " + knowledge);
  if (!templates_dir.empty() && !fs::is_directory(templates_dir))
    throw Error(Errc::ConfigError, "template directory not found: " + templates_dir);
  if (jobs < 1) throw Error(Errc::ConfigError, "jobs must be >= 1");
  auto [kind, ref] = split_backend(backend);
  if (kind == "replay" || kind == "record") {
    if (ref.empty()) throw Error(Errc::ConfigError, "backend " + kind + " needs a transcript path");
    if (kind == "replay" && !fs::exists(ref)) throw Error(Errc::ConfigError, "transcript not found: " + ref);
  } else if (kind != "http") {
    throw Error(Errc::ConfigError, "unknown backend '" + backend + "' (http, replay:<path>, record:<path>)");
  }
  if (gateway.temperature < 0.0 || gateway.temperature > 2.0)
    throw Error(Errc::ConfigError, "temperature must be in [0, 2]");
  if (gateway.retry_limit < 0) throw Error(Errc::ConfigError, "retry limit must be >= 0");
  params.validate();
}

nlohmann::json RunConfig::to_json() const {
  return {{"library", fs::path(library).filename().string()},
          {"backend", split_backend(backend).first},
          {"params", params.to_json()},
          {"step_budget", pipeline.step_budget},
          {"model", gateway.model},
          {"temperature", gateway.temperature},
          {"retry_limit", gateway.retry_limit},
          {"seed", seed}};
}

std::shared_ptr<Backend> make_backend(const RunConfig& cfg, const std::string& instance_id) {
  auto [kind, ref] = split_backend(cfg.backend);
  if (kind == "replay") return ReplayBackend::from_file(per_instance(ref, instance_id));
  auto http = std::make_shared<HttpChatBackend>(cfg.http);
  if (kind == "http") return http;
  if (kind == "record") {
    std::string path = ref;
    if (!instance_id.empty() && (fs::is_directory(ref) || ref.back() == '/')) {
      fs::create_directories(ref);
      path = (fs::path(ref) / (instance_id + ".jsonl")).string();
    }
    return std::make_shared<RecordingBackend>(http, path);
  }
  throw Error(Errc::ConfigError, "unknown backend '" + cfg.backend + "'");
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ConfigError:
    case Errc::UnknownTemplate:
    case Errc::MissingSlot:
    case Errc::SyntaxError:
    case Errc::MissingSection:
    case Errc::EmptyQuery:
      return 64;
    case Errc::SchemaError:
    case Errc::EmptyInput:
    case Errc::MalformedTrace:
      return 65;
    case Errc::IoFailure:
      return 66;
    case Errc::BackendUnavailable:
    case Errc::TranscriptMiss:
      return 69;
    default:
      return 70;
  }
}

InstanceRun run_instance(const RunConfig& cfg, std::shared_ptr<const RuleLibrary> library, const std::string& query,
                         PlanFormat format, const KnowledgeBase& knowledge, const std::string& dir,
                         const std::string& instance_id, std::shared_ptr<Backend> backend) {
  fs::create_directories(dir);
  auto templates = cfg.templates_dir.empty() ? TemplateStore::builtin() : TemplateStore::with_overrides(cfg.templates_dir);
  ModelGateway gateway(backend ? backend : make_backend(cfg, instance_id), std::move(templates), cfg.gateway);
  OutlineBuilder builder(std::move(library), gateway, cfg.params);
  InstanceRun run;
  try {
    run.build = builder.build(query);
    text::write_file((fs::path(dir) / "outline.txt").string(), render_outline(run.build->outline));
    run.outcome = self_guided_plan(run.build->outline, query, knowledge, gateway, cfg.pipeline);
    run.plan = generate_plan(*run.outcome, query, format, gateway);
  } catch (const Error& e) {
    run.usage = gateway.total_usage();
    const BuildTrace& partial = run.build ? run.build->trace : builder.trace();
    write_trace(dir, &partial, run.outcome ? &*run.outcome : nullptr, nullptr,
                e.what(), run.usage);
    throw;
  }
  run.usage = gateway.total_usage();
  write_trace(dir, &run.build->trace, &*run.outcome, &*run.plan, "", run.usage);
  text::write_file((fs::path(dir) / "plan.txt").string(), run.plan->delivered ? run.plan->text : "");
  text::write_file((fs::path(dir) / "plan.json").string(), to_json(*run.plan).dump(2) + "\n");
  return run;
}

PlanVerdict evaluate_instance(const Instance& inst, const std::optional<FinalPlan>& plan, const KnowledgeBase& kb) {
  const bool ok = plan && plan->delivered && plan->structured;
  switch (inst.benchmark) {
    case Benchmark::Blocksworld: {
      std::optional<BlocksPlan> p;
      if (ok) p = std::get<BlocksPlan>(*plan->structured);
      return evaluate_blocks(inst.id, p, blocks_state_from_atoms(inst.init), inst.goal);
    }
    case Benchmark::Mystery: {
      std::optional<BlocksPlan> p;
      if (ok) p = std::get<BlocksPlan>(*plan->structured);
      return evaluate_mystery(inst.id, p, mystery_state_from_atoms(inst.init), inst.goal);
    }
    case Benchmark::Trip: {
      std::optional<TripItinerary> p;
      if (ok) p = std::get<TripItinerary>(*plan->structured);
      return evaluate_trip(inst.id, p, *inst.gold);
    }
    case Benchmark::TravelPlanner: {
      std::optional<TravelPlan> p;
      if (ok) p = std::get<TravelPlan>(*plan->structured);
      static const auto constraints = builtin_travel_constraints();
      return evaluate_travel(inst.id, p, *inst.travel, kb, constraints);
    }
  }
  throw Error(Errc::ConfigError, "unknown benchmark");
}

RunReport run_bench(const RunConfig& cfg, const std::string& dataset_path, Benchmark benchmark) {
  cfg.validate();
  auto instances = load_dataset(dataset_path, benchmark);
  auto library = std::make_shared<const RuleLibrary>(load_library(cfg.library));

  std::map<std::string, KnowledgeBase> bases;
  const KnowledgeBase empty_kb;
  auto manifest_of = [&](const Instance& inst) { return inst.knowledge.empty() ? cfg.knowledge : inst.knowledge; };
  for (const auto& inst : instances) {
    std::string m = manifest_of(inst);
    if (!m.empty() && !bases.count(m)) bases.emplace(m, KnowledgeBase::load(m));
  }

  RunReport report;
  report.benchmark = benchmark;
  report.instances.resize(instances.size());

  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t slot = next++; slot < order.size(); slot = next++) {
      const std::size_t i = order[slot];
      const Instance& inst = instances[i];
      const std::string m = manifest_of(inst);
      const KnowledgeBase& kb = m.empty() ? empty_kb : bases.at(m);
      InstanceReport& r = report.instances[i];
      r.id = inst.id;
      r.dir = "instances/" + inst.id;
      const auto started = std::chrono::steady_clock::now();
      std::optional<FinalPlan> plan;
      try {
        auto run = run_instance(cfg, library, inst.query, format_for(benchmark), kb,
                                (fs::path(cfg.out) / r.dir).string(), inst.id);
        plan = run.plan;
        r.usage = run.usage;
        if (plan && !plan->delivered) {
          r.error = "Undelivered";
          r.message = plan->error;
        }
      } catch (const Error& e) {
        r.error = std::string(to_string(e.code()));
        r.message = e.what();
      } catch (const std::exception& e) {
        r.error = "Internal";
        r.message = e.what();
      }
      r.delivered = plan && plan->delivered;
      r.verdict = evaluate_instance(inst, plan, kb);
      r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n = std::min(cfg.jobs, instances.size());
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<PlanVerdict> verdicts;
  for (const auto& r : report.instances) {
    verdicts.push_back(r.verdict);
    report.usage += r.usage;
  }
  report.metrics = aggregate_metrics(verdicts);

  fs::create_directories(cfg.out);
  const std::string name = fs::path(dataset_path).filename().string();
  text::write_file((fs::path(cfg.out) / "report.json").string(), to_json(report, cfg, name).dump(2) + "\n");
  text::write_file((fs::path(cfg.out) / "report.txt").string(), render_report(report));
  nlohmann::json timings = nlohmann::json::object();
  for (const auto& r : report.instances) timings[r.id] = r.wall_seconds;
  text::write_file((fs::path(cfg.out) / "timings.json").string(), timings.dump(2) + "\n");
  return report;
}

nlohmann::json to_json(const RunReport& r, const RunConfig& cfg, const std::string& dataset_name) {
  nlohmann::json instances = nlohmann::json::array();
  for (const auto& i : r.instances) {
    instances.push_back({{"id", i.id},
                         {"outline", i.dir + "/outline.txt"},
                         {"trace", i.dir + "/trace.json"},
                         {"plan", i.delivered ? nlohmann::json(i.dir + "/plan.txt") : nlohmann::json(nullptr)},
                         {"delivered", i.delivered},
                         {"success", i.verdict.success()},
                         {"verdict", to_json(i.verdict)},
                         {"usage", usage_json(i.usage)},
                         {"error", i.error},
                         {"message", i.message}});
  }
  return {{"benchmark", to_string(r.benchmark)},
          {"dataset", dataset_name},
          {"config", cfg.to_json()},
          {"instances", instances},
          {"metrics", to_json(r.metrics)},
          {"usage", usage_json(r.usage)}};
}

std::string render_report(const RunReport& r) {
  std::string out = "benchmark " + std::string(to_string(r.benchmark)) + "\n\n" + render_table(r.metrics) + "\n";
  for (const auto& i : r.instances) {
    out += i.id + "  " + (i.verdict.success() ? "success" : i.delivered ? "failed" : "undelivered");
    if (!i.error.empty()) out += "  " + i.error;
    out += "\n";
  }
  out += "\ntokens in " + std::to_string(r.usage.prompt_tokens) + ", out " + std::to_string(r.usage.completion_tokens) +
         "\n";
  return out;
}

std::string inspect_trace(const std::string& trace_path) {
  std::string src = text::read_file(trace_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(src);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedTrace, trace_path + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("build")) {
    if (doc["build"].is_null()) throw Error(Errc::MalformedTrace, trace_path + " holds no build trace");
    doc = doc["build"];
  }
  BuildTrace t = trace_from_json(doc);

  std::string out = "query: " + t.query + "\n";
  out += "root: " + t.root_text + (t.no_divisible_root ? " (not divisible)" : "") + "\n\n";
  char line[512];
  std::snprintf(line, sizeof line, "%-5s %-7s %-12s %-40s %s\n", "iter", "chains", "kept", "selected", "attached");
  out += line;
  for (const auto& it : t.iterations) {
    std::string kept;
    for (auto k : it.kept) kept += (kept.empty() ? "" : ",") + std::to_string(k);
    if (it.visits.empty()) {
      std::snprintf(line, sizeof line, "%-5zu %-7zu %-12s %-40s %s\n", it.iteration, it.chains, kept.c_str(), "-", "-");
      out += line;
    }
    for (std::size_t v = 0; v < it.visits.size(); ++v) {
      const auto& visit = it.visits[v];
      std::string attached;
      for (auto a : visit.attachments)
        attached += (attached.empty() ? "" : " ") + t.attachments.at(a).rule_id + "(" +
                    std::to_string(t.attachments.at(a).children.size()) + ")";
      std::string sel = visit.selected_text.empty() ? "-" : visit.selected_text;
      if (visit.select_fallback) sel += " *";
      std::snprintf(line, sizeof line, "%-5s %-7s %-12s %-40s %s\n", v == 0 ? std::to_string(it.iteration).c_str() : "",
                    v == 0 ? std::to_string(it.chains).c_str() : "", v == 0 ? kept.c_str() : "", sel.c_str(),
                    attached.empty() ? "-" : attached.c_str());
      out += line;
    }
  }
  if (t.decision)
    out += "\ndecision: chain " + std::to_string(t.decision->chosen) + " of " + std::to_string(t.decision->chains) +
           (t.decision->fallback ? " (fallback)" : "") + "\n";
  if (!t.error.empty()) out += "error: " + t.error + "\n";
  for (const auto& w : t.warnings) out += "warning: " + w + "\n";
  if (!t.outline.is_null()) {
    try {
      out += "\n" + render_outline(chain_from_json(t.outline));
    } catch (const Error& e) {
      throw Error(Errc::MalformedTrace, std::string("outline: ") + e.what());
    }
  } else if (!t.tree.is_null()) {
    out += "\n(partial tree)\n" + render_outline(tree_from_json(t.tree));
  }
  return out;
}

}  // namespace htp
