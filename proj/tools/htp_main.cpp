#include <iostream>

#include "CLI11.hpp"
#include "htp/common.hpp"
#include "htp/runner.hpp"

using namespace htp;

namespace {

struct Flags {
  RunConfig cfg;
  std::optional<std::size_t> width;
  std::string pruning;
  std::string endpoint;
};

void add_run_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--library", f.cfg.library, "rule library file")->required();
  cmd->add_option("--backend", f.cfg.backend, "http, replay:<path> or record:<path>")->capture_default_str();
  cmd->add_option("--depth", f.cfg.params.depth_K, "iterations K")->capture_default_str();
  cmd->add_option("--width", f.width, "chains kept per iteration W (default 2)");
  cmd->add_option("--rule-sample", f.cfg.params.rule_sample_P, "rules tried per node P")->capture_default_str();
  cmd->add_option("--pruning", f.pruning, "width:n, prob:n or llm:n");
  cmd->add_flag("--adapt-definite", f.cfg.params.adapt_definite, "let the model adapt fixed rule bodies");
  cmd->add_flag("--rank-rules", f.cfg.params.model_ranked_rules, "let the model rank rules when more than P apply");
  cmd->add_option("--step-budget", f.cfg.pipeline.step_budget, "model steps per leaf")->capture_default_str();
  cmd->add_option("--knowledge", f.cfg.knowledge, "knowledge manifest");
  cmd->add_option("--out", f.cfg.out, "output directory")->capture_default_str();
  cmd->add_option("--templates", f.cfg.templates_dir, "directory of prompt template overrides");
  cmd->add_option("--model", f.cfg.gateway.model, "model name")->capture_default_str();
  cmd->add_option("--temperature", f.cfg.gateway.temperature, "sampling temperature")->capture_default_str();
  cmd->add_option("--retries", f.cfg.gateway.retry_limit, "re-prompts after an unusable reply")->capture_default_str();
  cmd->add_option("--endpoint", f.endpoint, "chat completion URL");
}

// --pruning carries the width; --width alone keeps the width strategy.
void finish(Flags& f) {
  if (!f.endpoint.empty()) f.cfg.http.endpoint = f.endpoint;
  if (!f.pruning.empty()) {
    auto spec = PruningSpec::parse(f.pruning);
    if (f.width && *f.width != spec.n)
      throw Error(Errc::ConfigError, "--width " + std::to_string(*f.width) + " disagrees with --pruning " + f.pruning);
    f.cfg.params.pruning = spec.kind;
    f.cfg.params.width_W = spec.n;
  } else if (f.width) {
    f.cfg.params.width_W = *f.width;
  }
  f.cfg.validate();
}

std::string read_query(const std::string& q) {
  if (!q.empty() && q[0] == '@') return text::trim(text::read_file(q.substr(1)));
  return q;
}

int cmd_plan(Flags& f, const std::string& query_arg, const std::string& format_name) {
  finish(f);
  std::string query = read_query(query_arg);
  if (text::trim(query).empty()) throw Error(Errc::ConfigError, "empty query");
  auto format = plan_format_from_string(format_name);
  KnowledgeBase kb = f.cfg.knowledge.empty() ? KnowledgeBase{} : KnowledgeBase::load(f.cfg.knowledge);
  auto library = std::make_shared<const RuleLibrary>(load_library(f.cfg.library));
  auto run = run_instance(f.cfg, library, query, format, kb, f.cfg.out);
  std::cout << render_outline(run.build->outline) << "\n";
  if (!run.plan->delivered) {
    std::cerr << "plan not delivered: " << run.plan->error << "\n";
    return 2;
  }
  std::cout << run.plan->text;
  for (const auto* leaf : run.outcome->failed())
    std::cerr << "subtask " << leaf->subtask << " failed: " << leaf->failure << "\n";
  return 0;
}

int cmd_bench(Flags& f, const std::string& dataset, const std::string& benchmark, std::size_t jobs,
              std::uint64_t seed) {
  f.cfg.jobs = jobs;
  f.cfg.seed = seed;
  finish(f);
  auto report = run_bench(f.cfg, dataset, benchmark_from_string(benchmark));
  std::cout << render_report(report);
  return 0;
}

int cmd_parse_lib(const std::string& path, bool json) {
  auto lib = load_library(path);
  if (json) {
    std::cout << lib.to_json().dump(2) << "\n";
  } else {
    std::cout << lib.render();
  }
  auto problems = lib.validate();
  for (const auto& p : problems) std::cerr << "warning: " << p << "\n";
  std::cerr << lib.rules.size() << " rules, " << lib.divisible_patterns.size() << " divisible, "
            << lib.leaf_patterns.size() << " leaf patterns\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypertree planning: outline construction, subtask planning and benchmark evaluation"};
  app.require_subcommand(1);

  Flags plan_flags;
  std::string query, format = "blocks";
  auto* plan = app.add_subcommand("plan", "plan one query");
  add_run_flags(plan, plan_flags);
  plan->add_option("--query", query, "query text, or @file")->required();
  plan->add_option("--format", format, "blocks, trip or travel")->capture_default_str();

  Flags bench_flags;
  std::string dataset, benchmark;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  auto* bench = app.add_subcommand("bench", "plan and evaluate a dataset");
  add_run_flags(bench, bench_flags);
  bench->add_option("--dataset", dataset, "JSONL dataset")->required();
  bench->add_option("--benchmark", benchmark, "blocksworld, mystery, trip or travelplanner")->required();
  bench->add_option("--jobs", jobs, "instances planned at once")->capture_default_str();
  bench->add_option("--seed", seed, "dispatch order seed")->capture_default_str();

  std::string trace;
  auto* inspect = app.add_subcommand("inspect", "summarize a trace.json");
  inspect->add_option("trace", trace, "trace file")->required();

  std::string lib_path;
  bool as_json = false;
  auto* parse_lib = app.add_subcommand("parse-lib", "parse and print a rule library");
  parse_lib->add_option("library", lib_path, "library file")->required();
  parse_lib->add_flag("--json", as_json, "print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 64;  // help exits 0
  }

  try {
    if (*plan) return cmd_plan(plan_flags, query, format);
    if (*bench) return cmd_bench(bench_flags, dataset, benchmark, jobs, seed);
    if (*inspect) {
      std::cout << inspect_trace(trace);
      return 0;
    }
    if (*parse_lib) return cmd_parse_lib(lib_path, as_json);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 70;
  }
  return 0;
}
