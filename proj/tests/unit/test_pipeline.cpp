#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "htp/common.hpp"
#include "htp/dataset.hpp"
#include "htp/planning_pipeline.hpp"
#include "htp/runner.hpp"

using namespace htp;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& rel) { return std::string(HTP_FIXTURE_DIR) + "/" + rel; }

fs::path scratch_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("htp_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write(const fs::path& p, const std::string& body) {
  std::ofstream(p) << body;
  return p.string();
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return Errc::EmptyInput;
}

HyperChain two_leaf_outline() {
  HyperTree t("[Plan]");
  t.attach_branch(t.root(), {"[first]", "[second]"}, "r1");
  return map_to_hyperchains(t).front();
}

std::shared_ptr<Backend> by_role(std::function<std::string(const BackendCall&)> solve,
                                 std::string plan = "[PLAN]\npick up the red block\n[PLAN END]") {
  return std::make_shared<CallbackBackend>([=](const BackendCall& c) {
    if (c.role == Role::RefineNode) return BackendReply{"Both parts.", {3, 1}};
    if (c.role == Role::SolveSubtask) return BackendReply{solve(c), {3, 1}};
    if (c.role == Role::GeneratePlan) return BackendReply{plan, {3, 1}};
    throw Error(Errc::TranscriptMiss, "unexpected role");
  });
}

}  // namespace

TEST(Dataset, LoadsBlocksworldFixture) {
  auto insts = load_dataset(fixture("bench/blocksworld.jsonl"), Benchmark::Blocksworld);
  ASSERT_EQ(insts.size(), 3u);
  EXPECT_EQ(insts[0].id, "tower");
  EXPECT_EQ(insts[0].goal, (std::vector<std::string>{"red on orange", "orange on blue"}));
}

TEST(Dataset, TravelKnowledgeResolvesAgainstDatasetFile) {
  auto insts = load_dataset(fixture("bench/travelplanner.jsonl"), Benchmark::TravelPlanner);
  ASSERT_EQ(insts.size(), 1u);
  EXPECT_EQ(fs::path(insts[0].knowledge), fs::path(fixture("bench/knowledge/manifest.json")));
  ASSERT_TRUE(insts[0].travel);
  EXPECT_EQ(insts[0].travel->people, 2);
}

TEST(Dataset, SchemaErrors) {
  auto dir = scratch_dir("dataset");
  auto bad = [&](const std::string& body, Benchmark b) {
    return code_of([&] { load_dataset(write(dir / "d.jsonl", body), b); });
  };
  EXPECT_EQ(bad("", Benchmark::Trip), Errc::EmptyInput);
  EXPECT_EQ(bad("\n\n", Benchmark::Trip), Errc::EmptyInput);
  EXPECT_EQ(bad("{\"query\": \"q\", \"gold\": \"**Day 3-1:** Visit Oslo for 3 days\"}\n", Benchmark::Trip),
            Errc::SchemaError);
  EXPECT_EQ(bad("{\"query\": \"q\"}\n", Benchmark::Blocksworld), Errc::SchemaError);
  EXPECT_EQ(bad("not json\n", Benchmark::Blocksworld), Errc::SchemaError);
  std::string row = "{\"id\": \"x\", \"query\": \"q\", \"init\": [\"a on table\", \"hand empty\"], \"goal\": []}\n";
  EXPECT_EQ(bad(row + row, Benchmark::Blocksworld), Errc::SchemaError);
  EXPECT_EQ(bad("{\"id\": \"a/b\", \"query\": \"q\", \"init\": [\"hand empty\"], \"goal\": []}\n", Benchmark::Blocksworld),
            Errc::SchemaError);
  try {
    load_dataset(write(dir / "d.jsonl", row + "{\"query\": 1}\n"), Benchmark::Blocksworld);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_EQ(code_of([&] { load_dataset((dir / "missing.jsonl").string(), Benchmark::Trip); }), Errc::IoFailure);
}

TEST(FinishedSolution, SubmitAndAchieved) {
  EXPECT_EQ(finished_solution({"x", "So I will submit: \"F1, from A to B\""}), "F1, from A to B");
  EXPECT_EQ(finished_solution({"I can pick up the red block.", "The subtask is achieved."}),
            "I can pick up the red block.\nThe subtask is achieved.");
  EXPECT_FALSE(finished_solution({"I can pick up the red block."}));
  EXPECT_FALSE(finished_solution({}));
  // Only the last step counts.
  EXPECT_FALSE(finished_solution({"I will submit: a", "still going"}));
}

TEST(SelfGuidedPlan, SolvesLeavesInOrderAndPassesEarlierSolutions) {
  std::vector<BackendCall> calls;
  ModelGateway gw(by_role([&](const BackendCall& c) {
    calls.push_back(c);
    return calls.size() == 1 ? "I will submit: \"A\"" : "The subtask is achieved.";
  }));
  auto out = self_guided_plan(two_leaf_outline(), "q", {}, gw);
  ASSERT_EQ(out.refinements.size(), 1u);
  ASSERT_EQ(out.solutions.size(), 2u);
  EXPECT_EQ(out.solutions[0].solution, "A");
  EXPECT_TRUE(out.solutions[0].submitted);
  EXPECT_FALSE(out.solutions[1].submitted);
  EXPECT_NE(calls[0].prompt.find("(1 of 2)"), std::string::npos);
  EXPECT_NE(calls[1].prompt.find("[first]: A"), std::string::npos);
  EXPECT_TRUE(out.failed().empty());
  EXPECT_EQ(out.usage.prompt_tokens, 9u);
}

TEST(SelfGuidedPlan, StepBudgetExceededMarksLeafAndContinues) {
  ModelGateway gw(by_role([](const BackendCall& c) {
    return c.prompt.find("(1 of 2)") != std::string::npos ? "Still thinking." : "The subtask is achieved.";
  }));
  PipelineParams p;
  p.step_budget = 3;
  auto out = self_guided_plan(two_leaf_outline(), "q", {}, gw, p);
  ASSERT_EQ(out.solutions.size(), 2u);
  EXPECT_TRUE(out.solutions[0].failed);
  EXPECT_EQ(out.solutions[0].failure, "StepBudgetExceeded");
  EXPECT_EQ(out.solutions[0].steps.size(), 3u);
  EXPECT_FALSE(out.solutions[1].failed);
  ASSERT_EQ(out.failed().size(), 1u);
}

TEST(SelfGuidedPlan, EmptyKnowledgeStillFillsSlot) {
  std::string prompt;
  ModelGateway gw(by_role([&](const BackendCall& c) {
    prompt = c.prompt;
    return "The subtask is achieved.";
  }));
  EXPECT_NO_THROW(self_guided_plan(two_leaf_outline(), "q", {}, gw));
  EXPECT_EQ(prompt.find("{{"), std::string::npos);
}

TEST(GeneratePlan, DeliveredAndUndelivered) {
  ModelGateway ok(by_role([](const BackendCall&) { return "The subtask is achieved."; }));
  auto outcome = self_guided_plan(two_leaf_outline(), "q", {}, ok);
  auto plan = generate_plan(outcome, "q", PlanFormat::BlocksPlan, ok);
  EXPECT_TRUE(plan.delivered);
  EXPECT_EQ(plan.text, "[PLAN]\npick up the red block\n[PLAN END]\n");

  ModelGateway bad(by_role([](const BackendCall&) { return "x"; }, "[PLAN]\nfly away\n"));
  plan = generate_plan(outcome, "q", PlanFormat::BlocksPlan, bad);
  EXPECT_FALSE(plan.delivered);
  EXPECT_FALSE(plan.error.empty());
  EXPECT_FALSE(plan.structured);
}

TEST(Runner, ExitCodes) {
  EXPECT_EQ(exit_code_for(Errc::ConfigError), 64);
  EXPECT_EQ(exit_code_for(Errc::SyntaxError), 64);
  EXPECT_EQ(exit_code_for(Errc::SchemaError), 65);
  EXPECT_EQ(exit_code_for(Errc::MalformedTrace), 65);
  EXPECT_EQ(exit_code_for(Errc::IoFailure), 66);
  EXPECT_EQ(exit_code_for(Errc::BackendUnavailable), 69);
  EXPECT_EQ(exit_code_for(Errc::TranscriptMiss), 69);
  EXPECT_EQ(exit_code_for(Errc::ParseFailure), 70);
}

TEST(Runner, BackendFailureFlushesPartialTrace) {
  auto dir = scratch_dir("partial");
  RunConfig cfg;
  auto lib = std::make_shared<const RuleLibrary>(load_library(std::string(HTP_DATA_DIR) + "/libraries/trip.htl"));
  auto down = std::make_shared<CallbackBackend>(
      [](const BackendCall&) -> BackendReply { throw Error(Errc::BackendUnavailable, "connection refused"); });
  try {
    run_instance(cfg, lib, "visit 2 cities", PlanFormat::TripPlan, {}, dir.string(), "", down);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BackendUnavailable);
  }
  ASSERT_TRUE(fs::exists(dir / "trace.json"));
  auto doc = nlohmann::json::parse(text::read_file((dir / "trace.json").string()));
  EXPECT_NE(doc.at("error").get<std::string>().find("BackendUnavailable"), std::string::npos);
  EXPECT_NO_THROW(inspect_trace((dir / "trace.json").string()));
}

TEST(Runner, BadBackendSpecs) {
  RunConfig cfg;
  cfg.backend = "replay:" + fixture("bench/nowhere");
  EXPECT_EQ(code_of([&] { make_backend(cfg, "x"); }), Errc::IoFailure);
  cfg.backend = "carrier-pigeon";
  EXPECT_EQ(code_of([&] { make_backend(cfg); }), Errc::ConfigError);
}

TEST(Runner, BenchReplayWritesReportsAndInspectableTraces) {
  auto dir = scratch_dir("bench");
  RunConfig cfg;
  cfg.library = std::string(HTP_DATA_DIR) + "/libraries/trip.htl";
  cfg.backend = "replay:" + fixture("bench/trip");
  cfg.out = dir.string();
  auto rep = run_bench(cfg, fixture("bench/trip.jsonl"), Benchmark::Trip);
  ASSERT_EQ(rep.instances.size(), 2u);
  EXPECT_EQ(rep.instances[0].id, "tallinn");
  EXPECT_TRUE(rep.instances[0].verdict.success());
  EXPECT_TRUE(rep.instances[1].delivered);
  EXPECT_FALSE(rep.instances[1].verdict.success());
  EXPECT_EQ(rep.metrics.success_rate, Rational::of(1, 2));
  for (const char* f : {"report.json", "report.txt", "timings.json"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  auto report = text::read_file((dir / "report.json").string());
  EXPECT_EQ(report.find(dir.string()), std::string::npos);
  EXPECT_EQ(report.find("wall"), std::string::npos);
  auto summary = inspect_trace((dir / "instances/tallinn/trace.json").string());
  EXPECT_NE(summary.find("[Berlin]"), std::string::npos);
}

TEST(Runner, BenchRecordsMissingTranscriptAsUndelivered) {
  auto dir = scratch_dir("bench_miss");
  RunConfig cfg;
  cfg.library = std::string(HTP_DATA_DIR) + "/libraries/trip.htl";
  cfg.backend = "replay:" + fixture("bench/blocksworld");  // no transcript for these ids
  cfg.out = dir.string();
  auto rep = run_bench(cfg, fixture("bench/trip.jsonl"), Benchmark::Trip);
  for (const auto& i : rep.instances) {
    EXPECT_FALSE(i.delivered);
    EXPECT_FALSE(i.error.empty());
  }
  EXPECT_EQ(rep.metrics.delivery_rate, Rational::of(0, 1));
}

TEST(Runner, InspectRejectsTruncatedTrace) {
  auto dir = scratch_dir("inspect");
  EXPECT_EQ(code_of([&] { inspect_trace(write(dir / "t.json", "{\"build\": {")); }), Errc::MalformedTrace);
  EXPECT_EQ(code_of([&] { inspect_trace((dir / "none.json").string()); }), Errc::IoFailure);
}
