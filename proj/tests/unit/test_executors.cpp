#include <gtest/gtest.h>

#include <random>

#include "../support/blocks_oracle.hpp"
#include "htp/common.hpp"
#include "htp/executors.hpp"
#include "htp/plan_formats.hpp"

using namespace htp;

namespace {

std::string fixture(const std::string& rel) { return text::read_file(std::string(HTP_FIXTURE_DIR) + "/" + rel); }

BlocksState tower() {
  return blocks_state_from_atoms({"yellow on blue", "blue on red", "red on orange", "orange on table", "hand empty"});
}

MysteryState mystery_init() {
  return mystery_state_from_atoms(
      {"harmony", "a craves b", "b craves c", "c craves d", "planet d", "province a"});
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

}  // namespace

TEST(BlocksActions, ParseVariants) {
  EXPECT_EQ(parse_blocks_action("unstack the yellow block from on top of the blue block"),
            (BlocksAction{BlocksAction::Kind::Unstack, "yellow", "blue"}));
  EXPECT_EQ(parse_blocks_action("Stack the red block on top of the orange block."),
            (BlocksAction{BlocksAction::Kind::Stack, "red", "orange"}));
  EXPECT_EQ(parse_blocks_action("pick up a"), (BlocksAction{BlocksAction::Kind::PickUp, "a", ""}));
  EXPECT_EQ(parse_blocks_action("stack a on b"), (BlocksAction{BlocksAction::Kind::Stack, "a", "b"}));
  EXPECT_EQ(code_of([] { parse_blocks_action("throw the red block"); }), Errc::UnknownAction);
  for (auto a : {"pick up the red block", "put down the red block", "stack the red block on top of the blue block",
                 "unstack the red block from on top of the blue block"})
    EXPECT_EQ(render(parse_blocks_action(a)), a);
}

TEST(BlocksExecutor, PaperPlanReachesGoal) {
  auto plan = parse_blocks_plan(fixture("plans/blocksworld.txt"));
  ASSERT_EQ(plan.actions.size(), 10u);
  auto run = execute_blocks_plan(tower(), plan.actions);
  EXPECT_EQ(run.states.size(), 11u);
  EXPECT_TRUE(check_goal(run.final_state(), {"blue on table", "orange on blue", "red on orange"}));
  EXPECT_TRUE(check_goal(run.final_state(), {"yellow on table", "hand empty"}));
  EXPECT_FALSE(check_goal(run.final_state(), {"yellow on red"}));
  EXPECT_TRUE(check_goal(run.final_state(), {}));
}

TEST(BlocksExecutor, EveryTraceStateMatches) {
  auto steps = parse_blocks_trace(fixture("traces/blocksworld.txt"));
  ASSERT_EQ(steps.size(), 10u);
  for (const auto& s : steps) EXPECT_TRUE(s.observed.has_value()) << s.action;
  auto problems = compare_blocks_trace(tower(), steps);
  EXPECT_TRUE(problems.empty()) << problems.front();
  // The trace's actions are the plan's actions.
  auto plan = parse_blocks_plan(fixture("plans/blocksworld.txt"));
  for (std::size_t i = 0; i < steps.size(); ++i)
    EXPECT_EQ(parse_blocks_action(steps[i].action), parse_blocks_action(plan.actions[i]));
}

TEST(BlocksExecutor, TraceComparisonCatchesWrongState) {
  auto steps = parse_blocks_trace(fixture("traces/blocksworld.txt"));
  steps[3].observed->state.on["yellow"] = "red";
  EXPECT_FALSE(compare_blocks_trace(tower(), steps).empty());
}

TEST(BlocksExecutor, EmptyPlanKeepsInit) {
  auto run = execute_blocks_plan(tower(), {});
  EXPECT_EQ(run.final_state(), tower());
}

TEST(BlocksExecutor, PreconditionErrorsNameTheStep) {
  try {
    execute_blocks_plan(tower(), {"unstack the yellow block from on top of the blue block", "pick up the red block"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PreconditionViolated);
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_EQ(code_of([] { execute_blocks_plan(tower(), {"pick up the green block"}); }), Errc::UnknownBlock);
  EXPECT_EQ(code_of([] { execute_blocks_plan(tower(), {"juggle the red block"}); }), Errc::UnknownAction);
  EXPECT_EQ(code_of([] { execute_blocks_plan(tower(), {"put down the red block"}); }), Errc::PreconditionViolated);
  EXPECT_EQ(code_of([] { execute_blocks_plan(tower(), {"pick up the orange block"}); }), Errc::PreconditionViolated);
}

TEST(BlocksExecutor, TwoBlockSwapIsOptimal) {
  auto init = blocks_state_from_atoms({"a on b", "b on table"});
  std::vector<std::string> plan{"unstack a from on top of b", "put down a", "pick up b", "stack b on a"};
  auto run = execute_blocks_plan(init, plan);
  EXPECT_TRUE(check_goal(run.final_state(), {"b on a"}));
  oracle::S o_init{{{"a", "b"}, {"b", "table"}}, ""};
  oracle::S o_goal{{{"b", "a"}, {"a", "table"}}, ""};
  auto best = oracle::bfs(o_init, o_goal, {"a", "b"});
  ASSERT_TRUE(best);
  EXPECT_EQ(best->size(), plan.size());
}

TEST(BlocksExecutor, AgreesWithOracleOnRandomWalks) {
  std::mt19937 rng(7);
  std::vector<std::string> names{"a", "b", "c", "d"};
  auto states = oracle::all_states(names, false);
  for (int round = 0; round < 300; ++round) {
    oracle::S o = states[rng() % states.size()];
    BlocksState s;
    s.on = o.below;
    if (!o.held.empty()) s.holding = o.held;
    for (int k = 0; k < 6; ++k) {
      auto succ = oracle::successors(o, names);
      auto& [action, next] = succ[rng() % succ.size()];
      s = apply(s, parse_blocks_action(action));
      o = next;
      EXPECT_EQ(s.on, o.below) << action;
      EXPECT_EQ(s.holding.value_or(""), o.held);
      EXPECT_EQ(s.blocks().size(), 4u);
      validate(s);
    }
  }
}

TEST(BlocksAtoms, Vocabulary) {
  EXPECT_EQ(parse_blocks_atom("the blue block is on the table").kind, BlocksAtom::Kind::OnTable);
  EXPECT_EQ(parse_blocks_atom("Orange block on top of Blue block").y, "blue");
  EXPECT_EQ(parse_blocks_atom("the red block is clear").kind, BlocksAtom::Kind::Clear);
  EXPECT_FALSE(parse_blocks_atom("not red on blue").value);
  EXPECT_EQ(code_of([] { parse_blocks_atom("red is happy"); }), Errc::UnknownAtom);
  EXPECT_EQ(code_of([] { check_goal(tower(), {"green on table"}); }), Errc::UnknownAtom);
  EXPECT_EQ(code_of([] { blocks_state_from_atoms({"a on b"}); }), Errc::SchemaError);
  EXPECT_EQ(code_of([] { blocks_state_from_atoms({"a on b", "b on a"}); }), Errc::SchemaError);
}

TEST(BlocksTrace, StateLineWithoutVerb) {
  auto obs = parse_blocks_state_line(
      "The current state is: the blue block on the table and clear, the red block is in my hand and not clear.");
  EXPECT_EQ(obs.state.on.at("blue"), "table");
  EXPECT_EQ(obs.state.holding, "red");
  EXPECT_TRUE(obs.clear.at("blue"));
  EXPECT_EQ(code_of([] { parse_blocks_state_line("The current state is: the blue block is floating"); }),
            Errc::FormatError);
}

TEST(MysteryExecutor, PaperPlanAndTrace) {
  auto plan = parse_blocks_plan(fixture("plans/mystery.txt"));
  ASSERT_EQ(plan.actions.size(), 10u);
  auto run = execute_mystery_plan(mystery_init(), plan.actions);
  EXPECT_TRUE(check_goal(run.final_state(), {"planet b", "d craves b", "c craves d"}));

  auto steps = parse_mystery_trace(fixture("traces/mystery.txt"));
  ASSERT_EQ(steps.size(), 10u);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    EXPECT_EQ(parse_mystery_action(steps[i].action), parse_mystery_action(plan.actions[i]));
    EXPECT_FALSE(steps[i].effects.empty()) << i;
    EXPECT_FALSE(steps[i].before.empty()) << i;
  }
  auto problems = compare_mystery_trace(mystery_init(), steps);
  EXPECT_TRUE(problems.empty()) << problems.front();
}

TEST(MysteryExecutor, FirstFeastMatchesTraceExactly) {
  auto s1 = apply(mystery_init(), parse_mystery_action("feast object a from object b"));
  MysteryState want = mystery_state_from_atoms({"b craves c", "c craves d", "planet d", "province b", "pain a"});
  EXPECT_EQ(s1, want);
  bool changes = false;
  auto facts = parse_mystery_facts("Province object a, object a Craves object b becomes False", &changes);
  EXPECT_TRUE(changes);
  ASSERT_EQ(facts.size(), 2u);
  for (const auto& f : facts) EXPECT_TRUE(holds(s1, f));
}

TEST(MysteryExecutor, Guards) {
  EXPECT_EQ(code_of([] { apply(mystery_init(), parse_mystery_action("succumb object a")); }), Errc::PreconditionViolated);
  EXPECT_EQ(code_of([] { parse_mystery_action("befriend object a"); }), Errc::UnknownAction);
  EXPECT_EQ(code_of([] { parse_mystery_atom("object a loves object b"); }), Errc::UnknownAtom);
  auto run = execute_mystery_plan(mystery_init(), {});
  EXPECT_EQ(run.final_state(), mystery_init());
}

TEST(MysteryExecutor, TraceComparisonCatchesWrongEffect) {
  auto steps = parse_mystery_trace(fixture("traces/mystery.txt"));
  steps[0].effects.pop_back();
  EXPECT_FALSE(compare_mystery_trace(mystery_init(), steps).empty());
}

TEST(MysteryExecutor, ObjectCountConserved) {
  auto plan = parse_blocks_plan(fixture("plans/mystery.txt"));
  auto run = execute_mystery_plan(mystery_init(), plan.actions);
  for (const auto& s : run.states) EXPECT_LE(s.objects().size(), 4u);
}
