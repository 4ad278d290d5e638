#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <memory>
#include <random>
#include <set>

#include "htp/common.hpp"
#include "htp/hypertree.hpp"
#include "htp/rule_library.hpp"

using namespace htp;

namespace {

std::shared_ptr<const LibraryGrammar> grammar_for(const std::string& name) {
  auto lib = std::make_shared<const RuleLibrary>(load_library(std::string(HTP_DATA_DIR) + "/libraries/" + name + ".htl"));
  return std::make_shared<const LibraryGrammar>(lib);
}

std::string fixture(const std::string& rel) { return text::read_file(std::string(HTP_FIXTURE_DIR) + "/" + rel); }

// Brute force: every assignment of a branch index to every branched node,
// keeping only those whose choices at unreachable nodes are fixed at 0, then
// deduplicated by reachable selection.
std::set<std::vector<std::pair<std::uint32_t, std::size_t>>> brute_force_selections(const HyperTree& t) {
  std::vector<NodeId> branched;
  for (NodeId id : t.node_ids())
    if (t.branch_count(id) > 0) branched.push_back(id);
  std::set<std::vector<std::pair<std::uint32_t, std::size_t>>> out;
  std::vector<std::size_t> choice(branched.size(), 0);
  for (;;) {
    std::map<std::uint32_t, std::size_t> pick;
    for (std::size_t i = 0; i < branched.size(); ++i) pick[branched[i].value] = choice[i];
    std::vector<std::pair<std::uint32_t, std::size_t>> sel;
    std::vector<NodeId> stack{t.root()};
    while (!stack.empty()) {
      NodeId n = stack.back();
      stack.pop_back();
      if (t.branch_count(n) == 0) continue;
      std::size_t b = pick[n.value];
      sel.emplace_back(n.value, b);
      const HyperEdge& e = t.edges()[t.branches_of(n)[b]];
      for (NodeId c : e.children) stack.push_back(c);
    }
    std::sort(sel.begin(), sel.end());
    out.insert(sel);
    std::size_t k = 0;
    while (k < branched.size() && ++choice[k] == t.branch_count(branched[k])) choice[k++] = 0;
    if (k == branched.size()) break;
  }
  return out;
}

}  // namespace

TEST(NewTree, SingleRoot) {
  HyperTree t("plan a 3-day trip");
  EXPECT_EQ(t.size(), 1u);
  EXPECT_TRUE(t.edges().empty());
  EXPECT_EQ(t.node(t.root()).depth, 0u);
  EXPECT_EQ(t.node(t.root()).text, "plan a 3-day trip");
}

TEST(NewTree, EmptyQueryRejected) {
  try {
    HyperTree t("   ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyQuery);
  }
}

TEST(NewTree, FreeTextQueryIsDivisibleUnderTravelLibrary) {
  HyperTree t("Please help me plan a trip from St. Petersburg to Rockford spanning 3 days from March 16th to March 18th, 2022. "
              "The travel should be planned for a single person with a budget of $1,700.",
              grammar_for("travelplanner"));
  EXPECT_TRUE(t.node(t.root()).divisible);
}

TEST(AttachBranch, FourChildrenUnderPlan) {
  HyperTree t("[Plan]", grammar_for("travelplanner"));
  auto e = t.attach_branch(t.root(), {"[Transportation]", "[Accommodation]", "[Attraction]", "[Dining]"}, "r1");
  const HyperEdge& edge = t.edges()[e];
  EXPECT_EQ(edge.children.size(), 4u);
  EXPECT_EQ(edge.branch_index, 0u);
  for (NodeId c : edge.children) EXPECT_EQ(t.node(c).depth, 1u);
  auto e2 = t.attach_branch(t.root(), {"[Transportation]", "[Dining]"}, "r1");
  EXPECT_EQ(t.edges()[e2].branch_index, 1u);
}

TEST(AttachBranch, LeafParentRejected) {
  HyperTree t("[Plan]", grammar_for("travelplanner"));
  t.attach_branch(t.root(), {"[Transportation]", "[Accommodation]", "[Attraction]", "[Dining]"}, "r1");
  auto acc = t.edges()[0].children[1];
  auto e = t.attach_branch(acc, {"[Accommodation for Atlanta]"}, "r7");
  NodeId leaf_parent = t.edges()[e].children[0];
  auto e2 = t.attach_branch(leaf_parent, {"[house rule]"}, "r8");
  NodeId rule = t.edges()[e2].children[0];
  EXPECT_FALSE(t.node(rule).divisible);
  try {
    t.attach_branch(rule, {"[anything]"}, "");
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::ParentNotDivisible);
  }
}

TEST(AttachBranch, ErrorsForBadInput) {
  HyperTree t("root");
  EXPECT_THROW(t.attach_branch(NodeId{42}, {"x"}, ""), Error);
  try {
    t.attach_branch(t.root(), {}, "");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyBranch);
  }
  try {
    t.attach_branch(NodeId{42}, {"x"}, "");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownParent);
  }
}

TEST(AttachBranch, RuleMismatchUnderLibrary) {
  HyperTree t("[Plan]", grammar_for("travelplanner"));
  try {
    t.attach_branch(t.root(), {"[Breakfast]"}, "");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RuleMismatch);
  }
}

TEST(AttachBranch, DepthCapAndWidthCap) {
  HyperTree t("a", nullptr, TreeLimits{2, 3});
  auto e = t.attach_branch(t.root(), {"b"}, "");
  auto e2 = t.attach_branch(t.edges()[e].children[0], {"c"}, "");
  try {
    t.attach_branch(t.edges()[e2].children[0], {"d"}, "");
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::DepthLimitExceeded);
  }
  try {
    t.attach_branch(t.root(), {"w", "x", "y", "z"}, "");
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::BranchTooWide);
  }
}

TEST(AttachBranch, CycleDetectionMatchesAncestorWalkOracle) {
  std::mt19937 rng(7);
  const std::vector<std::string> words{"alpha", "Beta", "gamma", "  alpha ", "DELTA", "beta"};
  for (int round = 0; round < 200; ++round) {
    HyperTree t(words[rng() % words.size()]);
    std::vector<NodeId> nodes{t.root()};
    for (int step = 0; step < 8; ++step) {
      NodeId parent = nodes[rng() % nodes.size()];
      std::string child = words[rng() % words.size()];
      // Oracle: walk parent pointers by hand comparing folded text.
      auto fold = [](const std::string& s) { return text::normalize(s); };
      bool expect_cycle = false;
      for (std::optional<NodeId> cur = parent; cur; cur = t.parent_of(*cur))
        if (fold(t.node(*cur).text) == fold(child)) expect_cycle = true;
      bool got_cycle = false;
      try {
        auto e = t.attach_branch(parent, {child}, "");
        nodes.push_back(t.edges()[e].children[0]);
      } catch (const Error& err) {
        ASSERT_EQ(err.code(), Errc::CycleDetected);
        got_cycle = true;
      }
      ASSERT_EQ(got_cycle, expect_cycle);
    }
  }
}

TEST(MapToHyperchains, UnbranchedTreeIsItsOwnChain) {
  HyperTree t("a");
  auto e = t.attach_branch(t.root(), {"b", "c"}, "");
  t.attach_branch(t.edges()[e].children[0], {"d"}, "");
  auto chains = map_to_hyperchains(t);
  ASSERT_EQ(chains.size(), 1u);
  EXPECT_EQ(render_outline(chains[0]), render_outline(t));
}

TEST(MapToHyperchains, FourChainExample) {
  HyperTree t("root");
  auto b0 = t.attach_branch(t.root(), {"x", "y"}, "");
  t.attach_branch(t.root(), {"z"}, "");
  NodeId x = t.edges()[b0].children[0];
  t.attach_branch(x, {"x1"}, "");
  t.attach_branch(x, {"x2"}, "");
  t.attach_branch(x, {"x3"}, "");
  auto chains = map_to_hyperchains(t);
  ASSERT_EQ(chains.size(), 4u);
  EXPECT_EQ(chains.size(), brute_force_selections(t).size());
  std::set<std::vector<std::string>> leaf_sets;
  for (const auto& c : chains) {
    std::vector<std::string> names;
    for (const auto& n : leaves(c)) names.push_back(n.text);
    leaf_sets.insert(names);
  }
  EXPECT_EQ(leaf_sets.size(), 4u);
  EXPECT_TRUE(leaf_sets.count({"x1", "y"}));
  EXPECT_TRUE(leaf_sets.count({"x3", "y"}));
  EXPECT_TRUE(leaf_sets.count({"z"}));
  // Lexicographic order over selection vectors.
  for (std::size_t i = 1; i < chains.size(); ++i)
    EXPECT_LT(chains[i - 1].selection_vector(), chains[i].selection_vector());
}

TEST(MapToHyperchains, RandomTreesMatchBruteForce) {
  std::mt19937 rng(11);
  for (int round = 0; round < 100; ++round) {
    HyperTree t("r");
    std::vector<NodeId> nodes{t.root()};
    int branched = 0;
    for (int step = 0; step < 12; ++step) {
      NodeId p = nodes[rng() % nodes.size()];
      if (t.branch_count(p) >= 4) continue;
      if (t.branch_count(p) == 0 && branched >= 5) continue;
      if (t.branch_count(p) == 0) ++branched;
      std::size_t k = 1 + rng() % 3;
      std::vector<std::string> kids;
      for (std::size_t i = 0; i < k; ++i) kids.push_back("n" + std::to_string(step) + "_" + std::to_string(i));
      auto e = t.attach_branch(p, kids, "");
      for (NodeId c : t.edges()[e].children) nodes.push_back(c);
    }
    auto chains = map_to_hyperchains(t);
    auto oracle = brute_force_selections(t);
    ASSERT_EQ(chains.size(), oracle.size());
    for (const auto& c : chains) {
      ASSERT_TRUE(oracle.count(c.selection_vector()));
      for (NodeId id : c.tree.node_ids()) ASSERT_LE(c.tree.branch_count(id), 1u);
      auto again = extract_chain(t, c.selection);
      ASSERT_EQ(to_json(again), to_json(c));
    }
  }
}

TEST(MapToHyperchains, MonotoneUnderAttach) {
  std::mt19937 rng(3);
  HyperTree t("r");
  std::vector<NodeId> nodes{t.root()};
  std::size_t m = 1;
  for (int step = 0; step < 15; ++step) {
    NodeId p = nodes[rng() % nodes.size()];
    auto e = t.attach_branch(p, {"c" + std::to_string(step)}, "");
    nodes.push_back(t.edges()[e].children[0]);
    std::size_t now = map_to_hyperchains(t).size();
    EXPECT_GE(now, m);
    m = now;
  }
}

TEST(Leaves, SingleNode) {
  HyperTree t("only");
  auto l = leaves(t);
  ASSERT_EQ(l.size(), 1u);
  EXPECT_EQ(l[0].text, "only");
}

TEST(Leaves, BlocksworldOutline) {
  auto t = parse_outline(fixture("outlines/blocksworld.txt"), grammar_for("blocksworld"));
  EXPECT_EQ(map_to_hyperchains(t).size(), 1u);
  auto l = leaves(t);
  ASSERT_EQ(l.size(), 10u);
  for (const auto& n : l) EXPECT_TRUE(text::starts_with_icase(n.text, "[to get"));
  EXPECT_EQ(l.front().text, "[to get the blue block clear]");
  EXPECT_EQ(l.back().text, "[to get the red block on top of the orange block]");
}

TEST(Serialization, JsonRoundTripKeepsLeafOrder) {
  auto g = grammar_for("travelplanner");
  auto t = parse_outline(fixture("outlines/travelplanner.txt"), g);
  auto back = tree_from_json(to_json(t), g);
  EXPECT_EQ(to_json(back), to_json(t));
  auto a = leaves(t), b = leaves(back);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].text, b[i].text);
}

TEST(Serialization, OutlineRenderRoundTrip) {
  for (const char* name : {"travelplanner", "blocksworld", "mystery", "trip"}) {
    std::string src = fixture(std::string("outlines/") + name + ".txt");
    auto t = parse_outline(src);
    auto again = parse_outline(render_outline(t));
    EXPECT_EQ(render_outline(again), render_outline(t)) << name;
  }
}

TEST(Serialization, ChainJsonRoundTrip) {
  HyperTree t("root");
  t.attach_branch(t.root(), {"a"}, "");
  t.attach_branch(t.root(), {"b", "c"}, "");
  for (const auto& c : map_to_hyperchains(t)) {
    auto back = chain_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_EQ(back.selection, c.selection);
  }
}

TEST(Serialization, MalformedJsonRejected) {
  nlohmann::json doc = {{"root", 0}, {"nodes", nlohmann::json::array()}, {"edges", nlohmann::json::array()}};
  EXPECT_THROW(tree_from_json(doc), Error);
}

TEST(CheckGenerating, TravelPlannerOutlinePasses) {
  auto g = grammar_for("travelplanner");
  auto t = parse_outline(fixture("outlines/travelplanner.txt"), g);
  auto r = check_generating(t, *g);
  for (const auto& v : r.violations) ADD_FAILURE() << v.property << ": " << v.detail;
  EXPECT_TRUE(r.ok());
}

TEST(CheckGenerating, BlocksAndTripOutlinesPass) {
  for (const char* name : {"blocksworld", "trip"}) {
    auto g = grammar_for(name);
    auto t = parse_outline(fixture(std::string("outlines/") + name + ".txt"), g);
    auto r = check_generating(t, *g);
    for (const auto& v : r.violations) ADD_FAILURE() << name << " " << v.property << ": " << v.detail;
  }
}

TEST(CheckGenerating, MysteryOutlineSpellingFlagged) {
  // The worked outline writes "Crave" where the library leaf says "craves".
  auto g = grammar_for("mystery");
  auto t = parse_outline(fixture("outlines/mystery.txt"), g);
  auto r = check_generating(t, *g);
  EXPECT_FALSE(r.branches_licensed);
  EXPECT_TRUE(r.expanded_nodes_divisible);
  EXPECT_TRUE(r.leaves_well_formed);
}

TEST(CheckGenerating, ExpandedLeafReported) {
  auto g = grammar_for("travelplanner");
  auto t = parse_outline("[Plan]\n    [house rule]\n        [pets]\n", g);
  auto r = check_generating(t, *g);
  EXPECT_FALSE(r.expanded_nodes_divisible);
  EXPECT_TRUE(std::any_of(r.violations.begin(), r.violations.end(),
                          [](const GeneratingViolation& v) { return v.property == 2; }));
}

TEST(CheckGenerating, UnlicensedBranchReported) {
  auto g = grammar_for("travelplanner");
  auto t = parse_outline("[Plan]\n    [Transportation]\n    [Breakfast]\n", g);
  auto r = check_generating(t, *g);
  EXPECT_FALSE(r.branches_licensed);
  // Oracle: no rule head for [Plan] has a body atom matching "[Breakfast]".
  bool any = false;
  for (const auto& rule : g->library().rules)
    if (rule.head.match("[Plan]"))
      for (const auto& b : rule.body) any = any || b.match("[Breakfast]").has_value();
  EXPECT_FALSE(any);
}

TEST(CheckGenerating, ConstructedTreesAreSound) {
  auto g = grammar_for("blocksworld");
  HyperTree t("[Plan]", g);
  auto e = t.attach_branch(t.root(), {"[red block on the table]", "[blue block on top of red block]"}, "");
  t.attach_branch(t.edges()[e].children[0], {"[to get red block clear]", "[to get red block on the table]"}, "");
  t.attach_branch(t.edges()[e].children[1], {"[to get blue block clear]", "[to get hand empty]"}, "");
  EXPECT_TRUE(check_generating(t, *g).ok());
}
