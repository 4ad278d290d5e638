#include <gtest/gtest.h>

#include <cctype>
#include <string>

#include "htp/common.hpp"
#include "htp/rule_library.hpp"

using namespace htp;

namespace {

RuleLibrary lib(const std::string& name) {
  return load_library(std::string(HTP_DATA_DIR) + "/libraries/" + name + ".htl");
}

const std::vector<std::string> kLibraries{"travelplanner", "blocksworld", "mystery", "trip"};

// Independent matcher: walks pattern characters against text, trying every
// split for a "{{...}}" placeholder, no shortest-first preference.
bool walk(const std::string& p, std::size_t i, const std::string& t, std::size_t j) {
  if (i == p.size()) return j == t.size();
  if (p.compare(i, 2, "{{") == 0) {
    std::size_t close = p.find("}}", i);
    for (std::size_t k = j + 1; k <= t.size(); ++k)
      if (walk(p, close + 2, t, k)) return true;
    return false;
  }
  if (j == t.size()) return false;
  if (std::tolower(static_cast<unsigned char>(p[i])) != std::tolower(static_cast<unsigned char>(t[j]))) return false;
  return walk(p, i + 1, t, j + 1);
}

Error parse_error(const std::string& src) {
  try {
    parse_library(src);
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected an error for: " << src;
  return Error(Errc::IoFailure, "none");
}

}  // namespace

TEST(ParseLibrary, TravelPlanner) {
  auto l = lib("travelplanner");
  EXPECT_GE(l.rules.size(), 9u);
  EXPECT_EQ(l.rules.size(), 11u);
  // Eight literal entries plus three described by a concrete example.
  EXPECT_EQ(l.divisible_patterns.size(), 11u);
  bool house_rule = false;
  for (const auto& p : l.leaf_patterns) house_rule = house_rule || p.raw() == "[house rule]";
  EXPECT_TRUE(house_rule);
  EXPECT_EQ(l.rules[0].head.raw(), "[Plan]");
  EXPECT_EQ(l.rules[0].body.size(), 4u);
  EXPECT_EQ(l.rules[0].label, "1");
  EXPECT_EQ(l.rules[0].comment, "The plan can be divided into four aspects.");
  // Prose bodies resolve to the matching entry's concrete form.
  ASSERT_EQ(l.rules[1].body.size(), 1u);
  EXPECT_TRUE(l.rules[1].indefinite);
  EXPECT_EQ(l.rules[1].body[0].raw(), "[transportation from A to B]");
}

TEST(ParseLibrary, Minimal) {
  auto l = parse_library("Rules:\n[A] -> [B][C]\nDivisible Nodes:\n[A]");
  EXPECT_EQ(l.rules.size(), 1u);
  EXPECT_EQ(l.divisible_patterns.size(), 1u);
  EXPECT_EQ(l.rules[0].body.size(), 2u);
  EXPECT_FALSE(l.rules[0].indefinite);
}

TEST(ParseLibrary, Errors) {
  auto e = parse_error("Rules:\n[A] -> \n");
  EXPECT_EQ(e.code(), Errc::SyntaxError);
  EXPECT_EQ(e.line(), std::optional<std::size_t>(2));
  EXPECT_EQ(parse_error("Rules:\n[A] [B]\n").code(), Errc::SyntaxError);
  EXPECT_EQ(parse_error("Rules:\n -> [B]\n").code(), Errc::SyntaxError);
  EXPECT_EQ(parse_error("Rules:\n[A -> [B]\n").code(), Errc::SyntaxError);
  EXPECT_EQ(parse_error("Rules:\n[A] -> {{[B][C]\n").code(), Errc::SyntaxError);
  EXPECT_EQ(parse_error("Rules:\n[A] -> [{{B]\n").code(), Errc::SyntaxError);
  EXPECT_EQ(parse_error("Divisible Nodes:\n[A]\n").code(), Errc::MissingSection);
  EXPECT_EQ(parse_error("[A] -> [B]\nRules:\n").code(), Errc::SyntaxError);
}

TEST(ParseLibrary, AllShippedLibrariesRoundTrip) {
  for (const auto& name : kLibraries) {
    auto l = lib(name);
    auto again = parse_library(l.render());
    EXPECT_EQ(again, l) << name;
    EXPECT_EQ(again.to_json(), l.to_json()) << name;
  }
}

TEST(ParseLibrary, ShippedLibrariesAreWellFormed) {
  for (const auto& name : kLibraries) {
    auto l = lib(name);
    for (const auto& p : l.validate()) ADD_FAILURE() << name << ": " << p;
    for (const auto& r : l.rules) EXPECT_TRUE(l.is_divisible(r.head.raw())) << name << " " << r.head.raw();
  }
}

TEST(ParseLibrary, IndefiniteBodies) {
  auto b = lib("blocksworld");
  ASSERT_EQ(b.rules.size(), 3u);
  for (const auto& r : b.rules) EXPECT_TRUE(r.indefinite);
  EXPECT_EQ(b.rules[0].body.size(), 4u);
  auto t = lib("trip");
  ASSERT_EQ(t.rules.size(), 4u);
  EXPECT_FALSE(t.rules[0].indefinite);
  EXPECT_TRUE(t.rules[1].indefinite);
  EXPECT_FALSE(t.rules[3].indefinite);
  EXPECT_EQ(t.divisible_patterns.size(), 4u);
}

TEST(Match, PlaceholderBinding) {
  auto p = NodePattern::parse("[{{Block}} on the table]");
  auto b = p.match("[Blue block on the table]");
  ASSERT_TRUE(b);
  ASSERT_EQ(b->size(), 1u);
  EXPECT_EQ((*b)[0].first, "Block");
  EXPECT_EQ((*b)[0].second, "Blue block");
}

TEST(Match, ExactLiteral) {
  auto b = NodePattern::parse("[Plan]").match("[Plan]");
  ASSERT_TRUE(b);
  EXPECT_TRUE(b->empty());
  EXPECT_TRUE(NodePattern::parse("[Plan]").match("[  plan ]"));
  EXPECT_FALSE(NodePattern::parse("[Plan]").match("[Plans]"));
}

TEST(Match, Mismatch) {
  auto p = NodePattern::parse("[Accommodation for {{City}}]");
  EXPECT_FALSE(p.match("[Dining for Nashville]"));
  EXPECT_FALSE(walk("accommodation for {{City}}", 0, "Dining for Nashville", 0));
}

TEST(Match, ShorthandPlaceholders) {
  auto p = NodePattern::parse("[transportation from A to B]");
  auto b = p.match("[Transportation from Fort Lauderdale to City 1 in Georgia]");
  ASSERT_TRUE(b);
  EXPECT_EQ(unique_binding(*b, "A"), "Fort Lauderdale");
  EXPECT_EQ(unique_binding(*b, "B"), "City 1 in Georgia");
  auto d = NodePattern::parse("[from day {{i}} to day {j}]").match("[from day 3 to day 14]");
  ASSERT_TRUE(d);
  EXPECT_EQ(unique_binding(*d, "i"), "3");
  EXPECT_EQ(unique_binding(*d, "j"), "14");
}

TEST(Match, LeftmostShortest) {
  auto b = NodePattern::parse("[{{X}} to {{Y}}]").match("[a to b to c]");
  ASSERT_TRUE(b);
  EXPECT_EQ((*b)[0].second, "a");
  EXPECT_EQ((*b)[1].second, "b to c");
}

TEST(Match, AgreesWithCharacterWalkOracle) {
  const std::vector<std::string> patterns{"[{{Block}} on the table]", "[{{Block}} on top of {{Block}}]",
                                          "[Accommodation for {{City}}]", "[to get {{Block}} clear]",
                                          "[Planet {{Object}}]", "[{{Object}} Craves {{Object}}]"};
  const std::vector<std::string> texts{"[Blue block on the table]",  "[on the table]",
                                       "[a on top of b]",            "[a on top of ]",
                                       "[Accommodation for Rome]",   "[accommodation FOR x y z]",
                                       "[to get the red block clear]", "[to get clear]",
                                       "[Planet object b]",          "[Object d Craves Object b]",
                                       "[Dining for Nashville]",     "[Craves x]"};
  for (const auto& p : patterns) {
    auto np = NodePattern::parse(p);
    std::string inner_p(text::unbracket(p));
    for (const auto& t : texts) {
      std::string inner_t(text::unbracket(t));
      EXPECT_EQ(np.match(t).has_value(), walk(inner_p, 0, inner_t, 0)) << p << " ~ " << t;
    }
  }
}

TEST(Match, SoundSubstitution) {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"[{{Block}} on top of {{Block}}]", "[Orange block on top of Blue block]"},
      {"[transportation from A to B]", "[transportation from Miami to New York]"},
      {"[{{Object}} Craves {{Object}}]", "[Object c Craves Object d]"}};
  for (const auto& [pat, txt] : cases) {
    auto p = NodePattern::parse(pat);
    auto b = p.match(txt);
    ASSERT_TRUE(b);
    std::string rebuilt = "[";
    std::size_t k = 0;
    for (const auto& seg : p.segments()) rebuilt += seg.placeholder ? (*b)[k++].second : seg.text;
    rebuilt += "]";
    EXPECT_EQ(text::normalize(rebuilt), text::normalize(txt));
  }
}

TEST(IsDivisible, TravelPlanner) {
  auto l = lib("travelplanner");
  EXPECT_TRUE(l.is_divisible("[Transportation]"));
  EXPECT_FALSE(l.is_divisible("[house rule]"));
  EXPECT_TRUE(l.is_divisible("[Dining for Knoxville]"));
  EXPECT_TRUE(l.is_divisible("[Transportation from City 1 in Georgia to City 2 in Georgia]"));
  EXPECT_FALSE(l.is_divisible("[Attraction for Atlanta]"));
  EXPECT_FALSE(l.is_divisible("[transportation cost]"));
}

TEST(IsDivisible, MostSpecificPatternWins) {
  auto b = lib("blocksworld");
  EXPECT_TRUE(b.is_divisible("[Blue block on the table]"));
  EXPECT_FALSE(b.is_divisible("[to get the blue block on the table]"));
  EXPECT_FALSE(b.is_divisible("[to get the orange block on top of the blue block]"));
  auto t = lib("trip");
  EXPECT_TRUE(t.is_divisible("[Valencia]"));
  EXPECT_TRUE(t.is_divisible("[Plan]"));
  EXPECT_FALSE(t.is_divisible("[from day 1 to day 3]"));
  auto m = lib("mystery");
  EXPECT_TRUE(m.is_divisible("[Planet object b]"));
  EXPECT_FALSE(m.is_divisible("[to get object d craves object b]"));
  EXPECT_FALSE(m.is_divisible("[to get Harmony becomes True]"));
}

TEST(RulesFor, Taxi) {
  auto l = lib("travelplanner");
  auto r = l.rules_for("[Taxi]");
  ASSERT_EQ(r.size(), 1u);
  ASSERT_EQ(r[0].rule->body.size(), 4u);
  EXPECT_EQ(r[0].rule->body[0].raw(), "[transportation availability]");
  EXPECT_EQ(r[0].rule->body[3].raw(), "[non-conflicting]");
}

TEST(RulesFor, LeafHasNone) { EXPECT_TRUE(lib("travelplanner").rules_for("[house rule]").empty()); }

TEST(RulesFor, TripPlan) {
  auto trip = lib("trip");
  auto r = trip.rules_for("[Plan]");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].rule->body.size(), 2u);
  EXPECT_EQ(r[0].rule->body[0].raw(), "[Cities with determine dates]");
}

TEST(RulesFor, BindingsAndInstantiate) {
  auto l = lib("travelplanner");
  auto r = l.rules_for("[Accommodation for Atlanta]");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(unique_binding(r[0].bindings, "A"), "Atlanta");
  auto kids = r[0].rule->instantiate(r[0].bindings);
  ASSERT_TRUE(kids);
  EXPECT_EQ(kids->size(), 4u);
  auto trip = lib("trip");
  auto city = trip.rules_for("[Valencia]");
  ASSERT_EQ(city.size(), 1u);
  EXPECT_FALSE(city[0].rule->instantiate(city[0].bindings));
}

TEST(Licensing, RelaxedDefiniteMatching) {
  auto l = lib("travelplanner");
  const Rule& self_driving = *l.rules_for("[Self-driving]")[0].rule;
  std::vector<std::string> kids{"[transportation availability]", "[transportation cost]"};
  EXPECT_TRUE(self_driving.licenses({}, kids));
  // Both children compete for the single [cost] atom.
  std::vector<std::string> dup{"[transportation cost]", "[cost]"};
  EXPECT_FALSE(self_driving.licenses({}, dup));
  std::vector<std::string> unknown{"[cuisine]"};
  EXPECT_FALSE(self_driving.licenses({}, unknown));
  std::vector<std::string> none;
  EXPECT_FALSE(self_driving.licenses({}, none));
}

TEST(LibraryGrammar, RootDivisibility) {
  auto g = LibraryGrammar(std::make_shared<const RuleLibrary>(lib("trip")));
  EXPECT_TRUE(g.root_divisible("Plan a 10 day trip to Berlin"));
  EXPECT_FALSE(g.root_divisible("[from day 1 to day 2]"));
}
