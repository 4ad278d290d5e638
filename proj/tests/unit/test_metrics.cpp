#include <gtest/gtest.h>

#include "htp/common.hpp"
#include "htp/metrics.hpp"

using namespace htp;

namespace {

PlanVerdict with_score(std::string id, int passed, int total, bool delivered = true) {
  PlanVerdict v{std::move(id), delivered, {}, ""};
  auto& cls = v.classes["commonsense"];
  for (int i = 0; i < total; ++i) cls.push_back({"c" + std::to_string(i), i < passed, ""});
  return v;
}

}  // namespace

TEST(Rational, ReducesAndOrders) {
  EXPECT_EQ(Rational::of(6, 8), (Rational{3, 4}));
  EXPECT_EQ(Rational::of(0, 5), (Rational{0, 1}));
  EXPECT_EQ(Rational::of(23, 30).str(), "23/30");
  EXPECT_LT(Rational::of(1, 3), Rational::of(23, 30));
  EXPECT_EQ(Rational::of(2, 4) <=> Rational::of(1, 2), std::strong_ordering::equal);
  EXPECT_THROW(Rational::of(1, 0), Error);
}

TEST(Metrics, MicroAndMacroFromCounts) {
  auto r = aggregate_metrics({with_score("a", 8, 10), with_score("b", 10, 10), with_score("c", 5, 10)});
  const auto& m = r.classes.at("commonsense");
  EXPECT_EQ(*m.micro, Rational::of(23, 30));
  EXPECT_EQ(m.macro, Rational::of(1, 3));
  EXPECT_EQ(r.success_rate, Rational::of(1, 3));
  EXPECT_EQ(r.delivery_rate, Rational::of(1, 1));
}

TEST(Metrics, AllPassingGivesOnes) {
  auto r = aggregate_metrics({with_score("a", 4, 4), with_score("b", 2, 2)});
  EXPECT_EQ(*r.classes.at("commonsense").micro, Rational::of(1, 1));
  EXPECT_EQ(r.classes.at("commonsense").macro, Rational::of(1, 1));
  EXPECT_EQ(r.success_rate, Rational::of(1, 1));
}

TEST(Metrics, UndeliveredPlanHalvesDeliveryAndSuccess) {
  auto r = aggregate_metrics({with_score("a", 3, 3), with_score("b", 0, 3, false)});
  EXPECT_EQ(r.delivery_rate, Rational::of(1, 2));
  EXPECT_EQ(r.success_rate, Rational::of(1, 2));
}

TEST(Metrics, UndeliveredWithoutFailuresStillNotSuccess) {
  PlanVerdict v{"x", false, {}, ""};
  EXPECT_FALSE(v.success());
  EXPECT_TRUE(v.class_passed("hard"));
}

TEST(Metrics, EmptyInputThrows) {
  try {
    aggregate_metrics({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyInput);
  }
}

TEST(Metrics, ClassWithoutConstraintsHasNoMicro) {
  PlanVerdict v{"x", true, {{"hard", {}}}, ""};
  auto r = aggregate_metrics({v});
  EXPECT_FALSE(r.classes.at("hard").micro.has_value());
  EXPECT_EQ(r.classes.at("hard").macro, Rational::of(1, 1));
}

TEST(Metrics, SinglePlanMatchesItsVerdict) {
  auto v = with_score("a", 2, 5);
  auto r = aggregate_metrics({v});
  EXPECT_EQ(*r.classes.at("commonsense").micro, Rational::of(2, 5));
  EXPECT_EQ(r.classes.at("commonsense").macro, Rational::of(0, 1));
  EXPECT_EQ(r.success_rate, Rational::of(v.success(), 1));
}

TEST(Metrics, JsonAndTable) {
  auto r = aggregate_metrics({with_score("a", 8, 10), with_score("b", 10, 10), with_score("c", 5, 10)});
  auto j = to_json(r);
  EXPECT_EQ(j["classes"]["commonsense"]["micro"]["exact"], "23/30");
  EXPECT_EQ(j["plans"], 3);
  auto table = render_table(r);
  EXPECT_NE(table.find("commonsense micro"), std::string::npos);
  EXPECT_NE(table.find("0.7667"), std::string::npos);
}
