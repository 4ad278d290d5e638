#include <gtest/gtest.h>

#include "htp/common.hpp"
#include "htp/plan_formats.hpp"

using namespace htp;

namespace {

std::string fixture(const std::string& rel) { return text::read_file(std::string(HTP_FIXTURE_DIR) + "/" + rel); }

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

TEST(BlocksPlanFormat, ParsesBlockAndRoundTrips) {
  auto p = parse_blocks_plan(fixture("plans/blocksworld.txt"));
  EXPECT_EQ(p.actions.front(), "unstack the yellow block from on top of the blue block");
  EXPECT_EQ(parse_blocks_plan(render_blocks_plan(p)), p);
  EXPECT_EQ(parse_blocks_plan("Here you go:\n[PLAN]\npick up a\n[PLAN END]\nthanks").actions,
            std::vector<std::string>{"pick up a"});
  EXPECT_TRUE(parse_blocks_plan("[PLAN]\n[PLAN END]").actions.empty());
  EXPECT_EQ(code_of([] { parse_blocks_plan("[PLAN]\npick up a"); }), Errc::FormatError);
  EXPECT_EQ(code_of([] { parse_blocks_plan("   \n"); }), Errc::FormatError);
}

TEST(TripPlanFormat, PaperItinerary) {
  auto it = parse_trip_plan(fixture("plans/trip.txt"));
  ASSERT_EQ(it.segments.size(), 5u);
  auto v = it.visits();
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].city, "Tallinn");
  EXPECT_TRUE(v[0].arriving);
  EXPECT_EQ(v[1].day_start, 2);
  EXPECT_EQ(v[1].day_end, 5);
  EXPECT_EQ(it.segments[1].kind, TripSegment::Kind::Fly);
  EXPECT_EQ(it.segments[1].to, "Berlin");
  EXPECT_EQ(parse_trip_plan(render_trip_plan(it)), it);
  EXPECT_EQ(text::split_lines(render_trip_plan(it)).front().rfind("**Day 1-2:**", 0), 0u);
}

TEST(TripPlanFormat, RejectsBrokenItineraries) {
  EXPECT_EQ(code_of([] { parse_trip_plan("**Day 3-1:** Visit Rome for 3 days"); }), Errc::FormatError);
  EXPECT_EQ(code_of([] { parse_trip_plan("**Day 1-3:** Visit Rome for 2 days"); }), Errc::FormatError);
  EXPECT_EQ(code_of([] { parse_trip_plan("**Day 1-3:** Visit Rome for 3 days\n**Day 4-5:** Visit Oslo for 2 days"); }),
            Errc::FormatError);
  EXPECT_EQ(code_of([] { parse_trip_plan("**Day 1-3:** Visit Rome for 3 days\n**Day 3:** Fly from Oslo to Rome"); }),
            Errc::FormatError);
  EXPECT_EQ(code_of([] { parse_trip_plan("Day one: Rome"); }), Errc::FormatError);
}

TEST(TravelPlanFormat, PaperPlan) {
  auto p = parse_travel_plan(fixture("plans/travelplanner.txt"));
  ASSERT_EQ(p.days.size(), 7u);
  EXPECT_EQ(p.days[0].current_city, "from Houston to Nashville");
  EXPECT_EQ(p.days[0].breakfast, "-");
  EXPECT_EQ(p.days[6].accommodation, "-");
  EXPECT_EQ(p.days[2].attraction, "World's Fair Park, Knoxville.");
  EXPECT_EQ(parse_travel_plan(render_travel_plan(p)), p);
  EXPECT_EQ(text::trim(render_travel_plan(p)), text::trim(fixture("plans/travelplanner.txt")));
}

TEST(TravelPlanFormat, MissingFieldFails) {
  EXPECT_EQ(code_of([] {
              parse_travel_plan("Day 1:\nCurrent City: A\nTransportation: -\nBreakfast: -\nLunch: -\nDinner: -\n"
                                "Accommodation: -\n");
            }),
            Errc::FormatError);
  EXPECT_EQ(code_of([] { parse_travel_plan("Travel Plan:\n"); }), Errc::FormatError);
}

TEST(PlanDispatch, FormatNamesAndJson) {
  EXPECT_EQ(plan_format_from_string("trip"), PlanFormat::TripPlan);
  EXPECT_EQ(code_of([] { plan_format_from_string("pddl"); }), Errc::ConfigError);
  auto p = parse_plan(PlanFormat::BlocksPlan, fixture("plans/mystery.txt"));
  EXPECT_EQ(to_json(p)["actions"].size(), 10u);
  EXPECT_EQ(format_of(p), PlanFormat::BlocksPlan);
  for (auto f : {PlanFormat::BlocksPlan, PlanFormat::TripPlan, PlanFormat::TravelPlannerDays})
    EXPECT_FALSE(format_instructions(f).empty());
}
