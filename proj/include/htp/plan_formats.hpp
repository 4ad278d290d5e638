#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace htp {

enum class PlanFormat { BlocksPlan, TripPlan, TravelPlannerDays };

std::string_view to_string(PlanFormat f);
/// "blocks", "trip", "travel". Throws ConfigError.
PlanFormat plan_format_from_string(std::string_view name);

/// One action per line between "[PLAN]" and "[PLAN END]". Also used for Mystery.
struct BlocksPlan {
  std::vector<std::string> actions;
  bool operator==(const BlocksPlan&) const = default;
};

struct TripSegment {
  enum class Kind { Visit, Fly };
  Kind kind = Kind::Visit;
  std::string city;  // visit
  std::string from;  // fly
  std::string to;    // fly
  int day_start = 0;
  int day_end = 0;  // equals day_start for flights
  bool arriving = false;  // "Arriving in C and visit C" spelling
  bool operator==(const TripSegment&) const = default;
};

struct TripItinerary {
  std::vector<TripSegment> segments;
  std::vector<TripSegment> visits() const;
  bool operator==(const TripItinerary&) const = default;
};

struct TravelDay {
  int day = 0;
  std::string current_city;
  std::string transportation;
  std::string breakfast;
  std::string attraction;
  std::string lunch;
  std::string dinner;
  std::string accommodation;
  bool operator==(const TravelDay&) const = default;
};

/// Field values are kept as written; "-" marks an empty field.
struct TravelPlan {
  std::vector<TravelDay> days;
  bool operator==(const TravelPlan&) const = default;
};

using StructuredPlan = std::variant<BlocksPlan, TripItinerary, TravelPlan>;

// Parsers throw Error(FormatError) with the offending line number.
BlocksPlan parse_blocks_plan(std::string_view text);
TripItinerary parse_trip_plan(std::string_view text);
TravelPlan parse_travel_plan(std::string_view text);
StructuredPlan parse_plan(PlanFormat format, std::string_view text);

std::string render_blocks_plan(const BlocksPlan& plan);
std::string render_trip_plan(const TripItinerary& plan);
std::string render_travel_plan(const TravelPlan& plan);
std::string render_plan(const StructuredPlan& plan);
PlanFormat format_of(const StructuredPlan& plan);

nlohmann::json to_json(const StructuredPlan& plan);

/// Output instructions for the plan-generation prompt.
std::string format_instructions(PlanFormat format);

}  // namespace htp
