#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "htp/evaluators.hpp"
#include "htp/plan_formats.hpp"
#include "json.hpp"

namespace htp {

enum class Benchmark { Blocksworld, Mystery, Trip, TravelPlanner };

std::string_view to_string(Benchmark b);
/// "blocksworld", "mystery", "trip", "travelplanner". Throws ConfigError.
Benchmark benchmark_from_string(std::string_view name);
PlanFormat format_for(Benchmark b);

struct Instance {
  std::string id;
  std::string query;
  Benchmark benchmark = Benchmark::Blocksworld;
  std::vector<std::string> init;  // Blocksworld, Mystery
  std::vector<std::string> goal;  // Blocksworld, Mystery
  std::optional<TripItinerary> gold;
  std::optional<TravelQuery> travel;
  std::string knowledge;  // manifest path, resolved against the dataset file; may be empty
  nlohmann::json raw;
};

/// JSONL, one instance per non-blank line:
///   blocksworld, mystery: {"id"?, "query", "init": [atom...], "goal": [atom...]}
///   trip:                 {"id"?, "query", "gold": "<trip plan text>"}
///   travelplanner:        {"id"?, "query", "org", "dest", "days", "people_number"?, "budget"?,
///                          "local_constraint"?, "knowledge"?}
/// Ids default to the line number and must be unique. Throws SchemaError with
/// the line, IoFailure, or EmptyInput when the file holds no instance.
std::vector<Instance> load_dataset(const std::string& path, Benchmark benchmark);

}  // namespace htp
