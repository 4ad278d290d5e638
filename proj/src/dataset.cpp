#include "htp/dataset.hpp"

#include <filesystem>
#include <set>

#include "htp/common.hpp"
#include "htp/executors.hpp"

namespace htp {

std::string_view to_string(Benchmark b) {
  switch (b) {
    case Benchmark::Blocksworld: return "blocksworld";
    case Benchmark::Mystery: return "mystery";
    case Benchmark::Trip: return "trip";
    case Benchmark::TravelPlanner: return "travelplanner";
  }
  return "?";
}

Benchmark benchmark_from_string(std::string_view name) {
  std::string n = text::lower(text::trim(name));
  if (n == "blocksworld" || n == "blocks") return Benchmark::Blocksworld;
  if (n == "mystery") return Benchmark::Mystery;
  if (n == "trip") return Benchmark::Trip;
  if (n == "travelplanner" || n == "travel") return Benchmark::TravelPlanner;
  throw Error(Errc::ConfigError, "unknown benchmark '" + std::string(name) + "'");
}

PlanFormat format_for(Benchmark b) {
  switch (b) {
    case Benchmark::Trip: return PlanFormat::TripPlan;
    case Benchmark::TravelPlanner: return PlanFormat::TravelPlannerDays;
    default: return PlanFormat::BlocksPlan;
  }
}

namespace {

std::vector<std::string> atom_list(const nlohmann::json& doc, const char* key, std::size_t line) {
  if (!doc.contains(key) || !doc[key].is_array())
    throw Error(Errc::SchemaError, std::string("\"") + key + "\" must be a list of atoms", line);
  std::vector<std::string> out;
  for (const auto& a : doc[key]) {
    if (!a.is_string()) throw Error(Errc::SchemaError, std::string("\"") + key + "\" holds a non-string", line);
    out.push_back(a.get<std::string>());
  }
  return out;
}

void check_states(Instance& inst, std::size_t line) {
  inst.init = atom_list(inst.raw, "init", line);
  inst.goal = atom_list(inst.raw, "goal", line);
  try {
    if (inst.benchmark == Benchmark::Blocksworld) check_goal(blocks_state_from_atoms(inst.init), inst.goal);
    else check_goal(mystery_state_from_atoms(inst.init), inst.goal);
  } catch (const Error& e) {
    throw Error(Errc::SchemaError, e.what(), line);
  }
}

}  // namespace

std::vector<Instance> load_dataset(const std::string& path, Benchmark benchmark) {
  std::string src = text::read_file(path);
  auto base = std::filesystem::path(path).parent_path();
  std::vector<Instance> out;
  std::set<std::string> ids;
  auto lines = text::split_lines(src);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line = i + 1;
    if (text::trim(lines[i]).empty()) continue;
    Instance inst;
    inst.benchmark = benchmark;
    try {
      inst.raw = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::SchemaError, std::string("not JSON: ") + e.what(), line);
    }
    if (!inst.raw.is_object()) throw Error(Errc::SchemaError, "instance must be a JSON object", line);
    const auto& doc = inst.raw;
    if (!doc.contains("query") || !doc["query"].is_string() || text::trim(doc["query"].get<std::string>()).empty())
      throw Error(Errc::SchemaError, "instance needs a non-empty \"query\"", line);
    inst.query = doc["query"].get<std::string>();
    if (doc.contains("id")) {
      const auto& id = doc["id"];
      inst.id = id.is_string() ? id.get<std::string>() : id.dump();
    } else {
      inst.id = std::to_string(line);
    }
    if (inst.id.empty() || inst.id.find_first_of("/\\") != std::string::npos || inst.id == "." || inst.id == "..")
      throw Error(Errc::SchemaError, "instance id '" + inst.id + "' cannot name a directory", line);
    if (!ids.insert(inst.id).second) throw Error(Errc::SchemaError, "duplicate instance id '" + inst.id + "'", line);

    switch (benchmark) {
      case Benchmark::Blocksworld:
      case Benchmark::Mystery:
        check_states(inst, line);
        break;
      case Benchmark::Trip:
        if (!doc.contains("gold") || !doc["gold"].is_string())
          throw Error(Errc::SchemaError, "trip instance needs a \"gold\" plan text", line);
        try {
          inst.gold = parse_trip_plan(doc["gold"].get<std::string>());
        } catch (const Error& e) {
          throw Error(Errc::SchemaError, std::string("gold plan: ") + e.what(), line);
        }
        if (inst.gold->visits().empty()) throw Error(Errc::SchemaError, "gold plan has no visits", line);
        break;
      case Benchmark::TravelPlanner:
        try {
          inst.travel = travel_query_from_json(doc);
        } catch (const Error& e) {
          throw Error(Errc::SchemaError, e.what(), line);
        }
        if (doc.contains("knowledge")) {
          if (!doc["knowledge"].is_string()) throw Error(Errc::SchemaError, "\"knowledge\" must be a path", line);
          inst.knowledge = (base / doc["knowledge"].get<std::string>()).lexically_normal().string();
        }
        break;
    }
    out.push_back(std::move(inst));
  }
  if (out.empty()) throw Error(Errc::EmptyInput, "dataset " + path + " has no instances");
  return out;
}

}  // namespace htp
