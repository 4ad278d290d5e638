#include "htp/evaluators.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "htp/common.hpp"

namespace htp {

// Trip Planning

namespace {

using VisitKey = std::tuple<std::string, int, int>;

std::vector<VisitKey> visit_keys(const TripItinerary& t) {
  std::vector<VisitKey> out;
  for (const auto& v : t.visits()) out.emplace_back(text::normalize(v.city), v.day_start, v.day_end);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TripMatch match_trip(const TripItinerary& candidate, const TripItinerary& gold) {
  TripMatch m;
  m.parsed = true;
  auto c = visit_keys(candidate);
  auto g = visit_keys(gold);
  m.gold_visits = g.size();
  std::vector<VisitKey> common;
  std::set_intersection(c.begin(), c.end(), g.begin(), g.end(), std::back_inserter(common));
  m.matched_visits = common.size();
  m.exact = c == g;
  return m;
}

TripMatch match_trip(std::string_view candidate, const TripItinerary& gold) {
  try {
    return match_trip(parse_trip_plan(candidate), gold);
  } catch (const Error& e) {
    TripMatch m;
    m.gold_visits = gold.visits().size();
    m.error = e.what();
    return m;
  }
}

// TravelPlanner

TravelQuery travel_query_from_json(const nlohmann::json& j) {
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw Error(Errc::SchemaError, std::string("travel query lacks \"") + key + "\"");
    return j.at(key);
  };
  try {
    TravelQuery q;
    q.org = need("org").get<std::string>();
    const auto& dest = need("dest");
    if (dest.is_string()) q.cities.push_back(dest.get<std::string>());
    else q.cities = dest.get<std::vector<std::string>>();
    q.days = need("days").get<int>();
    if (q.days < 1) throw Error(Errc::SchemaError, "travel query days must be >= 1");
    if (q.cities.empty()) throw Error(Errc::SchemaError, "travel query needs at least one destination");
    q.people = j.value("people_number", 1);
    if (q.people < 1) throw Error(Errc::SchemaError, "travel query people_number must be >= 1");
    if (j.contains("budget") && !j["budget"].is_null()) q.budget = j["budget"].get<double>();
    const auto cons = j.value("local_constraint", nlohmann::json::object());
    auto opt = [&](const char* key) -> std::optional<std::string> {
      if (!cons.contains(key) || cons[key].is_null()) return std::nullopt;
      return text::normalize(cons[key].get<std::string>());
    };
    q.house_rule = opt("house rule");
    q.room_type = opt("room type");
    q.transportation = opt("transportation");
    if (cons.contains("cuisine") && !cons["cuisine"].is_null())
      for (const auto& c : cons["cuisine"].get<std::vector<std::string>>()) q.cuisines.push_back(c);
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("travel query: ") + e.what());
  }
}

nlohmann::json to_json(const TravelQuery& q) {
  nlohmann::json cons = nlohmann::json::object();
  cons["house rule"] = q.house_rule ? nlohmann::json(*q.house_rule) : nlohmann::json(nullptr);
  cons["room type"] = q.room_type ? nlohmann::json(*q.room_type) : nlohmann::json(nullptr);
  cons["transportation"] = q.transportation ? nlohmann::json(*q.transportation) : nlohmann::json(nullptr);
  cons["cuisine"] = q.cuisines.empty() ? nlohmann::json(nullptr) : nlohmann::json(q.cuisines);
  return {{"org", q.org},
          {"dest", q.cities},
          {"days", q.days},
          {"people_number", q.people},
          {"budget", q.budget ? nlohmann::json(*q.budget) : nlohmann::json(nullptr)},
          {"local_constraint", cons}};
}

std::pair<std::string, std::string> split_entity(std::string_view field) {
  std::string f = text::trim(field);
  while (!f.empty() && f.back() == '.') f.pop_back();
  auto comma = f.rfind(',');
  if (comma == std::string::npos) return {text::trim(f), ""};
  return {text::trim(f.substr(0, comma)), text::trim(f.substr(comma + 1))};
}

namespace {

bool empty_field(const std::string& v) {
  std::string t = text::trim(v);
  return t.empty() || t == "-";
}

double number(const Row& row, const std::string& col) {
  auto it = row.find(col);
  if (it == row.end()) return NAN;
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    return v;
  } catch (const std::exception&) {
    return NAN;
  }
}

struct Leg {
  enum class Mode { Flight, Taxi, SelfDriving, Unknown } mode = Mode::Unknown;
  std::string flight;
  std::string from, to;
};

Leg parse_leg(const std::string& field) {
  static const std::regex flight_re(R"(flight number:\s*([A-Za-z0-9]+))", std::regex::icase);
  static const std::regex route_re(R"(from\s+(.+?)\s+to\s+([^,]+))", std::regex::icase);
  Leg leg;
  std::smatch m;
  std::string lower = text::lower(field);
  if (std::regex_search(field, m, flight_re)) {
    leg.mode = Leg::Mode::Flight;
    leg.flight = m[1];
  } else if (lower.find("self-driving") != std::string::npos) {
    leg.mode = Leg::Mode::SelfDriving;
  } else if (lower.find("taxi") != std::string::npos) {
    leg.mode = Leg::Mode::Taxi;
  }
  if (std::regex_search(field, m, route_re)) {
    leg.from = text::trim(m[1].str());
    leg.to = text::trim(m[2].str());
  }
  return leg;
}

std::optional<Row> distance_row(const KnowledgeBase& kb, const Leg& leg) {
  const char* mode = leg.mode == Leg::Mode::Taxi ? "taxi" : "self-driving";
  for (const auto& row : kb.lookup("distances", "origin", leg.from))
    if (text::iequals(row.at("dest"), leg.to) && text::iequals(row.at("mode"), mode)) return row;
  return std::nullopt;
}

std::optional<Row> entity(const KnowledgeBase& kb, const char* table, const std::string& field) {
  auto [name, city] = split_entity(field);
  return kb.find_entity(table, name, city);
}

std::string day_label(const TravelDay& d, const char* what) { return "day " + std::to_string(d.day) + " " + what; }

ConstraintResult result(std::string name, const std::vector<std::string>& problems) {
  ConstraintResult r{std::move(name), problems.empty(), ""};
  for (const auto& p : problems) r.detail += (r.detail.empty() ? "" : "; ") + p;
  return r;
}

class BudgetConstraint : public TravelConstraint {
 public:
  std::string name() const override { return "budget"; }
  std::string constraint_class() const override { return "hard"; }
  bool applies(const TravelQuery& q) const override { return q.budget.has_value(); }
  ConstraintResult check(const TravelPlan& plan, const TravelQuery& q, const KnowledgeBase& kb) const override {
    auto cost = travel_plan_cost(plan, q, kb);
    std::vector<std::string> problems;
    for (const auto& u : cost.unpriced) problems.push_back("cannot price " + u);
    if (cost.total > *q.budget)
      problems.push_back("total " + std::to_string(static_cast<long long>(std::llround(cost.total))) + " exceeds budget " +
                         std::to_string(static_cast<long long>(std::llround(*q.budget))));
    return result(name(), problems);
  }
};

class RoomTypeConstraint : public TravelConstraint {
 public:
  std::string name() const override { return "room type"; }
  std::string constraint_class() const override { return "hard"; }
  bool applies(const TravelQuery& q) const override { return q.room_type.has_value(); }
  ConstraintResult check(const TravelPlan& plan, const TravelQuery& q, const KnowledgeBase& kb) const override {
    std::string want = *q.room_type;
    bool negated = text::starts_with_icase(want, "not ");
    if (negated) want = want.substr(4);
    std::string key = text::lower(text::split(want, ' ').front());  // entire, private, shared
    std::vector<std::string> problems;
    for (const auto& d : plan.days) {
      if (empty_field(d.accommodation)) continue;
      auto row = entity(kb, "accommodations", d.accommodation);
      if (!row) {
        problems.push_back(day_label(d, "accommodation unknown"));
        continue;
      }
      bool is = text::starts_with_icase(text::trim(row->at("room_type")), key);
      if (is == negated) problems.push_back(day_label(d, "room type is ") + row->at("room_type"));
    }
    return result(name(), problems);
  }
};

class HouseRuleConstraint : public TravelConstraint {
 public:
  std::string name() const override { return "house rule"; }
  std::string constraint_class() const override { return "hard"; }
  bool applies(const TravelQuery& q) const override { return q.house_rule.has_value(); }
  ConstraintResult check(const TravelPlan& plan, const TravelQuery& q, const KnowledgeBase& kb) const override {
    std::string banned = "no " + text::lower(*q.house_rule);
    std::vector<std::string> problems;
    for (const auto& d : plan.days) {
      if (empty_field(d.accommodation)) continue;
      auto row = entity(kb, "accommodations", d.accommodation);
      if (!row) {
        problems.push_back(day_label(d, "accommodation unknown"));
        continue;
      }
      if (text::lower(row->at("house_rules")).find(banned) != std::string::npos)
        problems.push_back(day_label(d, "accommodation forbids ") + *q.house_rule);
    }
    return result(name(), problems);
  }
};

class CuisineConstraint : public TravelConstraint {
 public:
  std::string name() const override { return "cuisine"; }
  std::string constraint_class() const override { return "hard"; }
  bool applies(const TravelQuery& q) const override { return !q.cuisines.empty(); }
  ConstraintResult check(const TravelPlan& plan, const TravelQuery& q, const KnowledgeBase& kb) const override {
    std::string served;
    for (const auto& d : plan.days)
      for (const auto* meal : {&d.breakfast, &d.lunch, &d.dinner}) {
        if (empty_field(*meal)) continue;
        if (auto row = entity(kb, "restaurants", *meal)) served += text::lower(row->at("cuisines")) + ",";
      }
    std::vector<std::string> problems;
    for (const auto& c : q.cuisines)
      if (served.find(text::lower(text::trim(c))) == std::string::npos) problems.push_back("no " + c + " meal");
    return result(name(), problems);
  }
};

class TransportationConstraint : public TravelConstraint {
 public:
  std::string name() const override { return "transportation"; }
  std::string constraint_class() const override { return "hard"; }
  bool applies(const TravelQuery& q) const override { return q.transportation.has_value(); }
  ConstraintResult check(const TravelPlan& plan, const TravelQuery& q, const KnowledgeBase&) const override {
    Leg::Mode banned = Leg::Mode::Unknown;
    if (*q.transportation == "no flight") banned = Leg::Mode::Flight;
    else if (*q.transportation == "no self-driving") banned = Leg::Mode::SelfDriving;
    std::vector<std::string> problems;
    for (const auto& d : plan.days) {
      if (empty_field(d.transportation)) continue;
      if (parse_leg(d.transportation).mode == banned) problems.push_back(day_label(d, "uses a banned mode"));
    }
    return result(name(), problems);
  }
};

class MinimumStayConstraint : public TravelConstraint {
 public:
  std::string name() const override { return "minimum stay"; }
  std::string constraint_class() const override { return "commonsense"; }
  bool applies(const TravelQuery&) const override { return true; }
  ConstraintResult check(const TravelPlan& plan, const TravelQuery&, const KnowledgeBase& kb) const override {
    std::vector<std::string> problems;
    std::size_t i = 0;
    while (i < plan.days.size()) {
      const auto& d = plan.days[i];
      if (empty_field(d.accommodation)) {
        ++i;
        continue;
      }
      std::string key = text::normalize(split_entity(d.accommodation).first);
      std::size_t j = i;
      while (j < plan.days.size() && text::normalize(split_entity(plan.days[j].accommodation).first) == key) ++j;
      auto row = entity(kb, "accommodations", d.accommodation);
      if (!row) {
        problems.push_back(day_label(d, "accommodation unknown"));
      } else {
        double min = number(*row, "minimum_nights");
        if (!std::isnan(min) && static_cast<double>(j - i) < min)
          problems.push_back(day_label(d, "stay of ") + std::to_string(j - i) + " nights is under the minimum " +
                             row->at("minimum_nights"));
      }
      i = j;
    }
    return result(name(), problems);
  }
};

}  // namespace

std::vector<std::unique_ptr<TravelConstraint>> builtin_travel_constraints() {
  std::vector<std::unique_ptr<TravelConstraint>> out;
  out.push_back(std::make_unique<BudgetConstraint>());
  out.push_back(std::make_unique<RoomTypeConstraint>());
  out.push_back(std::make_unique<HouseRuleConstraint>());
  out.push_back(std::make_unique<CuisineConstraint>());
  out.push_back(std::make_unique<TransportationConstraint>());
  out.push_back(std::make_unique<MinimumStayConstraint>());
  return out;
}

PlanCost travel_plan_cost(const TravelPlan& plan, const TravelQuery& q, const KnowledgeBase& kb) {
  PlanCost cost;
  const double people = q.people;
  auto add = [&](double v, const std::string& what) {
    if (std::isnan(v)) cost.unpriced.push_back(what);
    else cost.total += v;
  };
  for (const auto& d : plan.days) {
    if (!empty_field(d.transportation)) {
      Leg leg = parse_leg(d.transportation);
      std::string what = day_label(d, "transportation");
      if (leg.mode == Leg::Mode::Flight) {
        auto rows = kb.lookup("flights", "flight_number", leg.flight);
        add(rows.empty() ? NAN : number(rows.front(), "price") * people, what);
      } else if (leg.mode == Leg::Mode::Taxi || leg.mode == Leg::Mode::SelfDriving) {
        auto row = distance_row(kb, leg);
        double per = leg.mode == Leg::Mode::Taxi ? 4.0 : 5.0;
        add(row ? number(*row, "cost") * std::ceil(people / per) : NAN, what);
      } else {
        add(NAN, what);
      }
    }
    for (auto [meal, label] : {std::pair{&d.breakfast, "breakfast"}, {&d.lunch, "lunch"}, {&d.dinner, "dinner"}}) {
      if (empty_field(*meal)) continue;
      auto row = entity(kb, "restaurants", *meal);
      add(row ? number(*row, "avg_cost") * people : NAN, day_label(d, label));
    }
    if (!empty_field(d.accommodation)) {
      auto row = entity(kb, "accommodations", d.accommodation);
      double v = NAN;
      if (row) {
        double occ = number(*row, "max_occupancy");
        if (std::isnan(occ) || occ < 1) occ = 1;
        v = number(*row, "price") * std::ceil(people / occ);
      }
      add(v, day_label(d, "accommodation"));
    }
  }
  return cost;
}

// Verdicts

namespace {

ConstraintResult undelivered(const std::string& name) { return {name, false, "plan not delivered"}; }

}  // namespace

PlanVerdict evaluate_blocks(const std::string& id, const std::optional<BlocksPlan>& plan, const BlocksState& init,
                            const std::vector<std::string>& goal) {
  PlanVerdict v{id, plan.has_value(), {}, ""};
  auto& cls = v.classes["validity"];
  if (!plan) {
    cls = {undelivered("executable"), undelivered("goal")};
    return v;
  }
  try {
    auto run = execute_blocks_plan(init, plan->actions);
    cls.push_back({"executable", true, ""});
    bool reached = check_goal(run.final_state(), goal);
    cls.push_back({"goal", reached, reached ? "" : "final state: " + describe(run.final_state())});
  } catch (const Error& e) {
    cls.push_back({"executable", false, e.what()});
    cls.push_back({"goal", false, "plan does not execute"});
  }
  return v;
}

PlanVerdict evaluate_mystery(const std::string& id, const std::optional<BlocksPlan>& plan, const MysteryState& init,
                             const std::vector<std::string>& goal) {
  PlanVerdict v{id, plan.has_value(), {}, ""};
  auto& cls = v.classes["validity"];
  if (!plan) {
    cls = {undelivered("executable"), undelivered("goal")};
    return v;
  }
  try {
    auto run = execute_mystery_plan(init, plan->actions);
    cls.push_back({"executable", true, ""});
    bool reached = check_goal(run.final_state(), goal);
    cls.push_back({"goal", reached, reached ? "" : "goal not reached"});
  } catch (const Error& e) {
    cls.push_back({"executable", false, e.what()});
    cls.push_back({"goal", false, "plan does not execute"});
  }
  return v;
}

PlanVerdict evaluate_trip(const std::string& id, const std::optional<TripItinerary>& plan,
                          const TripItinerary& gold) {
  PlanVerdict v{id, plan.has_value(), {}, ""};
  if (!plan) {
    v.classes["match"] = {undelivered("exact")};
    return v;
  }
  auto m = match_trip(*plan, gold);
  v.classes["match"] = {{"exact", m.exact,
                         std::to_string(m.matched_visits) + "/" + std::to_string(m.gold_visits) + " visits match"}};
  return v;
}

PlanVerdict evaluate_travel(const std::string& id, const std::optional<TravelPlan>& plan, const TravelQuery& q,
                            const KnowledgeBase& kb,
                            const std::vector<std::unique_ptr<TravelConstraint>>& constraints) {
  PlanVerdict v{id, plan.has_value(), {}, ""};
  // Both classes show up in the report even when none of their constraints apply.
  v.classes["commonsense"];
  v.classes["hard"];
  for (const auto& c : constraints) {
    if (!c->applies(q)) continue;
    v.classes[c->constraint_class()].push_back(plan ? c->check(*plan, q, kb) : undelivered(c->name()));
  }
  return v;
}

}  // namespace htp
