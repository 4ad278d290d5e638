#include "htp/plan_formats.hpp"

#include <regex>

#include "htp/common.hpp"

namespace htp {

namespace {

const char* const kTravelLabels[] = {"Current City", "Transportation", "Breakfast", "Attraction",
                                     "Lunch",        "Dinner",         "Accommodation"};

std::string* travel_field(TravelDay& d, std::size_t i) {
  std::string* fields[] = {&d.current_city, &d.transportation, &d.breakfast,    &d.attraction,
                           &d.lunch,        &d.dinner,         &d.accommodation};
  return fields[i];
}

std::string drop_period(std::string s) {
  s = text::trim(s);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return text::trim(s);
}

[[noreturn]] void format_error(const std::string& msg, std::size_t line) { throw Error(Errc::FormatError, msg, line); }

}  // namespace

std::string_view to_string(PlanFormat f) {
  switch (f) {
    case PlanFormat::BlocksPlan: return "blocks";
    case PlanFormat::TripPlan: return "trip";
    case PlanFormat::TravelPlannerDays: return "travel";
  }
  return "?";
}

PlanFormat plan_format_from_string(std::string_view name) {
  std::string n = text::lower(text::trim(name));
  if (n == "blocks") return PlanFormat::BlocksPlan;
  if (n == "trip") return PlanFormat::TripPlan;
  if (n == "travel") return PlanFormat::TravelPlannerDays;
  throw Error(Errc::ConfigError, "unknown plan format '" + std::string(name) + "' (blocks, trip, travel)");
}

std::vector<TripSegment> TripItinerary::visits() const {
  std::vector<TripSegment> out;
  for (const auto& s : segments)
    if (s.kind == TripSegment::Kind::Visit) out.push_back(s);
  return out;
}

// Blocks

BlocksPlan parse_blocks_plan(std::string_view raw) {
  auto lines = text::split_lines(raw);
  std::optional<std::size_t> open, close;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string t = text::trim(lines[i]);
    if (!open && text::iequals(t, "[PLAN]")) open = i;
    else if (open && !close && text::iequals(t, "[PLAN END]")) close = i;
  }
  if (open && !close) format_error("[PLAN] without [PLAN END]", *open + 1);
  std::size_t from = open ? *open + 1 : 0;
  std::size_t to = open ? *close : lines.size();
  if (!open) {
    for (std::size_t i = 0; i < lines.size(); ++i)
      if (text::iequals(text::trim(lines[i]), "[PLAN END]")) format_error("[PLAN END] without [PLAN]", i + 1);
  }
  BlocksPlan plan;
  for (std::size_t i = from; i < to; ++i) {
    std::string t = text::collapse(lines[i]);
    if (!t.empty()) plan.actions.push_back(t);
  }
  if (!open && plan.actions.empty()) format_error("no plan actions", 1);
  return plan;
}

std::string render_blocks_plan(const BlocksPlan& plan) {
  std::string out = "[PLAN]\n";
  for (const auto& a : plan.actions) out += a + "\n";
  return out + "[PLAN END]\n";
}

// Trip

TripItinerary parse_trip_plan(std::string_view raw) {
  static const std::regex visit(
      R"(^\*\*Day (\d+)-(\d+):\*\*\s*(?:Arriving in (.+?) and visit (.+?)|Visit (.+?)) for (\d+) days?$)",
      std::regex::icase);
  static const std::regex fly(R"(^\*\*Day (\d+):\*\*\s*Fly from (.+?) to (.+?)$)", std::regex::icase);

  TripItinerary it;
  auto lines = text::split_lines(raw);
  bool seen_content = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string t = drop_period(text::collapse(lines[i]));
    if (t.empty()) continue;
    if (!seen_content && text::iequals(t, "Trip Plan:")) {
      seen_content = true;
      continue;
    }
    seen_content = true;
    std::smatch m;
    TripSegment s;
    if (std::regex_match(t, m, visit)) {
      s.kind = TripSegment::Kind::Visit;
      s.day_start = std::stoi(m[1]);
      s.day_end = std::stoi(m[2]);
      if (m[3].matched) {
        s.arriving = true;
        s.city = text::trim(m[3].str());
        if (!text::iequals(s.city, text::trim(m[4].str())))
          format_error("arrival city and visited city differ: " + t, i + 1);
      } else {
        s.city = text::trim(m[5].str());
      }
      int n = std::stoi(m[6]);
      if (s.day_start < 1 || s.day_end < s.day_start) format_error("bad day range in: " + t, i + 1);
      if (n != s.day_end - s.day_start + 1) format_error("day count does not match range in: " + t, i + 1);
    } else if (std::regex_match(t, m, fly)) {
      s.kind = TripSegment::Kind::Fly;
      s.day_start = s.day_end = std::stoi(m[1]);
      s.from = text::trim(m[2].str());
      s.to = text::trim(m[3].str());
      if (s.day_start < 1) format_error("bad day in: " + t, i + 1);
    } else {
      format_error("not an itinerary line: " + t, i + 1);
    }
    it.segments.push_back(std::move(s));
  }
  if (it.visits().empty()) format_error("itinerary has no visits", 1);

  // Visits chain on shared boundary days; a flight sits on the boundary it crosses.
  const TripSegment* prev_visit = nullptr;
  const TripSegment* pending_fly = nullptr;
  for (const auto& s : it.segments) {
    if (s.kind == TripSegment::Kind::Fly) {
      if (!prev_visit || pending_fly || s.day_start != prev_visit->day_end || !text::iequals(s.from, prev_visit->city))
        format_error("flight on day " + std::to_string(s.day_start) + " does not leave the previous stay", 1);
      pending_fly = &s;
      continue;
    }
    if (prev_visit) {
      if (s.day_start != prev_visit->day_end)
        format_error("stay in " + s.city + " does not start on day " + std::to_string(prev_visit->day_end), 1);
      if (pending_fly && !text::iequals(pending_fly->to, s.city))
        format_error("flight to " + pending_fly->to + " is followed by a stay in " + s.city, 1);
    } else if (pending_fly) {
      format_error("flight before the first stay", 1);
    }
    prev_visit = &s;
    pending_fly = nullptr;
  }
  if (pending_fly) format_error("flight after the last stay", 1);
  return it;
}

std::string render_trip_plan(const TripItinerary& plan) {
  std::string out;
  for (const auto& s : plan.segments) {
    if (s.kind == TripSegment::Kind::Fly) {
      out += "**Day " + std::to_string(s.day_start) + ":** Fly from " + s.from + " to " + s.to + "\n";
      continue;
    }
    out += "**Day " + std::to_string(s.day_start) + "-" + std::to_string(s.day_end) + ":** ";
    out += s.arriving ? "Arriving in " + s.city + " and visit " + s.city : "Visit " + s.city;
    out += " for " + std::to_string(s.day_end - s.day_start + 1) + " days\n";
  }
  return out;
}

// TravelPlanner

TravelPlan parse_travel_plan(std::string_view raw) {
  static const std::regex day_re(R"(^Day (\d+):?$)", std::regex::icase);
  TravelPlan plan;
  auto lines = text::split_lines(raw);
  std::size_t i = 0;
  auto skip_blank = [&] {
    while (i < lines.size() && text::trim(lines[i]).empty()) ++i;
  };
  skip_blank();
  if (i < lines.size() && text::iequals(text::trim(lines[i]), "Travel Plan:")) ++i;
  for (;;) {
    skip_blank();
    if (i == lines.size()) break;
    std::string head = text::collapse(lines[i]);
    std::smatch m;
    if (!std::regex_match(head, m, day_re)) format_error("expected 'Day N:' but found: " + head, i + 1);
    TravelDay d;
    d.day = std::stoi(m[1]);
    if (d.day != static_cast<int>(plan.days.size()) + 1)
      format_error("day " + std::to_string(d.day) + " out of order", i + 1);
    ++i;
    for (std::size_t f = 0; f < 7; ++f, ++i) {
      if (i == lines.size()) format_error(std::string("missing field ") + kTravelLabels[f], i);
      std::string line = text::trim(lines[i]);
      std::string label = std::string(kTravelLabels[f]) + ":";
      if (!text::starts_with_icase(line, label))
        format_error(std::string("expected field ") + kTravelLabels[f] + " but found: " + line, i + 1);
      std::string value = text::trim(line.substr(label.size()));
      if (value.empty()) format_error(std::string("empty field ") + kTravelLabels[f] + " (use '-')", i + 1);
      *travel_field(d, f) = value;
    }
    plan.days.push_back(std::move(d));
  }
  if (plan.days.empty()) format_error("travel plan has no days", 1);
  return plan;
}

std::string render_travel_plan(const TravelPlan& plan) {
  std::string out = "Travel Plan:\n";
  for (std::size_t k = 0; k < plan.days.size(); ++k) {
    TravelDay d = plan.days[k];
    if (k) out += "\n";
    out += "Day " + std::to_string(d.day) + ":\n";
    for (std::size_t f = 0; f < 7; ++f) out += std::string(kTravelLabels[f]) + ": " + *travel_field(d, f) + "\n";
  }
  return out;
}

// Dispatch

StructuredPlan parse_plan(PlanFormat format, std::string_view text) {
  switch (format) {
    case PlanFormat::BlocksPlan: return parse_blocks_plan(text);
    case PlanFormat::TripPlan: return parse_trip_plan(text);
    case PlanFormat::TravelPlannerDays: return parse_travel_plan(text);
  }
  throw Error(Errc::ConfigError, "unknown plan format");
}

std::string render_plan(const StructuredPlan& plan) {
  if (auto* b = std::get_if<BlocksPlan>(&plan)) return render_blocks_plan(*b);
  if (auto* t = std::get_if<TripItinerary>(&plan)) return render_trip_plan(*t);
  return render_travel_plan(std::get<TravelPlan>(plan));
}

PlanFormat format_of(const StructuredPlan& plan) {
  if (std::holds_alternative<BlocksPlan>(plan)) return PlanFormat::BlocksPlan;
  if (std::holds_alternative<TripItinerary>(plan)) return PlanFormat::TripPlan;
  return PlanFormat::TravelPlannerDays;
}

nlohmann::json to_json(const StructuredPlan& plan) {
  nlohmann::json j{{"format", to_string(format_of(plan))}};
  if (auto* b = std::get_if<BlocksPlan>(&plan)) {
    j["actions"] = b->actions;
  } else if (auto* t = std::get_if<TripItinerary>(&plan)) {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : t->segments) {
      if (s.kind == TripSegment::Kind::Fly)
        segs.push_back({{"kind", "fly"}, {"day", s.day_start}, {"from", s.from}, {"to", s.to}});
      else
        segs.push_back({{"kind", "visit"}, {"city", s.city}, {"day_start", s.day_start}, {"day_end", s.day_end}});
    }
    j["segments"] = segs;
  } else {
    nlohmann::json days = nlohmann::json::array();
    for (TravelDay d : std::get<TravelPlan>(plan).days) {
      nlohmann::json day{{"day", d.day}};
      for (std::size_t f = 0; f < 7; ++f) day[kTravelLabels[f]] = *travel_field(d, f);
      days.push_back(day);
    }
    j["days"] = days;
  }
  return j;
}

std::string format_instructions(PlanFormat format) {
  switch (format) {
    case PlanFormat::BlocksPlan:
      return "[PLAN]\n<one action per line, e.g. unstack the yellow block from on top of the blue block>\n[PLAN END]";
    case PlanFormat::TripPlan:
      return "One line per stay or flight, in travel order:\n"
             "**Day <i>-<j>:** Visit <City> for <n> days\n"
             "**Day <j>:** Fly from <City> to <Next City>";
    case PlanFormat::TravelPlannerDays:
      return "Travel Plan:\nDay 1:\nCurrent City: <city, or from A to B on travel days>\nTransportation: <details or ->\n"
             "Breakfast: <name, City or ->\nAttraction: <name, City or ->\nLunch: <name, City or ->\n"
             "Dinner: <name, City or ->\nAccommodation: <name, City or ->\n\nDay 2:\n...";
  }
  return {};
}

}  // namespace htp
