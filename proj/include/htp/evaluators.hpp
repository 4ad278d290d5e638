#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "htp/executors.hpp"
#include "htp/knowledge_base.hpp"
#include "htp/metrics.hpp"
#include "htp/plan_formats.hpp"
#include "json.hpp"

namespace htp {

// Trip Planning

struct TripMatch {
  bool parsed = false;
  bool exact = false;  // every visit equals gold in city and day range
  std::size_t matched_visits = 0;
  std::size_t gold_visits = 0;
  std::string error;
};

/// Visits compared as a multiset of (city, first day, last day); flights are
/// not scored. Unparseable text gives parsed = false.
TripMatch match_trip(std::string_view candidate, const TripItinerary& gold);
TripMatch match_trip(const TripItinerary& candidate, const TripItinerary& gold);

// TravelPlanner

struct TravelQuery {
  std::string org;
  std::vector<std::string> cities;  // destinations in visiting order
  int days = 0;
  int people = 1;
  std::optional<double> budget;
  std::optional<std::string> house_rule;      // "parties", "smoking", "pets", "visitors", "children under 10"
  std::optional<std::string> room_type;       // "entire room", "private room", "shared room", "not shared room"
  std::vector<std::string> cuisines;
  std::optional<std::string> transportation;  // "no flight", "no self-driving"
};

/// Throws SchemaError.
TravelQuery travel_query_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TravelQuery& q);

/// One checkable requirement on a TravelPlanner plan.
class TravelConstraint {
 public:
  virtual ~TravelConstraint() = default;
  virtual std::string name() const = 0;
  /// "commonsense" or "hard".
  virtual std::string constraint_class() const = 0;
  /// Whether the query asks for this constraint at all.
  virtual bool applies(const TravelQuery& q) const = 0;
  virtual ConstraintResult check(const TravelPlan& plan, const TravelQuery& q, const KnowledgeBase& kb) const = 0;
};

/// budget, room type, house rule, cuisine, transportation, minimum stay.
std::vector<std::unique_ptr<TravelConstraint>> builtin_travel_constraints();

/// "Name, City" field value split at the last comma; trailing period dropped.
std::pair<std::string, std::string> split_entity(std::string_view field);

/// Total cost of a plan priced from the knowledge base, with the items it
/// could not price.
struct PlanCost {
  double total = 0.0;
  std::vector<std::string> unpriced;
};
PlanCost travel_plan_cost(const TravelPlan& plan, const TravelQuery& q, const KnowledgeBase& kb);

// Verdicts

/// Undelivered plans fail every constraint they would have been checked
/// against, so per-class denominators do not depend on delivery.
PlanVerdict evaluate_blocks(const std::string& id, const std::optional<BlocksPlan>& plan, const BlocksState& init,
                            const std::vector<std::string>& goal);
PlanVerdict evaluate_mystery(const std::string& id, const std::optional<BlocksPlan>& plan, const MysteryState& init,
                             const std::vector<std::string>& goal);
PlanVerdict evaluate_trip(const std::string& id, const std::optional<TripItinerary>& plan, const TripItinerary& gold);
PlanVerdict evaluate_travel(const std::string& id, const std::optional<TravelPlan>& plan, const TravelQuery& q,
                            const KnowledgeBase& kb,
                            const std::vector<std::unique_ptr<TravelConstraint>>& constraints);

}  // namespace htp
