#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace htp {

/// Exact non-negative fraction in lowest terms.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational of(std::int64_t num, std::int64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;  // "23/30"
  bool operator==(const Rational&) const = default;
  std::strong_ordering operator<=>(const Rational& o) const;
};

struct ConstraintResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Verdict on one plan: constraint outcomes grouped by class ("commonsense",
/// "hard", "validity", "match"...).
struct PlanVerdict {
  std::string id;
  bool delivered = false;
  std::map<std::string, std::vector<ConstraintResult>> classes;
  std::string note;

  bool class_passed(const std::string& cls) const;
  /// Delivered and every constraint of every class passed.
  bool success() const;
};

nlohmann::json to_json(const PlanVerdict& v);

struct ClassMetrics {
  std::int64_t passed = 0;
  std::int64_t total = 0;
  std::int64_t all_pass_plans = 0;
  std::optional<Rational> micro;  // passed / total; absent when total is 0
  Rational macro;                 // all_pass_plans / plans
};

struct MetricsReport {
  std::int64_t plans = 0;
  std::int64_t delivered = 0;
  Rational delivery_rate;
  std::map<std::string, ClassMetrics> classes;
  Rational success_rate;
};

/// Throws EmptyInput on an empty list.
MetricsReport aggregate_metrics(const std::vector<PlanVerdict>& verdicts);

nlohmann::json to_json(const MetricsReport& r);
/// Plain-text table of the report.
std::string render_table(const MetricsReport& r);

}  // namespace htp
