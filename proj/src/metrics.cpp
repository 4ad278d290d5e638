#include "htp/metrics.hpp"

#include <cstdio>
#include <numeric>
#include <set>

#include "htp/common.hpp"

namespace htp {

Rational Rational::of(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num < 0) throw Error(Errc::PreconditionViolated, "rational needs num >= 0 and den > 0");
  std::int64_t g = std::gcd(num, den);
  if (g == 0) g = 1;
  return {num / g, den / g};
}

std::string Rational::str() const { return std::to_string(num) + "/" + std::to_string(den); }

std::strong_ordering Rational::operator<=>(const Rational& o) const {
  return static_cast<__int128>(num) * o.den <=> static_cast<__int128>(o.num) * den;
}

bool PlanVerdict::class_passed(const std::string& cls) const {
  auto it = classes.find(cls);
  if (it == classes.end()) return true;
  for (const auto& c : it->second)
    if (!c.passed) return false;
  return true;
}

bool PlanVerdict::success() const {
  if (!delivered) return false;
  for (const auto& [cls, _] : classes)
    if (!class_passed(cls)) return false;
  return true;
}

nlohmann::json to_json(const PlanVerdict& v) {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [cls, results] : v.classes) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results) arr.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    classes[cls] = arr;
  }
  return {{"id", v.id}, {"delivered", v.delivered}, {"success", v.success()}, {"classes", classes}, {"note", v.note}};
}

MetricsReport aggregate_metrics(const std::vector<PlanVerdict>& verdicts) {
  if (verdicts.empty()) throw Error(Errc::EmptyInput, "no verdicts to aggregate");
  MetricsReport r;
  r.plans = static_cast<std::int64_t>(verdicts.size());
  std::set<std::string> names;
  for (const auto& v : verdicts)
    for (const auto& [cls, _] : v.classes) names.insert(cls);
  std::int64_t successes = 0;
  for (const auto& v : verdicts) {
    r.delivered += v.delivered;
    successes += v.success();
    for (const auto& cls : names) {
      auto& m = r.classes[cls];
      auto it = v.classes.find(cls);
      if (it != v.classes.end()) {
        for (const auto& c : it->second) {
          ++m.total;
          m.passed += c.passed;
        }
      }
      m.all_pass_plans += v.class_passed(cls);
    }
  }
  for (auto& [_, m] : r.classes) {
    if (m.total > 0) m.micro = Rational::of(m.passed, m.total);
    m.macro = Rational::of(m.all_pass_plans, r.plans);
  }
  r.delivery_rate = Rational::of(r.delivered, r.plans);
  r.success_rate = Rational::of(successes, r.plans);
  return r;
}

namespace {

nlohmann::json rational_json(const Rational& q) { return {{"value", q.value()}, {"exact", q.str()}}; }

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [cls, m] : r.classes) {
    classes[cls] = {{"passed", m.passed},
                    {"total", m.total},
                    {"all_pass_plans", m.all_pass_plans},
                    {"micro", m.micro ? rational_json(*m.micro) : nlohmann::json(nullptr)},
                    {"macro", rational_json(m.macro)}};
  }
  return {{"plans", r.plans},
          {"delivered", r.delivered},
          {"delivery_rate", rational_json(r.delivery_rate)},
          {"classes", classes},
          {"success_rate", rational_json(r.success_rate)}};
}

std::string render_table(const MetricsReport& r) {
  std::string out;
  auto row = [&](const std::string& name, const std::string& value, const std::string& exact) {
    std::string line = name;
    line.resize(std::max<std::size_t>(line.size() + 1, 28), ' ');
    line += value;
    line.resize(std::max<std::size_t>(line.size() + 1, 40), ' ');
    out += line + exact + "\n";
  };
  row("plans", std::to_string(r.plans), "");
  row("delivery rate", fixed(r.delivery_rate.value()), r.delivery_rate.str());
  for (const auto& [cls, m] : r.classes) {
    if (m.micro) row(cls + " micro", fixed(m.micro->value()), m.micro->str());
    else row(cls + " micro", "n/a", "0/0");
    row(cls + " macro", fixed(m.macro.value()), m.macro.str());
  }
  row("success rate", fixed(r.success_rate.value()), r.success_rate.str());
  return out;
}

}  // namespace htp
