#include "bwproc/survival.hpp"

#include <algorithm>
#include <cstdio>

namespace bwproc {

double SurvivalCurve::s_final() const {
  if (s_left.empty()) return 1.0;
  return s_left.back() * (1.0 - jump.back());
}

RiskSet::RiskSet(const Cohort& cohort) {
  w_.reserve(cohort.size());
  x_.reserve(cohort.size());
  for (const auto& s : cohort.subjects()) {
    w_.push_back(s.w);
    x_.push_back(s.x);
  }
  std::sort(w_.begin(), w_.end());
  std::sort(x_.begin(), x_.end());
}

std::size_t RiskSet::count(double t) const {
  // w_i <= x_i, so everyone with x_i < t has already entered.
  const auto entered = std::upper_bound(w_.begin(), w_.end(), t) - w_.begin();
  const auto left = std::lower_bound(x_.begin(), x_.end(), t) - x_.begin();
  return static_cast<std::size_t>(entered - left);
}

double RiskSet::fraction(double t) const {
  return static_cast<double>(count(t)) / static_cast<double>(w_.size());
}

double risk_fraction(const Cohort& cohort, double t) {
  std::size_t at_risk = 0;
  for (const auto& s : cohort.subjects())
    if (s.w <= t && t <= s.x) ++at_risk;
  return static_cast<double>(at_risk) / static_cast<double>(cohort.size());
}

SurvivalCurve product_limit(const Cohort& cohort) {
  const auto& times = cohort.event_times();
  if (times.empty()) throw Error("product limit: no uncensored failures");

  std::vector<std::size_t> deaths(times.size(), 0);
  for (const auto& s : cohort.subjects()) {
    if (!s.delta) continue;
    const auto k = std::lower_bound(times.begin(), times.end(), s.x) - times.begin();
    ++deaths[k];
  }

  const RiskSet risk(cohort);
  SurvivalCurve c;
  c.n = cohort.size();
  c.event_times = times;
  c.risk_fraction.reserve(times.size());
  c.jump.reserve(times.size());
  c.s_left.reserve(times.size());
  c.cum_hazard.reserve(times.size());

  double surv = 1.0;
  double hazard = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const std::size_t at_risk = risk.count(times[k]);
    if (at_risk == 0) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "empty risk set at event time %.17g", times[k]);
      throw Error(buf);
    }
    const double r = static_cast<double>(at_risk) / static_cast<double>(c.n);
    const double j = static_cast<double>(deaths[k]) / static_cast<double>(at_risk);
    hazard += j;
    c.risk_fraction.push_back(r);
    c.jump.push_back(j);
    c.s_left.push_back(surv);
    c.cum_hazard.push_back(hazard);
    surv *= 1.0 - j;
  }
  return c;
}

double survival_at(const SurvivalCurve& curve, double t) {
  // First event time >= t: no failure strictly before t beyond that index.
  const auto it = std::lower_bound(curve.event_times.begin(), curve.event_times.end(), t);
  if (it == curve.event_times.end()) return curve.s_final();
  return curve.s_left[static_cast<std::size_t>(it - curve.event_times.begin())];
}

double survival_after(const SurvivalCurve& curve, double t) {
  const auto it = std::upper_bound(curve.event_times.begin(), curve.event_times.end(), t);
  if (it == curve.event_times.end()) return curve.s_final();
  return curve.s_left[static_cast<std::size_t>(it - curve.event_times.begin())];
}

}  // namespace bwproc
