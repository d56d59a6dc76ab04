#include "bwproc/forward.hpp"

#include <algorithm>

namespace bwproc {

namespace {

struct Increment {
  double time;
  double value;
};

std::vector<Increment> weighted_increments(const Cohort& cohort, const SurvivalCurve& curve) {
  const RiskSet risk(cohort);
  std::vector<Increment> out;
  for (const auto& s : cohort.subjects())
    for (const auto& e : s.events) {
      const double r = risk.fraction(e.time);
      if (!(r > 0.0)) throw Error("empty risk set at a process event time");
      out.push_back({e.time, survival_at(curve, e.time) * e.mark / r});
    }
  std::stable_sort(out.begin(), out.end(),
                   [](const Increment& a, const Increment& b) { return a.time < b.time; });
  return out;
}

}  // namespace

double forward_mean(const Cohort& cohort, double t) {
  return forward_mean(cohort, product_limit(cohort), t);
}

double forward_mean(const Cohort& cohort, const SurvivalCurve& curve, double t) {
  const double grid[] = {t};
  return forward_mean_curve(cohort, curve, grid).front();
}

std::vector<double> forward_mean_curve(const Cohort& cohort, const SurvivalCurve& curve,
                                       std::span<const double> times) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0)) throw Error("forward time must be nonnegative");
    if (k > 0 && times[k] < times[k - 1]) throw Error("forward times must be sorted");
  }
  const auto inc = weighted_increments(cohort, curve);
  const double n = static_cast<double>(cohort.size());
  std::vector<double> out;
  out.reserve(times.size());
  double sum = 0.0;
  std::size_t next = 0;
  for (double t : times) {
    while (next < inc.size() && inc[next].time <= t) sum += inc[next++].value;
    out.push_back(sum / n);
  }
  return out;
}

}  // namespace bwproc
