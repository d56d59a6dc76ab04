#pragma once

#include <vector>

#include "bwproc/model.hpp"

namespace bwproc {

/// Product-limit estimate under left truncation and right censoring.
///
/// All survival values are LEFT-continuous: s_left[k] = P^(T >= event_times[k]),
/// the value just before the failures at that time are removed. Every
/// estimator in this library weights uncensored subjects by S^(x)/R(x) with
/// this convention, which makes the weight exactly 1 for complete data.
struct SurvivalCurve {
  std::vector<double> event_times;
  std::vector<double> risk_fraction;  // R(s) = n^-1 #{w_i <= s <= x_i}
  std::vector<double> jump;           // dN(s) / R(s)
  std::vector<double> s_left;         // S^(s), left-continuous
  std::vector<double> cum_hazard;     // sum of jumps up to and including s
  std::size_t n = 0;

  // S^ just after the last event time.
  double s_final() const;
};

// Sorted w and x values for O(log n) risk-set counting.
class RiskSet {
 public:
  explicit RiskSet(const Cohort& cohort);
  // n^-1 #{w_i <= t <= x_i}
  double fraction(double t) const;
  std::size_t count(double t) const;
  std::size_t n() const { return w_.size(); }

 private:
  std::vector<double> w_;
  std::vector<double> x_;
};

double risk_fraction(const Cohort& cohort, double t);

// Throws Error when the risk set is empty at an uncensored time, or when the
// cohort has no uncensored subject.
SurvivalCurve product_limit(const Cohort& cohort);

// Left-continuous step lookup: P^(T >= t).
double survival_at(const SurvivalCurve& curve, double t);

// Right-continuous value P^(T > t).
double survival_after(const SurvivalCurve& curve, double t);

}  // namespace bwproc
