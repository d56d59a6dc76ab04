#pragma once

#include <span>
#include <vector>

#include "bwproc/model.hpp"
#include "bwproc/survival.hpp"

namespace bwproc {

// Mean forward process n^-1 sum_i sum_{events (s, q) of i, s <= t} S^(s) q / R(s).
// Recorded events already lie in each subject's observed interval [w, x].
double forward_mean(const Cohort& cohort, double t);
double forward_mean(const Cohort& cohort, const SurvivalCurve& curve, double t);

// Same estimator on a sorted grid of forward times in one pass.
std::vector<double> forward_mean_curve(const Cohort& cohort, const SurvivalCurve& curve,
                                       std::span<const double> times);

}  // namespace bwproc
