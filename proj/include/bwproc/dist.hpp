#pragma once

#include <vector>

#include "bwproc/backward.hpp"

namespace bwproc {

// V_i(u) of the window's uncensored subjects with their product-limit weights
// S^(x_i) / (n R(x_i)). The weights sum to the normalizer S^(t1) - S^(t2).
struct WeightedSample {
  std::vector<double> value;
  std::vector<double> time;
  std::vector<double> weight;
  double normalizer = 0.0;
};

WeightedSample weighted_sample(const BackwardEstimator& est, double u);

// P^(V(u) <= m, T <= t | t1 <= T < t2) for t1 <= t < t2.
double joint_cdf(const WeightedSample& sample, const EstimandWindow& window, double m, double t);
double joint_cdf(const Cohort& cohort, const EstimandWindow& window, double m, double t, double u);

// Normalized estimating function: sum of weights times (I(V_i(u) <= m) - q),
// divided by the normalizer.
double estimating_fn(const WeightedSample& sample, double m, double q);
double estimating_fn(const Cohort& cohort, const EstimandWindow& window, double m, double q,
                     double u);

// Smallest observed V_i(u) at which the estimating function is >= 0.
double percentile(const WeightedSample& sample, double q);
double percentile(const Cohort& cohort, const EstimandWindow& window, double q, double u);

// Weighted Pearson correlation between V_i(u) and x_i.
double pearson_correlation(const WeightedSample& sample);
double pearson_correlation(const Cohort& cohort, const EstimandWindow& window, double u);

}  // namespace bwproc
