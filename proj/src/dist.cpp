#include "bwproc/dist.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bwproc {

namespace {

void check_q(double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error("q must lie in (0, 1)");
}

}  // namespace

WeightedSample weighted_sample(const BackwardEstimator& est, double u) {
  if (!(u >= 0.0 && u <= est.window().tau0)) throw Error("backward time outside [0, tau0]");
  WeightedSample s;
  const auto& cs = est.contributors();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    s.value.push_back(est.value(i, u));
    s.time.push_back(cs[i].x);
    s.weight.push_back(cs[i].weight);
  }
  s.normalizer = est.mass();
  return s;
}

double joint_cdf(const WeightedSample& sample, const EstimandWindow& window, double m, double t) {
  if (!(t >= window.t1 && t < window.t2)) throw Error("joint cdf: t must lie in [t1, t2)");
  double sum = 0.0;
  for (std::size_t i = 0; i < sample.value.size(); ++i)
    if (sample.value[i] <= m && sample.time[i] <= t) sum += sample.weight[i];
  return sum / sample.normalizer;
}

double joint_cdf(const Cohort& cohort, const EstimandWindow& window, double m, double t, double u) {
  const BackwardEstimator est(cohort, window);
  return joint_cdf(weighted_sample(est, u), window, m, t);
}

double estimating_fn(const WeightedSample& sample, double m, double q) {
  check_q(q);
  double sum = 0.0;
  for (std::size_t i = 0; i < sample.value.size(); ++i)
    sum += sample.weight[i] * ((sample.value[i] <= m ? 1.0 : 0.0) - q);
  return sum / sample.normalizer;
}

double estimating_fn(const Cohort& cohort, const EstimandWindow& window, double m, double q,
                     double u) {
  const BackwardEstimator est(cohort, window);
  return estimating_fn(weighted_sample(est, u), m, q);
}

double percentile(const WeightedSample& sample, double q) {
  check_q(q);
  if (sample.value.empty()) throw Error("percentile: no uncensored subjects in window");
  std::vector<std::size_t> order(sample.value.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sample.value[a] < sample.value[b]; });
  const double target = q * sample.normalizer;
  double cum = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    cum += sample.weight[order[k]];
    const bool last_of_tie =
        k + 1 == order.size() || sample.value[order[k + 1]] != sample.value[order[k]];
    // phi_q(m) >= 0  <=>  cumulative weight >= q * normalizer; the relative
    // slack absorbs summation error against an exact cut such as q = 1/2.
    if (last_of_tie && cum >= target * (1.0 - 1e-12)) return sample.value[order[k]];
  }
  return sample.value[order.back()];
}

double percentile(const Cohort& cohort, const EstimandWindow& window, double q, double u) {
  const BackwardEstimator est(cohort, window);
  return percentile(weighted_sample(est, u), q);
}

double pearson_correlation(const WeightedSample& sample) {
  double total = 0.0, mv = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < sample.value.size(); ++i) {
    total += sample.weight[i];
    mv += sample.weight[i] * sample.value[i];
    mt += sample.weight[i] * sample.time[i];
  }
  if (!(total > 0.0)) throw Error("degenerate correlation");
  mv /= total;
  mt /= total;
  double svv = 0.0, stt = 0.0, svt = 0.0, rvv = 0.0, rtt = 0.0;
  for (std::size_t i = 0; i < sample.value.size(); ++i) {
    const double dv = sample.value[i] - mv;
    const double dt = sample.time[i] - mt;
    svv += sample.weight[i] * dv * dv;
    stt += sample.weight[i] * dt * dt;
    svt += sample.weight[i] * dv * dt;
    rvv += sample.weight[i] * sample.value[i] * sample.value[i];
    rtt += sample.weight[i] * sample.time[i] * sample.time[i];
  }
  // Centered moments at round-off level of the raw ones mean a constant coordinate.
  if (!(svv > 1e-24 * rvv) || !(stt > 1e-24 * rtt)) throw Error("degenerate correlation");
  return std::clamp(svt / std::sqrt(svv * stt), -1.0, 1.0);
}

double pearson_correlation(const Cohort& cohort, const EstimandWindow& window, double u) {
  const BackwardEstimator est(cohort, window);
  return pearson_correlation(weighted_sample(est, u));
}

}  // namespace bwproc
