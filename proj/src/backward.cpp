#include "bwproc/backward.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

namespace bwproc {

double BackwardCurve::se(std::size_t k) const {
  return sigma[k] / std::sqrt(static_cast<double>(n));
}

BackwardEstimator::BackwardEstimator(const Cohort& cohort, EstimandWindow window)
    : BackwardEstimator(cohort, product_limit(cohort), window) {}

BackwardEstimator::BackwardEstimator(const Cohort& cohort, const SurvivalCurve& curve,
                                     EstimandWindow window)
    : window_(window), n_(cohort.size()), curve_(curve) {
  window_.validate();
  s_t1_ = survival_at(curve_, window_.t1);
  s_t2_ = survival_at(curve_, window_.t2);
  const double d = s_t1_ - s_t2_;
  if (!(d > 0.0)) throw Error("no identifiable failure mass in window");

  const auto nn = static_cast<double>(n_);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& s = cohort[i];
    if (!s.delta || !window_.contains(s.x)) continue;
    const auto k = static_cast<std::size_t>(
        std::lower_bound(curve_.event_times.begin(), curve_.event_times.end(), s.x) -
        curve_.event_times.begin());
    Contributor c;
    c.subject = i;
    c.x = s.x;
    c.surv = curve_.s_left[k];
    c.risk = curve_.risk_fraction[k];
    c.weight = c.surv / (nn * c.risk);
    c.offsets = backward_offsets(s);
    contributors_.push_back(std::move(c));
  }
  std::stable_sort(contributors_.begin(), contributors_.end(),
                   [](const Contributor& a, const Contributor& b) { return a.x < b.x; });
  // S^(t1) - S^(t2) equals the weight total exactly in real arithmetic; the
  // total keeps mu^ a true weighted average under rounding.
  mass_ = 0.0;
  for (const auto& c : contributors_) mass_ += c.weight;
  if (!(mass_ > 0.0)) mass_ = d;
  for (auto& c : contributors_) c.scale = 1.0 / (c.risk * mass_);
  for (std::size_t i = 0; i < contributors_.size();) {
    std::size_t j = i;
    while (j < contributors_.size() && contributors_[j].x == contributors_[i].x) ++j;
    for (std::size_t k = i; k < j; ++k) {
      contributors_[k].tie_begin = i;
      contributors_[k].tie_end = j;
    }
    i = j;
  }
}

void BackwardEstimator::check_u(double u) const {
  if (!(u >= 0.0 && u <= window_.tau0)) throw Error("backward time outside [0, tau0]");
}

double BackwardEstimator::value(std::size_t contributor, double u) const {
  double v = 0.0;
  for (const auto& e : contributors_[contributor].offsets) {
    if (e.time > u) break;
    v += e.mark;
  }
  return v;
}

double BackwardEstimator::mean(double u) const {
  check_u(u);
  double sum = 0.0;
  for (std::size_t i = 0; i < contributors_.size(); ++i)
    sum += contributors_[i].weight * value(i, u);
  return sum / mass();
}

double BackwardEstimator::h_hat(double s, double u) const {
  const double t1 = window_.t1;
  const double t2 = window_.t2;
  double sum = 0.0;
  for (std::size_t j = 0; j < contributors_.size(); ++j) {
    const double xj = contributors_[j].x;
    double f = 0.0;
    if (t1 <= s && s <= xj && xj < t2)
      f = s_t1_;
    else if (t1 <= xj && xj < s && s <= t2)
      f = s_t2_;
    if (f != 0.0) sum += contributors_[j].weight * value(j, u) * f;
  }
  return sum;
}

double BackwardEstimator::influence(std::size_t contributor, double u) const {
  const auto& c = contributors_[contributor];
  return c.surv * value(contributor, u) - h_hat(c.x, u) / mass();
}

double BackwardEstimator::covariance(double u, double v) const {
  check_u(u);
  check_u(v);
  double sum = 0.0;
  for (std::size_t i = 0; i < contributors_.size(); ++i) {
    const double c = contributors_[i].scale;
    sum += c * c * influence(i, u) * influence(i, v);
  }
  return sum / static_cast<double>(n_);
}

std::vector<double> BackwardEstimator::default_grid() const {
  std::vector<double> grid{0.0, window_.tau0};
  for (const auto& c : contributors_)
    for (const auto& e : c.offsets) {
      if (e.time > window_.tau0) break;
      grid.push_back(e.time);
    }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

double BackwardEstimator::first_positive() const {
  // Cumulative sums can turn positive only at an offset, so scanning each
  // contributor's offsets in order finds its first positive V.
  double best = window_.tau0;
  for (const auto& c : contributors_) {
    double v = 0.0;
    for (const auto& e : c.offsets) {
      if (e.time > best) break;
      v += e.mark;
      if (v > 0.0) {
        best = e.time;
        break;
      }
    }
  }
  return best;
}

GridEvaluation BackwardEstimator::evaluate(std::span<const double> grid) const {
  GridEvaluation ev;
  ev.grid.assign(grid.begin(), grid.end());
  for (std::size_t g = 0; g < ev.grid.size(); ++g) {
    check_u(ev.grid[g]);
    if (g > 0 && !(ev.grid[g - 1] < ev.grid[g])) throw Error("grid must be strictly increasing");
  }
  const std::size_t k = contributors_.size();
  const std::size_t G = ev.grid.size();

  for (std::size_t i = 0; i < k; ++i)
    for (const auto& e : contributors_[i].offsets) {
      const auto b = static_cast<std::size_t>(
          std::lower_bound(ev.grid.begin(), ev.grid.end(), e.time) - ev.grid.begin());
      if (b == G) break;
      ev.jumps.push_back({b, i, e.mark});
    }
  std::stable_sort(ev.jumps.begin(), ev.jumps.end(),
                   [](const GridJump& a, const GridJump& b) { return a.bucket < b.bucket; });

  ev.values.assign(k * G, 0.0);
  for (const auto& j : ev.jumps) ev.values[j.contributor * G + j.bucket] += j.mark;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t g = 1; g < G; ++g) ev.values[i * G + g] += ev.values[i * G + g - 1];

  const double d = mass();
  ev.mu.assign(G, 0.0);
  ev.influence.assign(k * G, 0.0);
  ev.sigma.assign(G, 0.0);
  std::vector<double> suffix(k + 1, 0.0);
  for (std::size_t g = 0; g < G; ++g) {
    // suffix[i] = sum_{j >= i} weight_j V_j(u)
    suffix[k] = 0.0;
    for (std::size_t i = k; i-- > 0;)
      suffix[i] = suffix[i + 1] + contributors_[i].weight * ev.values[i * G + g];
    const double total = suffix[0];
    ev.mu[g] = total / d;
    double var = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& c = contributors_[i];
      const double later = suffix[c.tie_begin];
      const double h = s_t1_ * later + s_t2_ * (total - later);
      const double a = c.surv * ev.values[i * G + g] - h / d;
      ev.influence[i * G + g] = a;
      var += c.scale * c.scale * a * a;
    }
    ev.sigma[g] = std::sqrt(var / static_cast<double>(n_));
  }
  return ev;
}

BackwardCurve BackwardEstimator::curve(std::span<const double> grid) const {
  auto ev = evaluate(grid);
  BackwardCurve c;
  c.window = window_;
  c.grid = std::move(ev.grid);
  c.mu = std::move(ev.mu);
  c.sigma = std::move(ev.sigma);
  c.n = n_;
  return c;
}

std::vector<double> BackwardEstimator::covariance_matrix(std::span<const double> grid) const {
  const auto ev = evaluate(grid);
  const std::size_t G = ev.grid.size();
  std::vector<double> out(G * G, 0.0);
  for (std::size_t i = 0; i < contributors_.size(); ++i) {
    const double c2 = contributors_[i].scale * contributors_[i].scale;
    const double* a = &ev.influence[i * G];
    for (std::size_t p = 0; p < G; ++p)
      for (std::size_t q = 0; q < G; ++q) out[p * G + q] += c2 * a[p] * a[q];
  }
  for (auto& x : out) x /= static_cast<double>(n_);
  return out;
}

double marked_cum_hazard(const Cohort& cohort, const SurvivalCurve& curve, double tau0, double t,
                         double u) {
  if (!(t >= tau0)) throw Error("marked cumulative hazard: t must be at least tau0");
  if (!(u >= 0.0 && u <= tau0)) throw Error("backward time outside [0, tau0]");
  double sum = 0.0;
  for (const auto& s : cohort.subjects()) {
    if (!s.delta || s.x < tau0 || s.x > t) continue;
    const auto it = std::lower_bound(curve.event_times.begin(), curve.event_times.end(), s.x);
    const double r = curve.risk_fraction[static_cast<std::size_t>(it - curve.event_times.begin())];
    sum += backward_value(s, u) / r;
  }
  return sum / static_cast<double>(cohort.size());
}

double backward_mean(const Cohort& cohort, const EstimandWindow& window, double u) {
  return BackwardEstimator(cohort, window).mean(u);
}

double h_hat(const Cohort& cohort, const EstimandWindow& window, double s, double u) {
  return BackwardEstimator(cohort, window).h_hat(s, u);
}

double covariance(const Cohort& cohort, const EstimandWindow& window, double u, double v) {
  return BackwardEstimator(cohort, window).covariance(u, v);
}

double normal_critical(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error("confidence level must lie in (0, 1)");
  const boost::math::normal_distribution<double> z;
  return boost::math::quantile(z, 1.0 - (1.0 - level) / 2.0);
}

std::vector<Interval> pointwise_ci(const BackwardCurve& curve, double level, IntervalKind kind) {
  const double z = normal_critical(level);
  std::vector<Interval> out(curve.grid.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double mu = curve.mu[k];
    const double half = z * curve.se(k);
    if (kind == IntervalKind::plain) {
      out[k] = {mu - half, mu + half};
    } else {
      if (!(mu > 0.0)) throw Error("log-transformed interval needs a positive mean");
      out[k] = {mu * std::exp(-half / mu), mu * std::exp(half / mu)};
    }
  }
  return out;
}

}  // namespace bwproc
