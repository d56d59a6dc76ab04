#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bwproc/model.hpp"
#include "bwproc/survival.hpp"

namespace bwproc {

// Backward mean curve on a grid of backward times.
struct BackwardCurve {
  EstimandWindow window;
  std::vector<double> grid;
  std::vector<double> mu;
  std::vector<double> sigma;  // Sigma^(u,u)^(1/2); the standard error is sigma / sqrt(n)
  std::size_t n = 0;

  double se(std::size_t k) const;
};

enum class IntervalKind { plain, log };

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// An uncensored subject with t1 <= x < t2, in ascending order of x.
struct Contributor {
  std::size_t subject = 0;  // index into the cohort
  double x = 0.0;
  double surv = 0.0;    // S^(x), left-continuous
  double risk = 0.0;    // R(x)
  double weight = 0.0;  // S^(x) / (n R(x))
  double scale = 0.0;   // 1 / (R(x) (S^(t1) - S^(t2)))
  std::size_t tie_begin = 0;  // first contributor with the same x
  std::size_t tie_end = 0;    // one past the last contributor with the same x
  std::vector<ProcessEvent> offsets;  // (x - time, mark) ascending in offset
};

// A jump of some contributor's V(.) placed on a grid: it affects grid points
// with index >= bucket.
struct GridJump {
  std::size_t bucket = 0;
  std::size_t contributor = 0;
  double mark = 0.0;
};

// Per-grid quantities shared by the mean, covariance and bootstrap routines.
struct GridEvaluation {
  std::vector<double> grid;
  std::vector<GridJump> jumps;  // sorted by bucket
  // Row-major contributors x grid.
  std::vector<double> values;     // V_i(u)
  std::vector<double> influence;  // a_i(u) = S^(x_i) V_i(u) - H^(x_i, u) / D
  std::vector<double> mu;
  std::vector<double> sigma;
};

// Backward-mean estimator for one cohort and window. Precomputes the
// product-limit curve, the contributing subjects and their weights.
class BackwardEstimator {
 public:
  BackwardEstimator(const Cohort& cohort, EstimandWindow window);
  BackwardEstimator(const Cohort& cohort, const SurvivalCurve& curve, EstimandWindow window);

  const EstimandWindow& window() const { return window_; }
  std::size_t n() const { return n_; }
  const SurvivalCurve& survival() const { return curve_; }
  double s_t1() const { return s_t1_; }
  double s_t2() const { return s_t2_; }
  // S^(t1) - S^(t2), formed as the sum of contributor weights.
  double mass() const { return mass_; }
  const std::vector<Contributor>& contributors() const { return contributors_; }

  double value(std::size_t contributor, double u) const;
  double mean(double u) const;
  double h_hat(double s, double u) const;
  double influence(std::size_t contributor, double u) const;
  double covariance(double u, double v) const;

  // {0} U {offsets <= tau0 of contributors} U {tau0}, sorted and deduplicated.
  std::vector<double> default_grid() const;
  // Smallest backward time at which some contributor has positive V, or tau0
  // when there is none.
  double first_positive() const;

  GridEvaluation evaluate(std::span<const double> grid) const;
  BackwardCurve curve(std::span<const double> grid) const;
  std::vector<double> covariance_matrix(std::span<const double> grid) const;

 private:
  void check_u(double u) const;

  EstimandWindow window_;
  std::size_t n_ = 0;
  SurvivalCurve curve_;
  double s_t1_ = 1.0;
  double s_t2_ = 0.0;
  double mass_ = 1.0;
  std::vector<Contributor> contributors_;
};

// n^-1 sum Delta_i I(tau0 <= x_i <= t) V_i(u) / R(x_i)
double marked_cum_hazard(const Cohort& cohort, const SurvivalCurve& curve, double tau0, double t,
                         double u);

double backward_mean(const Cohort& cohort, const EstimandWindow& window, double u);
double h_hat(const Cohort& cohort, const EstimandWindow& window, double s, double u);
double covariance(const Cohort& cohort, const EstimandWindow& window, double u, double v);

// Two-sided standard normal critical value z_{1 - (1 - level)/2}.
double normal_critical(double level);

// mu +- z se, or mu exp(+- z se / mu) for the log kind. The log kind throws
// where mu is not strictly positive.
std::vector<Interval> pointwise_ci(const BackwardCurve& curve, double level,
                                   IntervalKind kind = IntervalKind::plain);

}  // namespace bwproc
