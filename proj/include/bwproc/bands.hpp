#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bwproc/backward.hpp"

namespace bwproc {

enum class BandKind { plain, log };

struct BandCritical {
  double b = 0.0;       // quantile of sup_u |W(u)|
  double b_star = 0.0;  // quantile of sup_u |W(u)| / sigma^(u), over sigma^ > 0
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  // Set when b* < z with at least 200 replicates: a simultaneous band
  // narrower than the pointwise interval hints at too few replicates.
  bool below_pointwise = false;
};

struct BandResult {
  BandKind kind = BandKind::plain;
  double critical = 0.0;
  std::vector<double> grid;
  std::vector<double> lo;
  std::vector<double> hi;
  // Grid indices skipped by the log band because mu^ = 0 there; lo = hi = mu^.
  std::vector<std::size_t> excluded;
};

// W(u) on the evaluation grid for multipliers indexed by cohort subject
// (length n): n^-1/2 sum_i G_i scale_i a_i(u), summed directly over the
// precomputed influence rows.
std::vector<double> multiplier_draw(const BackwardEstimator& est, const GridEvaluation& ev,
                                    std::span<const double> multipliers);

// Same process through the rearrangement W(u) = sum_j beta_j V_j(u), with
// beta_j linear in the multipliers; O(contributors + jumps) per draw.
class MultiplierProcess {
 public:
  MultiplierProcess(const BackwardEstimator& est, const GridEvaluation& ev);

  std::size_t contributors() const { return scale_.size(); }
  // Multipliers indexed by contributor; writes W on the grid into out.
  void draw(std::span<const double> multipliers, std::span<double> out) const;

 private:
  double root_n_ = 1.0;
  double mass_ = 1.0;
  double s_t1_ = 0.0;
  double s_t2_ = 0.0;
  std::vector<double> scale_;
  std::vector<double> surv_;
  std::vector<double> weight_;
  std::vector<std::size_t> tie_end_;
  std::vector<GridJump> jumps_;
  std::size_t grid_size_ = 0;
  mutable std::vector<double> beta_;
  mutable std::vector<double> prefix_;
};

// Order statistic at 1-based index ceil((1 - alpha) m).
double upper_quantile(std::vector<double> values, double alpha);

// Steps 1-3 of the multiplier bootstrap: m draws of W with standard normal
// multipliers from substreams of seed, then the (1 - alpha) quantiles of the
// two sup statistics. Throws if sigma^ = 0 on the whole grid.
BandCritical band_critical_values(const BackwardEstimator& est, const GridEvaluation& ev,
                                  std::size_t m, double alpha, std::uint64_t seed);

// Plain: mu^ +- n^-1/2 b. Log: mu^ exp(+- n^-1/2 b* sigma^ / mu^).
BandResult make_band(const BackwardCurve& curve, double critical, BandKind kind);
BandResult make_band(const BackwardCurve& curve, const BandCritical& critical, BandKind kind);

}  // namespace bwproc
