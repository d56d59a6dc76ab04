#pragma once

#include <cstdint>
#include <vector>

#include "bwproc/bands.hpp"
#include "bwproc/model.hpp"
#include "bwproc/parallel.hpp"

namespace bwproc {

// How retained subjects split between the incident (w = 0) and prevalent arms.
enum class ArmSampling {
  // Draw (T, W, C) i.i.d. and keep those with T >= W until n are retained;
  // the prevalent arm is then a minority because most prevalent draws fail T >= W.
  iid,
  // Retain n/2 subjects from each arm.
  balanced,
};

// Generative design: T ~ Gamma(surv_shape, surv_rate); W = 0 with probability
// 1 - prevalent_prob, else Uniform(0, trunc_upper); C = W + Uniform(0, censor_upper).
// Given T, Z1 and Z2 are Gamma(latent_shape, rate T). Recurrences form a Poisson
// process of rate rate_multiplier * Z1 in backward time over (0, T]; a recurrence
// u before failure carries a Gamma(Z2 (mark_base + mark_jump I(u < jump_point)), 1)
// mark.
struct SimConfig {
  std::size_t n = 400;
  std::size_t replicates = 2000;
  std::uint64_t seed = 20240101;
  double surv_shape = 3.0;
  double surv_rate = 1.0;
  double prevalent_prob = 0.5;
  double trunc_upper = 20.0;
  double censor_upper = 8.0;
  double latent_shape = 3.0;
  double rate_multiplier = 4.0;
  double mark_base = 3.0;
  double mark_jump = 3.0;
  double jump_point = 1.0 / 3.0;
  ArmSampling arms = ArmSampling::iid;
  EstimandWindow window{1.0, 20.0, 1.0};
  std::vector<double> eval_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::size_t band_reps = 1000;
  double alpha = 0.05;

  void validate() const;
};

Cohort generate_cohort(const SimConfig& config, Rng& rng);
Cohort generate_cohort(const SimConfig& config, std::uint64_t seed);

struct NaiveMeans {
  double incident = 0.0;
  double prevalent = 0.0;
};

// Unweighted means of V(u) over uncensored subjects with t1 <= x < t2, split
// by w = 0 versus w > 0. Throws if either arm is empty.
NaiveMeans naive_estimators(const Cohort& cohort, const EstimandWindow& window, double u);

// E(V(u) | t1 <= T < t2) in closed form for this design:
// rate_multiplier latent_shape^2 E(T^-2 | window) (mark_base u + mark_jump min(u, jump_point)).
double analytic_truth(const SimConfig& config, double u);

struct OracleEstimate {
  std::vector<double> u;
  std::vector<double> mean;
  std::vector<double> mc_se;
  std::size_t in_window = 0;
};

// Monte Carlo truth from big_n complete (untruncated, uncensored) draws.
OracleEstimate true_mean_oracle(const SimConfig& config, std::span<const double> grid,
                                std::size_t big_n, std::uint64_t seed);

struct StudyRow {
  double u = 0.0;
  double truth = 0.0;
  double naive_incident = 0.0;
  double naive_prevalent = 0.0;
  double estimate = 0.0;
  double sse = 0.0;
  double see = 0.0;
  double coverage = 0.0;
  double naive_incident_mcse = 0.0;
  double naive_prevalent_mcse = 0.0;
  double estimate_mcse = 0.0;
  double coverage_mcse = 0.0;
};

struct StudyReport {
  std::vector<StudyRow> rows;
  double band_coverage = 0.0;      // plain band over [t*, tau0]
  double log_band_coverage = 0.0;  // log-transformed band over [t*, tau0]
  std::size_t replicates = 0;
  std::size_t failed = 0;
  std::size_t naive_failed = 0;
  std::size_t band_flags = 0;      // replicates whose critical values fell below pointwise
  double mean_analyzed_n = 0.0;    // subjects left after the prevalent shift
  double mean_prevalent_share = 0.0;
};

// Generates config.replicates cohorts, applies the prevalent shift by tau0 and
// summarizes the backward-mean estimator, its standard errors, pointwise and
// simultaneous coverage, and the naive comparators. Throws if more than 1% of
// replicates fail to estimate.
StudyReport run_study(const SimConfig& config);

}  // namespace bwproc
