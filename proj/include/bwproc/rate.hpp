#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "bwproc/backward.hpp"

namespace bwproc {

enum class KernelFamily { epanechnikov, box, gaussian };

// Symmetric kernel k with unit integral and bandwidth h > 0.
//   epanechnikov: 3/4 (1 - z^2) on [-1, 1]
//   box:          1 on [-1/2, 1/2]
//   gaussian:     standard normal density
struct KernelSpec {
  KernelFamily family = KernelFamily::epanechnikov;
  double bandwidth = 0.1;

  double operator()(double z) const;
  // Half-width of the support in units of z; infinity for gaussian.
  double support() const;
  void validate() const;
};

KernelFamily parse_kernel(std::string_view name);
std::string_view kernel_name(KernelFamily family);

// h^-1 sum over events with backward offset v <= tau0 of k((u - v) / h) mark.
double subject_rate(const SubjectRecord& subject, double u, const KernelSpec& spec, double tau0);

// Weighted mean of subject rates with the backward-mean weights. No boundary
// correction: the estimate is biased down within h of u = 0 and u = tau0.
class RateEstimator {
 public:
  explicit RateEstimator(const BackwardEstimator& est);

  double rate(double u, const KernelSpec& spec) const;
  // Least-squares leave-one-subject-out cross-validation score.
  double cv_score(const KernelSpec& spec) const;
  std::size_t contributors() const { return subject_.size(); }

 private:
  // Jumps within [0, tau0] of all contributors, sorted by offset; mass is the
  // mark times the subject's normalized weight.
  struct Atom {
    double offset;
    double mass;
    double mark;
    std::size_t subject;
  };
  double smooth(double u, const KernelSpec& spec) const;
  double integral_of_square(const KernelSpec& spec) const;

  double tau0_ = 0.0;
  std::vector<Atom> atoms_;
  std::vector<double> subject_;  // normalized weights, summing to 1
  std::vector<std::vector<Atom>> by_subject_;
};

double backward_rate(const Cohort& cohort, const EstimandWindow& window, double u,
                     const KernelSpec& spec);

// Candidate minimizing cv_score; ties go to the smaller bandwidth. Needs at
// least two contributing subjects.
double select_bandwidth(const BackwardEstimator& est, KernelFamily family,
                        std::span<const double> candidates);

}  // namespace bwproc
