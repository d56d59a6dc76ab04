#include "bwproc/rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

namespace bwproc {

double KernelSpec::operator()(double z) const {
  switch (family) {
    case KernelFamily::epanechnikov:
      return std::abs(z) <= 1.0 ? 0.75 * (1.0 - z * z) : 0.0;
    case KernelFamily::box:
      return std::abs(z) <= 0.5 ? 1.0 : 0.0;
    case KernelFamily::gaussian:
      return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  }
  return 0.0;
}

double KernelSpec::support() const {
  switch (family) {
    case KernelFamily::epanechnikov:
      return 1.0;
    case KernelFamily::box:
      return 0.5;
    case KernelFamily::gaussian:
      break;
  }
  return std::numeric_limits<double>::infinity();
}

void KernelSpec::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw Error("bandwidth must be positive");
}

KernelFamily parse_kernel(std::string_view name) {
  if (name == "epanechnikov") return KernelFamily::epanechnikov;
  if (name == "box") return KernelFamily::box;
  if (name == "gaussian") return KernelFamily::gaussian;
  throw Error("unknown kernel '" + std::string(name) + "'");
}

std::string_view kernel_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::epanechnikov:
      return "epanechnikov";
    case KernelFamily::box:
      return "box";
    case KernelFamily::gaussian:
      return "gaussian";
  }
  return "";
}

double subject_rate(const SubjectRecord& subject, double u, const KernelSpec& spec, double tau0) {
  spec.validate();
  if (!subject.delta) throw Error("subject '" + subject.id + "': rate undefined for a censored subject");
  if (!(u >= 0.0 && u <= tau0)) throw Error("backward time outside [0, tau0]");
  double sum = 0.0;
  for (const auto& e : backward_offsets(subject)) {
    if (e.time > tau0) break;
    sum += spec((u - e.time) / spec.bandwidth) * e.mark;
  }
  return sum / spec.bandwidth;
}

RateEstimator::RateEstimator(const BackwardEstimator& est) : tau0_(est.window().tau0) {
  const auto& cs = est.contributors();
  by_subject_.resize(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double w = cs[i].weight / est.mass();
    subject_.push_back(w);
    for (const auto& e : cs[i].offsets) {
      if (e.time > tau0_) break;
      const Atom a{e.time, w * e.mark, e.mark, i};
      atoms_.push_back(a);
      by_subject_[i].push_back(a);
    }
  }
  std::stable_sort(atoms_.begin(), atoms_.end(),
                   [](const Atom& a, const Atom& b) { return a.offset < b.offset; });
}

double RateEstimator::smooth(double u, const KernelSpec& spec) const {
  const double reach = spec.support() * spec.bandwidth;
  auto first = atoms_.begin();
  auto last = atoms_.end();
  if (std::isfinite(reach)) {
    first = std::lower_bound(atoms_.begin(), atoms_.end(), u - reach,
                             [](const Atom& a, double v) { return a.offset < v; });
    last = std::upper_bound(first, atoms_.end(), u + reach,
                            [](double v, const Atom& a) { return v < a.offset; });
  }
  double sum = 0.0;
  for (auto it = first; it != last; ++it) sum += spec((u - it->offset) / spec.bandwidth) * it->mass;
  return sum / spec.bandwidth;
}

double RateEstimator::rate(double u, const KernelSpec& spec) const {
  spec.validate();
  if (!(u >= 0.0 && u <= tau0_)) throw Error("backward time outside [0, tau0]");
  return smooth(u, spec);
}

double RateEstimator::integral_of_square(const KernelSpec& spec) const {
  // Between consecutive kernel support edges the integrand is a polynomial of
  // degree <= 4 for the compact kernels, so 5-point Gauss-Legendre is exact.
  std::vector<double> cuts{0.0, tau0_};
  const double reach = spec.support() * spec.bandwidth;
  if (std::isfinite(reach)) {
    for (const auto& a : atoms_)
      for (double c : {a.offset - reach, a.offset + reach})
        if (c > 0.0 && c < tau0_) cuts.push_back(c);
  } else {
    constexpr int pieces = 400;
    for (int k = 1; k < pieces; ++k) cuts.push_back(tau0_ * k / pieces);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    total += boost::math::quadrature::gauss<double, 5>::integrate(
        [&](double u) {
          const double r = smooth(u, spec);
          return r * r;
        },
        cuts[k], cuts[k + 1]);
  }
  return total;
}

double RateEstimator::cv_score(const KernelSpec& spec) const {
  spec.validate();
  if (subject_.size() < 2) throw Error("bandwidth selection needs at least two contributing subjects");
  double cross = 0.0;
  for (std::size_t i = 0; i < by_subject_.size(); ++i) {
    const double wi = subject_[i];
    if (!(wi < 1.0)) throw Error("bandwidth selection needs at least two weighted subjects");
    for (const auto& e : by_subject_[i]) {
      double own = 0.0;
      for (const auto& f : by_subject_[i])
        own += spec((e.offset - f.offset) / spec.bandwidth) * f.mass;
      own /= spec.bandwidth;
      const double loo = (smooth(e.offset, spec) - own) / (1.0 - wi);
      cross += e.mass * loo;
    }
  }
  return integral_of_square(spec) - 2.0 * cross;
}

double backward_rate(const Cohort& cohort, const EstimandWindow& window, double u,
                     const KernelSpec& spec) {
  return RateEstimator(BackwardEstimator(cohort, window)).rate(u, spec);
}

double select_bandwidth(const BackwardEstimator& est, KernelFamily family,
                        std::span<const double> candidates) {
  if (candidates.empty()) throw Error("bandwidth selection needs candidate bandwidths");
  const RateEstimator rate(est);
  std::vector<double> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  double best_h = sorted.front();
  double best = std::numeric_limits<double>::infinity();
  for (double h : sorted) {
    const double score = rate.cv_score({family, h});
    if (score < best) {
      best = score;
      best_h = h;
    }
  }
  return best_h;
}

}  // namespace bwproc
