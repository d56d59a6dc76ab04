#include "bwproc/bands.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bwproc/parallel.hpp"

namespace bwproc {

std::vector<double> multiplier_draw(const BackwardEstimator& est, const GridEvaluation& ev,
                                    std::span<const double> multipliers) {
  if (multipliers.size() != est.n()) throw Error("multiplier_draw: need one multiplier per subject");
  const std::size_t G = ev.grid.size();
  const auto& contributors = est.contributors();
  std::vector<double> w(G, 0.0);
  for (std::size_t i = 0; i < contributors.size(); ++i) {
    const double f = multipliers[contributors[i].subject] * contributors[i].scale;
    if (f == 0.0) continue;
    for (std::size_t g = 0; g < G; ++g) w[g] += f * ev.influence[i * G + g];
  }
  const double root_n = std::sqrt(static_cast<double>(est.n()));
  for (auto& x : w) x /= root_n;
  return w;
}

MultiplierProcess::MultiplierProcess(const BackwardEstimator& est, const GridEvaluation& ev)
    : root_n_(std::sqrt(static_cast<double>(est.n()))),
      mass_(est.mass()),
      s_t1_(est.s_t1()),
      s_t2_(est.s_t2()),
      jumps_(ev.jumps),
      grid_size_(ev.grid.size()) {
  for (const auto& c : est.contributors()) {
    scale_.push_back(c.scale);
    surv_.push_back(c.surv);
    weight_.push_back(c.weight);
    tie_end_.push_back(c.tie_end);
  }
  beta_.resize(scale_.size());
  prefix_.resize(scale_.size() + 1);
}

void MultiplierProcess::draw(std::span<const double> multipliers, std::span<double> out) const {
  const std::size_t k = scale_.size();
  prefix_[0] = 0.0;
  for (std::size_t i = 0; i < k; ++i) prefix_[i + 1] = prefix_[i] + multipliers[i] * scale_[i];
  const double total = prefix_[k];
  for (std::size_t j = 0; j < k; ++j) {
    // Contributors with x_i <= x_j see subject j through the S^(t1) branch of H^.
    const double upto = prefix_[tie_end_[j]];
    const double h = weight_[j] * (s_t1_ * upto + s_t2_ * (total - upto));
    beta_[j] = (multipliers[j] * scale_[j] * surv_[j] - h / mass_) / root_n_;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& jump : jumps_) out[jump.bucket] += beta_[jump.contributor] * jump.mark;
  for (std::size_t g = 1; g < grid_size_; ++g) out[g] += out[g - 1];
}

double upper_quantile(std::vector<double> values, double alpha) {
  if (values.empty()) throw Error("quantile of an empty sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  const double m = static_cast<double>(values.size());
  // Guard against (1 - alpha) m landing a hair above an integer.
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * m - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                   values.end());
  return values[rank - 1];
}

BandCritical band_critical_values(const BackwardEstimator& est, const GridEvaluation& ev,
                                  std::size_t m, double alpha, std::uint64_t seed) {
  if (m == 0) throw Error("band critical values need at least one replicate");
  const std::size_t G = ev.grid.size();
  const bool any_sigma = std::any_of(ev.sigma.begin(), ev.sigma.end(), [](double s) { return s > 0.0; });
  if (!any_sigma) throw Error("sigma is zero at every grid point; log band undefined");

  const MultiplierProcess process(est, ev);
  std::vector<double> sup_plain(m), sup_scaled(m);
  constexpr std::size_t chunk = 64;
  const std::size_t chunks = (m + chunk - 1) / chunk;
  parallel_for(chunks, [&](std::size_t c) {
    // Copy per chunk: draw() reuses scratch buffers.
    const MultiplierProcess local = process;
    std::vector<double> g(local.contributors()), w(G);
    std::normal_distribution<double> normal;
    for (std::size_t r = c * chunk; r < std::min(m, (c + 1) * chunk); ++r) {
      auto rng = make_rng(seed, r);
      for (auto& x : g) x = normal(rng);
      normal.reset();
      local.draw(g, w);
      double a = 0.0, b = 0.0;
      for (std::size_t p = 0; p < G; ++p) {
        const double aw = std::abs(w[p]);
        a = std::max(a, aw);
        if (ev.sigma[p] > 0.0) b = std::max(b, aw / ev.sigma[p]);
      }
      sup_plain[r] = a;
      sup_scaled[r] = b;
    }
  });

  BandCritical out;
  out.b = upper_quantile(std::move(sup_plain), alpha);
  out.b_star = upper_quantile(std::move(sup_scaled), alpha);
  out.replicates = m;
  out.seed = seed;
  if (m >= 200) out.below_pointwise = out.b_star < normal_critical(1.0 - alpha);
  return out;
}

BandResult make_band(const BackwardCurve& curve, double critical, BandKind kind) {
  BandResult r;
  r.kind = kind;
  r.critical = critical;
  r.grid = curve.grid;
  r.lo.resize(curve.grid.size());
  r.hi.resize(curve.grid.size());
  const double root_n = std::sqrt(static_cast<double>(curve.n));
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    const double mu = curve.mu[k];
    if (kind == BandKind::plain) {
      r.lo[k] = mu - critical / root_n;
      r.hi[k] = mu + critical / root_n;
    } else if (mu > 0.0) {
      const double e = critical * curve.sigma[k] / (root_n * mu);
      r.lo[k] = mu * std::exp(-e);
      r.hi[k] = mu * std::exp(e);
    } else {
      r.lo[k] = r.hi[k] = mu;
      r.excluded.push_back(k);
    }
  }
  return r;
}

BandResult make_band(const BackwardCurve& curve, const BandCritical& critical, BandKind kind) {
  return make_band(curve, kind == BandKind::plain ? critical.b : critical.b_star, kind);
}

}  // namespace bwproc
