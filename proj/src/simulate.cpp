#include "bwproc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace bwproc {

namespace {

// Backward offsets and marks of one subject's recurrences within (0, horizon].
struct Recurrence {
  double offset;
  double mark;
};

struct Latent {
  double t;
  std::vector<Recurrence> recurrences;
};

Latent draw_subject(const SimConfig& c, Rng& rng, double horizon_cap) {
  Latent s;
  s.t = std::gamma_distribution<double>(c.surv_shape, 1.0 / c.surv_rate)(rng);
  std::gamma_distribution<double> latent(c.latent_shape, 1.0 / s.t);
  const double z1 = latent(rng);
  const double z2 = latent(rng);
  const double horizon = std::min(s.t, horizon_cap);
  const auto count = std::poisson_distribution<long>(c.rate_multiplier * z1 * horizon)(rng);
  std::uniform_real_distribution<double> where(0.0, horizon);
  s.recurrences.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k) {
    // Uniform(0, horizon) excludes 0 with probability one; offsets are in (0, T].
    const double u = where(rng);
    const double shape = z2 * (c.mark_base + (u < c.jump_point ? c.mark_jump : 0.0));
    const double q = shape > 0.0 ? std::gamma_distribution<double>(shape, 1.0)(rng) : 0.0;
    s.recurrences.push_back({u, q});
  }
  return s;
}

double mean_inverse_square(const SimConfig& c) {
  const double k = c.surv_shape;
  const double lam = c.surv_rate;
  const double a = lam * c.window.t1;
  const double b = lam * c.window.t2;
  const double den = boost::math::gamma_p(k, b) - boost::math::gamma_p(k, a);
  if (k > 2.0) {
    // t^-2 t^(k-1) e^(-lam t) integrates as a Gamma(k - 2) density up to lam^2 Gamma(k-2)/Gamma(k).
    const double num = boost::math::gamma_p(k - 2.0, b) - boost::math::gamma_p(k - 2.0, a);
    return lam * lam / ((k - 1.0) * (k - 2.0)) * num / den;
  }
  const auto pdf = [&](double t) {
    return std::exp(k * std::log(lam) + (k - 3.0) * std::log(t) - lam * t - std::lgamma(k));
  };
  const double num =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(pdf, c.window.t1, c.window.t2);
  return num / den;
}

double sample_sd(double sum, double sum_sq, std::size_t count) {
  if (count < 2) return 0.0;
  const double m = sum / static_cast<double>(count);
  const double var = (sum_sq - static_cast<double>(count) * m * m) / static_cast<double>(count - 1);
  return std::sqrt(std::max(var, 0.0));
}

}  // namespace

void SimConfig::validate() const {
  if (n == 0) throw Error("simulation: n must be positive");
  if (replicates == 0) throw Error("simulation: replicates must be positive");
  for (double v : {surv_shape, surv_rate, trunc_upper, censor_upper, latent_shape, rate_multiplier})
    if (!(v > 0.0)) throw Error("simulation: shapes, rates and ranges must be positive");
  if (!(mark_base > 0.0) || !(mark_base + mark_jump > 0.0) || !(jump_point >= 0.0))
    throw Error("simulation: mark shape must be positive");
  if (!(prevalent_prob >= 0.0 && prevalent_prob <= 1.0))
    throw Error("simulation: prevalent probability must lie in [0, 1]");
  if (arms == ArmSampling::balanced && (prevalent_prob == 0.0 || prevalent_prob == 1.0))
    throw Error("simulation: balanced arms need both incident and prevalent draws");
  window.validate();
  for (double u : eval_grid)
    if (!(u >= 0.0 && u <= window.tau0)) throw Error("simulation: evaluation point outside [0, tau0]");
  if (!std::is_sorted(eval_grid.begin(), eval_grid.end()))
    throw Error("simulation: evaluation grid must be sorted");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("simulation: alpha must lie in (0, 1)");
}

Cohort generate_cohort(const SimConfig& config, Rng& rng) {
  config.validate();
  std::bernoulli_distribution prevalent(config.prevalent_prob);
  std::uniform_real_distribution<double> entry(0.0, config.trunc_upper);
  std::uniform_real_distribution<double> follow(0.0, config.censor_upper);
  const std::size_t want_prevalent = config.n / 2;
  const std::size_t want_incident = config.n - want_prevalent;
  std::size_t have_prevalent = 0, have_incident = 0;

  std::vector<SubjectRecord> subjects;
  subjects.reserve(config.n);
  const double inf = std::numeric_limits<double>::infinity();
  while (subjects.size() < config.n) {
    const bool is_prevalent = prevalent(rng);
    const double w = is_prevalent ? entry(rng) : 0.0;
    const double c = w + follow(rng);
    const Latent latent = draw_subject(config, rng, inf);
    if (latent.t < w) continue;
    if (config.arms == ArmSampling::balanced) {
      if (is_prevalent && have_prevalent == want_prevalent) continue;
      if (!is_prevalent && have_incident == want_incident) continue;
    }
    (is_prevalent ? have_prevalent : have_incident)++;

    SubjectRecord s;
    char id[32];
    std::snprintf(id, sizeof id, "s%06zu", subjects.size() + 1);
    s.id = id;
    s.w = w;
    s.delta = latent.t <= c;
    s.x = s.delta ? latent.t : c;
    for (const auto& r : latent.recurrences) {
      const double time = latent.t - r.offset;
      if (time >= s.w && time <= s.x) s.events.push_back({time, r.mark});
    }
    subjects.push_back(std::move(s));
  }
  return validate_cohort(std::move(subjects));
}

Cohort generate_cohort(const SimConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  return generate_cohort(config, rng);
}

NaiveMeans naive_estimators(const Cohort& cohort, const EstimandWindow& window, double u) {
  double inc = 0.0, prev = 0.0;
  std::size_t n_inc = 0, n_prev = 0;
  for (const auto& s : cohort.subjects()) {
    if (!s.delta || !window.contains(s.x)) continue;
    const double v = backward_value(s, u);
    if (s.incident()) {
      inc += v;
      ++n_inc;
    } else {
      prev += v;
      ++n_prev;
    }
  }
  if (n_inc == 0) throw Error("naive estimator: no uncensored incident subjects in window");
  if (n_prev == 0) throw Error("naive estimator: no uncensored prevalent subjects in window");
  return {inc / static_cast<double>(n_inc), prev / static_cast<double>(n_prev)};
}

double analytic_truth(const SimConfig& config, double u) {
  const double e = mean_inverse_square(config);
  return config.rate_multiplier * config.latent_shape * config.latent_shape * e *
         (config.mark_base * u + config.mark_jump * std::min(u, config.jump_point));
}

OracleEstimate true_mean_oracle(const SimConfig& config, std::span<const double> grid,
                                std::size_t big_n, std::uint64_t seed) {
  config.validate();
  if (grid.empty() || big_n == 0) throw Error("oracle: empty grid or sample size");
  const double horizon = *std::max_element(grid.begin(), grid.end());
  const std::size_t G = grid.size();

  constexpr std::size_t block = 10000;
  const std::size_t blocks = (big_n + block - 1) / block;
  struct Partial {
    std::vector<double> sum, sum_sq;
    std::size_t count = 0;
  };
  std::vector<Partial> parts(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    auto rng = make_rng(seed, b);
    Partial p;
    p.sum.assign(G, 0.0);
    p.sum_sq.assign(G, 0.0);
    const std::size_t end = std::min(big_n, (b + 1) * block);
    for (std::size_t i = b * block; i < end; ++i) {
      // V(u) for u <= horizon depends only on recurrences within the horizon.
      const Latent s = draw_subject(config, rng, horizon);
      if (!config.window.contains(s.t)) continue;
      ++p.count;
      for (std::size_t g = 0; g < G; ++g) {
        double v = 0.0;
        for (const auto& r : s.recurrences)
          if (r.offset <= grid[g]) v += r.mark;
        p.sum[g] += v;
        p.sum_sq[g] += v * v;
      }
    }
    parts[b] = std::move(p);
  });

  OracleEstimate out;
  out.u.assign(grid.begin(), grid.end());
  std::vector<double> sum(G, 0.0), sum_sq(G, 0.0);
  for (const auto& p : parts) {
    out.in_window += p.count;
    for (std::size_t g = 0; g < G; ++g) {
      sum[g] += p.sum[g];
      sum_sq[g] += p.sum_sq[g];
    }
  }
  if (out.in_window == 0) throw Error("oracle: no draws fell in the window");
  for (std::size_t g = 0; g < G; ++g) {
    const auto m = static_cast<double>(out.in_window);
    out.mean.push_back(sum[g] / m);
    out.mc_se.push_back(sample_sd(sum[g], sum_sq[g], out.in_window) / std::sqrt(m));
  }
  return out;
}

namespace {

struct ReplicateResult {
  bool ok = false;
  bool naive_ok = false;
  std::vector<double> mu, se, naive_inc, naive_prev;
  std::vector<char> covered;
  bool band_covered = false;
  bool log_band_covered = false;
  bool flagged = false;
  std::size_t analyzed_n = 0;
  double prevalent_share = 0.0;
};

// True when the continuous, nondecreasing truth stays inside the step band on
// [t_star, tau0]: on each grid cell the band is constant, so the cell's two
// endpoints decide.
bool band_covers(const std::vector<double>& grid, const BandResult& band,
                 const std::vector<double>& truth, double t_star) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k] < t_star) continue;
    const double lo = band.lo[k], hi = band.hi[k];
    if (truth[k] < lo || truth[k] > hi) return false;
    if (k + 1 < grid.size() && (truth[k + 1] < lo || truth[k + 1] > hi)) return false;
  }
  return true;
}

ReplicateResult run_replicate(const SimConfig& config, std::size_t r, double z) {
  ReplicateResult out;
  auto rng = make_rng(config.seed, 2 * r);
  const Cohort raw = generate_cohort(config, rng);
  try {
    const Cohort cohort = apply_prevalent_shift(raw, config.window.tau0);
    out.analyzed_n = cohort.size();
    std::size_t prevalent = 0;
    for (const auto& s : cohort.subjects()) prevalent += s.incident() ? 0 : 1;
    out.prevalent_share = static_cast<double>(prevalent) / static_cast<double>(cohort.size());

    try {
      for (double u : config.eval_grid) {
        const auto nm = naive_estimators(cohort, config.window, u);
        out.naive_inc.push_back(nm.incident);
        out.naive_prev.push_back(nm.prevalent);
      }
      out.naive_ok = true;
    } catch (const Error&) {
      out.naive_inc.clear();
      out.naive_prev.clear();
    }

    const BackwardEstimator est(cohort, config.window);
    auto grid = est.default_grid();
    grid.insert(grid.end(), config.eval_grid.begin(), config.eval_grid.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const auto ev = est.evaluate(grid);
    const double root_n = std::sqrt(static_cast<double>(est.n()));

    for (double u : config.eval_grid) {
      const auto k = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), u) - grid.begin());
      const double mu = ev.mu[k];
      const double se = ev.sigma[k] / root_n;
      const double truth = analytic_truth(config, u);
      out.mu.push_back(mu);
      out.se.push_back(se);
      out.covered.push_back(std::abs(mu - truth) <= z * se);
    }

    const auto crit =
        band_critical_values(est, ev, config.band_reps, config.alpha, make_rng(config.seed, 2 * r + 1)());
    out.flagged = crit.below_pointwise;
    BackwardCurve curve;
    curve.window = config.window;
    curve.grid = ev.grid;
    curve.mu = ev.mu;
    curve.sigma = ev.sigma;
    curve.n = est.n();
    std::vector<double> truth(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) truth[k] = analytic_truth(config, grid[k]);
    const double t_star = est.first_positive();
    out.band_covered = band_covers(grid, make_band(curve, crit, BandKind::plain), truth, t_star);
    out.log_band_covered = band_covers(grid, make_band(curve, crit, BandKind::log), truth, t_star);
    out.ok = true;
  } catch (const Error&) {
    out.ok = false;
  }
  return out;
}

}  // namespace

StudyReport run_study(const SimConfig& config) {
  config.validate();
  const double z = normal_critical(1.0 - config.alpha);
  std::vector<ReplicateResult> results(config.replicates);
  parallel_for(config.replicates, [&](std::size_t r) { results[r] = run_replicate(config, r, z); });

  const std::size_t G = config.eval_grid.size();
  StudyReport rep;
  rep.replicates = config.replicates;
  std::vector<double> s_mu(G, 0.0), ss_mu(G, 0.0), s_se(G, 0.0), s_cov(G, 0.0);
  std::vector<double> s_inc(G, 0.0), ss_inc(G, 0.0), s_prev(G, 0.0), ss_prev(G, 0.0);
  std::size_t ok = 0, naive_ok = 0, band = 0, log_band = 0;
  double analyzed = 0.0, share = 0.0;
  for (const auto& r : results) {
    if (r.ok) {
      ++ok;
      band += r.band_covered ? 1 : 0;
      log_band += r.log_band_covered ? 1 : 0;
      rep.band_flags += r.flagged ? 1 : 0;
      analyzed += static_cast<double>(r.analyzed_n);
      share += r.prevalent_share;
      for (std::size_t g = 0; g < G; ++g) {
        s_mu[g] += r.mu[g];
        ss_mu[g] += r.mu[g] * r.mu[g];
        s_se[g] += r.se[g];
        s_cov[g] += r.covered[g] ? 1.0 : 0.0;
      }
    }
    if (r.ok && r.naive_ok) {
      ++naive_ok;
      for (std::size_t g = 0; g < G; ++g) {
        s_inc[g] += r.naive_inc[g];
        ss_inc[g] += r.naive_inc[g] * r.naive_inc[g];
        s_prev[g] += r.naive_prev[g];
        ss_prev[g] += r.naive_prev[g] * r.naive_prev[g];
      }
    }
  }
  rep.failed = config.replicates - ok;
  rep.naive_failed = ok - naive_ok;
  if (static_cast<double>(rep.failed) > 0.01 * static_cast<double>(config.replicates)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "simulation: %zu of %zu replicates failed to estimate", rep.failed,
                  config.replicates);
    throw Error(buf);
  }
  const auto m = static_cast<double>(ok);
  const auto mn = static_cast<double>(std::max<std::size_t>(naive_ok, 1));
  rep.band_coverage = band / m;
  rep.log_band_coverage = log_band / m;
  rep.mean_analyzed_n = analyzed / m;
  rep.mean_prevalent_share = share / m;
  for (std::size_t g = 0; g < G; ++g) {
    StudyRow row;
    row.u = config.eval_grid[g];
    row.truth = analytic_truth(config, row.u);
    row.estimate = s_mu[g] / m;
    row.sse = sample_sd(s_mu[g], ss_mu[g], ok);
    row.see = s_se[g] / m;
    row.coverage = s_cov[g] / m;
    row.naive_incident = s_inc[g] / mn;
    row.naive_prevalent = s_prev[g] / mn;
    row.estimate_mcse = row.sse / std::sqrt(m);
    row.coverage_mcse = std::sqrt(row.coverage * (1.0 - row.coverage) / m);
    row.naive_incident_mcse = sample_sd(s_inc[g], ss_inc[g], naive_ok) / std::sqrt(mn);
    row.naive_prevalent_mcse = sample_sd(s_prev[g], ss_prev[g], naive_ok) / std::sqrt(mn);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace bwproc
