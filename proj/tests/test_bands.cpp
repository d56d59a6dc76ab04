#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "bwproc/bands.hpp"
#include "bwproc/parallel.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bwproc;

namespace {

const EstimandWindow kWindow{0.5, 4.0, 0.5};

Cohort random_cohort(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  return validate_cohort(oracle::random_subjects(rng, n));
}

}  // namespace

TEST_CASE("zero multipliers give a zero process") {
  const auto c = random_cohort(1, 40);
  const BackwardEstimator est(c, kWindow);
  const auto grid = est.default_grid();
  const auto ev = est.evaluate(grid);
  const std::vector<double> zeros(c.size(), 0.0);
  for (double w : multiplier_draw(est, ev, zeros)) CHECK(w == 0.0);
  const MultiplierProcess p(est, ev);
  std::vector<double> g(p.contributors(), 0.0), out(grid.size(), 1.0);
  p.draw(g, out);
  for (double w : out) CHECK(w == 0.0);
}

TEST_CASE("one nonzero multiplier gives one scaled influence term") {
  const auto c = oracle::censored_fixture();
  const BackwardEstimator est(c, {1, 4, 1});
  const std::vector<double> grid{0.0, 0.5, 1.0};
  const auto ev = est.evaluate(grid);
  // Contributor 0 is subject C (index 2): scale 3/2, a(1) = -1.5.
  std::vector<double> g{0.0, 0.0, 1.0};
  const auto w = multiplier_draw(est, ev, g);
  CHECK(w[2] == doctest::Approx(1.5 * -1.5 / std::sqrt(3.0)));
}

TEST_CASE("fast and direct multiplier routes agree with the formula") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 20; ++rep) {
    const auto c = random_cohort(100 + rep, 35);
    const BackwardEstimator est(c, kWindow);
    const auto grid = est.default_grid();
    const auto ev = est.evaluate(grid);
    const MultiplierProcess p(est, ev);
    std::vector<double> g(c.size());
    for (auto& x : g) x = normal(rng);
    std::vector<double> gc;
    for (const auto& ct : est.contributors()) gc.push_back(g[ct.subject]);
    std::vector<double> fast(grid.size());
    p.draw(gc, fast);
    const auto direct = multiplier_draw(est, ev, g);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double ref = oracle::multiplier(c, kWindow, g, grid[k]);
      CHECK(direct[k] == doctest::Approx(ref).epsilon(1e-10).scale(1.0));
      CHECK(fast[k] == doctest::Approx(ref).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("upper quantile convention") {
  std::vector<double> v;
  for (int k = 1; k <= 1000; ++k) v.push_back(k);
  std::reverse(v.begin(), v.end());
  CHECK(upper_quantile(v, 0.05) == 950.0);
  CHECK(upper_quantile({3.0}, 0.05) == 3.0);
  CHECK(upper_quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.0);
  CHECK_THROWS_AS(upper_quantile({}, 0.05), Error);
  CHECK_THROWS_AS(upper_quantile({1.0}, 1.0), Error);
}

TEST_CASE("single replicate critical value is the max of that draw") {
  const auto c = random_cohort(2, 40);
  const BackwardEstimator est(c, kWindow);
  const auto grid = est.default_grid();
  const auto ev = est.evaluate(grid);
  const auto crit = band_critical_values(est, ev, 1, 0.05, 77);
  const MultiplierProcess p(est, ev);
  auto rng = make_rng(77, 0);
  std::normal_distribution<double> normal;
  std::vector<double> g(p.contributors()), w(grid.size());
  for (auto& x : g) x = normal(rng);
  p.draw(g, w);
  double mx = 0.0;
  for (double x : w) mx = std::max(mx, std::abs(x));
  CHECK(crit.b == mx);
}

TEST_CASE("critical values are deterministic across thread counts") {
  const auto c = random_cohort(3, 60);
  const BackwardEstimator est(c, kWindow);
  const auto grid = est.default_grid();
  const auto ev = est.evaluate(grid);
  setenv("BWPROC_THREADS", "1", 1);
  const auto a = band_critical_values(est, ev, 500, 0.05, 7);
  setenv("BWPROC_THREADS", "4", 1);
  const auto b = band_critical_values(est, ev, 500, 0.05, 7);
  unsetenv("BWPROC_THREADS");
  const auto d = band_critical_values(est, ev, 500, 0.05, 8);
  CHECK(a.b == b.b);
  CHECK(a.b_star == b.b_star);
  CHECK(a.b != d.b);
  CHECK(a.b_star >= normal_critical(0.95) * 0.9);
}

TEST_CASE("sigma zero everywhere is an error") {
  const auto c = oracle::censored_fixture();
  const BackwardEstimator est(c, {1, 4, 1});
  const std::vector<double> grid{0.0, 0.2};
  const auto ev = est.evaluate(grid);
  CHECK_THROWS_AS(band_critical_values(est, ev, 100, 0.05, 1), Error);
}

TEST_CASE("band shapes") {
  const auto c = random_cohort(4, 80);
  const BackwardEstimator est(c, kWindow);
  const auto grid = est.default_grid();
  const auto curve = est.curve(grid);
  const double z = normal_critical(0.95);

  SUBCASE("log band with b* = z is the log pointwise interval") {
    const auto band = make_band(curve, z, BandKind::log);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (curve.mu[k] <= 0.0) {
        CHECK(std::find(band.excluded.begin(), band.excluded.end(), k) != band.excluded.end());
        CHECK(band.lo[k] == curve.mu[k]);
        continue;
      }
      const std::vector<double> one{grid[k]};
      const auto ci = pointwise_ci(est.curve(one), 0.95, IntervalKind::log);
      CHECK(band.lo[k] == doctest::Approx(ci[0].lo).epsilon(1e-12));
      CHECK(band.hi[k] == doctest::Approx(ci[0].hi).epsilon(1e-12));
    }
  }
  SUBCASE("plain band contains the pointwise interval when b >= z max sigma") {
    const double b = z * *std::max_element(curve.sigma.begin(), curve.sigma.end());
    const auto band = make_band(curve, b, BandKind::plain);
    const auto ci = pointwise_ci(curve, 0.95);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      CHECK(band.lo[k] <= ci[k].lo + 1e-12);
      CHECK(band.hi[k] >= ci[k].hi - 1e-12);
    }
  }
}

TEST_CASE("bootstrap second moments approach the covariance estimate") {
  const auto c = random_cohort(5, 50);
  const BackwardEstimator est(c, kWindow);
  const std::vector<double> grid{0.1, 0.3, 0.5};
  const auto ev = est.evaluate(grid);
  const MultiplierProcess p(est, ev);
  const std::size_t m = 5000;
  std::vector<double> g(p.contributors()), w(grid.size());
  std::normal_distribution<double> normal;
  std::vector<double> sum(9, 0.0), sq(9, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    auto rng = make_rng(31, r);
    for (auto& x : g) x = normal(rng);
    normal.reset();
    p.draw(g, w);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double prod = w[i] * w[j];
        sum[i * 3 + j] += prod;
        sq[i * 3 + j] += prod * prod;
      }
  }
  const auto cov = est.covariance_matrix(grid);
  for (int k = 0; k < 9; ++k) {
    const double mean = sum[k] / m;
    const double se = std::sqrt((sq[k] / m - mean * mean) / m);
    CHECK(std::abs(mean - cov[k]) <= 5.0 * se);
  }
}
