#include <cmath>

#include "bwproc/backward.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace bwproc;
using oracle::subject;

namespace {

const EstimandWindow kCensoredWindow{1.0, 4.0, 1.0};
const EstimandWindow kRandomWindow{0.5, 4.0, 0.5};

std::vector<double> grid_of(const BackwardEstimator& est, int points) {
  std::vector<double> g;
  for (int k = 0; k <= points; ++k) g.push_back(est.window().tau0 * k / points);
  return g;
}

}  // namespace

TEST_CASE("marked cumulative hazard examples") {
  const auto c = validate_cohort({subject("a", 0, 2, true, {{1.5, 5}}), subject("b", 0, 3, false),
                                  subject("c", 0, 0.5, false)});
  const auto curve = product_limit(c);
  CHECK(marked_cum_hazard(c, curve, 1.0, 3.0, 1.0) == doctest::Approx(2.5));
  CHECK(marked_cum_hazard(c, curve, 1.0, 1.5, 1.0) == 0.0);
  CHECK(marked_cum_hazard(c, curve, 1.0, 3.0, 0.0) == 0.0);
}

TEST_CASE("backward mean on the fixtures") {
  CHECK(backward_mean(oracle::complete_fixture(), {1, 10, 1}, 1.0) == doctest::Approx(11.0 / 3.0));
  CHECK(backward_mean(oracle::censored_fixture(), kCensoredWindow, 1.0) == doctest::Approx(3.5));
  CHECK(backward_mean(oracle::censored_fixture(), kCensoredWindow, 0.0) == 0.0);
}

TEST_CASE("degenerate window") {
  CHECK_THROWS_WITH_AS(backward_mean(oracle::censored_fixture(), {2.5, 4.0, 1.0}, 1.0),
                       doctest::Contains("no identifiable failure mass"), Error);
}

TEST_CASE("H^ examples") {
  const auto c = oracle::censored_fixture();
  const BackwardEstimator est(c, kCensoredWindow);
  CHECK(est.h_hat(1.0, 1.0) ==
        doctest::Approx(est.s_t1() * est.mass() * est.mean(1.0)).epsilon(1e-12));
  CHECK(est.h_hat(1.5, 1.0) == doctest::Approx(7.0 / 3.0));
  CHECK(est.h_hat(2.0, 1.0) == doctest::Approx(17.0 / 9.0));
  // S^(t2) = 0 once everyone has failed.
  const auto all = validate_cohort({subject("a", 0, 2, true, {{1.5, 5}}), subject("b", 0, 3, true)});
  CHECK(h_hat(all, {1, 4, 1}, 4.0, 1.0) == 0.0);
  // Past every in-window failure only the S^(t2) branch remains.
  CHECK(est.h_hat(3.5, 1.0) == doctest::Approx(est.s_t2() * 7.0 / 3.0));
}

TEST_CASE("covariance by hand") {
  const auto c = oracle::censored_fixture();
  const BackwardEstimator est(c, kCensoredWindow);
  // a_C = 2 - 3.5, a_A = 10/3 - 17/6; scales 3/2 and 9/4.
  CHECK(est.influence(0, 1.0) == doctest::Approx(-1.5));
  CHECK(est.influence(1, 1.0) == doctest::Approx(0.5));
  CHECK(est.covariance(1.0, 1.0) == doctest::Approx(2.109375));
  CHECK(covariance(c, kCensoredWindow, 0.2, 1.0) == 0.0);

  // One in-window subject: a_1 = S^(x) V - H^/D vanishes.
  const auto single = validate_cohort({subject("a", 0, 2, true, {{1.5, 4}}), subject("b", 0, 0.5, true)});
  const BackwardEstimator one(single, {1, 4, 1});
  CHECK(one.mean(1.0) == doctest::Approx(4.0));
  CHECK(one.influence(0, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("pointwise intervals") {
  CHECK(normal_critical(0.95) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  const auto c = oracle::censored_fixture();
  const BackwardEstimator est(c, kCensoredWindow);
  const std::vector<double> grid{0.0, 1.0};
  const auto curve = est.curve(grid);
  const auto ci = pointwise_ci(curve, 0.95);
  const double half = 1.959963984540054 * std::sqrt(2.109375 / 3.0);
  CHECK(ci[1].lo == doctest::Approx(3.5 - half));
  CHECK(ci[1].hi == doctest::Approx(3.5 + half));
  CHECK(ci[0].lo == 0.0);
  CHECK(ci[0].hi == 0.0);
  CHECK_THROWS_AS(pointwise_ci(curve, 0.95, IntervalKind::log), Error);
  const std::vector<double> top{1.0};
  const auto lg = pointwise_ci(est.curve(top), 0.95, IntervalKind::log);
  CHECK(std::sqrt(lg[0].lo * lg[0].hi) == doctest::Approx(3.5));
}

TEST_CASE("agreement with brute-force formulas on random cohorts") {
  std::mt19937_64 rng(21);
  int checked = 0;
  for (int rep = 0; rep < 25; ++rep) {
    const auto c = validate_cohort(oracle::random_subjects(rng, 30));
    const BackwardEstimator est(c, kRandomWindow);
    const auto grid = est.default_grid();
    const auto ev = est.evaluate(grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double u = grid[g];
      CHECK(ev.mu[g] == doctest::Approx(oracle::mean(c, kRandomWindow, u)).epsilon(1e-10));
      CHECK(est.mean(u) == doctest::Approx(oracle::mean(c, kRandomWindow, u)).epsilon(1e-10));
      CHECK(ev.sigma[g] * ev.sigma[g] ==
            doctest::Approx(oracle::sigma(c, kRandomWindow, u, u)).epsilon(1e-9).scale(1.0));
      for (std::size_t i = 0; i < est.contributors().size(); ++i) {
        const auto& s = c[est.contributors()[i].subject];
        CHECK(ev.influence[i * grid.size() + g] ==
              doctest::Approx(oracle::a(c, kRandomWindow, s, u)).epsilon(1e-10).scale(1.0));
      }
      ++checked;
    }
    for (double s : {0.5, 1.0, 2.0, 3.0, 4.0})
      CHECK(est.h_hat(s, 0.5) == doctest::Approx(oracle::h(c, kRandomWindow, s, 0.5)).epsilon(1e-10));
  }
  CHECK(checked > 25);
}

TEST_CASE("normalization identity") {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 25; ++rep) {
    auto raw = oracle::random_subjects(rng, 40);
    const auto c = validate_cohort(raw);
    const BackwardEstimator est(c, kRandomWindow);
    double sum = 0.0;
    for (const auto& ct : est.contributors()) sum += ct.weight;
    CHECK(sum == doctest::Approx(est.mass()).epsilon(1e-10));
    // V == 1: one unit mark at the failure instant.
    for (auto& s : raw) s.events = {{s.x, 1.0}};
    const auto ones = validate_cohort(raw);
    CHECK(backward_mean(ones, kRandomWindow, 0.0) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("complete-data reduction") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    auto raw = oracle::random_subjects(rng, 40);
    for (auto& s : raw) {
      for (auto& e : s.events) e.time -= s.w;
      s.x -= s.w;
      s.w = 0.0;
      s.delta = true;
    }
    const auto c = validate_cohort(raw);
    for (double u : {0.0, 0.1, 0.25, 0.5}) {
      double sum = 0.0, k = 0.0;
      for (const auto& s : c.subjects())
        if (kRandomWindow.contains(s.x)) {
          sum += backward_value(s, u);
          k += 1;
        }
      CHECK(backward_mean(c, kRandomWindow, u) == doctest::Approx(sum / k).epsilon(1e-10));
    }
  }
}

TEST_CASE("window additivity") {
  std::mt19937_64 rng(24);
  for (int rep = 0; rep < 25; ++rep) {
    const auto c = validate_cohort(oracle::random_subjects(rng, 50));
    const auto curve = product_limit(c);
    const double m = 1.0 + 2.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const EstimandWindow left{0.5, m, 0.5}, right{m, 4.0, 0.5};
    const BackwardEstimator whole(c, curve, kRandomWindow);
    double rhs = 0.0;
    for (const auto& part : {left, right}) {
      try {
        const BackwardEstimator e(c, curve, part);
        rhs += e.mass() * e.mean(0.4);
      } catch (const Error&) {
        // A part without failure mass contributes zero.
      }
    }
    CHECK(whole.mass() * whole.mean(0.4) == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("Gram matrix is symmetric positive semidefinite") {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> unit(0, 1);
  for (int rep = 0; rep < 20; ++rep) {
    const auto c = validate_cohort(oracle::random_subjects(rng, 40));
    const BackwardEstimator est(c, kRandomWindow);
    std::vector<double> grid;
    for (int k = 0; k < 8; ++k) grid.push_back(0.5 * unit(rng));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const auto cov = est.covariance_matrix(grid);
    const std::size_t G = grid.size();
    for (std::size_t i = 0; i < G; ++i)
      for (std::size_t j = 0; j < G; ++j) {
        CHECK(cov[i * G + j] == doctest::Approx(cov[j * G + i]).epsilon(1e-12));
        CHECK(cov[i * G + j] == doctest::Approx(est.covariance(grid[i], grid[j])).epsilon(1e-10).scale(1.0));
      }
    // Random quadratic forms are nonnegative.
    for (int t = 0; t < 50; ++t) {
      std::vector<double> z(G);
      for (auto& x : z) x = unit(rng) - 0.5;
      double q = 0.0, norm = 0.0;
      for (std::size_t i = 0; i < G; ++i)
        for (std::size_t j = 0; j < G; ++j) {
          q += z[i] * cov[i * G + j] * z[j];
          norm += std::abs(z[i] * cov[i * G + j] * z[j]);
        }
      CHECK(q >= -1e-10 * (norm + 1e-300));
    }
  }
}

TEST_CASE("scale equivariance and monotonicity") {
  std::mt19937_64 rng(26);
  for (int rep = 0; rep < 15; ++rep) {
    const auto raw = oracle::random_subjects(rng, 40);
    auto scaled = raw;
    const double k = 3.7;
    for (auto& s : scaled)
      for (auto& e : s.events) e.mark *= k;
    const auto c = validate_cohort(raw), cs = validate_cohort(scaled);
    const BackwardEstimator a(c, kRandomWindow), b(cs, kRandomWindow);
    const auto grid = grid_of(a, 20);
    const auto ca = a.curve(grid), cb = b.curve(grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      CHECK(cb.mu[g] == doctest::Approx(k * ca.mu[g]).epsilon(1e-10));
      CHECK(cb.sigma[g] * cb.sigma[g] == doctest::Approx(k * k * ca.sigma[g] * ca.sigma[g]).epsilon(1e-10));
      if (g > 0) CHECK(ca.mu[g] >= ca.mu[g - 1]);
    }
  }
}

TEST_CASE("default grid and first positive time") {
  const auto c = oracle::censored_fixture();
  const BackwardEstimator est(c, kCensoredWindow);
  CHECK(est.default_grid() == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(est.first_positive() == 0.5);
  const std::vector<double> bad{0.5, 0.2};
  CHECK_THROWS_AS(est.evaluate(bad), Error);
  const std::vector<double> beyond{0.5, 1.5};
  CHECK_THROWS_AS(est.evaluate(beyond), Error);
}
