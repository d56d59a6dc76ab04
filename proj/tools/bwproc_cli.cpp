// Command-line front end: every estimator reads subjects.csv/events.csv and
// writes one table (CSV or JSON) plus a JSON sidecar describing the run.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "bwproc/backward.hpp"
#include "bwproc/bands.hpp"
#include "bwproc/dist.hpp"
#include "bwproc/forward.hpp"
#include "bwproc/io.hpp"
#include "bwproc/rate.hpp"
#include "bwproc/simulate.hpp"

using namespace bwproc;
using json = nlohmann::ordered_json;

namespace {

using Cell = std::variant<double, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

struct Common {
  std::string subjects = "subjects.csv";
  std::string events = "events.csv";
  std::string out;  // empty: stdout
  std::string format = "csv";
  int threads = 0;
  double t1 = 1.0, t2 = 20.0, tau0 = 1.0;
  std::vector<double> grid;
};

void write_table(std::ostream& os, const Table& t, const std::string& format) {
  if (format == "json") {
    json rows = json::array();
    for (const auto& r : t.rows) {
      json o = json::object();
      for (std::size_t k = 0; k < r.size(); ++k)
        std::visit([&](const auto& v) { o[t.header[k]] = v; }, r[k]);
      rows.push_back(std::move(o));
    }
    os << rows.dump(2) << '\n';
    return;
  }
  CsvWriter csv(os, t.header);
  for (const auto& r : t.rows) {
    for (const auto& c : r) std::visit([&](const auto& v) { csv.cell(v); }, c);
    csv.end_row();
  }
}

std::string fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

void emit(const Common& c, const Table& t, json sidecar) {
  if (c.out.empty()) {
    write_table(std::cout, t, c.format);
    return;
  }
  {
    std::ofstream f(c.out);
    if (!f) throw Error("cannot write " + c.out);
    write_table(f, t, c.format);
  }
  sidecar["config_hash"] = fnv1a(sidecar.dump());
  sidecar["output"] = c.out;
  sidecar["format"] = c.format;
  sidecar["columns"] = t.header;
  std::ofstream f(c.out + ".json");
  if (!f) throw Error("cannot write " + c.out + ".json");
  f << sidecar.dump(2) << '\n';
}

EstimandWindow window_of(const Common& c) {
  EstimandWindow w{c.t1, c.t2, c.tau0};
  w.validate();
  return w;
}

json base_sidecar(const std::string& command, const Common& c, const Cohort& cohort) {
  json j;
  j["command"] = command;
  j["subjects"] = c.subjects;
  j["events"] = c.events;
  j["n"] = cohort.size();
  if (!cohort.event_times().empty())
    j["observed_failure_range"] = {cohort.event_times().front(), cohort.event_times().back()};
  return j;
}

json window_json(const BackwardEstimator& est) {
  json j;
  j["t1"] = est.window().t1;
  j["t2"] = est.window().t2;
  j["tau0"] = est.window().tau0;
  j["s_t1"] = est.s_t1();
  j["s_t2"] = est.s_t2();
  j["failure_mass"] = est.mass();
  j["contributors"] = est.contributors().size();
  return j;
}

std::vector<double> grid_or_default(const Common& c, const BackwardEstimator& est) {
  if (c.grid.empty()) return est.default_grid();
  auto g = c.grid;
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

void add_common(CLI::App* app, Common& c, bool needs_window) {
  app->add_option("--subjects", c.subjects, "subjects CSV (id,w,x,delta)");
  app->add_option("--events", c.events, "events CSV (id,time,mark)");
  app->add_option("--out", c.out, "output file; a <out>.json sidecar is written next to it");
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--threads", c.threads, "worker threads (overrides BWPROC_THREADS)");
  if (needs_window) {
    app->add_option("--t1", c.t1, "lower failure-time bound");
    app->add_option("--t2", c.t2, "upper failure-time bound (exclusive)");
    app->add_option("--tau0", c.tau0, "backward horizon");
    app->add_option("--grid", c.grid, "backward times; default is every jump point in [0, tau0]")
        ->delimiter(',');
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backward stochastic process estimation under left truncation and right censoring"};
  app.require_subcommand(1);

  Common common;
  double level = 0.95;
  double alpha = 0.05;
  std::size_t band_reps = 1000;
  std::uint64_t seed = 1;
  std::string band_kind = "plain";
  std::vector<double> qs{0.25, 0.5, 0.75};
  double dist_u = 1.0;
  double dist_t = std::nan("");
  std::string kernel = "epanechnikov";
  double bandwidth = 0.0;
  std::vector<double> bandwidth_grid;
  std::vector<double> times;
  bool shift = false;

  auto* survival = app.add_subcommand("survival", "product-limit curve (t, s_hat, risk_fraction, cum_hazard)");
  add_common(survival, common, false);

  auto* mean = app.add_subcommand("mean", "backward mean with pointwise intervals");
  add_common(mean, common, true);
  mean->add_option("--level", level, "pointwise confidence level");

  auto* bands = app.add_subcommand("bands", "backward mean with multiplier-bootstrap bands");
  add_common(bands, common, true);
  bands->add_option("--alpha", alpha, "1 - simultaneous coverage");
  bands->add_option("--band-reps", band_reps, "multiplier replicates");
  bands->add_option("--seed", seed, "RNG seed");
  bands->add_option("--band-kind", band_kind)->check(CLI::IsMember({"plain", "log"}));

  auto* quantile = app.add_subcommand("quantile", "pointwise percentile curves of V(u)");
  add_common(quantile, common, true);
  quantile->add_option("--q", qs, "probabilities in (0,1)")->delimiter(',');

  auto* dist = app.add_subcommand("dist", "joint distribution P(V(u) <= m, T <= t | window)");
  add_common(dist, common, true);
  dist->add_option("--u", dist_u, "backward time");
  dist->add_option("--t", dist_t, "failure-time cut in [t1, t2); default just below t2");

  auto* rate = app.add_subcommand("rate", "kernel-smoothed backward rate");
  add_common(rate, common, true);
  rate->add_option("--kernel", kernel)->check(CLI::IsMember({"epanechnikov", "box", "gaussian"}));
  auto* bw = rate->add_option("--bandwidth", bandwidth, "fixed bandwidth");
  rate->add_option("--bandwidth-grid", bandwidth_grid, "candidates for cross-validation")
      ->delimiter(',')
      ->excludes(bw);

  auto* forward = app.add_subcommand("forward-mean", "mean forward process");
  add_common(forward, common, false);
  forward->add_option("--times", times, "forward times; default every process event time")->delimiter(',');

  for (auto* sub : {mean, bands, quantile, dist, rate})
    sub->add_flag("--prevalent-shift", shift, "move prevalent entry times forward by tau0 first");

  auto* simulate = app.add_subcommand("simulate", "simulation study tools");
  simulate->require_subcommand(1);
  SimConfig sim;
  std::string arms = "iid";
  std::size_t big_n = 1000000;
  std::string subjects_out = "subjects.csv", events_out = "events.csv";
  auto sim_options = [&](CLI::App* a) {
    a->add_option("--n", sim.n, "retained subjects per data set");
    a->add_option("--seed", sim.seed, "master seed");
    a->add_option("--arms", arms, "arm sampling")->check(CLI::IsMember({"iid", "balanced"}));
    a->add_option("--threads", common.threads, "worker threads (overrides BWPROC_THREADS)");
  };
  auto* table1 = simulate->add_subcommand("table1", "replicate the simulation study");
  sim_options(table1);
  table1->add_option("--reps", sim.replicates, "simulated data sets");
  table1->add_option("--band-reps", sim.band_reps, "multiplier replicates per data set");
  table1->add_option("--out", common.out, "report CSV; a <out>.json sidecar is written next to it");
  table1->add_option("--format", common.format)->check(CLI::IsMember({"csv", "json"}));
  auto* oracle = simulate->add_subcommand("oracle", "Monte Carlo truth E(V(u) | t1 <= T < t2)");
  sim_options(oracle);
  oracle->add_option("--big-n", big_n, "complete subjects to draw");
  oracle->add_option("--out", common.out, "output CSV");
  oracle->add_option("--format", common.format)->check(CLI::IsMember({"csv", "json"}));
  auto* cohort_cmd = simulate->add_subcommand("cohort", "write one simulated data set as CSV");
  sim_options(cohort_cmd);
  cohort_cmd->add_option("--subjects-out", subjects_out);
  cohort_cmd->add_option("--events-out", events_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (common.threads > 0) setenv("BWPROC_THREADS", std::to_string(common.threads).c_str(), 1);

    if (simulate->parsed()) {
      sim.arms = arms == "balanced" ? ArmSampling::balanced : ArmSampling::iid;
      json j;
      j["seed"] = sim.seed;
      j["n"] = sim.n;
      j["arms"] = arms;
      j["window"] = {{"t1", sim.window.t1}, {"t2", sim.window.t2}, {"tau0", sim.window.tau0}};
      if (table1->parsed()) {
        const auto rep = run_study(sim);
        Table t{{"u", "truth", "naive_incident", "naive_prevalent", "estimate", "sse", "see", "coverage",
                 "naive_incident_mcse", "naive_prevalent_mcse", "estimate_mcse", "coverage_mcse"},
                {}};
        for (const auto& r : rep.rows)
          t.rows.push_back({r.u, r.truth, r.naive_incident, r.naive_prevalent, r.estimate, r.sse, r.see,
                            r.coverage, r.naive_incident_mcse, r.naive_prevalent_mcse, r.estimate_mcse,
                            r.coverage_mcse});
        j["command"] = "simulate table1";
        j["replicates"] = rep.replicates;
        j["band_reps"] = sim.band_reps;
        j["alpha"] = sim.alpha;
        j["failed_replicates"] = rep.failed;
        j["naive_failed_replicates"] = rep.naive_failed;
        j["band_coverage"] = rep.band_coverage;
        j["log_band_coverage"] = rep.log_band_coverage;
        j["band_flags"] = rep.band_flags;
        j["mean_analyzed_n"] = rep.mean_analyzed_n;
        j["mean_prevalent_share"] = rep.mean_prevalent_share;
        emit(common, t, j);
      } else if (oracle->parsed()) {
        const auto o = true_mean_oracle(sim, sim.eval_grid, big_n, sim.seed);
        Table t{{"u", "truth_mc", "mc_se", "truth_closed_form"}, {}};
        for (std::size_t k = 0; k < o.u.size(); ++k)
          t.rows.push_back({o.u[k], o.mean[k], o.mc_se[k], analytic_truth(sim, o.u[k])});
        j["command"] = "simulate oracle";
        j["big_n"] = big_n;
        j["in_window"] = o.in_window;
        emit(common, t, j);
      } else {
        const auto c = generate_cohort(sim, sim.seed);
        std::ofstream s(subjects_out), e(events_out);
        if (!s || !e) throw Error("cannot write cohort files");
        write_subjects(s, c);
        write_events(e, c);
      }
      return 0;
    }

    Cohort cohort = ingest_files(common.subjects, common.events);

    if (survival->parsed()) {
      const auto curve = product_limit(cohort);
      Table t{{"t", "s_hat", "risk_fraction", "cum_hazard"}, {}};
      for (std::size_t k = 0; k < curve.event_times.size(); ++k)
        t.rows.push_back({curve.event_times[k], curve.s_left[k], curve.risk_fraction[k], curve.cum_hazard[k]});
      auto j = base_sidecar("survival", common, cohort);
      j["s_hat_convention"] = "left-continuous P(T >= t)";
      j["s_final"] = curve.s_final();
      emit(common, t, j);
      return 0;
    }

    if (forward->parsed()) {
      const auto curve = product_limit(cohort);
      if (times.empty()) {
        for (const auto& s : cohort.subjects())
          for (const auto& e : s.events) times.push_back(e.time);
      }
      std::sort(times.begin(), times.end());
      times.erase(std::unique(times.begin(), times.end()), times.end());
      const auto mu = forward_mean_curve(cohort, curve, times);
      Table t{{"t", "mu_Y"}, {}};
      for (std::size_t k = 0; k < times.size(); ++k) t.rows.push_back({times[k], mu[k]});
      emit(common, t, base_sidecar("forward-mean", common, cohort));
      return 0;
    }

    const auto window = window_of(common);
    if (shift) cohort = apply_prevalent_shift(cohort, window.tau0);
    const BackwardEstimator est(cohort, window);
    auto j = base_sidecar(app.get_subcommands().front()->get_name(), common, cohort);
    j["identifiable_window"] = window_json(est);
    j["prevalent_shift"] = shift;

    if (mean->parsed() || bands->parsed()) {
      const auto grid = grid_or_default(common, est);
      const auto ev = est.evaluate(grid);
      BackwardCurve curve{window, ev.grid, ev.mu, ev.sigma, est.n()};
      const double ci_level = bands->parsed() ? 1.0 - alpha : level;
      const auto ci = pointwise_ci(curve, ci_level);
      Table t{{"u", "mu", "se", "ci_lo", "ci_hi"}, {}};
      if (bands->parsed()) {
        const auto crit = band_critical_values(est, ev, band_reps, alpha, seed);
        const auto kind = band_kind == "log" ? BandKind::log : BandKind::plain;
        const auto band = make_band(curve, crit, kind);
        t.header.push_back("band_lo");
        t.header.push_back("band_hi");
        for (std::size_t k = 0; k < grid.size(); ++k)
          t.rows.push_back({grid[k], curve.mu[k], curve.se(k), ci[k].lo, ci[k].hi, band.lo[k], band.hi[k]});
        j["alpha"] = alpha;
        j["band_reps"] = band_reps;
        j["seed"] = seed;
        j["band_kind"] = band_kind;
        j["b"] = crit.b;
        j["b_star"] = crit.b_star;
        j["critical_below_pointwise"] = crit.below_pointwise;
        j["excluded_grid_points"] = band.excluded;
        if (crit.below_pointwise) std::cerr << "warning: b* below the pointwise critical value\n";
      } else {
        for (std::size_t k = 0; k < grid.size(); ++k)
          t.rows.push_back({grid[k], curve.mu[k], curve.se(k), ci[k].lo, ci[k].hi});
        j["level"] = level;
      }
      emit(common, t, j);
    } else if (quantile->parsed()) {
      const auto grid = grid_or_default(common, est);
      Table t{{"u", "q", "m_hat"}, {}};
      for (double u : grid) {
        const auto sample = weighted_sample(est, u);
        for (double q : qs) t.rows.push_back({u, q, percentile(sample, q)});
      }
      j["q"] = qs;
      emit(common, t, j);
    } else if (dist->parsed()) {
      const auto sample = weighted_sample(est, dist_u);
      double t_cut = dist_t;
      if (std::isnan(t_cut)) {
        // All contributors have x < t2, so the largest x stands in for t2-.
        t_cut = window.t1;
        for (double x : sample.time) t_cut = std::max(t_cut, x);
      }
      std::vector<double> levels = sample.value;
      std::sort(levels.begin(), levels.end());
      levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
      Table t{{"m", "p_hat"}, {}};
      for (double m : levels) t.rows.push_back({m, joint_cdf(sample, window, m, t_cut)});
      j["u"] = dist_u;
      j["t"] = t_cut;
      try {
        j["pearson_v_t"] = pearson_correlation(sample);
      } catch (const Error& e) {
        j["pearson_v_t"] = nullptr;
        j["pearson_error"] = e.what();
      }
      emit(common, t, j);
    } else if (rate->parsed()) {
      KernelSpec spec{parse_kernel(kernel), bandwidth};
      if (!bandwidth_grid.empty()) {
        spec.bandwidth = select_bandwidth(est, spec.family, bandwidth_grid);
        j["bandwidth_grid"] = bandwidth_grid;
      } else if (!(bandwidth > 0.0)) {
        std::vector<double> candidates;
        for (int k = 0; k < 20; ++k) candidates.push_back(window.tau0 / 50.0 * std::pow(25.0, k / 19.0));
        spec.bandwidth = select_bandwidth(est, spec.family, candidates);
        j["bandwidth_grid"] = candidates;
      }
      std::vector<double> grid = common.grid;
      if (grid.empty())
        for (int k = 0; k <= 100; ++k) grid.push_back(window.tau0 * k / 100.0);
      const RateEstimator r(est);
      Table t{{"u", "r_hat", "h_used"}, {}};
      for (double u : grid) t.rows.push_back({u, r.rate(u, spec), spec.bandwidth});
      j["kernel"] = kernel;
      j["bandwidth"] = spec.bandwidth;
      emit(common, t, j);
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
