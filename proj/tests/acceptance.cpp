// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--known-failure N]... [--only N]... [--out DIR]
//
// Criteria listed with --known-failure print "FAIL (known)" and do not
// affect the exit status. A listed criterion that passes is reported.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "CLI11.hpp"
#include "rwad/experiments/config.hpp"
#include "rwad/experiments/expression.hpp"
#include "rwad/experiments/runners.hpp"
#include "rwad/model.hpp"

namespace fs = std::filesystem;
using namespace rwad;
using namespace rwad::experiments;

namespace {

ExperimentConfig config(const std::string& file) { return load_config(fs::path(RWAD_CONFIG_DIR) / file); }

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Worst drift and population defect over every propagation the suite performs.
struct Tally {
  double drift = 0.0;
  double population = 0.0;
  int trajectories = 0;

  void add(const Trajectory& t) {
    drift = std::max(drift, t.max_norm_drift());
    population = std::max(population, t.max_population_defect());
    ++trajectories;
  }
  void add(const TransferRun& r) {
    add(r.fast);
    add(r.reference);
  }
};

struct Outcome {
  bool passed = false;
  std::string detail;
};

class Suite {
 public:
  Suite(std::set<int> known, std::set<int> only) : known_(std::move(known)), only_(std::move(only)) {}

  void run(int id, const std::string& title, const std::function<Outcome()>& body) {
    if (!only_.empty() && !only_.count(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = since(t0);
    std::string status = o.passed ? "PASS" : "FAIL";
    if (!o.passed && known_.count(id)) status = "FAIL (known)";
    fmt::print("criterion {} {}: {} [{:.1f} s] {}\n", id, title, status, secs, o.detail);
    if (o.passed && known_.count(id)) fmt::print("  note: criterion {} is listed as a known failure but passed\n", id);
    std::fflush(stdout);
    if (!o.passed && !known_.count(id)) ++unexpected_;
  }

  int unexpected() const { return unexpected_; }

 private:
  std::set<int> known_;
  std::set<int> only_;
  int unexpected_ = 0;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-8"};
  std::vector<int> known_list, only_list;
  fs::path out = fs::temp_directory_path() / "rwad_acceptance";
  app.add_option("--known-failure", known_list, "Criterion expected to fail");
  app.add_option("--only", only_list, "Run only these criteria");
  app.add_option("--out", out, "Scratch directory for rerun artifacts");
  CLI11_PARSE(app, argc, argv);

  Suite suite({known_list.begin(), known_list.end()}, {only_list.begin(), only_list.end()});
  Tally tally;
  std::vector<std::pair<std::string, InvariantReport>> invariants;
  TransferRun chirp7;  // shared by criteria 3 and 4

  suite.run(1, "frame equivalence", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig c = config("chirp_surrogate.ini");
    c.grid_points = 512;
    const Setup s = prepare(c);
    const FrameAgreement f = frame_agreement(c, s, 0.05, 1.5);
    tally.add(f.lab);
    tally.add(f.rotating);
    invariants.emplace_back("chirp3", invariant_spot_check(s, 0.05, 1.5, false, 11));
    const double secs = since(t0);
    return Outcome{f.sup_difference <= 1e-5 && secs <= 30.0,
                   fmt::format("sup |psi_lab - V psi_rot| = {:.3e} <= 1e-5, {:.1f} s <= 30 s", f.sup_difference, secs)};
  });

  suite.run(2, "rate law", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig c = config("rate_sweep.ini");
    const std::vector<RateSweep> sweeps = rate_sweep(c, 1);
    const double secs = since(t0);
    bool ok = secs <= 300.0;
    std::string detail;
    for (const RateSweep& sw : sweeps) {
      for (const RatePoint& p : sw.points) {
        tally.drift = std::max(tally.drift, p.norm_drift);
        ok = ok && p.valid;
      }
      const bool within = sw.slope && std::abs(*sw.slope - sw.rate) <= 0.25;
      ok = ok && within;
      detail += fmt::format("alpha {:g}: kappa {} slope {} vs {:.3f}; ", sw.alpha, sw.kappa,
                            sw.slope ? fmt::format("{:.3f}", *sw.slope) : "n/a", sw.rate);
    }
    return Outcome{ok, detail + fmt::format("{:.0f} s <= 300 s", secs)};
  });

  suite.run(3, "seven-level chirp", [&] {
    const ExperimentConfig c = config("chirp_7level.ini");
    const Setup s = prepare(c);
    chirp7 = transfer_run(c, s, 0.01, 1.2);
    const TransferRun sub = transfer_run(c, s, 0.01, 0.8);
    tally.add(chirp7);
    tally.add(sub);
    invariants.emplace_back("chirp7", invariant_spot_check(s, 0.01, 1.2, false, 12));
    const double drop = chirp7.target_population - sub.target_population;
    return Outcome{chirp7.target_population >= 0.9 && drop >= 0.2,
                   fmt::format("p_7(1.2) = {:.4f} >= 0.9, p_7(1.2) - p_7(0.8) = {:.4f} >= 0.2",
                               chirp7.target_population, drop)};
  });

  suite.run(4, "seven-level STIRAP", [&] {
    const ExperimentConfig c = config("stirap_7level.ini");
    const Setup s = prepare(c);
    const TransferRun st = transfer_run(c, s, 0.01, 1.2);
    tally.add(st);
    invariants.emplace_back("stirap7", invariant_spot_check(s, 0.01, 1.2, false, 13));
    if (chirp7.fast.size() == 0) {
      const ExperimentConfig cc = config("chirp_7level.ini");
      chirp7 = transfer_run(cc, prepare(cc), 0.01, 1.2);
      tally.add(chirp7);
    }
    return Outcome{st.target_population >= 0.9 && st.max_intermediate < chirp7.max_intermediate,
                   fmt::format("p_7 = {:.4f} >= 0.9, max intermediate {:.4f} < chirp {:.4f}", st.target_population,
                               st.max_intermediate, chirp7.max_intermediate)};
  });

  suite.run(5, "eigenvalue crossings", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<CrossingCase> cases = crossing_cases(config("crossings.ini"), 1);
    bool ok = cases.size() == 5;
    double worst = 0.0;
    std::string detail;
    for (const CrossingCase& cc : cases) {
      for (const CrossingReport* r : {&cc.w1_zero, &cc.w2_zero}) {
        ok = ok && r->counts_match && r->monotone;
        for (const Crossing& x : r->crossings) worst = std::max(worst, x.residual);
      }
      detail += fmt::format("m={}: {}/{} ", cc.m, cc.w1_zero.crossings.size(), cc.w2_zero.crossings.size());
    }
    const double secs = since(t0);
    ok = ok && worst <= 1e-9 && secs <= 60.0;
    return Outcome{ok, detail + fmt::format("counts and monotonicity {}, residual {:.1e} <= 1e-9, {:.1f} s <= 60 s",
                                            ok ? "match" : "checked", worst, secs)};
  });

  suite.run(6, "oscillatory decay order", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<OscillatoryResult> rs = oscillatory_results(config("oscillatory.ini"), 1);
    bool ok = rs.size() >= 3;
    std::string detail;
    for (const OscillatoryResult& r : rs) {
      ok = ok && r.order.slope >= r.expected - 0.3;
      detail += fmt::format("{}: {:.3f} >= {:.2f}; ", r.name, r.order.slope, r.expected - 0.3);
    }
    // a = 1, h = 0: sup |int| = 2 eps^(alpha+1) / beta, so the slope is alpha + 1 exactly.
    const auto flat = std::find_if(rs.begin(), rs.end(), [](const auto& r) { return r.name == "flat"; });
    ok = ok && flat != rs.end() && std::abs(flat->order.slope - flat->expected) <= 1e-3;
    const double secs = since(t0);
    ok = ok && secs <= 60.0;
    return Outcome{ok, detail + fmt::format("{:.1f} s <= 60 s", secs)};
  });

  suite.run(7, "ensemble robustness", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig c = config("ensemble.ini");
    const EnsembleResult e = ensemble_sweep(c, 1);
    for (const TransferRun& r : e.runs) tally.add(r);
    invariants.emplace_back("ensemble", invariant_spot_check(prepare(c), 0.05, 3.0, false, 14));
    const double secs = since(t0);
    const bool ok = e.points.size() == 9 && e.worst_transfer >= 0.9 && e.max_error <= 2.0 * e.median_error &&
                    secs <= 300.0;
    return Outcome{ok, fmt::format("worst transfer {:.4f} >= 0.9, max error {:.3e} <= 2 x median {:.3e}, "
                                   "{:.0f} s <= 300 s",
                                   e.worst_transfer, e.max_error, e.median_error, secs)};
  });

  suite.run(8, "invariants", [&] {
    // Equally spaced ladder: one gap realized by three pairs, so the carrier
    // phase depends on which pair represents it unless the phases are gauge-consistent.
    Setup rs;
    CMat h1 = CMat::Zero(4, 4);
    h1(0, 1) = h1(1, 0) = 1.0;
    h1(1, 2) = h1(2, 1) = 0.5;
    h1(2, 3) = h1(3, 2) = 2.0;
    rs.system = QuantumSystem({0, 1, 2, 3}, h1);
    rs.structure = spectral_gaps(rs.system);
    const ScalarFn f = parse_function("0.7*sin(2.3*tau) - 1.1*tau");
    const ScalarFn common = parse_function("0.4*tau - 0.9*tau^2");
    rs.schedule.envelopes = EnvelopeSchedule{{parse_function("sin(pi*tau)")}};
    rs.schedule.phases = PhaseVector({common, common + f, common + 2.0 * f, common + 3.0 * f});
    for (double eps : {0.05, 0.01})
      invariants.emplace_back(fmt::format("resonant eps {}", eps), invariant_spot_check(rs, eps, 1.5, false, 15));

    double split = 0.0, gauge = 0.0;
    for (const auto& [name, inv] : invariants) {
      split = std::max(split, inv.split_sum_defect);
      gauge = std::max({gauge, inv.gauge_defect, inv.representative_difference});
    }

    ExperimentConfig det = config("chirp_surrogate.ini");
    det.grid_points = 129;
    RunOptions a, b;
    a.out_dir = out / "rerun_a";
    b.out_dir = out / "rerun_b";
    b.threads = 2;
    fs::remove_all(a.out_dir);
    fs::remove_all(b.out_dir);
    const RunReport ra = run_experiment(det, a);
    run_experiment(det, b);
    int csvs = 0, identical = 0;
    for (const fs::path& f : ra.files) {
      if (f.extension() != ".csv") continue;
      ++csvs;
      if (slurp(f) == slurp(b.out_dir / f.filename())) ++identical;
    }

    const bool ok = tally.drift <= 1e-8 && tally.population <= 1e-8 && split == 0.0 && gauge <= 1e-12 &&
                    csvs > 0 && identical == csvs;
    return Outcome{ok, fmt::format("drift {:.1e} and population defect {:.1e} <= 1e-8 over {} trajectories, "
                                   "split sum defect {:g}, gauge {:.1e} <= 1e-12 over {} systems, "
                                   "{}/{} CSV files identical on rerun",
                                   tally.drift, tally.population, tally.trajectories, split, gauge,
                                   invariants.size(), identical, csvs)};
  });

  if (suite.unexpected() > 0) {
    fmt::print("{} unexpected failure(s)\n", suite.unexpected());
    return 1;
  }
  return 0;
}
