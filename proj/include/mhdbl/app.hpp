#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <string>
#include <vector>

#include "mhdbl/calibration.hpp"
#include "mhdbl/crocco.hpp"
#include "mhdbl/diagnostics.hpp"
#include "mhdbl/io.hpp"
#include "mhdbl/verify.hpp"

// Scenario-level drivers shared by the command-line tool and the acceptance runner.
namespace mhdbl {

namespace fs = std::filesystem;

/// Default output root: $MHDBL_OUT, else ./mhdbl-out.
inline fs::path default_output_root() {
  const char* env = std::getenv("MHDBL_OUT");
  return env && *env ? fs::path(env) : fs::path("mhdbl-out");
}

inline fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

inline std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------------------
// run

inline Drivers scenario_drivers(const Scenario& sc, const OuterFlow& of, const Grid2D& g) {
  if (!sc.manufactured()) return {};
  return manufactured_drivers(sc.manufactured_pair(), of, sc.cutoff(), g, sc.solver);
}

/// Runs the scenario. With a non-empty `out`, writes scenario.cfg, timeseries.csv
/// and snapshots (initial, every snapshot_every samples, final) into it.
inline RunRecord run_scenario(const Scenario& sc, const fs::path& out = {}) {
  sc.validate();
  const Grid2D g = sc.grid();
  const Cutoff c = sc.cutoff();
  const OuterFlow of = sc.outer_flow();
  const Drivers d = scenario_drivers(sc, of, g);
  RunOptions opt;
  if (sc.manufactured()) opt.drivers = &d;
  std::vector<std::string> snaps;
  int sample = 0;
  if (!out.empty()) {
    prepare_dir(out);
    save_scenario(sc, out / "scenario.cfg");
    opt.on_sample = [&](const State& s, const MonitorSample&) {
      if (sample == 0 || (sc.snapshot_every > 0 && sample % sc.snapshot_every == 0)) {
        char name[32];
        std::snprintf(name, sizeof name, "snap_%06d.bin", sample);
        write_snapshot(out / name, s, g);
        snaps.push_back(name);
      }
      ++sample;
    };
  }
  RunRecord rec = run_primal(sc.initial_state(), of, c, g, sc.solver, opt);
  if (!out.empty()) {
    const std::string last = "snap_final.bin";
    write_snapshot(out / last, rec.final_state, g);
    snaps.push_back(last);
    rec.snapshots = snaps;
    write_timeseries(out / "timeseries.csv", rec);
    auto o = open_out(out / "run.txt");
    o << "cause = " << to_string(rec.cause) << "\nsteps = " << rec.steps
      << "\nt_final = " << detail::fmt_double(rec.final_state.t) << "\n";
    if (!rec.message.empty()) o << "message = " << rec.message << "\n";
  }
  return rec;
}

inline double state_distance(const State& a, const State& b, const Grid2D& g) {
  return std::hypot(fd::l2(a.u - b.u, g), fd::l2(a.h - b.h, g));
}

struct EpsilonFamilyReport {
  std::vector<double> eps;
  std::vector<Termination> causes;
  std::vector<double> distance;  // distance[k] = ||run(eps_k) - run(eps_{k+1})|| at t_end
  bool strictly_decreasing() const {
    for (std::size_t k = 1; k < distance.size(); ++k)
      if (!(distance[k] < distance[k - 1])) return false;
    return true;
  }
};

/// One run per value of sc.eps_values; subdirectories eps_<k> when `out` is set.
inline EpsilonFamilyReport epsilon_family(const Scenario& sc, const fs::path& out = {}) {
  EpsilonFamilyReport rep;
  std::vector<std::future<RunRecord>> runs;
  for (std::size_t k = 0; k < sc.eps_values.size(); ++k) {
    Scenario s = sc;
    s.solver.eps = sc.eps_values[k];
    const fs::path dir = out.empty() ? fs::path() : out / ("eps_" + std::to_string(k));
    runs.push_back(std::async(std::launch::async, [s, dir] { return run_scenario(s, dir); }));
  }
  std::vector<State> finals;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    RunRecord r = runs[k].get();
    rep.eps.push_back(sc.eps_values[k]);
    rep.causes.push_back(r.cause);
    finals.push_back(std::move(r.final_state));
  }
  const Grid2D g = sc.grid();
  for (std::size_t k = 1; k < finals.size(); ++k) rep.distance.push_back(state_distance(finals[k - 1], finals[k], g));
  if (!out.empty()) {
    auto o = open_out(out / "epsilon.csv");
    o << "eps_a,eps_b,distance\n";
    for (std::size_t k = 0; k < rep.distance.size(); ++k)
      o << detail::fmt_double(rep.eps[k]) << ',' << detail::fmt_double(rep.eps[k + 1]) << ','
        << detail::fmt_double(rep.distance[k]) << '\n';
  }
  return rep;
}

// ---------------------------------------------------------------------------
// crocco-compare

inline CroccoCompareReport crocco_scenario(const Scenario& sc, const fs::path& out = {}) {
  sc.validate();
  const Grid2D g = sc.grid();
  const Cutoff c = sc.cutoff();
  const auto rep = crocco_compare(sc.initial_state(), sc.outer_flow(), c, g, sc.n_eta > 0 ? sc.n_eta : g.ny,
                                  sc.solver, sc.checkpoints);
  if (!out.empty()) {
    prepare_dir(out);
    save_scenario(sc, out / "scenario.cfg");
    auto o = open_out(out / "crocco.csv");
    o << "t,distance_u,distance_h,distance,psi_top_min\n";
    for (const auto& r : rep.rows)
      o << detail::fmt_double(r.t) << ',' << detail::fmt_double(r.distance_u) << ','
        << detail::fmt_double(r.distance_h) << ',' << detail::fmt_double(r.distance) << ','
        << detail::fmt_double(r.psi_top_min) << '\n';
  }
  return rep;
}

// ---------------------------------------------------------------------------
// uniqueness

inline UniquenessReport uniqueness_scenario(const Scenario& sc, double d, const fs::path& out = {}) {
  sc.validate();
  const Grid2D g = sc.grid();
  const auto rep = uniqueness_experiment(sc.initial_state(), uniqueness_perturbation(g), d, sc.outer_flow(),
                                         sc.cutoff(), g, sc.solver);
  if (!out.empty()) {
    prepare_dir(out);
    save_scenario(sc, out / "scenario.cfg");
    auto o = open_out(out / "uniqueness.csv");
    o << "t,N,psi_identity,hardy_lhs,hardy_rhs\n";
    for (const auto& s : rep.samples)
      o << detail::fmt_double(s.t) << ',' << detail::fmt_double(s.N) << ','
        << detail::fmt_double(s.psi_identity) << ',' << detail::fmt_double(s.hardy_lhs) << ','
        << detail::fmt_double(s.hardy_rhs) << '\n';
    auto m = open_out(out / "uniqueness.txt");
    m << "d = " << detail::fmt_double(rep.d) << "\nC_hat = " << detail::fmt_double(rep.C_hat)
      << "\nmax_N = " << detail::fmt_double(rep.max_N()) << "\nhardy_ok = " << rep.hardy_ok
      << "\nsup_a1 = " << detail::fmt_double(rep.sup_a1) << "\nsup_a2 = " << detail::fmt_double(rep.sup_a2)
      << "\nsup_b1 = " << detail::fmt_double(rep.sup_b1) << "\nsup_b2 = " << detail::fmt_double(rep.sup_b2)
      << "\nsup_c1 = " << detail::fmt_double(rep.sup_c1) << "\nsup_c2 = " << detail::fmt_double(rep.sup_c2)
      << "\n";
  }
  return rep;
}

// ---------------------------------------------------------------------------
// majorant

struct MajorantReport {
  double F0 = 0.0;
  double C = 0.0;
  std::vector<double> times, E, F_unit;
  MajorantResult z;
  MajorantComparison cmp;
};

inline int energy_order(const Scenario& sc) { return std::max(1, sc.solver.monitor_m); }

/// F0 and F_unit at the given times for the scenario's data.
inline MajorantInput majorant_input(const Scenario& sc, const std::vector<double>& times) {
  const Grid2D g = sc.grid();
  const Cutoff c = sc.cutoff();
  const OuterFlow of = sc.outer_flow();
  const auto& th = sc.solver.thresholds;
  MajorantInput mi;
  mi.delta0 = th.delta0;
  mi.times = times;
  mi.F0 = energy_functional(sc.initial_state(), of, c, g, energy_order(sc), th.l, th.delta0);
  for (double t : times)
    mi.Fts.push_back(source_functional(of, c, g, t, energy_order(sc), th.l, th.delta0, sc.solver.mu, sc.solver.kappa));
  return mi;
}

/// Compares E(t)^2 from a run with the majorant z(t) for constant C.
inline MajorantReport majorant_report(const Scenario& sc, const std::vector<double>& times,
                                      const std::vector<double>& E, double C) {
  MajorantInput mi = majorant_input(sc, times);
  MajorantReport r;
  r.F0 = mi.F0;
  r.C = C;
  r.times = times;
  r.E = E;
  r.F_unit = mi.Fts;
  mi.C = C;
  for (double& f : mi.Fts) f *= C;
  r.z = ode_majorant(mi);
  r.cmp = compare_majorant(times, E, r.z);
  return r;
}

inline void write_majorant(const fs::path& out, const MajorantReport& r) {
  using detail::fmt_double;
  auto in = open_out(out / "majorant_input.csv");
  in << "t,F_unit,F0\n";
  for (std::size_t k = 0; k < r.times.size(); ++k)
    in << fmt_double(r.times[k]) << ',' << fmt_double(r.F_unit[k]) << ',' << fmt_double(r.F0) << '\n';
  auto o = open_out(out / "majorant.csv");
  o << "t,E2,z,margin\n";
  for (std::size_t k = 0; k < r.times.size(); ++k)
    o << fmt_double(r.times[k]) << ',' << fmt_double(r.E[k] * r.E[k]) << ',' << fmt_double(r.z.z[k]) << ','
      << fmt_double(r.cmp.margin[k]) << '\n';
}

/// Reads scenario.cfg and timeseries.csv from a run directory.
inline MajorantReport majorant_from_run(const fs::path& run_dir, double C, bool write = true) {
  const Scenario sc = load_scenario(run_dir / "scenario.cfg");
  const CsvTable ts = read_csv(run_dir / "timeseries.csv");
  const auto r = majorant_report(sc, ts.values("t"), ts.values("E"), C);
  if (write) write_majorant(run_dir, r);
  return r;
}

// ---------------------------------------------------------------------------
// convergence

struct ConvergenceRow {
  std::string solver;  // primal | crocco
  std::string kind;    // space | time
  Scheme scheme = Scheme::imex_cn;
  int nx = 0, ny = 0;
  double dt = 0.0;
  double error = 0.0;  // space: error against the exact solution; time: level difference
  double order = 0.0;  // vs the previous row of the same series; 0 for the first
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double spatial_order[2] = {0.0, 0.0};      // primal, crocco; min over refinements
  double temporal_be[2] = {0.0, 0.0};
  double temporal_cn[2] = {0.0, 0.0};
};

inline constexpr double kSpatialOrder = 1.8;
inline constexpr double kTemporalOrderBE = 0.9;
inline constexpr double kTemporalOrderCN = 1.8;

namespace detail {

inline State primal_manufactured_final(const Scenario& sc, const Grid2D& g, const SolverConfig& cfg) {
  const ManufacturedPrimal m = sc.manufactured_pair();
  const OuterFlow of = sc.outer_flow();
  const Drivers d = manufactured_drivers(m, of, sc.cutoff(), g, cfg);
  RunOptions opt;
  opt.drivers = &d;
  const auto rec = run_primal(m.sample(0.0, g), of, sc.cutoff(), g, cfg, opt);
  if (rec.cause != Termination::t_end)
    throw Error("manufactured primal run stopped early: " + to_string(rec.cause));
  return rec.final_state;
}

inline CroccoState crocco_manufactured_final(const Grid2D& eg, const SolverConfig& cfg, double t_end) {
  const ManufacturedCrocco m;
  const OuterFlow of = OuterFlow::constant(m.U0, m.H0);
  const auto d = manufactured_crocco_drivers(m, of, eg, cfg.mu, cfg.kappa);
  const auto run = run_crocco(m.sample(0.0, eg), of, eg, cfg, t_end, &d);
  if (run.cause != Termination::t_end)
    throw Error("manufactured Crocco run stopped early: " + to_string(run.cause));
  return run.final_state;
}

}  // namespace detail

/// Manufactured-solution orders for both solvers. Spatial: grids at half, one
/// and two times the scenario resolution with dt / 4 and imex-cn. Temporal:
/// steps dt, dt/2, dt/4 on the scenario grid; orders from successive level
/// differences so the spatial error cancels.
inline ConvergenceReport convergence_study(const Scenario& sc, const fs::path& out = {}) {
  sc.validate();
  if (!sc.manufactured()) throw InvalidArgument("convergence needs initial.family = manufactured");
  ConvergenceReport rep;
  const double t_end = sc.solver.t_end, dt = sc.solver.dt;
  SolverConfig base = sc.solver;
  base.fixed_dt = true;
  base.monitor_m = 0;
  base.sample_every = 1 << 20;
  const ManufacturedPrimal mp = sc.manufactured_pair();
  const ManufacturedCrocco mc;
  const double eta_max = 6.0;

  for (int solver = 0; solver < 2; ++solver) {
    const std::string name = solver == 0 ? "primal" : "crocco";
    // space
    SolverConfig cfg = base;
    cfg.dt = dt / 4;
    cfg.scheme = Scheme::imex_cn;
    double prev = 0.0, worst = INFINITY;
    for (int r = 0; r < 3; ++r) {
      const int nx = sc.nx / 2 << r;
      ConvergenceRow row{name, "space", cfg.scheme, nx, 0, cfg.dt, 0.0, 0.0};
      if (solver == 0) {
        const Grid2D g = build_grid(nx, ((sc.ny - 1) / 2 << r) + 1, sc.y_max, sc.x_period);
        row.ny = g.ny;
        row.error = state_distance(detail::primal_manufactured_final(sc, g, cfg), mp.sample(t_end, g), g);
      } else {
        const Grid2D eg = build_grid(nx, nx + 1, eta_max);
        row.ny = eg.ny;
        const CroccoState f = detail::crocco_manufactured_final(eg, cfg, t_end), ex = mc.sample(t_end, eg);
        row.error = std::hypot(fd::l2(f.u1 - ex.u1, eg), fd::l2(f.h1 - ex.h1, eg));
      }
      if (r > 0) {
        row.order = std::log2(prev / row.error);
        worst = std::min(worst, row.order);
      }
      prev = row.error;
      rep.rows.push_back(row);
    }
    rep.spatial_order[solver] = worst;
    // time
    for (Scheme scheme : {Scheme::imex_be, Scheme::imex_cn}) {
      SolverConfig tc = base;
      tc.scheme = scheme;
      std::vector<double> diffs;
      if (solver == 0) {
        const Grid2D g = sc.grid();
        std::vector<State> levels;
        for (int r = 0; r < 3; ++r) {
          tc.dt = dt / (1 << r);
          levels.push_back(detail::primal_manufactured_final(sc, g, tc));
        }
        for (int r = 1; r < 3; ++r) diffs.push_back(state_distance(levels[r - 1], levels[r], g));
      } else {
        const Grid2D eg = build_grid(sc.nx, sc.ny, eta_max);
        std::vector<double> errs;
        for (int r = 0; r < 3; ++r) {
          tc.dt = dt / (1 << r);
          const CroccoState f = detail::crocco_manufactured_final(eg, tc, t_end), ex = mc.sample(t_end, eg);
          errs.push_back(std::hypot(fd::l2(f.u1 - ex.u1, eg), fd::l2(f.h1 - ex.h1, eg)));
        }
        for (int r = 1; r < 3; ++r) diffs.push_back(errs[r - 1] - errs[r]);
      }
      const double order = std::log2(diffs[0] / diffs[1]);
      for (int r = 0; r < 2; ++r)
        rep.rows.push_back({name, "time", scheme, sc.nx, sc.ny, dt / (1 << (r + 1)), diffs[r], r ? order : 0.0});
      (scheme == Scheme::imex_be ? rep.temporal_be : rep.temporal_cn)[solver] = order;
    }
  }
  if (!out.empty()) {
    prepare_dir(out);
    save_scenario(sc, out / "scenario.cfg");
    auto o = open_out(out / "convergence.csv");
    o << "solver,kind,scheme,nx,ny,dt,error,order\n";
    for (const auto& r : rep.rows)
      o << r.solver << ',' << r.kind << ',' << to_string(r.scheme) << ',' << r.nx << ',' << r.ny << ','
        << detail::fmt_double(r.dt) << ',' << detail::fmt_double(r.error) << ',' << detail::fmt_double(r.order)
        << '\n';
  }
  return rep;
}

// ---------------------------------------------------------------------------
// verify

inline void write_suite(const fs::path& out, const SuiteReport& rep) {
  prepare_dir(out);
  if (!rep.inequality.empty()) {
    auto o = open_out(out / "margins.csv");
    write_margins_csv(o, rep.inequality);
    auto r = open_out(out / "margins_refined.csv");
    write_margins_csv(r, rep.inequality_refined);
    auto d = open_out(out / "drift.csv");
    d << "id,drift\n";
    for (const auto& [id, v] : rep.drift) d << id << ',' << detail::fmt_double(v) << '\n';
  }
  if (!rep.equivalence.empty()) {
    auto o = open_out(out / "equivalence.csv");
    o << "index,k,ratio,lower,upper,pass\n";
    for (const auto& e : rep.equivalence)
      o << e.index << ',' << e.k << ',' << detail::fmt_double(e.rep.ratio) << ','
        << detail::fmt_double(e.rep.lower) << ',' << detail::fmt_double(e.rep.upper) << ','
        << (e.rep.pass && e.rep.dy_pass) << '\n';
  }
  if (!rep.identities.empty()) {
    auto o = open_out(out / "identities.csv");
    o << "index,cancellation,cancellation_refined,cancellation_order,beta_ratio,remainder,remainder_refined,remainder_order\n";
    for (const auto& r : rep.identities)
      o << r.index << ',' << detail::fmt_double(r.cancellation[0]) << ',' << detail::fmt_double(r.cancellation[1])
        << ',' << detail::fmt_double(r.cancellation_order()) << ',' << detail::fmt_double(r.beta_ratio()) << ','
        << detail::fmt_double(r.remainder[0]) << ',' << detail::fmt_double(r.remainder[1]) << ','
        << detail::fmt_double(r.remainder_order()) << '\n';
  }
  auto s = open_out(out / "verify.txt");
  s << "seed = " << rep.seed << "\ncount = " << rep.count << "\nscale = " << rep.scale
    << "\npass = " << rep.pass() << "\n";
  for (const auto& w : rep.warnings) s << "warning: " << w << "\n";
  for (const auto& f : rep.failures) s << "failure: " << f << "\n";
}

}  // namespace mhdbl
