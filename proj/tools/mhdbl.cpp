#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <string>

#include "mhdbl.hpp"

using namespace mhdbl;

namespace {

struct Common {
  std::string scenario = "stability-demo";
  std::string out;
  long long seed = -1;
  int scale = 1;
};

bool quiet = false;

void say(const std::string& s) {
  if (!quiet) std::cout << s << '\n';
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// A path to a scenario file, or a preset name.
Scenario resolve(const Common& o) {
  Scenario s;
  if (std::filesystem::exists(o.scenario)) {
    s = load_scenario(o.scenario);
  } else {
    const auto& p = preset_names();
    if (std::find(p.begin(), p.end(), o.scenario) == p.end())
      throw IoError("no scenario file or preset named '" + o.scenario + "'");
    s = make_preset(o.scenario);
  }
  if (o.seed >= 0) s.seed = std::uint64_t(o.seed);
  s = s.scaled(o.scale);
  s.validate();
  return s;
}

fs::path out_dir(const Common& o, const std::string& command, const Scenario& s) {
  if (!o.out.empty()) return o.out;
  std::string name = command + "-" + s.preset;
  if (o.scale > 1) name += "-x" + std::to_string(o.scale);
  return default_output_root() / name;
}

void add_common(CLI::App* c, Common& o, bool scenario = true) {
  if (scenario) c->add_option("--scenario", o.scenario, "Scenario file or preset name")->capture_default_str();
  c->add_option("--out", o.out, "Output directory (default: $MHDBL_OUT/<command>-<preset>)");
  c->add_option("--seed", o.seed, "Seed override")->check(CLI::NonNegativeNumber);
  c->add_option("--resolution-scale", o.scale, "Refine the grid by this factor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

int cmd_run(const Common& o, bool family) {
  const Scenario s = resolve(o);
  const fs::path dir = out_dir(o, "run", s);
  if (family) {
    const auto rep = epsilon_family(s, dir);
    for (std::size_t k = 0; k < rep.distance.size(); ++k)
      say("eps " + num(rep.eps[k]) + " vs " + num(rep.eps[k + 1]) + ": distance " + num(rep.distance[k]));
    bool ok = rep.strictly_decreasing();
    for (auto c : rep.causes) ok = ok && c == Termination::t_end;
    say(std::string("distances strictly decreasing: ") + (rep.strictly_decreasing() ? "yes" : "no"));
    say("wrote " + dir.string());
    return ok ? 0 : 1;
  }
  const RunRecord rec = run_scenario(s, dir);
  double hmin = INFINITY;
  for (const auto& m : rec.samples) hmin = std::min(hmin, m.hmin);
  say("cause " + to_string(rec.cause) + ", t " + num(rec.final_state.t) + ", steps " + std::to_string(rec.steps) +
      ", samples " + std::to_string(rec.samples.size()));
  say("E(0) " + num(rec.samples.front().E) + ", E(end) " + num(rec.samples.back().E) + ", min hmin " + num(hmin));
  if (!rec.message.empty()) say(rec.message);
  say("wrote " + dir.string());
  return rec.cause == Termination::t_end ? 0 : 1;
}

int cmd_verify(const Common& o, const std::string& suite, int count) {
  const std::uint64_t seed = o.seed >= 0 ? std::uint64_t(o.seed) : 0;
  const auto rep = verify_suite(parse_suite(suite), seed, count, o.scale);
  const fs::path dir = o.out.empty() ? default_output_root() / ("verify-" + suite) : fs::path(o.out);
  write_suite(dir, rep);
  for (const auto& w : rep.warnings) say("warning: " + w);
  if (!rep.inequality.empty()) {
    std::size_t fails = 0;
    for (const auto& r : rep.inequality) fails += !r.pass;
    say("inequalities: " + std::to_string(rep.inequality.size()) + " checks, " + std::to_string(fails) + " failed");
    for (const auto& [id, d] : rep.drift) say("  " + id + " drift " + num(d));
  }
  if (!rep.equivalence.empty()) say("equivalence: " + std::to_string(rep.equivalence.size()) + " checks");
  if (!rep.identities.empty()) {
    double cmin = INFINITY, bmax = 0.0;
    for (const auto& r : rep.identities) {
      cmin = std::min(cmin, r.cancellation_order());
      bmax = std::max(bmax, r.beta_ratio());
    }
    say("identities: min cancellation order " + num(cmin) + ", max beta ratio " + num(bmax) +
        ", median remainder order " + num(rep.remainder_median_order));
  }
  for (const auto& f : rep.failures) std::cerr << "FAIL " << f << '\n';
  say(std::string(rep.pass() ? "PASS" : "FAIL") + " (seed " + std::to_string(seed) + ", wrote " + dir.string() + ")");
  return rep.pass() ? 0 : 1;
}

int cmd_crocco(const Common& o) {
  const Scenario s = resolve(o);
  const fs::path dir = out_dir(o, "crocco", s);
  const auto rep = crocco_scenario(s, dir);
  say("eta_max " + num(rep.eta_max) + ", n_eta " + std::to_string(rep.n_eta) + ", min h1 " + num(rep.min_h1));
  for (const auto& r : rep.rows)
    say("t " + num(r.t) + ": distance " + num(r.distance) + " (u " + num(r.distance_u) + ", h " + num(r.distance_h) + ")");
  say("wrote " + dir.string());
  return rep.primal_cause == Termination::t_end && rep.crocco_cause == Termination::t_end ? 0 : 1;
}

int cmd_uniqueness(const Common& o, double d) {
  const Scenario s = resolve(o);
  const fs::path dir = out_dir(o, "uniqueness", s);
  const auto rep = uniqueness_scenario(s, d >= 0.0 ? d : s.perturbation, dir);
  say("d " + num(rep.d) + ", max N " + num(rep.max_N()) + ", C_hat " + num(rep.C_hat) +
      ", hardy bound " + (rep.hardy_ok ? "holds" : "violated"));
  say("wrote " + dir.string());
  return rep.hardy_ok ? 0 : 1;
}

int cmd_majorant(const std::string& run, double C) {
  const auto r = majorant_from_run(run, C);
  say("F0 " + num(r.F0) + ", C " + num(C) + ", horizon " + num(r.z.horizon));
  if (r.cmp.ok) {
    double worst = INFINITY;
    for (std::size_t k = 0; k < r.times.size(); ++k)
      if (r.E[k] > 0.0) worst = std::min(worst, r.z.z[k] / (r.E[k] * r.E[k]));
    say("E^2 <= z at every sample (comparison with calibrated constant); min z/E^2 " + num(worst));
  } else {
    say("E^2 > z first at t " + num(r.cmp.first_failure));
  }
  say("wrote " + (fs::path(run) / "majorant.csv").string());
  return r.cmp.ok ? 0 : 1;
}

int cmd_convergence(const Common& o) {
  const Scenario s = resolve(o);
  const fs::path dir = out_dir(o, "convergence", s);
  const auto rep = convergence_study(s, dir);
  bool ok = true;
  for (int k = 0; k < 2; ++k) {
    const char* name = k ? "crocco" : "primal";
    say(std::string(name) + ": space " + num(rep.spatial_order[k]) + ", time imex-be " + num(rep.temporal_be[k]) +
        ", time imex-cn " + num(rep.temporal_cn[k]));
    ok = ok && rep.spatial_order[k] >= kSpatialOrder && rep.temporal_be[k] >= kTemporalOrderBE &&
         rep.temporal_cn[k] >= kTemporalOrderCN;
  }
  say("wrote " + dir.string());
  return ok ? 0 : 1;
}

int cmd_calibrate(int count) {
  const auto pc = calibrate_product_constants(kCalibrationSeed, count, inequality_grid(1));
  std::printf("product constants (seed %llu, %d fields, margin %.3g):\n", (unsigned long long)kCalibrationSeed, count,
              kCalibrationMargin);
  std::printf("  morse   %.17g\n  normal0 %.17g\n  normal3 %.17g\n", pc.morse, pc.normal0, pc.normal3);
  const Scenario s = make_preset("stability-demo");
  const RunRecord rec = run_scenario(s);
  std::vector<double> t;
  for (const auto& m : rec.samples) t.push_back(m.t);
  const MajorantInput mi = majorant_input(s, t);
  const double C = calibrate_majorant_constant(mi.F0, t, mi.Fts, mi.delta0, 2.0 * s.solver.t_end);
  std::printf("majorant C (stability-demo, horizon %.3g): %.17g\n", 2.0 * s.solver.t_end, C);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MHD boundary-layer laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--quiet,-q", quiet, "Suppress progress output");

  Common run_o, ver_o, cro_o, uni_o, con_o;
  bool family = false;
  auto* run = app.add_subcommand("run", "Run the primal solver on a scenario");
  add_common(run, run_o);
  run->add_flag("--epsilon-family", family, "One run per epsilon.values entry");

  std::string suite = "all";
  int count = 200;
  auto* ver = app.add_subcommand("verify", "Run the seeded verification suites");
  add_common(ver, ver_o, false);
  ver->add_option("--suite", suite, "inequalities|identities|equivalence|all")->capture_default_str();
  ver->add_option("--count", count, "Corpus size")->check(CLI::NonNegativeNumber)->capture_default_str();

  auto* cro = app.add_subcommand("crocco-compare", "Compare the primal and Crocco formulations");
  add_common(cro, cro_o);

  double d = -1.0;
  auto* uni = app.add_subcommand("uniqueness", "Two-run uniqueness experiment");
  add_common(uni, uni_o);
  uni->add_option("--d", d, "Perturbation size (default: uniqueness.d)");

  std::string run_dir;
  double C = kMajorantC;
  auto* maj = app.add_subcommand("majorant", "Compare a run's E(t)^2 with the ODE majorant");
  maj->add_option("--run", run_dir, "Run directory with scenario.cfg and timeseries.csv")->required();
  maj->add_option("--C", C, "Majorant constant")->check(CLI::PositiveNumber)->capture_default_str();

  auto* con = app.add_subcommand("convergence", "Manufactured-solution convergence study");
  add_common(con, con_o);
  con_o.scenario = "manufactured";

  int cal_count = kCalibrationCount;
  auto* cal = app.add_subcommand("calibrate", "Recompute the frozen constants");
  cal->add_option("--count", cal_count, "Calibration corpus size")->check(CLI::PositiveNumber)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_o, family);
    if (*ver) return cmd_verify(ver_o, suite, count);
    if (*cro) return cmd_crocco(cro_o);
    if (*uni) return cmd_uniqueness(uni_o, d);
    if (*maj) return cmd_majorant(run_dir, C);
    if (*con) return cmd_convergence(con_o);
    if (*cal) return cmd_calibrate(cal_count);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
