// Acceptance runner: one PASS/FAIL line per criterion; exit status 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include "mhdbl.hpp"

using namespace mhdbl;

namespace {

// Tolerances
constexpr std::uint64_t kSeed = 0;
constexpr int kCorpus = 200;
constexpr double kHardySlackPerDy = 5.0;       // Hardy lambda=1 and trace0 bounds carry (1 + 5 dy)
constexpr double kIdentityOrder = 1.9;         // divergence / stream residuals
constexpr double kReconstructionError = 1e-3;  // at 64 x 257
constexpr double kReconstructionOrder = 1.9;
constexpr int kReconstructionEntries = 10;
constexpr double kCroccoDistance = 5e-2;
constexpr double kCroccoShrink = 3.0;
constexpr double kCroccoTime = 0.5;
constexpr double kZeroN = 1e-12;
constexpr double kLinearResponse = 0.10;
constexpr double kGronwallDrift = 0.20;
constexpr double kUniquenessWindow = 0.5;

struct Line {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path work_dir() {
  const fs::path p = fs::temp_directory_path() / "mhdbl_acceptance";
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Line inequalities() {
  const SuiteReport rep = verify_suite(SuiteKind::inequalities, kSeed, kCorpus, 1);
  const Grid2D g1 = inequality_grid(1), g2 = inequality_grid(2);
  double hardy = 0.0, trace0 = 0.0;
  bool ok = rep.pass() && rep.inequality.size() == rep.inequality_refined.size() && !rep.inequality.empty();
  for (int pass = 0; pass < 2; ++pass) {
    const Grid2D& g = pass ? g2 : g1;
    for (const auto& r : pass ? rep.inequality_refined : rep.inequality) {
      if (r.id == "normal1") {
        hardy = std::max(hardy, r.ratio / (2.0 * (1.0 + kHardySlackPerDy * g.dy)));
        ok = ok && r.ratio <= 2.0 * (1.0 + kHardySlackPerDy * g.dy);
      }
      if (r.id == "trace0") {
        trace0 = std::max(trace0, r.ratio / (std::sqrt(2.0) * (1.0 + kHardySlackPerDy * g.dy)));
        ok = ok && r.ratio <= std::sqrt(2.0) * (1.0 + kHardySlackPerDy * g.dy);
      }
    }
  }
  double drift = 0.0;
  for (const auto& [id, d] : rep.drift) drift = std::max(drift, d);
  std::size_t fails = rep.failures.size();
  return {"inequality suite", ok,
          std::to_string(rep.inequality.size()) + "+" + std::to_string(rep.inequality_refined.size()) +
              " checks, " + std::to_string(fails) + " failures; max hardy(1)/bound " + num(hardy) +
              ", trace0/bound " + num(trace0) + ", max drift/bound " + num(drift) + " (<= " + num(kRatioDrift) + ")"};
}

/// ||d_x u + d_y v|| and ||d_y psi - h|| on a field family; min order over two refinements.
Line stream_identities() {
  const ManufacturedPrimal m;
  const Cutoff c;
  const auto corpus = make_corpus(kSeed, 5);
  std::vector<std::function<State(const Grid2D&)>> fields{[&](const Grid2D& g) { return m.sample(0.3, g); }};
  for (const auto& e : corpus) fields.push_back([&e, &c](const Grid2D& g) { return e.state(c, g); });
  double worst_div = INFINITY, worst_psi = INFINITY;
  for (const auto& make : fields) {
    double prev_div = 0.0, prev_psi = 0.0;
    for (int r = 0; r < 3; ++r) {
      const Grid2D g = build_grid(32, (192 << r) + 1, 12.0);
      const State s = make(g);
      const DerivedFields d = recover_vg(s, g);
      const double div = fd::l2(fd::dx(s.u, g) + fd::dy(d.v, g), g);
      const double psi = fd::l2(fd::dy(d.psi, g) - s.h, g);
      if (r > 0) {
        worst_div = std::min(worst_div, std::log2(prev_div / div));
        worst_psi = std::min(worst_psi, std::log2(prev_psi / psi));
      }
      prev_div = div;
      prev_psi = psi;
    }
  }
  const bool ok = worst_div >= kIdentityOrder && worst_psi >= kIdentityOrder;
  return {"divergence/stream identities", ok,
          "min order div " + num(worst_div) + ", stream " + num(worst_psi) + " (>= " + num(kIdentityOrder) + ")"};
}

Line cancellation(const SuiteReport& rep) {
  double order = INFINITY, beta = 0.0;
  for (const auto& r : rep.identities) {
    order = std::min(order, r.cancellation_order());
    beta = std::max(beta, r.beta_ratio());
  }
  const bool ok = !rep.identities.empty() && order >= kCancellationOrder && beta <= kBetaRatio;
  return {"cancellation identity", ok,
          std::to_string(rep.identities.size()) + " fields; min order " + num(order) + " (>= " +
              num(kCancellationOrder) + "), max beta (0,2)/(0,1) ratio " + num(beta) + " (<= " + num(kBetaRatio) + ")"};
}

Line equivalence() {
  const SuiteReport rep = verify_suite(SuiteKind::equivalence, kSeed, kCorpus, 1);
  double lo = INFINITY, hi = 0.0;
  for (const auto& e : rep.equivalence) {
    lo = std::min(lo, e.rep.ratio / e.rep.lower);
    hi = std::max(hi, e.rep.ratio / e.rep.upper);
  }
  // reconstruction round trip on corpus states
  const Cutoff c;
  const auto of = OuterFlow::constant(1, 1);
  const auto corpus = make_corpus(kSeed, kReconstructionEntries);
  double err0 = 0.0, order = INFINITY;
  for (const auto& e : corpus) {
    double prev = 0.0;
    for (int r = 0; r < 2; ++r) {
      const Grid2D g = build_grid(64 << r, (256 << r) + 1, 12.0);
      const State s = e.state(c, g);
      const auto gu = good_unknowns(s, of, c, {0.1, 0.0}, g, {0, 1, 0});
      const auto [du, dh] = reconstruct(gu, s, of, c, g, 0.1);
      const double err = std::hypot(fd::l2(du - gu.du, g), fd::l2(dh - gu.dh, g)) /
                         std::hypot(fd::l2(gu.du, g), fd::l2(gu.dh, g));
      if (r == 0) err0 = std::max(err0, err);
      else order = std::min(order, std::log2(prev / err));
      prev = err;
    }
  }
  const bool ok = rep.pass() && !rep.equivalence.empty() && err0 <= kReconstructionError && order >= kReconstructionOrder;
  return {"norm equivalence", ok,
          std::to_string(rep.equivalence.size()) + " ratios, min ratio/lower " + num(lo) + ", max ratio/upper " + num(hi) +
              "; reconstruction max error " + num(err0) + " (<= " + num(kReconstructionError) + "), min order " +
              num(order) + " (>= " + num(kReconstructionOrder) + ")"};
}

Line remainders(const SuiteReport& rep) {
  double order = INFINITY;
  for (const auto& r : rep.identities) order = std::min(order, r.remainder_order());
  const bool ok = !rep.identities.empty() && order >= kRemainderOrder && rep.remainder_median_order >= kRemainderMedianOrder;
  return {"remainder consistency", ok,
          "median order " + num(rep.remainder_median_order) + " (>= " + num(kRemainderMedianOrder) + "), min " +
              num(order) + " (>= " + num(kRemainderOrder) + ")"};
}

Line manufactured() {
  const ConvergenceReport rep = convergence_study(make_preset("manufactured"));
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 2; ++k) {
    ok = ok && rep.spatial_order[k] >= kSpatialOrder && rep.temporal_be[k] >= kTemporalOrderBE &&
         rep.temporal_cn[k] >= kTemporalOrderCN;
    detail += std::string(k ? "; crocco" : "primal") + " space " + num(rep.spatial_order[k]) + ", be " +
              num(rep.temporal_be[k]) + ", cn " + num(rep.temporal_cn[k]);
  }
  return {"manufactured convergence", ok, detail};
}

Line crocco() {
  const Scenario s = make_preset("crocco-validate");
  auto coarse = std::async(std::launch::async, [&] { return crocco_scenario(s); });
  const auto fine = crocco_scenario(s.scaled(2));
  const auto base = coarse.get();
  auto finished = [](const CroccoCompareReport& r) {
    return r.primal_cause == Termination::t_end && r.crocco_cause == Termination::t_end;
  };
  if (!finished(base) || !finished(fine)) return {"Crocco cross-validation", false, "a run stopped early"};
  const double d1 = base.distance_at(kCroccoTime), d2 = fine.distance_at(kCroccoTime);
  const bool ok = d1 <= kCroccoDistance && d1 / d2 >= kCroccoShrink;
  return {"Crocco cross-validation", ok,
          "distance(t=0.5) " + num(d1) + " (<= " + num(kCroccoDistance) + "), x2 refined " + num(d2) +
              ", shrink " + num(d1 / d2) + " (>= " + num(kCroccoShrink) + ")"};
}

Line stability(const fs::path& dir) {
  const Scenario s = make_preset("stability-demo");
  const Scenario nm = make_preset("no-magnetic");
  auto other = std::async(std::launch::async, [&] { return run_scenario(nm, dir / "no-magnetic"); });
  const RunRecord rec = run_scenario(s, dir / "stability-demo");
  const double delta0 = s.solver.thresholds.delta0;
  const auto init = validate_initial(s.initial_state(), s.outer_flow(), s.cutoff(), s.solver.thresholds, s.grid());
  const double h1_init = rec.samples.front().hmin;
  double hmin = INFINITY;
  for (const auto& m : rec.samples) hmin = std::min(hmin, m.hmin);
  const MajorantReport mj = majorant_from_run(dir / "stability-demo", kMajorantC);
  double zr = INFINITY;
  for (std::size_t k = 0; k < mj.times.size(); ++k) zr = std::min(zr, mj.z.z[k] / (mj.E[k] * mj.E[k]));
  const RunRecord nrec = other.get();
  const double growth = rec.samples.back().E / rec.samples.front().E;
  const double ngrowth = nrec.samples.back().E / nrec.samples.front().E;
  const bool ok = init.ok() && h1_init >= 2.0 * delta0 && rec.cause == Termination::t_end &&
                  std::abs(rec.final_state.t - s.solver.t_end) < 1e-12 && hmin >= delta0 && mj.cmp.ok;
  return {"stability demo", ok,
          "t_end " + num(rec.final_state.t) + ", h1(0) >= " + num(h1_init) + ", min hmin " + num(hmin) + " (>= " +
              num(delta0) + "), min z/E^2 " + num(zr) + " with C " + num(kMajorantC) +
              "; reported: E(1)/E(0) " + num(growth) + " vs no-magnetic " + num(ngrowth) + " (" +
              to_string(nrec.cause) + ")"};
}

Line uniqueness() {
  const Scenario s = make_preset("uniqueness");
  const double d = s.perturbation;
  auto zero = std::async(std::launch::async, [&] { return uniqueness_scenario(s, 0.0); });
  auto half = std::async(std::launch::async, [&] { return uniqueness_scenario(s, 0.5 * d); });
  const auto full = uniqueness_scenario(s, d);
  const auto fine = uniqueness_scenario(s.scaled(2), d);
  const auto z = zero.get(), h = half.get();
  const double lin = linear_response_deviation(full, h, kUniquenessWindow);
  const double drift = std::abs(fine.C_hat - full.C_hat) / std::abs(full.C_hat);
  const bool ok = z.max_N() <= kZeroN && lin <= kLinearResponse && drift <= kGronwallDrift && std::isfinite(full.C_hat);
  return {"uniqueness/continuity", ok,
          "d=0 max N " + num(z.max_N()) + " (<= " + num(kZeroN) + "), |N_d/N_{d/2} - 2|/2 " + num(lin) + " (<= " +
              num(kLinearResponse) + "), C_hat " + num(full.C_hat) + " -> " + num(fine.C_hat) + " under x2, change " +
              num(drift) + " (<= " + num(kGronwallDrift) + ")"};
}

Line epsilon() {
  const auto rep = epsilon_family(make_preset("epsilon-family"));
  bool ok = rep.distance.size() == 2 && rep.strictly_decreasing();
  for (auto c : rep.causes) ok = ok && c == Termination::t_end;
  std::string detail;
  for (std::size_t k = 0; k < rep.distance.size(); ++k)
    detail += (k ? ", " : "") + std::string("d(") + num(rep.eps[k]) + "," + num(rep.eps[k + 1]) + ") " + num(rep.distance[k]);
  return {"epsilon family", ok, detail + (rep.strictly_decreasing() ? " strictly decreasing" : " not decreasing")};
}

Line zero_and_determinism(const fs::path& dir) {
  const RunRecord z = run_scenario(make_preset("zero"), dir / "zero");
  bool zero = z.cause == Termination::t_end;
  for (const auto& m : z.samples)
    zero = zero && m.E == 0.0 && m.W1 == 0.0 && m.W2 == 0.0 && m.hmin == 0.0 && m.M == 0.0 && m.dissipation == 0.0;
  zero = zero && fd::max_abs(z.final_state.u) == 0.0 && fd::max_abs(z.final_state.h) == 0.0;
  const Scenario s = make_preset("stability-demo");
  auto a = std::async(std::launch::async, [&] { return run_scenario(s, dir / "det_a"); });
  run_scenario(s, dir / "det_b");
  a.get();
  const std::string ca = slurp(dir / "det_a" / "timeseries.csv");
  const bool run_same = !ca.empty() && ca == slurp(dir / "det_b" / "timeseries.csv") &&
                        slurp(dir / "det_a" / "snap_final.bin") == slurp(dir / "det_b" / "snap_final.bin");
  write_suite(dir / "ver_a", verify_suite(SuiteKind::all, kSeed, 10));
  write_suite(dir / "ver_b", verify_suite(SuiteKind::all, kSeed, 10));
  bool suite_same = true;
  for (const char* f : {"margins.csv", "margins_refined.csv", "equivalence.csv", "identities.csv"})
    suite_same = suite_same && slurp(dir / "ver_a" / f) == slurp(dir / "ver_b" / f);
  return {"zero fixed point and determinism", zero && run_same && suite_same,
          std::string("zero monitors ") + (zero ? "identically zero" : "NOT zero") + " over " +
              std::to_string(z.samples.size()) + " samples; run CSV " + (run_same ? "bitwise identical" : "differs") +
              "; seeded suite CSV " + (suite_same ? "bitwise identical" : "differs")};
}

}  // namespace

int main() {
  const fs::path dir = work_dir();
  std::vector<Line> lines;
  auto timed = [&](const std::function<Line()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Line l;
    try {
      l = f();
    } catch (const std::exception& e) {
      l.pass = false;
      l.detail = std::string("error: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (l.pass ? "PASS " : "FAIL ") << l.name << ": " << l.detail << " [" << num(s) << " s]" << std::endl;
    lines.push_back(l);
  };
  SuiteReport ids;
  timed(inequalities);
  timed(stream_identities);
  timed([&] {
    ids = verify_suite(SuiteKind::identities, kSeed, kCorpus, 1);
    return cancellation(ids);
  });
  timed(equivalence);
  timed([&] { return remainders(ids); });
  timed(manufactured);
  timed(crocco);
  timed([&] { return stability(dir); });
  timed(uniqueness);
  timed(epsilon);
  timed([&] { return zero_and_determinism(dir); });
  const auto passed = std::count_if(lines.begin(), lines.end(), [](const Line& l) { return l.pass; });
  std::cout << passed << "/" << lines.size() << " criteria passed" << std::endl;
  return passed == std::ptrdiff_t(lines.size()) ? 0 : 1;
}
