#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <future>
#include <ostream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mhdbl/calibration.hpp"
#include "mhdbl/fields.hpp"
#include "mhdbl/good_unknowns.hpp"
#include "mhdbl/norms.hpp"
#include "mhdbl/outer_flow.hpp"
#include "mhdbl/solver_primal.hpp"

// Seeded random corpora and the verification suites built on them.
namespace mhdbl {

/// f(x, y) = sum_n a_n cos(k_n x + phase_n) y^{p_n} e^{-b_n y}.
struct SmoothField {
  struct Term {
    double a = 0.0;
    int k = 0;
    double phase = 0.0;
    int p = 0;
    double b = 1.0;
  };
  std::vector<Term> terms;

  double operator()(double x, double y) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.a * std::cos(t.k * x + t.phase) * std::pow(y, t.p) * std::exp(-t.b * y);
    return s;
  }

  /// Upper bound of sup |f| from sup_y y^p e^{-b y} = (p / (b e))^p.
  double sup_bound() const {
    double s = 0.0;
    for (const auto& t : terms) s += std::abs(t.a) * (t.p == 0 ? 1.0 : std::pow(t.p / (t.b * std::numbers::e), t.p));
    return s;
  }

  Field sample(const Grid2D& g) const { return Field::from(g, *this); }
};

struct CorpusEntry {
  int index = 0;
  SmoothField f, g;     // inequality pair
  double lambda = 1.0;  // Hardy / normal0 / normal3 exponent, in (1/2, 2]
  double l1 = 0.0, l2 = 0.0;
  MultiIndex a, at;     // Morse indices with |a| + |at| <= 3
  SmoothField su, sh;   // state profiles

  /// u = y su, h = 1 - phi' + 0.4 sh / sup|sh|: h + phi' >= 0.6 for H = 1.
  State state(const Cutoff& c, const Grid2D& gr) const {
    State s(gr, 0.0);
    const double nh = std::max(sh.sup_bound(), 1e-300);
    for (int i = 0; i < gr.nx; ++i)
      for (int j = 0; j < gr.ny; ++j) {
        const double x = gr.x(i), y = gr.y(j);
        s.u(i, j) = y * su(x, y);
        s.h(i, j) = 1.0 - c.d1(y) + 0.4 * sh(x, y) / nh;
      }
    return s;
  }
};

inline SmoothField random_smooth_field(std::mt19937_64& rng, int n_terms = 3) {
  std::uniform_real_distribution<double> amp(-1.0, 1.0), phase(0.0, 2.0 * std::numbers::pi),
      rate(1.5, 3.0);
  std::uniform_int_distribution<int> wave(0, 3), power(0, 2);
  SmoothField f;
  for (int n = 0; n < n_terms; ++n) {
    SmoothField::Term t;
    t.a = amp(rng);
    t.k = wave(rng);
    t.phase = phase(rng);
    t.p = power(rng);
    t.b = rate(rng);
    f.terms.push_back(t);
  }
  return f;
}

inline std::vector<CorpusEntry> make_corpus(std::uint64_t seed, int count) {
  if (count < 0) throw InvalidArgument("make_corpus: count must be >= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lam(0.55, 2.0), weight(0.0, 2.0);
  std::uniform_int_distribution<int> order(0, 3), split(0, 3);
  std::vector<CorpusEntry> out;
  for (int n = 0; n < count; ++n) {
    CorpusEntry e;
    e.index = n;
    e.f = random_smooth_field(rng);
    e.g = random_smooth_field(rng);
    e.lambda = lam(rng);
    e.l1 = weight(rng);
    e.l2 = weight(rng);
    const int total = order(rng);
    const int na = std::min(total, split(rng));
    std::uniform_int_distribution<int> kx(0, na), kt(0, total - na);
    const int ax = kx(rng), atx = kt(rng);
    e.a = {0, ax, na - ax};
    e.at = {0, atx, total - na - atx};
    e.su = random_smooth_field(rng);
    e.sh = random_smooth_field(rng);
    out.push_back(std::move(e));
  }
  return out;
}

/// Inequality corpus grid at resolution scale r: (32 r) x (192 r + 1), y_max = 12.
inline Grid2D inequality_grid(int scale = 1) { return build_grid(32 * scale, 192 * scale + 1, 12.0); }

/// Every weighted inequality on one corpus entry.
inline std::vector<MarginReport> verify_inequalities(const CorpusEntry& e, const Grid2D& g,
                                                     const ProductConstants& pc = kProductConstants) {
  const Field f = e.f.sample(g), gf = e.g.sample(g);
  std::vector<MarginReport> out;
  out.push_back(verify_trace(f, gf, g));
  out.push_back(verify_trace0(f, g));
  out.push_back(verify_hardy(f, g, e.lambda, HardyVariant::normal));
  out.push_back(verify_hardy(f, g, 1.0, HardyVariant::normal1));
  out.push_back(verify_hardy(f, g, e.lambda, HardyVariant::normal_inf));
  out.push_back(verify_hardy(f, g, e.lambda, HardyVariant::normal2));
  const double slack = 1.0 + 5.0 * (g.dx + g.dy);
  ProductCase morse{ProductVariant::morse, e.a, e.at, 3, e.l1, e.l2, e.lambda};
  out.push_back(verify_product(f, gf, g, morse, pc.morse, slack));
  // normal0 / normal3: |a| + at.bx <= 3
  ProductCase n0{ProductVariant::normal0, e.a, {0, std::min(e.at.bx, 3 - e.a.order()), 0}, 3,
                 e.l1, 0.0, e.lambda};
  out.push_back(verify_product(f, gf, g, n0, pc.normal0, slack));
  ProductCase n3 = n0;
  n3.variant = ProductVariant::normal3;
  out.push_back(verify_product(f, gf, g, n3, pc.normal3, slack));
  for (auto& r : out) r.note = "entry " + std::to_string(e.index);
  return out;
}

/// Good-unknown equivalence for beta = (0, k), k = 1..3, at delta0 = 0.1 and H = U = 1.
inline std::vector<EquivalenceReport> verify_equivalence(const CorpusEntry& e, const Cutoff& c,
                                                         const Grid2D& g) {
  const State s = e.state(c, g);
  std::vector<EquivalenceReport> out;
  for (int k = 1; k <= 3; ++k)
    out.push_back(equivalence_check(s, OuterFlow::constant(1, 1), c, {0.1, 0.0}, g, {0, k, 0}, 0.0));
  return out;
}

/// Sources that make s a steady solution of the discrete primal system.
inline IdentitySources steady_sources(const State& s, const OuterFlow& of, const Cutoff& c,
                                      const Grid2D& g, double mu, double kappa) {
  const detail::Profiles pr(c, g);
  auto [nu, nh] = detail::transport_tendency(s, of, c, pr, g, mu, kappa, s.t);
  const SourceTerms src = source_r(of, c, g, s.t, mu, kappa);
  IdentitySources is;
  is.r1 = src.r1 - nu - mu * fd::dyy(s.u, g);
  is.r2 = src.r2 - nh - kappa * fd::dyy(s.h, g);
  // psi_t + A psi + H_x phi u + H phi' v - kappa psi_yy = r3 with psi_t = 0
  const auto d = recover_vg(s, g);
  const Field psix = fd::dx(d.psi, g), psiy = fd::dy(d.psi, g);
  is.r3 = -kappa * fd::dyy(d.psi, g);
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    const double U = of.U(s.t, x), Ux = of.U(s.t, x, 0, 1), H = of.H(s.t, x), Hx = of.H(s.t, x, 0, 1);
    for (int j = 0; j < g.ny; ++j)
      is.r3(i, j) += (s.u(i, j) + U * pr.p1[j]) * psix(i, j) + (d.v(i, j) - Ux * pr.p0[j]) * psiy(i, j) +
                     Hx * pr.p0[j] * s.u(i, j) + H * pr.p1[j] * d.v(i, j);
  }
  return is;
}

struct IdentityReport {
  int index = 0;
  double cancellation[2] = {0.0, 0.0};  // relative residual at nx, 2 nx (beta = (0,1))
  double cancellation_beta2 = 0.0;      // relative residual for beta = (0,2) at nx
  double remainder[2] = {0.0, 0.0};     // relative identity defect at (nx, ny), (2nx, 2ny-1)
  double cancellation_order() const { return std::log2(cancellation[0] / cancellation[1]); }
  double remainder_order() const { return std::log2(remainder[0] / remainder[1]); }
  double beta_ratio() const { return cancellation_beta2 / cancellation[0]; }
};

inline constexpr double kCancellationOrder = 1.9;
inline constexpr double kBetaRatio = 10.0;
inline constexpr double kRemainderOrder = 1.5;        // per corpus entry
inline constexpr double kRemainderMedianOrder = 1.9;  // over the corpus
/// Inequality ratios may move by at most this fraction of their bound under x2 refinement.
inline constexpr double kRatioDrift = 0.25;

/// Cancellation identity and remainder consistency for one corpus state under
/// the steady-harmonic trace pair, base grid nx x (4 nx + 1).
inline IdentityReport verify_identities(const CorpusEntry& e, const Cutoff& c, int nx = 64) {
  // H varies by 5%, so h + H phi' stays >= 0.6 - 0.05 sup phi' > 0.4
  const auto of = OuterFlow::steady_harmonic(1.0, 0.05, 1.0);
  const double mu = 1.0, kappa = 0.5;
  IdentityReport rep;
  rep.index = e.index;
  auto rel_cancel = [&](const Grid2D& g, int k) {
    const auto cr = cancellation_check(e.state(c, g), of, c, g, {0, k, 0});
    return cr.residual() / std::hypot(cr.scale_h, cr.scale_u);
  };
  const Grid2D g1 = build_grid(nx, 4 * nx + 1, 12.0), gx = build_grid(2 * nx, 4 * nx + 1, 12.0);
  rep.cancellation[0] = rel_cancel(g1, 1);
  rep.cancellation[1] = rel_cancel(gx, 1);
  rep.cancellation_beta2 = rel_cancel(g1, 2);
  for (int r = 0; r < 2; ++r) {
    const Grid2D g = build_grid(nx << r, (4 * nx << r) + 1, 12.0);
    const State s = e.state(c, g);
    History h;
    h.levels = {s, s};
    h.levels[0].t = -1e-4;
    h.levels[1].t = -2e-4;
    const IdentitySources is = steady_sources(s, of, c, g, mu, kappa);
    const auto rb = remainders(s, h, of, c, g, {0, 1, 0}, mu, kappa, &is);
    const auto [L1, L2] = transformed_lhs(s, h, of, c, g, {0, 1, 0}, mu, kappa);
    rep.remainder[r] = std::hypot(fd::l2(L1 - rb.R1, g), fd::l2(L2 - rb.R2, g)) /
                       std::hypot(fd::l2(rb.R1, g), fd::l2(rb.R2, g));
  }
  return rep;
}

/// kCalibrationMargin times the largest product ratio lhs / rhs over the corpus.
inline ProductConstants calibrate_product_constants(std::uint64_t seed, int count, const Grid2D& g) {
  ProductConstants unit{1.0, 1.0, 1.0}, out{0.0, 0.0, 0.0};
  for (const auto& e : make_corpus(seed, count))
    for (const auto& r : verify_inequalities(e, g, unit)) {
      const double ratio = r.lhs / r.rhs;
      if (r.id == "morse") out.morse = std::max(out.morse, ratio);
      if (r.id == "normal0") out.normal0 = std::max(out.normal0, ratio);
      if (r.id == "normal3") out.normal3 = std::max(out.normal3, ratio);
    }
  out.morse *= kCalibrationMargin;
  out.normal0 *= kCalibrationMargin;
  out.normal3 *= kCalibrationMargin;
  return out;
}

enum class SuiteKind { inequalities, identities, equivalence, all };

inline SuiteKind parse_suite(const std::string& s) {
  if (s == "inequalities") return SuiteKind::inequalities;
  if (s == "identities") return SuiteKind::identities;
  if (s == "equivalence") return SuiteKind::equivalence;
  if (s == "all") return SuiteKind::all;
  throw InvalidArgument("unknown suite '" + s + "' (inequalities|identities|equivalence|all)");
}

struct EquivalenceRow {
  int index = 0;
  int k = 0;
  EquivalenceReport rep;
};

struct SuiteReport {
  std::uint64_t seed = 0;
  int count = 0;
  int scale = 1;
  std::vector<MarginReport> inequality;          // at scale
  std::vector<MarginReport> inequality_refined;  // at 2 scale, same order
  std::vector<std::pair<std::string, double>> drift;  // per variant, max |dratio| / bound
  std::vector<EquivalenceRow> equivalence;
  std::vector<IdentityReport> identities;
  double remainder_median_order = 0.0;
  std::vector<std::string> failures;
  std::vector<std::string> warnings;

  bool pass() const { return failures.empty(); }
};

namespace detail {

inline void run_inequality_suite(const std::vector<CorpusEntry>& corpus, int scale, SuiteReport& rep) {
  const Grid2D g1 = inequality_grid(scale), g2 = inequality_grid(2 * scale);
  for (const auto& e : corpus) {
    for (auto& r : verify_inequalities(e, g1)) rep.inequality.push_back(std::move(r));
    for (auto& r : verify_inequalities(e, g2)) rep.inequality_refined.push_back(std::move(r));
  }
  std::vector<std::string> ids;
  std::vector<double> worst;
  for (std::size_t n = 0; n < rep.inequality.size(); ++n) {
    const auto& a = rep.inequality[n];
    const auto& b = rep.inequality_refined[n];
    if (!a.pass) rep.failures.push_back(a.id + " " + a.note + ": ratio " + std::to_string(a.ratio) + " > " + std::to_string(a.bound));
    if (!b.pass) rep.failures.push_back(b.id + " " + b.note + " (x2): ratio " + std::to_string(b.ratio) + " > " + std::to_string(b.bound));
    const double d = std::abs(a.ratio - b.ratio) / a.bound;
    auto it = std::find(ids.begin(), ids.end(), a.id);
    if (it == ids.end()) {
      ids.push_back(a.id);
      worst.push_back(d);
    } else {
      double& w = worst[it - ids.begin()];
      w = std::max(w, d);
    }
  }
  for (std::size_t v = 0; v < ids.size(); ++v) {
    rep.drift.emplace_back(ids[v], worst[v]);
    if (worst[v] > kRatioDrift)
      rep.failures.push_back(ids[v] + ": ratio drift " + std::to_string(worst[v]) + " under x2 refinement");
  }
}

inline void run_equivalence_suite(const std::vector<CorpusEntry>& corpus, int scale, SuiteReport& rep) {
  const Cutoff c;
  const Grid2D g = build_grid(64 * scale, 256 * scale + 1, 12.0);
  for (const auto& e : corpus) {
    const auto reps = verify_equivalence(e, c, g);
    for (std::size_t k = 0; k < reps.size(); ++k) {
      const auto& r = reps[k];
      if (!r.pass || !r.dy_pass)
        rep.failures.push_back("equivalence entry " + std::to_string(e.index) + " k=" +
                               std::to_string(k + 1) + ": ratio " + std::to_string(r.ratio) +
                               " outside [" + std::to_string(r.lower) + ", " + std::to_string(r.upper) + "]");
      rep.equivalence.push_back({e.index, int(k + 1), r});
    }
  }
}

inline void run_identity_suite(const std::vector<CorpusEntry>& corpus, int scale, SuiteReport& rep) {
  const Cutoff c;
  std::vector<double> orders;
  for (const auto& e : corpus) {
    const IdentityReport r = verify_identities(e, c, 64 * scale);
    const std::string tag = "identities entry " + std::to_string(e.index) + ": ";
    if (!(r.cancellation_order() >= kCancellationOrder))
      rep.failures.push_back(tag + "cancellation order " + std::to_string(r.cancellation_order()));
    if (!(r.beta_ratio() <= kBetaRatio))
      rep.failures.push_back(tag + "beta (0,1)->(0,2) ratio " + std::to_string(r.beta_ratio()));
    if (!(r.remainder_order() >= kRemainderOrder))
      rep.failures.push_back(tag + "remainder order " + std::to_string(r.remainder_order()));
    orders.push_back(r.remainder_order());
    rep.identities.push_back(r);
  }
  if (!orders.empty()) {
    std::sort(orders.begin(), orders.end());
    const std::size_t n = orders.size();
    rep.remainder_median_order = n % 2 ? orders[n / 2] : 0.5 * (orders[n / 2 - 1] + orders[n / 2]);
    if (!(rep.remainder_median_order >= kRemainderMedianOrder))
      rep.failures.push_back("identities: median remainder order " + std::to_string(rep.remainder_median_order));
  }
}

}  // namespace detail

/// Runs the seeded corpus through the selected verifiers. The three suites
/// run concurrently; the report does not depend on scheduling.
inline SuiteReport verify_suite(SuiteKind which, std::uint64_t seed, int count = 200, int scale = 1) {
  if (scale < 1) throw InvalidArgument("verify_suite: resolution scale must be >= 1");
  SuiteReport rep;
  rep.seed = seed;
  rep.count = count;
  rep.scale = scale;
  const auto corpus = make_corpus(seed, count);
  if (corpus.empty()) {
    rep.warnings.push_back("empty corpus: nothing verified (vacuous pass)");
    return rep;
  }
  const bool all = which == SuiteKind::all;
  SuiteReport ri, re, rd;
  std::vector<std::future<void>> jobs;
  if (all || which == SuiteKind::inequalities)
    jobs.push_back(std::async(std::launch::async, [&] { detail::run_inequality_suite(corpus, scale, ri); }));
  if (all || which == SuiteKind::equivalence)
    jobs.push_back(std::async(std::launch::async, [&] { detail::run_equivalence_suite(corpus, scale, re); }));
  if (all || which == SuiteKind::identities)
    jobs.push_back(std::async(std::launch::async, [&] { detail::run_identity_suite(corpus, scale, rd); }));
  for (auto& j : jobs) j.get();
  rep.inequality = std::move(ri.inequality);
  rep.inequality_refined = std::move(ri.inequality_refined);
  rep.drift = std::move(ri.drift);
  rep.equivalence = std::move(re.equivalence);
  rep.identities = std::move(rd.identities);
  rep.remainder_median_order = rd.remainder_median_order;
  for (auto* part : {&ri, &re, &rd})
    rep.failures.insert(rep.failures.end(), part->failures.begin(), part->failures.end());
  return rep;
}

}  // namespace mhdbl
