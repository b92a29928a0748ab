#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "mhdbl/fields.hpp"
#include "mhdbl/good_unknowns.hpp"
#include "mhdbl/norms.hpp"
#include "mhdbl/outer_flow.hpp"
#include "mhdbl/solver_primal.hpp"

namespace mhdbl {

// ---------------------------------------------------------------------------
// Energy functional and the ODE majorant

/// sum_{bx <= m-1, bx+k <= m} ||<y>^{l+k} d_x^bx d_y^k (u,h)||^2
///   + 25 delta0^{-4} ||(u_beta, h_beta)||^2_{L^2_l},  beta = (0, m).
inline double energy_functional(const State& s, const OuterFlow& of, const Cutoff& c,
                                const Grid2D& g, int m, double l, double delta0) {
  if (m < 1 || m > kMaxTangentialOrder)
    throw InvalidArgument("energy_functional: m must be in 1.." + std::to_string(kMaxTangentialOrder));
  double sum = 0.0;
  for (int bx = 0; bx <= m - 1; ++bx)
    for (int k = 0; bx + k <= m; ++k)
      for (const Field* f : {&s.u, &s.h}) {
        const double v = fd::l2(spatial_derivative(*f, g, bx, k), g, l + k);
        sum += v * v;
      }
  StabilityThresholds th;
  th.delta0 = delta0;
  th.l = l;
  const auto gu = good_unknowns(s, of, c, th, g, {0, m, 0});
  const double a = fd::l2(gu.u_beta, g, l), b = fd::l2(gu.h_beta, g, l);
  return sum + 25.0 / std::pow(delta0, 4) * (a * a + b * b);
}

/// F(t) / C: source, tangential source and trace contributions at time t.
inline double source_functional(const OuterFlow& of, const Cutoff& c, const Grid2D& g, double t,
                                int m, double l, double delta0, double mu, double kappa) {
  if (m < 1) throw InvalidArgument("source_functional: m must be >= 1");
  const SourceTerms r = source_r(of, c, g, t, mu, kappa);
  double sum = 0.0;
  for (int bx = 0; bx <= m - 1; ++bx)
    for (int k = 0; bx + k <= m; ++k)
      for (const Field* f : {&r.r1, &r.r2}) {
        const double v = fd::l2(spatial_derivative(*f, g, bx, k), g, l + k);
        sum += v * v;
      }
  const double d4 = std::pow(delta0, -4);
  double tang = 0.0;
  for (const Field* f : {&r.r1, &r.r2}) {
    const double v = fd::l2(fd::dx_pow(*f, g, m), g, l);
    tang += v * v;
  }
  const double w3 = fd::l2(fd::dx_pow(r.r3, g, m), g, -1.0);
  sum += d4 * (tang + 4.0 * d4 * w3 * w3);
  const int nq = 256;
  const double dxq = 2.0 * std::numbers::pi / nq;
  std::vector<double> buf(nq);
  double tr = 0.0;
  for (int i = 0; i <= m + 2; ++i)
    for (int j = 0; i + j <= m + 2; ++j)
      for (const TraceSeries* q : {&of.U, &of.H, &of.P}) {
        for (int n = 0; n < nq; ++n) buf[n] = (*q)(t, n * dxq, i, j);
        const double v = fd::l2_x(buf, dxq);
        tr += v * v;
      }
  return sum + d4 * d4 * std::pow(1.0 + tr, 3);
}

struct MajorantInput {
  double F0 = 0.0;
  std::vector<double> times;
  std::vector<double> Fts;  // F(t) including the factor C
  double C = 1.0;
  double delta0 = 0.1;
};

struct MajorantResult {
  std::vector<double> z;  // +inf at and beyond the horizon
  double horizon = std::numeric_limits<double>::infinity();
};

/// z(t) = (F0 + int F) {1 - 2 C delta0^{-8} (F0 + int F)^2 t}^{-1/2}; int F by the
/// trapezoid rule on the sample times, F piecewise linear between them.
inline MajorantResult ode_majorant(const MajorantInput& mi) {
  if (!(mi.C > 0.0)) throw InvalidArgument("ode_majorant: C must be > 0");
  if (!(mi.F0 >= 0.0)) throw InvalidArgument("ode_majorant: F0 must be >= 0");
  if (mi.times.size() != mi.Fts.size() || mi.times.empty())
    throw InvalidArgument("ode_majorant: times and F series must be non-empty and of equal length");
  for (std::size_t k = 0; k < mi.Fts.size(); ++k)
    if (!(mi.Fts[k] >= 0.0)) throw InvalidArgument("ode_majorant: F(t) must be >= 0");
  const double kc = 2.0 * mi.C * std::pow(mi.delta0, -8);
  auto bracket = [&](double I, double t) { return 1.0 - kc * I * I * t; };
  if (!(bracket(mi.F0, mi.times.front()) > 0.0))
    throw InvalidArgument("ode_majorant: non-positive bracket at the first time");
  MajorantResult res;
  res.z.resize(mi.times.size(), std::numeric_limits<double>::infinity());
  double I = mi.F0;
  res.z[0] = I / std::sqrt(bracket(I, mi.times[0]));
  for (std::size_t k = 1; k < mi.times.size(); ++k) {
    const double t0 = mi.times[k - 1], t1 = mi.times[k], h = t1 - t0;
    const double F0 = mi.Fts[k - 1], F1 = mi.Fts[k];
    auto I_at = [&](double s) { return I + F0 * s + 0.5 * (F1 - F0) / h * s * s; };
    if (bracket(I_at(h), t1) <= 0.0) {
      double lo = 0.0, hi = h;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bracket(I_at(mid), t0 + mid) > 0.0 ? lo : hi) = mid;
      }
      res.horizon = t0 + 0.5 * (lo + hi);
      return res;
    }
    I = I_at(h);
    res.z[k] = I / std::sqrt(bracket(I, t1));
  }
  if (mi.F0 > 0.0 || I > 0.0) {
    // horizon beyond the last sample for a frozen F: 1 = kc (I + F_last s)^2 (t + s)
    const double Fl = mi.Fts.back(), tl = mi.times.back();
    double lo = 0.0, hi = 1.0;
    while (kc * std::pow(I + Fl * hi, 2) * (tl + hi) < 1.0 && hi < 1e12) hi *= 2.0;
    if (hi < 1e12) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (kc * std::pow(I + Fl * mid, 2) * (tl + mid) < 1.0 ? lo : hi) = mid;
      }
      res.horizon = tl + 0.5 * (lo + hi);
    }
  }
  return res;
}

/// Largest C whose majorant horizon is at least t_target, given F = C * F_unit.
inline double calibrate_majorant_constant(double F0, const std::vector<double>& times,
                                          const std::vector<double>& F_unit, double delta0,
                                          double t_target) {
  auto horizon = [&](double C) {
    MajorantInput mi{F0, times, F_unit, C, delta0};
    for (auto& f : mi.Fts) f *= C;
    return ode_majorant(mi).horizon;
  };
  double lo = 1e-300, hi = 1.0;
  while (horizon(hi) > t_target) hi *= 1e3;
  while (horizon(lo) <= t_target) lo *= 1e-3;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    (horizon(mid) > t_target ? lo : hi) = mid;
    if (hi / lo < 1.0 + 1e-12) break;
  }
  return lo;
}

struct MajorantComparison {
  std::vector<double> margin;  // z - E^2
  bool ok = true;
  double first_failure = std::numeric_limits<double>::infinity();
};

inline MajorantComparison compare_majorant(const std::vector<double>& times,
                                           const std::vector<double>& E,
                                           const MajorantResult& mr) {
  if (E.size() != times.size() || mr.z.size() != times.size())
    throw InvalidArgument("compare_majorant: series lengths differ");
  MajorantComparison mc;
  for (std::size_t k = 0; k < times.size(); ++k) {
    mc.margin.push_back(mr.z[k] - E[k] * E[k]);
    if (!(E[k] * E[k] <= mr.z[k]) && mc.ok) {
      mc.ok = false;
      mc.first_failure = times[k];
    }
  }
  return mc;
}

// ---------------------------------------------------------------------------
// Two-run uniqueness experiment

/// Smooth admissible perturbation: u = sin x y e^{-y^2/2}, h = cos x e^{-y^2}.
inline State uniqueness_perturbation(const Grid2D& g) {
  State p(g, 0.0);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny - 1; ++j) {
      const double x = g.x(i), y = g.y(j);
      p.u(i, j) = std::sin(x) * y * std::exp(-0.5 * y * y);
      p.h(i, j) = std::cos(x) * std::exp(-y * y);
    }
  return p;
}

struct UniquenessSample {
  double t = 0.0;
  double N = 0.0;                 // ||(ubar, hbar)||_{L^2}
  double psi_identity = 0.0;      // ||psi~ - a2 int hbar/a2|| / max(||psi~||, tiny)
  double hardy_lhs = 0.0;         // ||psi~ / (1+y)||
  double hardy_rhs = 0.0;         // 2/delta0 sup a2 ||hbar||
};

struct UniquenessReport {
  double d = 0.0;
  std::vector<UniquenessSample> samples;
  double C_hat = 0.0;
  double sup_a1 = 0.0, sup_a2 = 0.0, sup_b1 = 0.0, sup_b2 = 0.0, sup_c1 = 0.0, sup_c2 = 0.0;
  bool hardy_ok = true;
  Termination cause1 = Termination::t_end, cause2 = Termination::t_end;

  double max_N() const {
    double m = 0.0;
    for (const auto& s : samples) m = std::max(m, s.N);
    return m;
  }
};

inline constexpr double kHardySlack = 0.05;

/// max_t d/dt log N^2 over a 5-point moving average of N (uniform samples).
inline double gronwall_constant(const std::vector<double>& t, const std::vector<double>& N) {
  const std::size_t n = N.size();
  if (n < 3) return 0.0;
  std::vector<double> s(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t a = k >= 2 ? k - 2 : 0, b = std::min(n - 1, k + 2);
    double sum = 0.0;
    for (std::size_t q = a; q <= b; ++q) sum += N[q];
    s[k] = sum / double(b - a + 1);
  }
  for (double v : s)
    if (!(v > 0.0)) return 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k + 1 < n; ++k)
    best = std::max(best, (2.0 * std::log(s[k + 1]) - 2.0 * std::log(s[k - 1])) / (t[k + 1] - t[k - 1]));
  return best;
}

namespace detail {

/// Samples (ubar, hbar), the psi~ identity, the Hardy bound and the
/// coefficient sizes for the pair (s1, s2); prev2 is solution 2 at the
/// previous sample (for d_t eta), or null.
inline UniquenessSample uniqueness_sample(const State& s1, const State& s2, const State* prev2,
                                          const OuterFlow& of, const Cutoff& c, const Grid2D& g,
                                          const SolverConfig& cfg, UniquenessReport& rep) {
  const Background b1(s1, of, c, g), b2(s2, of, c, g);
  const Field eta1 = divide(b2.n1, b2.a), eta2 = divide(b2.n2, b2.a);
  const Field ut = s1.u - s2.u, ht = s1.h - s2.h;
  const Field psit = fd::cumint_y(ht, g);
  const Field ubar = ut - eta1 * psit, hbar = ht - eta2 * psit;
  UniquenessSample sm;
  sm.t = s2.t;
  sm.N = std::hypot(fd::l2(ubar, g), fd::l2(hbar, g));
  const Field form = b2.a * fd::cumint_y(divide(hbar, b2.a), g);
  const double np = fd::l2(psit, g);
  sm.psi_identity = fd::l2(psit - form, g) / std::max(np, 1e-300);
  Field wpsi = psit;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) wpsi(i, j) /= 1.0 + g.y(j);
  sm.hardy_lhs = fd::l2(wpsi, g);
  sm.hardy_rhs = 2.0 / cfg.thresholds.delta0 * fd::max_abs(b2.a) * fd::l2(hbar, g);
  if (sm.hardy_lhs > (1.0 + kHardySlack) * sm.hardy_rhs) rep.hardy_ok = false;

  // coefficients of the difference system
  const double mu = cfg.mu, kappa = cfg.kappa;
  const Field Ux_p1 = outer(b2.tr.U[1], b2.p1), Hx_p1 = outer(b2.tr.H[1], b2.p1);
  const Field Ux_p0 = outer(b2.tr.U[1], b2.p0), Hx_p0 = outer(b2.tr.H[1], b2.p0);
  const Field ux2 = fd::dx(s2.u, g) + Ux_p1, hx2 = fd::dx(s2.h, g) + Hx_p1;
  const Field gg2 = b2.d.g - outer(b2.tr.H[1], b2.p0);
  const Field e1y = fd::dy(eta1, g), e2y = fd::dy(eta2, g);
  const Field a1 = ux2 + gg2 * eta1;
  const Field a2 = hx2 + gg2 * eta2;
  const Field bb1 = (kappa - mu) * eta1 * eta2 - 2.0 * mu * e1y - hx2 - gg2 * eta2;
  const Field bb2 = -2.0 * kappa * e2y - ux2 - gg2 * eta1;
  rep.sup_a1 = std::max(rep.sup_a1, fd::max_abs(a1));
  rep.sup_a2 = std::max(rep.sup_a2, fd::max_abs(a2));
  rep.sup_b1 = std::max(rep.sup_b1, fd::max_abs(bb1));
  rep.sup_b2 = std::max(rep.sup_b2, fd::max_abs(bb2));
  if (prev2) {
    const Background bp(*prev2, of, c, g);
    const double dt = s2.t - prev2->t;
    const Field e1t = (eta1 - divide(bp.n1, bp.a)) * (1.0 / dt);
    const Field e2t = (eta2 - divide(bp.n2, bp.a)) * (1.0 / dt);
    const Field A_u = s1.u + outer(b1.tr.U[0], b1.p1);
    const Field A_v = b1.d.v - Ux_p0;
    const Field B_h = b1.a;
    const Field B_g = b1.d.g - Hx_p0;
    auto transport = [&](const Field& f) { return A_u * fd::dx(f, g) + A_v * fd::dy(f, g); };
    auto magnetic = [&](const Field& f) { return B_h * fd::dx(f, g) + B_g * fd::dy(f, g); };
    const Field c1 = e1t + transport(eta1) - mu * fd::dyy(eta1, g) - magnetic(eta2) -
                     2.0 * mu * eta2 * e1y + (kappa - mu) * eta1 * (eta2 * eta2 + e2y) +
                     gg2 * (eta1 * eta1 - eta2 * eta2) + ux2 * eta1 - hx2 * eta2;
    const Field c2 = e2t + transport(eta2) - kappa * fd::dyy(eta2, g) - magnetic(eta1) -
                     2.0 * kappa * eta2 * e2y + hx2 * eta1 - ux2 * eta2;
    rep.sup_c1 = std::max(rep.sup_c1, fd::linf(c1, g, 1.0));
    rep.sup_c2 = std::max(rep.sup_c2, fd::linf(c2, g, 1.0));
  }
  return sm;
}

}  // namespace detail

/// Runs s0 + d p and s0 concurrently with the same fixed step (cfg.dt) and
/// compares them at every recorded sample. cfg.fixed_dt is forced on.
inline UniquenessReport uniqueness_experiment(const State& s0, const State& p, double d,
                                              const OuterFlow& of, const Cutoff& c,
                                              const Grid2D& g, SolverConfig cfg) {
  cfg.fixed_dt = true;
  cfg.validate();
  State s1 = s0;
  s1.u += p.u * d;
  s1.h += p.h * d;
  std::vector<State> st1, st2;
  auto run = [&](const State& init, std::vector<State>& out) {
    RunOptions opt;
    opt.on_sample = [&out](const State& s, const MonitorSample&) { out.push_back(s); };
    return run_primal(init, of, c, g, cfg, opt);
  };
  auto f1 = std::async(std::launch::async, [&] { return run(s1, st1); });
  auto f2 = std::async(std::launch::async, [&] { return run(s0, st2); });
  const RunRecord r1 = f1.get(), r2 = f2.get();
  UniquenessReport rep;
  rep.d = d;
  rep.cause1 = r1.cause;
  rep.cause2 = r2.cause;
  if (r1.cause == Termination::positivity || r2.cause == Termination::positivity)
    throw PositivityError(std::min(r1.samples.back().hmin, r2.samples.back().hmin), 0, 0, 0.0,
                          0.0, 0.5 * cfg.thresholds.delta0);
  const std::size_t n = std::min(st1.size(), st2.size());
  std::vector<double> t, N;
  for (std::size_t k = 0; k < n; ++k) {
    rep.samples.push_back(detail::uniqueness_sample(st1[k], st2[k], k ? &st2[k - 1] : nullptr,
                                                    of, c, g, cfg, rep));
    t.push_back(rep.samples.back().t);
    N.push_back(rep.samples.back().N);
  }
  rep.C_hat = gronwall_constant(t, N);
  return rep;
}

/// max over samples with 0 < t <= t_max of |N_d / N_{d/2} - 2| / 2.
inline double linear_response_deviation(const UniquenessReport& full, const UniquenessReport& half,
                                        double t_max) {
  double worst = 0.0;
  const std::size_t n = std::min(full.samples.size(), half.samples.size());
  for (std::size_t k = 0; k < n; ++k) {
    const double t = full.samples[k].t;
    if (t <= 0.0 || t > t_max + 1e-12) continue;
    const double r = full.samples[k].N / half.samples[k].N;
    worst = std::max(worst, std::abs(r - 2.0) / 2.0);
  }
  return worst;
}

}  // namespace mhdbl
