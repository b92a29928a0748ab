#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mhdbl/fields.hpp"
#include "mhdbl/manufactured.hpp"
#include "mhdbl/monitor.hpp"
#include "mhdbl/outer_flow.hpp"
#include "mhdbl/stencil.hpp"

namespace mhdbl {

enum class Scheme { imex_be, imex_cn };

inline std::string to_string(Scheme s) { return s == Scheme::imex_be ? "imex-be" : "imex-cn"; }

inline Scheme parse_scheme(const std::string& s) {
  if (s == "imex-be") return Scheme::imex_be;
  if (s == "imex-cn") return Scheme::imex_cn;
  throw InvalidArgument("unknown scheme '" + s + "' (expected imex-be or imex-cn)");
}

enum class Termination { t_end, positivity, nan, cfl_collapse, max_steps };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::t_end: return "t_end";
    case Termination::positivity: return "positivity";
    case Termination::nan: return "nan";
    case Termination::cfl_collapse: return "cfl_collapse";
    default: return "max_steps";
  }
}

class CflCollapse : public Error {
 public:
  explicit CflCollapse(double dt) : Error("CFL collapse: dt = " + std::to_string(dt)), dt(dt) {}
  double dt;
};

struct SolverConfig {
  double mu = 1.0;
  double kappa = 1.0;
  double eps = 0.0;
  double dt = 1e-2;         // user cap, or the step itself when fixed_dt
  bool fixed_dt = false;
  double t_end = 1.0;
  double cfl = 0.4;
  Scheme scheme = Scheme::imex_cn;
  int corrector_order = 0;
  StabilityThresholds thresholds;
  bool enforce_positivity = true;
  int monitor_m = 2;
  int sample_every = 1;
  long max_steps = 10'000'000;

  void validate() const {
    if (!(mu > 0.0)) throw InvalidArgument("mu must be > 0");
    if (!(kappa > 0.0)) throw InvalidArgument("kappa must be > 0");
    if (!(eps >= 0.0)) throw InvalidArgument("eps must be >= 0");
    if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
    if (!(t_end >= 0.0)) throw InvalidArgument("t_end must be >= 0");
    if (!(cfl > 0.0 && cfl <= 0.9)) throw InvalidArgument("cfl must be in (0, 0.9]");
    if (corrector_order < 0 || corrector_order > 1)
      throw InvalidArgument("corrector_order must be 0 or 1");
    if (sample_every < 1) throw InvalidArgument("sample_every must be >= 1");
    thresholds.validate();
  }
};

/// Per-x boundary data: u at both ends, h at y_max and the wall flux d_y h(.,0).
struct BoundaryValues {
  std::vector<double> u_wall, u_top, h_top, h_flux;

  static BoundaryValues homogeneous(int nx) {
    std::vector<double> z(nx, 0.0);
    return {z, z, z, z};
  }
};

/// Optional inhomogeneous boundary data and extra forcing (added to r1, r2).
/// Manufactured forcing already makes the analytic pair exact, so it turns
/// the compatibility corrector off.
struct Drivers {
  std::function<BoundaryValues(double)> boundary;
  std::function<std::pair<Field, Field>(double)> forcing;
  bool corrector = true;
};

inline Drivers manufactured_drivers(const ManufacturedPrimal& m, const OuterFlow& of,
                                    const Cutoff& c, const Grid2D& g, const SolverConfig& cfg) {
  Drivers d;
  d.corrector = false;
  d.boundary = [m, g](double t) {
    BoundaryValues b = BoundaryValues::homogeneous(g.nx);
    for (int i = 0; i < g.nx; ++i) {
      const auto w = m.eval(t, g.x(i), 0.0), top = m.eval(t, g.x(i), g.y_max);
      b.u_wall[i] = w.u;
      b.h_flux[i] = w.hy;
      b.u_top[i] = top.u;
      b.h_top[i] = top.h;
    }
    return b;
  };
  const double mu = cfg.mu, kappa = cfg.kappa, eps = cfg.eps;
  d.forcing = [m, of, c, g, mu, kappa, eps](double t) {
    auto f = manufactured_forcing(m, of, c, g, mu, kappa, eps, t);
    return std::make_pair(std::move(f.fu), std::move(f.fh));
  };
  return d;
}

/// r~_1, r~_2, r~_3 of the eps-regularized problem.
struct CorrectorFields {
  Field rt1, rt2, rt3;
};

namespace detail {

struct Profiles {
  std::vector<double> p0, p1, p2;
  Profiles(const Cutoff& c, const Grid2D& g)
      : p0(c.profile(g, 0)), p1(c.profile(g, 1)), p2(c.profile(g, 2)) {}
};

/// -(transport and coupling blocks) + r1, r2 at time t.
inline std::pair<Field, Field> transport_tendency(const State& s, const OuterFlow& of,
                                                  const Cutoff& c, const Profiles& pr,
                                                  const Grid2D& g, double mu, double kappa,
                                                  double t) {
  const auto d = recover_vg(s, g);
  const Field ux = fd::dx(s.u, g), uy = fd::dy(s.u, g);
  const Field hx = fd::dx(s.h, g), hy = fd::dy(s.h, g);
  const SourceTerms src = source_r(of, c, g, t, mu, kappa);
  Field nu(g), nh(g);
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    const double U = of.U(t, x), Ux = of.U(t, x, 0, 1), H = of.H(t, x), Hx = of.H(t, x, 0, 1);
    for (int j = 0; j < g.ny; ++j) {
      const double u = s.u(i, j), h = s.h(i, j), v = d.v(i, j), gg = d.g(i, j);
      const double ax = u + U * pr.p1[j], ay = v - Ux * pr.p0[j];
      const double bx = h + H * pr.p1[j], by = gg - Hx * pr.p0[j];
      nu(i, j) = -(ax * ux(i, j) + ay * uy(i, j) - bx * hx(i, j) - by * hy(i, j) +
                   Ux * pr.p1[j] * u + U * pr.p2[j] * v - Hx * pr.p1[j] * h - H * pr.p2[j] * gg) +
                 src.r1(i, j);
      nh(i, j) = -(ax * hx(i, j) + ay * hy(i, j) - bx * ux(i, j) - by * uy(i, j) +
                   Hx * pr.p1[j] * u + H * pr.p2[j] * v - Ux * pr.p1[j] * h - U * pr.p2[j] * gg) +
                 src.r2(i, j);
    }
  }
  return {std::move(nu), std::move(nh)};
}

}  // namespace detail

/// Compatibility corrector: r~ = -sum_{i<=order} t^i/i! d_x^2 d_t^i (u,h)(0), with
/// d_t (u,h)(0) the right-hand side of the unregularized system at t = 0, and
/// r~_3 = d_y^{-1} r~_2.
class EpsilonCorrector {
 public:
  EpsilonCorrector(const State& s0, const OuterFlow& of, const Cutoff& c, const Grid2D& g,
                   int order, double mu, double kappa)
      : order_(order), g_(g) {
    if (order < 0 || order > 1) throw InvalidArgument("corrector order must be 0 or 1");
    c0u_ = -fd::dxx(s0.u, g);
    c0h_ = -fd::dxx(s0.h, g);
    if (order == 1) {
      const detail::Profiles pr(c, g);
      auto [nu, nh] = detail::transport_tendency(s0, of, c, pr, g, mu, kappa, s0.t);
      nu += mu * fd::dyy(s0.u, g);
      nh += kappa * fd::dyy(s0.h, g);
      c1u_ = -fd::dxx(nu, g);
      c1h_ = -fd::dxx(nh, g);
    }
  }

  int order() const { return order_; }

  CorrectorFields at(double t) const {
    CorrectorFields f{c0u_, c0h_, Field()};
    if (order_ == 1) {
      f.rt1 += t * c1u_;
      f.rt2 += t * c1h_;
    }
    f.rt3 = fd::cumint_y(f.rt2, g_);
    return f;
  }

 private:
  int order_;
  Grid2D g_;
  Field c0u_, c0h_, c1u_, c1h_;
};

inline CorrectorFields epsilon_corrector(const State& s0, const OuterFlow& of, const Cutoff& c,
                                         const Grid2D& g, int order, double t, double mu,
                                         double kappa) {
  return EpsilonCorrector(s0, of, c, g, order, mu, kappa).at(t);
}

/// cfl * min(dx / max(|u1|+|h1|), dy / max(|u2|+|h2|)), capped by cfg.dt.
inline double cfl_dt(const State& s, const OuterFlow& of, const Cutoff& c, const Grid2D& g,
                     const SolverConfig& cfg) {
  const PhysicalState ps = to_physical(s, of, c, g);
  double sx = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < ps.u1.size(); ++k) {
    sx = std::max(sx, std::abs(ps.u1[k]) + std::abs(ps.h1[k]));
    sy = std::max(sy, std::abs(ps.u2[k]) + std::abs(ps.h2[k]));
  }
  double dt = cfg.dt;
  if (sx > 0.0) dt = std::min(dt, cfg.cfl * g.dx / sx);
  if (sy > 0.0) dt = std::min(dt, cfg.cfl * g.dy / sy);
  if (!(dt > 1e-12) || !std::isfinite(dt)) throw CflCollapse(dt);
  return dt;
}

namespace detail {

/// Full linear part mu d_y^2 w + eps d_x^2 w with the wall row of a Neumann
/// field built from the ghost value w_{-1} = w_1 - 2 dy q.
inline Field linear_part(const Field& w, const Grid2D& g, double nu, double eps, bool neumann,
                         const std::vector<double>& q) {
  Field out(g);
  const double s = nu / (g.dy * g.dy);
  for (int i = 0; i < g.nx; ++i) {
    const double* c = w.column(i);
    double* o = out.column(i);
    for (int j = 1; j < g.ny - 1; ++j) o[j] = s * (c[j + 1] - 2.0 * c[j] + c[j - 1]);
    if (neumann) o[0] = s * (2.0 * c[1] - 2.0 * c[0] - 2.0 * g.dy * q[i]);
  }
  if (eps > 0.0) out += eps * fd::dxx(w, g);
  return out;
}

/// Solves (I - a_eps d_x^2)(I - a_nu d_y^2) D = R for the increment D, with
/// Dirichlet rows fixed to the given increments and, when neumann, a
/// homogeneous ghost row at the wall.
inline Field implicit_solve(Field R, const Grid2D& g, double a_nu, double a_eps, bool neumann,
                            const std::vector<double>& d_wall, const std::vector<double>& d_top) {
  const int j0 = neumann ? 0 : 1;
  if (a_eps > 0.0) {
    const double s = a_eps / (g.dx * g.dx);
    std::vector<double> row(g.nx);
    for (int j = j0; j < g.ny - 1; ++j) {
      for (int i = 0; i < g.nx; ++i) row[i] = R(i, j);
      fd::solve_cyclic_constant(-s, 1.0 + 2.0 * s, -s, row);
      for (int i = 0; i < g.nx; ++i) R(i, j) = row[i];
    }
  }
  const double r = a_nu / (g.dy * g.dy);
  std::vector<double> a(g.ny, -r), b(g.ny, 1.0 + 2.0 * r), cc(g.ny, -r), scratch;
  if (neumann) {
    cc[0] = -2.0 * r;
  } else {
    b[0] = 1.0;
    cc[0] = 0.0;
  }
  a[g.ny - 1] = 0.0;
  b[g.ny - 1] = 1.0;
  for (int i = 0; i < g.nx; ++i) {
    double* col = R.column(i);
    if (!neumann) col[0] = d_wall[i];
    col[g.ny - 1] = d_top[i];
    fd::solve_tridiagonal(a, b, cc, std::span<double>(col, g.ny), scratch);
  }
  return R;
}

}  // namespace detail

/// Everything a step needs besides the state; built once per run.
struct StepContext {
  const OuterFlow* of;
  const Cutoff* c;
  const Grid2D* g;
  const SolverConfig* cfg;
  const EpsilonCorrector* corrector = nullptr;
  const Drivers* drivers = nullptr;
};

namespace detail {

inline std::pair<Field, Field> explicit_part(const State& s, const StepContext& cx,
                                             const Profiles& pr, double t) {
  const auto& cfg = *cx.cfg;
  auto [nu, nh] = transport_tendency(s, *cx.of, *cx.c, pr, *cx.g, cfg.mu, cfg.kappa, t);
  if (cfg.eps > 0.0 && cx.corrector) {
    const auto rt = cx.corrector->at(t);
    nu += cfg.eps * rt.rt1;
    nh += cfg.eps * rt.rt2;
  }
  if (cx.drivers && cx.drivers->forcing) {
    const auto [fu, fh] = cx.drivers->forcing(t);
    nu += fu;
    nh += fh;
  }
  return {std::move(nu), std::move(nh)};
}

inline BoundaryValues boundary_at(const StepContext& cx, double t) {
  if (cx.drivers && cx.drivers->boundary) return cx.drivers->boundary(t);
  return BoundaryValues::homogeneous(cx.g->nx);
}

}  // namespace detail

/// One IMEX step of size dt from s (at time s.t). Diffusion and eps d_x^2 are
/// implicit (approximately factored, in increment form); everything else is
/// explicit. imex-cn is the trapezoidal variant with a Heun predictor.
inline State step_primal(const State& s, const StepContext& cx, double dt) {
  const Grid2D& g = *cx.g;
  const SolverConfig& cfg = *cx.cfg;
  const detail::Profiles pr(*cx.c, g);
  const double t0 = s.t, t1 = s.t + dt;
  const BoundaryValues b0 = detail::boundary_at(cx, t0), b1 = detail::boundary_at(cx, t1);
  const bool cn = cfg.scheme == Scheme::imex_cn;
  const double theta = cn ? 0.5 : 1.0;
  std::vector<double> q(g.nx);
  for (int i = 0; i < g.nx; ++i) q[i] = cn ? 0.5 * (b0.h_flux[i] + b1.h_flux[i]) : b1.h_flux[i];
  std::vector<double> du_wall(g.nx), du_top(g.nx), dh_top(g.nx), unused(g.nx, 0.0);
  for (int i = 0; i < g.nx; ++i) {
    du_wall[i] = b1.u_wall[i] - s.u(i, 0);
    du_top[i] = b1.u_top[i] - s.u(i, g.ny - 1);
    dh_top[i] = b1.h_top[i] - s.h(i, g.ny - 1);
  }
  const Field Lu = detail::linear_part(s.u, g, cfg.mu, cfg.eps, false, q);
  const Field Lh = detail::linear_part(s.h, g, cfg.kappa, cfg.eps, true, q);
  auto advance = [&](const Field& nu, const Field& nh) {
    State out(g, t1);
    out.u = s.u + detail::implicit_solve((Lu + nu) * dt, g, theta * dt * cfg.mu,
                                         theta * dt * cfg.eps, false, du_wall, du_top);
    out.h = s.h + detail::implicit_solve((Lh + nh) * dt, g, theta * dt * cfg.kappa,
                                         theta * dt * cfg.eps, true, unused, dh_top);
    return out;
  };
  auto [nu0, nh0] = detail::explicit_part(s, cx, pr, t0);
  if (!cn) return advance(nu0, nh0);
  const State pred = advance(nu0, nh0);
  auto [nu1, nh1] = detail::explicit_part(pred, cx, pr, t1);
  return advance(0.5 * (nu0 + nu1), 0.5 * (nh0 + nh1));
}

struct RunRecord {
  std::vector<double> times;
  std::vector<MonitorSample> samples;
  std::vector<std::string> snapshots;  // filled by callers that write them
  Termination cause = Termination::t_end;
  std::string message;
  long steps = 0;
  State final_state;
};

struct RunOptions {
  const Drivers* drivers = nullptr;
  bool validate = true;
  /// Called with every recorded sample and the state it describes.
  std::function<void(const State&, const MonitorSample&)> on_sample;
};

inline RunRecord run_primal(const State& s0, const OuterFlow& of, const Cutoff& c,
                            const Grid2D& g, const SolverConfig& cfg, const RunOptions& opt = {}) {
  cfg.validate();
  c.check_compatible(g);
  if (opt.validate) {
    const auto rep = validate_initial(s0, of, c, cfg.thresholds, g);
    if (cfg.enforce_positivity && !rep.positivity_ok)
      throw InvalidArgument("initial data fails positivity: " + rep.summary());
    if (!(opt.drivers && opt.drivers->boundary) && !rep.boundary_ok)
      throw InvalidArgument("initial data fails boundary conditions: " + rep.summary());
  }
  std::optional<EpsilonCorrector> corr;
  if (cfg.eps > 0.0 && !(opt.drivers && !opt.drivers->corrector))
    corr.emplace(s0, of, c, g, cfg.corrector_order, cfg.mu, cfg.kappa);
  const StepContext cx{&of, &c, &g, &cfg, corr ? &*corr : nullptr, opt.drivers};
  const MonitorConfig mc{cfg.monitor_m, cfg.thresholds.l, cfg.thresholds.delta0};

  RunRecord rec;
  State s = s0;
  double dissipation = 0.0, last_dt = 0.0;
  auto record = [&](double dt) {
    MonitorSample ms = monitor(s, of, c, g, mc);
    ms.dissipation = dissipation;
    ms.dt = dt;
    dissipation = 0.0;
    rec.times.push_back(s.t);
    rec.samples.push_back(ms);
    if (opt.on_sample) opt.on_sample(s, ms);
    return ms;
  };
  record(0.0);
  const double floor = 0.5 * cfg.thresholds.delta0;
  const double t_tol = 1e-12 * std::max(1.0, cfg.t_end);
  while (s.t < cfg.t_end - t_tol) {
    if (rec.steps >= cfg.max_steps) {
      rec.cause = Termination::max_steps;
      break;
    }
    double dt;
    try {
      dt = cfg.fixed_dt ? cfg.dt : cfl_dt(s, of, c, g, cfg);
    } catch (const CflCollapse& e) {
      rec.cause = Termination::cfl_collapse;
      rec.message = e.what();
      break;
    }
    dt = std::min(dt, cfg.t_end - s.t);
    const double rate0 = dissipation_rate(s, g, cfg.thresholds.l);
    State next = step_primal(s, cx, dt);
    ++rec.steps;
    if (!fd::all_finite(next.u) || !fd::all_finite(next.h)) {
      rec.cause = Termination::nan;
      rec.message = "non-finite field at t=" + std::to_string(next.t);
      break;
    }
    s = std::move(next);
    dissipation += 0.5 * dt * (rate0 + dissipation_rate(s, g, cfg.thresholds.l));
    last_dt = dt;
    const bool at_end = s.t >= cfg.t_end - t_tol;
    const bool sample = at_end || rec.steps % cfg.sample_every == 0;
    double hmin;
    if (sample) {
      hmin = record(dt).hmin;
    } else {
      const Field a = magnetic_denominator(s, of, c, g);
      hmin = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < a.size(); ++k) hmin = std::min(hmin, a[k]);
    }
    if (cfg.enforce_positivity && hmin < floor) {
      if (!sample) record(dt);
      rec.cause = Termination::positivity;
      rec.message = "min(h + H phi') = " + std::to_string(hmin) + " < " + std::to_string(floor) +
                    " at t=" + std::to_string(s.t);
      break;
    }
  }
  if (rec.times.back() != s.t) record(last_dt);
  rec.final_state = std::move(s);
  return rec;
}

}  // namespace mhdbl
