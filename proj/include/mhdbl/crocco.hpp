#pragma once

#include <math.h>  // pchip.hpp in Boost 1.74 calls unqualified isnan

#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/interpolators/pchip.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mhdbl/fields.hpp"
#include "mhdbl/outer_flow.hpp"
#include "mhdbl/solver_primal.hpp"
#include "mhdbl/stencil.hpp"

// Crocco-type formulation: tau = t, xi = x, eta = psi(t, x, y). The (xi, eta)
// grid is a Grid2D whose "y" axis is eta and whose y_max is eta_max.
namespace mhdbl {

struct CroccoState {
  Field u1, h1;
  double tau = 0.0;
};

class TransformError : public Error {
 public:
  using Error::Error;
};

/// Stream function column psi = int_0^y h1.
inline Field physical_psi(const PhysicalState& ps, const Grid2D& g) { return fd::cumint_y(ps.h1, g); }

/// min over columns of psi(y_max).
inline double crocco_eta_max(const PhysicalState& ps, const Grid2D& g) {
  const Field psi = physical_psi(ps, g);
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.nx; ++i) m = std::min(m, psi(i, g.ny - 1));
  return m;
}

inline Grid2D crocco_grid(const Grid2D& g, int n_eta, double eta_max) {
  return build_grid(g.nx, n_eta, eta_max, g.x_period);
}

/// Samples u1, h1 at the eta nodes of eg, per column: y(eta) by monotone
/// piecewise-cubic inversion of psi, then cubic Hermite in y. Beyond psi(y_max)
/// the column continues with its y_max values (far field).
inline CroccoState to_crocco(const PhysicalState& ps, const Grid2D& g, const Grid2D& eg) {
  if (eg.nx != g.nx) throw InvalidArgument("to_crocco: xi and x grids must match");
  if (g.ny < 4) throw InvalidArgument("to_crocco: need ny >= 4");
  const Field psi = physical_psi(ps, g);
  const Field u1y = fd::dy(ps.u1, g), h1y = fd::dy(ps.h1, g);
  CroccoState cs{Field(eg), Field(eg), ps.t};
  using boost::math::interpolators::cardinal_cubic_hermite;
  using boost::math::interpolators::pchip;
  for (int i = 0; i < g.nx; ++i) {
    const double* h = ps.h1.column(i);
    const double* p = psi.column(i);
    for (int j = 0; j < g.ny; ++j)
      if (!(h[j] > 0.0))
        throw TransformError("to_crocco: h1 = " + std::to_string(h[j]) + " <= 0 at (x=" +
                             std::to_string(g.x(i)) + ", y=" + std::to_string(g.y(j)) + ")");
    for (int j = 1; j < g.ny; ++j)
      if (!(p[j] > p[j - 1]))
        throw TransformError("to_crocco: psi not increasing at x=" + std::to_string(g.x(i)));
    pchip<std::vector<double>> y_of(std::vector<double>(p, p + g.ny),
                                    std::vector<double>(g.y_nodes));
    const double* u = ps.u1.column(i);
    cardinal_cubic_hermite<std::vector<double>> uf(std::vector<double>(u, u + g.ny),
                                                   std::vector<double>(u1y.column(i), u1y.column(i) + g.ny),
                                                   0.0, g.dy);
    cardinal_cubic_hermite<std::vector<double>> hf(std::vector<double>(h, h + g.ny),
                                                   std::vector<double>(h1y.column(i), h1y.column(i) + g.ny),
                                                   0.0, g.dy);
    const double top = p[g.ny - 1];
    for (int k = 0; k < eg.ny; ++k) {
      const double eta = eg.y(k);
      if (eta >= top) {
        cs.u1(i, k) = u[g.ny - 1];
        cs.h1(i, k) = h[g.ny - 1];
        continue;
      }
      const double y = std::clamp(y_of(eta), 0.0, g.y_max);
      cs.u1(i, k) = uf(y);
      cs.h1(i, k) = hf(y);
    }
  }
  return cs;
}

/// u1 = (U0 + e1 e^{-tau} sin xi e^{-eta})(1 - e^{-eta}), h1 = H0 + e2 e^{-tau} cos xi e^{-eta^2}.
struct ManufacturedCrocco {
  double U0 = 1.0, H0 = 1.0, e1 = 0.2, e2 = 0.2;

  struct Point {
    double u, ut, ux, uy, uyy;
    double h, ht, hx, hy, hyy;
  };

  Point eval(double tau, double xi, double eta) const {
    const double A = std::exp(-tau), s = std::sin(xi), c = std::cos(xi);
    const double em = std::exp(-eta), q = 1.0 - em;
    const double a = U0 + e1 * A * s * em;
    const double a_t = -e1 * A * s * em, a_x = e1 * A * c * em, a_y = -e1 * A * s * em;
    const double a_yy = e1 * A * s * em;
    Point p{};
    p.u = a * q;
    p.ut = a_t * q;
    p.ux = a_x * q;
    p.uy = a_y * q + a * em;
    p.uyy = a_yy * q + 2.0 * a_y * em - a * em;
    const double g = std::exp(-eta * eta);
    p.h = H0 + e2 * A * c * g;
    p.ht = -e2 * A * c * g;
    p.hx = -e2 * A * s * g;
    p.hy = e2 * A * c * g * (-2.0 * eta);
    p.hyy = e2 * A * c * g * (4.0 * eta * eta - 2.0);
    return p;
  }

  CroccoState sample(double tau, const Grid2D& eg) const {
    CroccoState cs{Field(eg), Field(eg), tau};
    for (int i = 0; i < eg.nx; ++i)
      for (int k = 0; k < eg.ny; ++k) {
        const auto p = eval(tau, eg.x(i), eg.y(k));
        cs.u1(i, k) = p.u;
        cs.h1(i, k) = p.h;
      }
    return cs;
  }
};

/// Residuals of the Crocco system (with -P_x on the u side) for the analytic pair.
inline std::pair<Field, Field> crocco_forcing(const ManufacturedCrocco& m, const OuterFlow& of,
                                              const Grid2D& eg, double mu, double kappa,
                                              double tau) {
  Field fu(eg), fh(eg);
  for (int i = 0; i < eg.nx; ++i) {
    const double Px = of.Px(tau, eg.x(i));
    for (int k = 0; k < eg.ny; ++k) {
      const auto p = m.eval(tau, eg.x(i), eg.y(k));
      fu(i, k) = p.ut + p.u * p.ux - p.h * p.hx + (kappa - mu) * p.h * p.hy * p.uy -
                 mu * p.h * p.h * p.uyy + Px;
      fh(i, k) = p.ht - p.h * p.ux + p.u * p.hx - kappa * p.h * p.h * p.hyy;
    }
  }
  return {std::move(fu), std::move(fh)};
}

struct CroccoDrivers {
  std::function<BoundaryValues(double)> boundary;  // u_wall, u_top, h_top, h_flux
  std::function<std::pair<Field, Field>(double)> forcing;
};

inline CroccoDrivers manufactured_crocco_drivers(const ManufacturedCrocco& m, const OuterFlow& of,
                                                 const Grid2D& eg, double mu, double kappa) {
  CroccoDrivers d;
  d.boundary = [m, eg](double tau) {
    BoundaryValues b = BoundaryValues::homogeneous(eg.nx);
    for (int i = 0; i < eg.nx; ++i) {
      const auto w = m.eval(tau, eg.x(i), 0.0), top = m.eval(tau, eg.x(i), eg.y_max);
      b.u_wall[i] = w.u;
      b.h_flux[i] = w.hy;
      b.u_top[i] = top.u;
      b.h_top[i] = top.h;
    }
    return b;
  };
  d.forcing = [m, of, eg, mu, kappa](double tau) { return crocco_forcing(m, of, eg, mu, kappa, tau); };
  return d;
}

namespace detail {

inline BoundaryValues crocco_boundary(const CroccoDrivers* dr, const OuterFlow& of,
                                      const Grid2D& eg, double tau) {
  if (dr && dr->boundary) return dr->boundary(tau);
  BoundaryValues b = BoundaryValues::homogeneous(eg.nx);
  for (int i = 0; i < eg.nx; ++i) {
    b.u_top[i] = of.U(tau, eg.x(i));
    b.h_top[i] = of.H(tau, eg.x(i));
  }
  return b;
}

/// First-order terms moved to the right-hand side.
inline std::pair<Field, Field> crocco_explicit(const CroccoState& w, const OuterFlow& of,
                                               const Grid2D& eg, double mu, double kappa,
                                               double tau, const CroccoDrivers* dr) {
  const Field ux = fd::dx(w.u1, eg), hx = fd::dx(w.h1, eg);
  const Field uy = fd::dy(w.u1, eg), hy = fd::dy(w.h1, eg);
  Field nu(eg), nh(eg);
  for (int i = 0; i < eg.nx; ++i) {
    const double Px = of.Px(tau, eg.x(i));
    for (int k = 0; k < eg.ny; ++k) {
      const double u = w.u1(i, k), h = w.h1(i, k);
      nu(i, k) = -u * ux(i, k) + h * hx(i, k) - (kappa - mu) * h * hy(i, k) * uy(i, k) - Px;
      nh(i, k) = h * ux(i, k) - u * hx(i, k);
    }
  }
  if (dr && dr->forcing) {
    const auto [fu, fh] = dr->forcing(tau);
    nu += fu;
    nh += fh;
  }
  return {std::move(nu), std::move(nh)};
}

/// nu c^2 d_eta^2 w with the Neumann ghost row when requested.
inline Field degenerate_diffusion(const Field& w, const Field& c, const Grid2D& eg, double nu,
                                  bool neumann, const std::vector<double>& q) {
  Field out(eg);
  const double s = nu / (eg.dy * eg.dy);
  for (int i = 0; i < eg.nx; ++i) {
    const double* f = w.column(i);
    const double* cc = c.column(i);
    double* o = out.column(i);
    for (int k = 1; k < eg.ny - 1; ++k) o[k] = s * cc[k] * cc[k] * (f[k + 1] - 2.0 * f[k] + f[k - 1]);
    if (neumann) o[0] = s * cc[0] * cc[0] * (2.0 * f[1] - 2.0 * f[0] - 2.0 * eg.dy * q[i]);
  }
  return out;
}

/// (I - a nu c^2 d_eta^2) D = R per column with Dirichlet/Neumann rows as in the primal solve.
inline Field degenerate_solve(Field R, const Field& c, const Grid2D& eg, double a_nu, bool neumann,
                              const std::vector<double>& d_wall, const std::vector<double>& d_top) {
  const int n = eg.ny;
  std::vector<double> lo(n), di(n), up(n), scratch;
  const double s = a_nu / (eg.dy * eg.dy);
  for (int i = 0; i < eg.nx; ++i) {
    const double* cc = c.column(i);
    for (int k = 0; k < n; ++k) {
      const double r = s * cc[k] * cc[k];
      lo[k] = -r;
      di[k] = 1.0 + 2.0 * r;
      up[k] = -r;
    }
    if (neumann) {
      up[0] = 2.0 * lo[0];
    } else {
      di[0] = 1.0;
      up[0] = 0.0;
    }
    lo[n - 1] = 0.0;
    di[n - 1] = 1.0;
    double* col = R.column(i);
    if (!neumann) col[0] = d_wall[i];
    col[n - 1] = d_top[i];
    fd::solve_tridiagonal(lo, di, up, std::span<double>(col, n), scratch);
  }
  return R;
}

}  // namespace detail

/// One IMEX step: mu h1^2 d_eta^2 and kappa h1^2 d_eta^2 implicit with the
/// coefficient frozen (imex-be: at the current level; imex-cn: at the average
/// of the current level and a predictor, one Picard pass), first-order terms explicit.
inline CroccoState step_crocco(const CroccoState& cs, const OuterFlow& of, const Grid2D& eg,
                               const SolverConfig& cfg, double dt,
                               const CroccoDrivers* dr = nullptr) {
  const double t0 = cs.tau, t1 = cs.tau + dt;
  const BoundaryValues b0 = detail::crocco_boundary(dr, of, eg, t0);
  const BoundaryValues b1 = detail::crocco_boundary(dr, of, eg, t1);
  const bool cn = cfg.scheme == Scheme::imex_cn;
  const double theta = cn ? 0.5 : 1.0;
  std::vector<double> q(eg.nx), du_wall(eg.nx), du_top(eg.nx), dh_top(eg.nx), unused(eg.nx, 0.0);
  for (int i = 0; i < eg.nx; ++i) {
    q[i] = cn ? 0.5 * (b0.h_flux[i] + b1.h_flux[i]) : b1.h_flux[i];
    du_wall[i] = b1.u_wall[i] - cs.u1(i, 0);
    du_top[i] = b1.u_top[i] - cs.u1(i, eg.ny - 1);
    dh_top[i] = b1.h_top[i] - cs.h1(i, eg.ny - 1);
  }
  auto advance = [&](const Field& coef, const Field& nu, const Field& nh) {
    const Field Lu = detail::degenerate_diffusion(cs.u1, coef, eg, cfg.mu, false, q);
    const Field Lh = detail::degenerate_diffusion(cs.h1, coef, eg, cfg.kappa, true, q);
    CroccoState out{Field(), Field(), t1};
    out.u1 = cs.u1 + detail::degenerate_solve((Lu + nu) * dt, coef, eg, theta * dt * cfg.mu,
                                              false, du_wall, du_top);
    out.h1 = cs.h1 + detail::degenerate_solve((Lh + nh) * dt, coef, eg, theta * dt * cfg.kappa,
                                              true, unused, dh_top);
    return out;
  };
  auto [nu0, nh0] = detail::crocco_explicit(cs, of, eg, cfg.mu, cfg.kappa, t0, dr);
  const CroccoState pred = advance(cs.h1, nu0, nh0);
  if (!cn) return pred;
  auto [nu1, nh1] = detail::crocco_explicit(pred, of, eg, cfg.mu, cfg.kappa, t1, dr);
  return advance(0.5 * (cs.h1 + pred.h1), 0.5 * (nu0 + nu1), 0.5 * (nh0 + nh1));
}

/// cfl * min(dxi / max(|u1|+|h1|), deta / max |(kappa-mu) h1 d_eta h1|), capped by cfg.dt.
inline double crocco_cfl_dt(const CroccoState& cs, const Grid2D& eg, const SolverConfig& cfg) {
  double sx = 0.0, sy = 0.0;
  const Field hy = fd::dy(cs.h1, eg);
  for (std::size_t k = 0; k < cs.u1.size(); ++k) {
    sx = std::max(sx, std::abs(cs.u1[k]) + std::abs(cs.h1[k]));
    sy = std::max(sy, std::abs((cfg.kappa - cfg.mu) * cs.h1[k] * hy[k]));
  }
  double dt = cfg.dt;
  if (sx > 0.0) dt = std::min(dt, cfg.cfl * eg.dx / sx);
  if (sy > 0.0) dt = std::min(dt, cfg.cfl * eg.dy / sy);
  if (!(dt > 1e-12) || !std::isfinite(dt)) throw CflCollapse(dt);
  return dt;
}

struct CroccoRun {
  CroccoState final_state;
  Termination cause = Termination::t_end;
  std::string message;
  long steps = 0;
  double min_h1 = std::numeric_limits<double>::infinity();
};

inline double min_value(const Field& f) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < f.size(); ++k) m = std::min(m, f[k]);
  return m;
}

/// Advances to t_end; the h1 floor is delta0 / 2 as in the primal run.
inline CroccoRun run_crocco(const CroccoState& cs0, const OuterFlow& of, const Grid2D& eg,
                            const SolverConfig& cfg, double t_end,
                            const CroccoDrivers* dr = nullptr) {
  cfg.validate();
  CroccoRun run;
  CroccoState s = cs0;
  const double floor = 0.5 * cfg.thresholds.delta0;
  run.min_h1 = min_value(s.h1);
  if (!(run.min_h1 >= floor))
    throw InvalidArgument("run_crocco: initial min h1 = " + std::to_string(run.min_h1) +
                          " below floor " + std::to_string(floor));
  const double tol = 1e-12 * std::max(1.0, t_end);
  while (s.tau < t_end - tol) {
    if (run.steps >= cfg.max_steps) {
      run.cause = Termination::max_steps;
      break;
    }
    double dt;
    try {
      dt = cfg.fixed_dt ? cfg.dt : crocco_cfl_dt(s, eg, cfg);
    } catch (const CflCollapse& e) {
      run.cause = Termination::cfl_collapse;
      run.message = e.what();
      break;
    }
    dt = std::min(dt, t_end - s.tau);
    CroccoState next = step_crocco(s, of, eg, cfg, dt, dr);
    ++run.steps;
    if (!fd::all_finite(next.u1) || !fd::all_finite(next.h1)) {
      run.cause = Termination::nan;
      run.message = "non-finite field at tau=" + std::to_string(next.tau);
      break;
    }
    s = std::move(next);
    const double m = min_value(s.h1);
    run.min_h1 = std::min(run.min_h1, m);
    if (m < floor) {
      run.cause = Termination::positivity;
      run.message = "min h1 = " + std::to_string(m) + " at tau=" + std::to_string(s.tau);
      break;
    }
  }
  run.final_state = std::move(s);
  return run;
}

struct CroccoCompareRow {
  double t = 0.0;
  double distance_u = 0.0;  // ||u1_crocco - u1_mapped|| / ||u1_mapped||
  double distance_h = 0.0;
  double distance = 0.0;    // joint relative distance of (u1, h1)
  double psi_top_min = 0.0; // current min_x psi(y_max), to watch eta_max drift
};

struct CroccoCompareReport {
  double eta_max = 0.0;
  int n_eta = 0;
  std::vector<CroccoCompareRow> rows;
  Termination primal_cause = Termination::t_end;
  Termination crocco_cause = Termination::t_end;
  double min_h1 = 0.0;

  double distance_at(double t) const {
    for (const auto& r : rows)
      if (std::abs(r.t - t) <= 1e-9 * std::max(1.0, t)) return r.distance;
    throw InvalidArgument("crocco_compare: no row at t=" + std::to_string(t));
  }
};

/// Runs both formulations from s0 in lockstep to each checkpoint and compares
/// the Crocco solution with the mapped primal one on the (xi, eta) grid.
inline CroccoCompareReport crocco_compare(const State& s0, const OuterFlow& of, const Cutoff& c,
                                          const Grid2D& g, int n_eta, const SolverConfig& cfg,
                                          const std::vector<double>& checkpoints) {
  cfg.validate();
  c.check_compatible(g);
  const auto rep = validate_initial(s0, of, c, cfg.thresholds, g);
  if (!rep.ok()) throw InvalidArgument("crocco_compare: initial data invalid: " + rep.summary());
  CroccoCompareReport out;
  out.n_eta = n_eta;
  const PhysicalState ps0 = to_physical(s0, of, c, g);
  out.eta_max = crocco_eta_max(ps0, g);
  const Grid2D eg = crocco_grid(g, n_eta, out.eta_max);
  CroccoState cs = to_crocco(ps0, g, eg);
  State s = s0;
  const StepContext cx{&of, &c, &g, &cfg};
  const double floor = 0.5 * cfg.thresholds.delta0;
  out.min_h1 = min_value(cs.h1);
  auto compare = [&]() {
    const PhysicalState ps = to_physical(s, of, c, g);
    const CroccoState mapped = to_crocco(ps, g, eg);
    CroccoCompareRow r;
    r.t = s.t;
    const double nu = fd::l2(mapped.u1, eg), nh = fd::l2(mapped.h1, eg);
    const double du = fd::l2(cs.u1 - mapped.u1, eg), dh = fd::l2(cs.h1 - mapped.h1, eg);
    r.distance_u = nu > 0.0 ? du / nu : du;
    r.distance_h = nh > 0.0 ? dh / nh : dh;
    const double n = std::hypot(nu, nh);
    r.distance = n > 0.0 ? std::hypot(du, dh) / n : std::hypot(du, dh);
    const Field psi = physical_psi(ps, g);
    r.psi_top_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.nx; ++i) r.psi_top_min = std::min(r.psi_top_min, psi(i, g.ny - 1));
    out.rows.push_back(r);
  };
  compare();
  for (double tc : checkpoints) {
    if (tc <= s.t) continue;
    while (s.t < tc - 1e-12 * std::max(1.0, tc)) {
      const double dt = std::min(cfg.fixed_dt ? cfg.dt : cfl_dt(s, of, c, g, cfg), tc - s.t);
      s = step_primal(s, cx, dt);
      if (!fd::all_finite(s.u) || !fd::all_finite(s.h)) {
        out.primal_cause = Termination::nan;
        return out;
      }
      if (min_value(magnetic_denominator(s, of, c, g)) < floor) {
        out.primal_cause = Termination::positivity;
        return out;
      }
    }
    s.t = tc;
    const CroccoRun run = run_crocco(cs, of, eg, cfg, tc);
    out.crocco_cause = run.cause;
    out.min_h1 = std::min(out.min_h1, run.min_h1);
    if (run.cause != Termination::t_end) return out;
    cs = run.final_state;
    cs.tau = tc;
    compare();
  }
  return out;
}

}  // namespace mhdbl
