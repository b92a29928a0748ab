#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "mhdbl/grid.hpp"
#include "mhdbl/outer_flow.hpp"
#include "mhdbl/stencil.hpp"

namespace mhdbl {

/// Homogenized perturbation (u, h) at time t.
struct State {
  Field u;
  Field h;
  double t = 0.0;

  State() = default;
  State(const Grid2D& g, double time = 0.0) : u(g), h(g), t(time) {}
  State(Field u_, Field h_, double time = 0.0) : u(std::move(u_)), h(std::move(h_)), t(time) {}
};

struct DerivedFields {
  Field v;
  Field g;
  Field psi;
};

struct PhysicalState {
  Field u1, u2, h1, h2;
  double t = 0.0;
};

struct StabilityThresholds {
  double delta0 = 0.1;
  double l = 0.0;

  void validate() const {
    if (!(delta0 > 0.0)) throw InvalidArgument("delta0 must be > 0");
    if (!(l >= 0.0)) throw InvalidArgument("l must be >= 0");
  }
};

/// v = -int_0^y u_x, g = -int_0^y h_x, psi = int_0^y h.
inline DerivedFields recover_vg(const State& s, const Grid2D& g) {
  DerivedFields d;
  d.v = -fd::cumint_y(fd::dx(s.u, g), g);
  d.g = -fd::cumint_y(fd::dx(s.h, g), g);
  d.psi = fd::cumint_y(s.h, g);
  return d;
}

inline PhysicalState to_physical(const State& s, const OuterFlow& of, const Cutoff& c,
                                 const Grid2D& g) {
  const auto d = recover_vg(s, g);
  const auto p0 = c.profile(g, 0), p1 = c.profile(g, 1);
  PhysicalState ps;
  ps.t = s.t;
  ps.u1 = s.u;
  ps.u2 = d.v;
  ps.h1 = s.h;
  ps.h2 = d.g;
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    const double U = of.U(s.t, x), Ux = of.U(s.t, x, 0, 1);
    const double H = of.H(s.t, x), Hx = of.H(s.t, x, 0, 1);
    for (int j = 0; j < g.ny; ++j) {
      ps.u1(i, j) += U * p1[j];
      ps.u2(i, j) -= Ux * p0[j];
      ps.h1(i, j) += H * p1[j];
      ps.h2(i, j) -= Hx * p0[j];
    }
  }
  return ps;
}

inline State from_physical(const PhysicalState& ps, const OuterFlow& of, const Cutoff& c,
                           const Grid2D& g) {
  const auto p1 = c.profile(g, 1);
  State s(ps.u1, ps.h1, ps.t);
  for (int i = 0; i < g.nx; ++i) {
    const double U = of.U(ps.t, g.x(i)), H = of.H(ps.t, g.x(i));
    for (int j = 0; j < g.ny; ++j) {
      s.u(i, j) -= U * p1[j];
      s.h(i, j) -= H * p1[j];
    }
  }
  return s;
}

/// h + H phi' on the grid.
inline Field magnetic_denominator(const State& s, const OuterFlow& of, const Cutoff& c,
                                  const Grid2D& g) {
  const auto p1 = c.profile(g, 1);
  Field a = s.h;
  for (int i = 0; i < g.nx; ++i) {
    const double H = of.H(s.t, g.x(i));
    for (int j = 0; j < g.ny; ++j) a(i, j) += H * p1[j];
  }
  return a;
}

struct ValidationReport {
  double hmin = 0.0;
  int hmin_i = 0, hmin_j = 0;
  double W1 = 0.0;  // sup <y>^{l+1} |d_y (u,h)|
  double W2 = 0.0;  // sup <y>^{l+1} |d_y^2 (u,h)|
  bool positivity_ok = false;  // hmin >= 2 delta0
  bool derivative_ok = false;  // W1, W2 <= (2 delta0)^{-1}
  double wall_u = 0.0;         // max |u(.,0)|
  double wall_dyh = 0.0;       // max |d_y h(.,0)| (one-sided)
  double far_field = 0.0;      // max |(u,h)(., y_max)|
  bool boundary_ok = false;
  double far_tol = 1e-6;

  bool ok() const { return positivity_ok && boundary_ok; }
  std::string summary() const {
    return "hmin=" + std::to_string(hmin) + " W1=" + std::to_string(W1) +
           " W2=" + std::to_string(W2) + " wall_u=" + std::to_string(wall_u) +
           " wall_dyh=" + std::to_string(wall_dyh) + " far=" + std::to_string(far_field);
  }
};

/// Initial-data report: positivity margin, weighted derivative bounds and
/// boundary residuals. The derivative bound is informative only; solvers
/// gate on ok().
inline ValidationReport validate_initial(const State& s0, const OuterFlow& of, const Cutoff& c,
                                         const StabilityThresholds& th, const Grid2D& g,
                                         double far_tol = 1e-6) {
  th.validate();
  ValidationReport r;
  r.far_tol = far_tol;
  const Field a = magnetic_denominator(s0, of, c, g);
  r.hmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      if (a(i, j) < r.hmin) {
        r.hmin = a(i, j);
        r.hmin_i = i;
        r.hmin_j = j;
      }
  const double p = th.l + 1.0;
  const Field uy = fd::dy(s0.u, g), hy = fd::dy(s0.h, g);
  r.W1 = std::max(fd::linf(uy, g, p), fd::linf(hy, g, p));
  r.W2 = std::max(fd::linf(fd::dy(uy, g), g, p), fd::linf(fd::dy(hy, g), g, p));
  r.positivity_ok = r.hmin >= 2.0 * th.delta0;
  r.derivative_ok = r.W1 <= 0.5 / th.delta0 && r.W2 <= 0.5 / th.delta0;
  for (int i = 0; i < g.nx; ++i) {
    r.wall_u = std::max(r.wall_u, std::abs(s0.u(i, 0)));
    r.wall_dyh = std::max(r.wall_dyh, std::abs(hy(i, 0)));
    r.far_field = std::max({r.far_field, std::abs(s0.u(i, g.ny - 1)), std::abs(s0.h(i, g.ny - 1))});
  }
  // the wall Neumann residual of a smooth profile is O(dy^2) from the one-sided stencil
  r.boundary_ok = r.wall_u <= 1e-12 && r.far_field <= far_tol &&
                  r.wall_dyh <= std::max(1e-8, 10.0 * g.dy * g.dy * (1.0 + r.W2));
  return r;
}

/// Closed-form initial data families.
///   zero
///   monotone-shear:      u = a y e^{-y} (1 + b sin x), h = (1 - phi') (1 + c cos x)
///   nonmonotone-shear:   u = y e^{-y} (1 - y/2)(1 + b sin x) e^{-y/2},
///                        h = (1 - phi')(1 + c cos x) + 0.1 cos x e^{-y^2}
///   no-magnetic:         nonmonotone u, h = 0
/// Missing parameters fall back to the stability-demo values.
inline State make_initial(const std::string& family, const std::map<std::string, double>& p,
                          const Cutoff& c, const Grid2D& g) {
  auto get = [&](const char* k, double d) {
    auto it = p.find(k);
    return it == p.end() ? d : it->second;
  };
  State s(g, 0.0);
  if (family == "zero") return s;
  const double b = get("b", 0.3), cc = get("c", 0.2), amp = get("a", 1.0);
  const double bump = get("bump", 0.1);
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    for (int j = 0; j < g.ny; ++j) {
      const double y = g.y(j);
      const double q1 = 1.0 - c.d1(y);
      if (family == "monotone-shear") {
        s.u(i, j) = amp * y * std::exp(-y) * (1.0 + b * std::sin(x));
        s.h(i, j) = q1 * (1.0 + cc * std::cos(x));
      } else if (family == "nonmonotone-shear" || family == "no-magnetic") {
        s.u(i, j) = amp * y * std::exp(-1.5 * y) * (1.0 - 0.5 * y) * (1.0 + b * std::sin(x));
        if (family == "nonmonotone-shear")
          s.h(i, j) = q1 * (1.0 + cc * std::cos(x)) + bump * std::cos(x) * std::exp(-y * y);
      } else {
        throw InvalidArgument("unknown initial-data family '" + family + "'");
      }
    }
  }
  // exact wall and far-field values
  for (int i = 0; i < g.nx; ++i) {
    s.u(i, 0) = 0.0;
    s.u(i, g.ny - 1) = 0.0;
    s.h(i, g.ny - 1) = 0.0;
  }
  return s;
}

}  // namespace mhdbl
