#pragma once

#include <cmath>

#include "mhdbl/fields.hpp"
#include "mhdbl/outer_flow.hpp"

namespace mhdbl {

/// Exact values and derivatives of an analytic (u, h) pair at one point.
struct AnalyticPoint {
  double u = 0, ut = 0, ux = 0, uxx = 0, uy = 0, uyy = 0, v = 0;
  double h = 0, ht = 0, hx = 0, hxx = 0, hy = 0, hyy = 0, g = 0;
  double psi = 0, psit = 0, psix = 0, psiy = 0, psiyy = 0;
};

/// u = A sin x (e^{-y/2} - e^{-3y/2}), h = h_inf + c A cos x e^{-y}, A = amp e^{-t}.
/// The pair satisfies u(.,0) = 0 but carries a wall flux d_y h(.,0) = -c A cos x
/// and nonzero values at y_max, so it is driven with inhomogeneous boundary data.
struct ManufacturedPrimal {
  double amp = 1.0;
  double c = 0.2;
  double h_inf = 1.0;

  AnalyticPoint eval(double t, double x, double y) const {
    const double A = amp * std::exp(-t);
    const double e1 = std::exp(-0.5 * y), e3 = std::exp(-1.5 * y), ey = std::exp(-y);
    const double q = e1 - e3;
    const double q1 = -0.5 * e1 + 1.5 * e3;
    const double q2 = 0.25 * e1 - 2.25 * e3;
    const double Q = 2.0 * (1.0 - e1) - (2.0 / 3.0) * (1.0 - e3);
    const double s = std::sin(x), co = std::cos(x);
    AnalyticPoint p;
    p.u = A * s * q;
    p.ut = -p.u;
    p.ux = A * co * q;
    p.uxx = -p.u;
    p.uy = A * s * q1;
    p.uyy = A * s * q2;
    p.v = -A * co * Q;
    const double b = c * A;
    p.h = h_inf + b * co * ey;
    p.ht = -b * co * ey;
    p.hx = -b * s * ey;
    p.hxx = -b * co * ey;
    p.hy = -b * co * ey;
    p.hyy = b * co * ey;
    p.g = b * s * (1.0 - ey);
    p.psi = h_inf * y + b * co * (1.0 - ey);
    p.psit = -b * co * (1.0 - ey);
    p.psix = -b * s * (1.0 - ey);
    p.psiy = p.h;
    p.psiyy = p.hy;
    return p;
  }

  State sample(double t, const Grid2D& g) const {
    State s(g, t);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        const auto p = eval(t, g.x(i), g.y(j));
        s.u(i, j) = p.u;
        s.h(i, j) = p.h;
      }
    return s;
  }
};

/// Residuals of the u, h and psi equations for the analytic pair, i.e. the
/// forcing that makes it an exact solution of the (eps-regularized) system.
struct ManufacturedForcing {
  Field fu, fh, fpsi;
};

inline ManufacturedForcing manufactured_forcing(const ManufacturedPrimal& m, const OuterFlow& of,
                                                const Cutoff& c, const Grid2D& g, double mu,
                                                double kappa, double eps, double t) {
  const auto p0 = c.profile(g, 0), p1 = c.profile(g, 1), p2 = c.profile(g, 2);
  const SourceTerms src = source_r(of, c, g, t, mu, kappa);
  ManufacturedForcing f{Field(g), Field(g), Field(g)};
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    const double U = of.U(t, x), Ux = of.U(t, x, 0, 1), H = of.H(t, x), Hx = of.H(t, x, 0, 1);
    for (int j = 0; j < g.ny; ++j) {
      const auto p = m.eval(t, x, g.y(j));
      const double ax = p.u + U * p1[j], ay = p.v - Ux * p0[j];
      const double bx = p.h + H * p1[j], by = p.g - Hx * p0[j];
      f.fu(i, j) = p.ut + ax * p.ux + ay * p.uy - bx * p.hx - by * p.hy - mu * p.uyy +
                   Ux * p1[j] * p.u + U * p2[j] * p.v - Hx * p1[j] * p.h - H * p2[j] * p.g -
                   eps * p.uxx - src.r1(i, j);
      f.fh(i, j) = p.ht + ax * p.hx + ay * p.hy - bx * p.ux - by * p.uy - kappa * p.hyy +
                   Hx * p1[j] * p.u + H * p2[j] * p.v - Ux * p1[j] * p.h - U * p2[j] * p.g -
                   eps * p.hxx - src.r2(i, j);
      f.fpsi(i, j) = p.psit + ax * p.psix + ay * p.psiy + Hx * p0[j] * p.u + H * p1[j] * p.v -
                     kappa * p.psiyy - src.r3(i, j);
    }
  }
  return f;
}

}  // namespace mhdbl
