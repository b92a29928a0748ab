#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "mhdbl/grid.hpp"

// Second-order finite differences, quadrature and banded solvers on
// a Grid2D. x is periodic (central differences); y uses central differences
// in the interior and second-order one-sided stencils at both ends.
namespace mhdbl::fd {

inline Field dx(const Field& f, const Grid2D& g) {
  Field out(g);
  const double s = 0.5 / g.dx;
  for (int i = 0; i < g.nx; ++i) {
    const double* fp = f.column((i + 1) % g.nx);
    const double* fm = f.column((i + g.nx - 1) % g.nx);
    double* o = out.column(i);
    for (int j = 0; j < g.ny; ++j) o[j] = s * (fp[j] - fm[j]);
  }
  return out;
}

inline Field dxx(const Field& f, const Grid2D& g) {
  Field out(g);
  const double s = 1.0 / (g.dx * g.dx);
  for (int i = 0; i < g.nx; ++i) {
    const double* fp = f.column((i + 1) % g.nx);
    const double* f0 = f.column(i);
    const double* fm = f.column((i + g.nx - 1) % g.nx);
    double* o = out.column(i);
    for (int j = 0; j < g.ny; ++j) o[j] = s * (fp[j] - 2.0 * f0[j] + fm[j]);
  }
  return out;
}

/// k-fold application of dx.
inline Field dx_pow(Field f, const Grid2D& g, int k) {
  for (int n = 0; n < k; ++n) f = dx(f, g);
  return f;
}

inline void dy_column(const double* f, double* o, int ny, double dy) {
  const double s = 0.5 / dy;
  o[0] = s * (-3.0 * f[0] + 4.0 * f[1] - f[2]);
  for (int j = 1; j < ny - 1; ++j) o[j] = s * (f[j + 1] - f[j - 1]);
  o[ny - 1] = s * (3.0 * f[ny - 1] - 4.0 * f[ny - 2] + f[ny - 3]);
}

inline void dyy_column(const double* f, double* o, int ny, double dy) {
  const double s = 1.0 / (dy * dy);
  o[0] = s * (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]);
  for (int j = 1; j < ny - 1; ++j) o[j] = s * (f[j + 1] - 2.0 * f[j] + f[j - 1]);
  o[ny - 1] = s * (2.0 * f[ny - 1] - 5.0 * f[ny - 2] + 4.0 * f[ny - 3] - f[ny - 4]);
}

/// Cumulative integral from y = 0, fourth order: each cell uses the cubic
/// through four neighbouring nodes (shifted inward at the ends).
inline void cumint_column(const double* f, double* o, int ny, double dy) {
  o[0] = 0.0;
  const double w = dy / 24.0;
  for (int j = 1; j < ny; ++j) {
    const int a = j - 1;  // cell [y_a, y_{a+1}]
    double cell;
    if (ny < 4) {
      cell = 12.0 * w * (f[a] + f[a + 1]);
    } else if (a == 0) {
      cell = w * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
    } else if (a == ny - 2) {
      cell = w * (9.0 * f[a + 1] + 19.0 * f[a] - 5.0 * f[a - 1] + f[a - 2]);
    } else {
      cell = w * (-f[a - 1] + 13.0 * f[a] + 13.0 * f[a + 1] - f[a + 2]);
    }
    o[j] = o[j - 1] + cell;
  }
}

inline Field dy(const Field& f, const Grid2D& g) {
  Field out(g);
  for (int i = 0; i < g.nx; ++i) dy_column(f.column(i), out.column(i), g.ny, g.dy);
  return out;
}

inline Field dyy(const Field& f, const Grid2D& g) {
  Field out(g);
  for (int i = 0; i < g.nx; ++i) dyy_column(f.column(i), out.column(i), g.ny, g.dy);
  return out;
}

inline Field dy_pow(Field f, const Grid2D& g, int k) {
  for (int n = 0; n < k; ++n) f = dy(f, g);
  return f;
}

/// (d_y^{-1} f)(y) = int_0^y f dz per column.
inline Field cumint_y(const Field& f, const Grid2D& g) {
  Field out(g);
  for (int i = 0; i < g.nx; ++i) cumint_column(f.column(i), out.column(i), g.ny, g.dy);
  return out;
}

/// Integral over Omega: rectangle rule in x (exact trapezoid on a periodic
/// grid), trapezoid in y.
inline double integrate(const Field& f, const Grid2D& g) {
  double sum = 0.0;
  for (int i = 0; i < g.nx; ++i) {
    const double* c = f.column(i);
    for (int j = 0; j < g.ny; ++j) sum += g.wy(j) * c[j];
  }
  return sum * g.dx;
}

/// || <y>^p f ||_{L^2(Omega)}.
inline double l2(const Field& f, const Grid2D& g, double p = 0.0) {
  double sum = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    const double w = g.wy(j) * std::pow(1.0 + g.y(j), 2.0 * p);
    for (int i = 0; i < g.nx; ++i) sum += w * f(i, j) * f(i, j);
  }
  return std::sqrt(sum * g.dx);
}

/// sup | <y>^p f |.
inline double linf(const Field& f, const Grid2D& g, double p = 0.0) {
  double m = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    const double w = std::pow(1.0 + g.y(j), p);
    for (int i = 0; i < g.nx; ++i) m = std::max(m, w * std::abs(f(i, j)));
  }
  return m;
}

/// L^2(T_x) norm of an x-profile.
inline double l2_x(std::span<const double> a, double dx) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s * dx);
}

inline double max_abs(const Field& f) {
  double m = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) m = std::max(m, std::abs(f[k]));
  return m;
}

inline bool all_finite(const Field& f) {
  for (std::size_t k = 0; k < f.size(); ++k)
    if (!std::isfinite(f[k])) return false;
  return true;
}

/// Thomas algorithm for a(i) x(i-1) + b(i) x(i) + c(i) x(i+1) = d(i).
/// a[0] and c[n-1] are ignored. d is overwritten with the solution.
inline void solve_tridiagonal(std::span<const double> a, std::span<const double> b,
                              std::span<const double> c, std::span<double> d,
                              std::vector<double>& scratch) {
  const std::size_t n = d.size();
  scratch.resize(n);
  double beta = b[0];
  d[0] /= beta;
  for (std::size_t i = 1; i < n; ++i) {
    scratch[i] = c[i - 1] / beta;
    beta = b[i] - a[i] * scratch[i];
    d[i] = (d[i] - a[i] * d[i - 1]) / beta;
  }
  for (std::size_t i = n - 1; i-- > 0;) d[i] -= scratch[i + 1] * d[i + 1];
}

/// Periodic tridiagonal system with constant coefficients
/// lo x(i-1) + di x(i) + up x(i+1) = d(i), indices mod n (Sherman-Morrison).
inline void solve_cyclic_constant(double lo, double di, double up, std::span<double> d) {
  const std::size_t n = d.size();
  std::vector<double> a(n, lo), b(n, di), c(n, up), u(n, 0.0), scratch;
  const double gamma = -di;
  b[0] = di - gamma;
  b[n - 1] = di - lo * up / gamma;
  solve_tridiagonal(a, b, c, d, scratch);
  // corners: A(0,n-1) = lo, A(n-1,0) = up
  u[0] = gamma;
  u[n - 1] = up;
  solve_tridiagonal(a, b, c, u, scratch);
  const double fact = (d[0] + lo * d[n - 1] / gamma) / (1.0 + u[0] + lo * u[n - 1] / gamma);
  for (std::size_t i = 0; i < n; ++i) d[i] -= fact * u[i];
}

}  // namespace mhdbl::fd
