#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace mhdbl {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Periodic-in-x, truncated-half-line-in-y tensor grid.
///
/// x nodes are i*dx for i in [0, nx) (the node at x_period is the image of
/// x=0 and is not stored). y nodes are j*dy for j in [0, ny) and include both
/// y=0 and y=y_max.
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double x_period = 2.0 * std::numbers::pi;
  double y_max = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  std::vector<double> x_nodes;
  std::vector<double> y_nodes;

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * ny + j; }
  double x(int i) const { return x_nodes[i]; }
  double y(int j) const { return y_nodes[j]; }
  /// Trapezoid weight of node j in y.
  double wy(int j) const { return (j == 0 || j == ny - 1) ? 0.5 * dy : dy; }

  bool operator==(const Grid2D& o) const {
    return nx == o.nx && ny == o.ny && x_period == o.x_period && y_max == o.y_max;
  }
};

inline Grid2D build_grid(int nx, int ny, double y_max,
                         double x_period = 2.0 * std::numbers::pi) {
  if (nx < 8 || nx % 2 != 0)
    throw InvalidArgument("build_grid: nx must be even and >= 8, got " + std::to_string(nx));
  if (ny < 8) throw InvalidArgument("build_grid: ny must be >= 8, got " + std::to_string(ny));
  if (!(y_max > 0.0)) throw InvalidArgument("build_grid: y_max must be positive");
  if (!(x_period > 0.0)) throw InvalidArgument("build_grid: x_period must be positive");
  Grid2D g;
  g.nx = nx;
  g.ny = ny;
  g.x_period = x_period;
  g.y_max = y_max;
  g.dx = x_period / nx;
  g.dy = y_max / (ny - 1);
  g.x_nodes.resize(nx);
  g.y_nodes.resize(ny);
  for (int i = 0; i < nx; ++i) g.x_nodes[i] = i * g.dx;
  for (int j = 0; j < ny; ++j) g.y_nodes[j] = j * g.dy;
  g.y_nodes[ny - 1] = y_max;
  return g;
}

/// Scalar field on a Grid2D, stored x-major so each y-column is contiguous.
class Field {
 public:
  Field() = default;
  Field(int nx, int ny, double value = 0.0)
      : nx_(nx), ny_(ny), v_(static_cast<std::size_t>(nx) * ny, value) {}
  explicit Field(const Grid2D& g, double value = 0.0) : Field(g.nx, g.ny, value) {}

  static Field from(const Grid2D& g, const std::function<double(double, double)>& f) {
    Field out(g);
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) out(i, j) = f(g.x(i), g.y(j));
    return out;
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  double& operator()(int i, int j) { return v_[static_cast<std::size_t>(i) * ny_ + j]; }
  double operator()(int i, int j) const { return v_[static_cast<std::size_t>(i) * ny_ + j]; }
  double& operator[](std::size_t k) { return v_[k]; }
  double operator[](std::size_t k) const { return v_[k]; }

  double* column(int i) { return v_.data() + static_cast<std::size_t>(i) * ny_; }
  const double* column(int i) const { return v_.data() + static_cast<std::size_t>(i) * ny_; }

  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }

  Field& operator+=(const Field& o) {
    check_same(o);
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same(o);
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] -= o.v_[k];
    return *this;
  }
  Field& operator*=(const Field& o) {
    check_same(o);
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] *= o.v_[k];
    return *this;
  }
  Field& operator*=(double s) {
    for (double& x : v_) x *= s;
    return *this;
  }
  Field& operator+=(double s) {
    for (double& x : v_) x += s;
    return *this;
  }

  bool operator==(const Field& o) const { return nx_ == o.nx_ && ny_ == o.ny_ && v_ == o.v_; }

 private:
  void check_same(const Field& o) const {
    if (nx_ != o.nx_ || ny_ != o.ny_) throw InvalidArgument("Field: shape mismatch");
  }
  int nx_ = 0;
  int ny_ = 0;
  std::vector<double> v_;
};

inline Field operator+(Field a, const Field& b) { return a += b; }
inline Field operator-(Field a, const Field& b) { return a -= b; }
inline Field operator*(Field a, const Field& b) { return a *= b; }
inline Field operator*(double s, Field a) { return a *= s; }
inline Field operator*(Field a, double s) { return a *= s; }
inline Field operator-(Field a) { return a *= -1.0; }

inline Field divide(const Field& a, const Field& b) {
  Field out = a;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] / b[k];
  return out;
}

/// Multiplies each column by a y-profile p(j).
inline Field scale_y(Field f, const std::vector<double>& p) {
  for (int i = 0; i < f.nx(); ++i)
    for (int j = 0; j < f.ny(); ++j) f(i, j) *= p[j];
  return f;
}

/// Outer product a(x_i) * b(y_j).
inline Field outer(const std::vector<double>& a, const std::vector<double>& b) {
  Field f(static_cast<int>(a.size()), static_cast<int>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) f(int(i), int(j)) = a[i] * b[j];
  return f;
}

/// Weight <y>^p = (1+y)^p.
inline double weight(double y, double p) {
  if (y < 0.0) throw InvalidArgument("weight: y must be >= 0");
  return std::pow(1.0 + y, p);
}

/// C-infinity cutoff phi with phi = 0 on [0, r0] and phi = y on [2 r0, inf).
///
/// phi(y) = y * S((y - r0)/r0), S(s) = sig(s) / (sig(s) + sig(1-s)),
/// sig(s) = exp(-1/s) for s > 0 and 0 otherwise.
class Cutoff {
 public:
  explicit Cutoff(double r0 = 1.0) : r0_(r0) {
    if (!(r0 > 0.0)) throw InvalidArgument("Cutoff: r0 must be positive");
  }

  double r0() const { return r0_; }

  /// phi^(order)(y) for order in 0..3.
  double eval(double y, int order) const {
    if (order < 0 || order > 3) throw InvalidArgument("Cutoff::eval: order must be in 0..3");
    if (y <= r0_) return 0.0;
    if (y >= 2.0 * r0_) {
      if (order == 0) return y;
      return order == 1 ? 1.0 : 0.0;
    }
    const double s = (y - r0_) / r0_;
    double S[4];
    smoothstep(s, S);
    const double inv = 1.0 / r0_;
    switch (order) {
      case 0: return y * S[0];
      case 1: return S[0] + y * S[1] * inv;
      case 2: return 2.0 * S[1] * inv + y * S[2] * inv * inv;
      default: return 3.0 * S[2] * inv * inv + y * S[3] * inv * inv * inv;
    }
  }

  double phi(double y) const { return eval(y, 0); }
  double d1(double y) const { return eval(y, 1); }
  double d2(double y) const { return eval(y, 2); }
  double d3(double y) const { return eval(y, 3); }

  /// Samples phi^(order) on the grid's y nodes.
  std::vector<double> profile(const Grid2D& g, int order) const {
    std::vector<double> p(g.ny);
    for (int j = 0; j < g.ny; ++j) p[j] = eval(g.y(j), order);
    return p;
  }

  /// The grid must extend to at least 4 r0.
  void check_compatible(const Grid2D& g) const {
    if (g.y_max < 4.0 * r0_)
      throw InvalidArgument("cutoff r0=" + std::to_string(r0_) +
                            " incompatible with y_max=" + std::to_string(g.y_max) +
                            " (need y_max >= 4 r0)");
  }

 private:
  // sig^(k)(s) = exp(-1/s) * P_k(1/s)
  static void sigma(double s, double out[4]) {
    if (s <= 0.0 || 1.0 / s > 700.0) {
      out[0] = out[1] = out[2] = out[3] = 0.0;
      return;
    }
    const double q = 1.0 / s;
    const double e = std::exp(-q);
    out[0] = e;
    out[1] = e * q * q;
    out[2] = e * (q * q * q * q - 2.0 * q * q * q);
    out[3] = e * (std::pow(q, 6) - 6.0 * std::pow(q, 5) + 6.0 * std::pow(q, 4));
  }

  static void smoothstep(double s, double S[4]) {
    double a[4], b[4];
    sigma(s, a);
    sigma(1.0 - s, b);
    // d/ds of sig(1-s) flips sign on odd orders
    b[1] = -b[1];
    b[3] = -b[3];
    const double D[4] = {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
    S[0] = a[0] / D[0];
    S[1] = (a[1] - S[0] * D[1]) / D[0];
    S[2] = (a[2] - 2.0 * S[1] * D[1] - S[0] * D[2]) / D[0];
    S[3] = (a[3] - 3.0 * S[2] * D[1] - 3.0 * S[1] * D[2] - S[0] * D[3]) / D[0];
  }

  double r0_;
};

inline double cutoff_eval(const Cutoff& c, double y, int order) { return c.eval(y, order); }

}  // namespace mhdbl
