#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "mhdbl/grid.hpp"
#include "mhdbl/stencil.hpp"

namespace mhdbl {

/// One term amp * exp(rate t) * cos(k x + phase).
struct TraceMode {
  double amp = 0.0;
  double rate = 0.0;
  double k = 0.0;
  double phase = 0.0;
};

/// Closed-form trace function: a finite sum of exponential-in-time
/// trigonometric modes, differentiable to any order.
class TraceSeries {
 public:
  TraceSeries() = default;
  TraceSeries(std::initializer_list<TraceMode> modes) : modes_(modes) {}
  explicit TraceSeries(std::vector<TraceMode> modes) : modes_(std::move(modes)) {}

  static TraceSeries constant(double c) { return TraceSeries{{c, 0.0, 0.0, 0.0}}; }

  /// d_t^i d_x^j evaluated at (t, x).
  double operator()(double t, double x, int i = 0, int j = 0) const {
    double s = 0.0;
    for (const auto& m : modes_) {
      const double ti = i == 0 ? 1.0 : std::pow(m.rate, i);
      const double xj = j == 0 ? 1.0 : std::pow(m.k, j);
      if (ti == 0.0 || xj == 0.0) continue;
      s += m.amp * ti * xj * std::exp(m.rate * t) *
           std::cos(m.k * x + m.phase + 0.5 * std::numbers::pi * j);
    }
    return s;
  }

  const std::vector<TraceMode>& modes() const { return modes_; }

 private:
  std::vector<TraceMode> modes_;
};

/// The outer trace data (U, H, P) at the top of the layer.
struct OuterFlow {
  std::string family = "constant";
  TraceSeries U;
  TraceSeries H;
  TraceSeries P;

  double Px(double t, double x) const { return P(t, x, 0, 1); }

  /// Constant traces satisfy the matching condition with P constant.
  static OuterFlow constant(double u0, double h0, double p0 = 0.0) {
    return {"constant", TraceSeries::constant(u0), TraceSeries::constant(h0),
            TraceSeries::constant(p0)};
  }

  /// Steady single-harmonic pair U = u0 (1 + a cos x), H = c U,
  /// P = (c^2 - 1) U^2 / 2, which satisfies the matching condition exactly.
  static OuterFlow steady_harmonic(double u0, double a, double c) {
    OuterFlow of;
    of.family = "steady-harmonic";
    of.U = TraceSeries{{u0, 0, 0, 0}, {u0 * a, 0, 1, 0}};
    of.H = TraceSeries{{c * u0, 0, 0, 0}, {c * u0 * a, 0, 1, 0}};
    const double q = 0.5 * (c * c - 1.0) * u0 * u0;
    of.P = TraceSeries{{q * (1.0 + 0.5 * a * a), 0, 0, 0}, {q * 2.0 * a, 0, 1, 0},
                       {q * 0.5 * a * a, 0, 2, 0}};
    return of;
  }

  /// U = A sin(x) e^{-t}, H = 0, P chosen so that P_x = -(U_t + U U_x).
  static OuterFlow burgers_compensated(double A) {
    OuterFlow of;
    of.family = "burgers-compensated";
    const double half_pi = 0.5 * std::numbers::pi;
    of.U = TraceSeries{{A, -1.0, 1.0, -half_pi}};
    of.H = TraceSeries::constant(0.0);
    of.P = TraceSeries{{-A, -1.0, 1.0, 0.0}, {-0.25 * A * A, -2.0, 0.0, 0.0},
                       {0.25 * A * A, -2.0, 2.0, 0.0}};
    return of;
  }
};

/// Trace quantities sampled on the x nodes at a fixed time.
/// d[q][j] holds d_x^j of quantity q; t-derivatives are kept separately.
struct TraceSlice {
  double t = 0.0;
  std::vector<std::vector<double>> U, H;  // U[j][i] = d_x^j U(t, x_i)
  std::vector<double> Ut, Ht, Px, P;
  std::vector<std::vector<double>> Utx, Htx, Pxx;  // x-derivatives of U_t, H_t, P_x

  TraceSlice(const OuterFlow& of, const Grid2D& g, double time, int max_dx = 5) : t(time) {
    const int n = g.nx;
    U.assign(max_dx + 1, std::vector<double>(n));
    H = U;
    Utx = U;
    Htx = U;
    Pxx = U;
    Ut.resize(n);
    Ht.resize(n);
    Px.resize(n);
    P.resize(n);
    for (int i = 0; i < n; ++i) {
      const double x = g.x(i);
      for (int j = 0; j <= max_dx; ++j) {
        U[j][i] = of.U(t, x, 0, j);
        H[j][i] = of.H(t, x, 0, j);
        Utx[j][i] = of.U(t, x, 1, j);
        Htx[j][i] = of.H(t, x, 1, j);
        Pxx[j][i] = of.P(t, x, 0, j + 1);
      }
      Ut[i] = Utx[0][i];
      Ht[i] = Htx[0][i];
      Px[i] = Pxx[0][i];
      P[i] = of.P(t, x);
    }
  }
};

/// Matching residuals res1 = U_t + U U_x - H H_x + P_x and
/// res2 = H_t + U H_x - H U_x on the x nodes.
inline std::pair<std::vector<double>, std::vector<double>> matching_residual(
    const OuterFlow& of, double t, const Grid2D& g) {
  std::vector<double> r1(g.nx), r2(g.nx);
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    const double U = of.U(t, x), Ux = of.U(t, x, 0, 1), Ut = of.U(t, x, 1, 0);
    const double H = of.H(t, x), Hx = of.H(t, x, 0, 1), Ht = of.H(t, x, 1, 0);
    r1[i] = Ut + U * Ux - H * Hx + of.Px(t, x);
    r2[i] = Ht + U * Hx - H * Ux;
  }
  return {r1, r2};
}

/// Source fields of the homogenized system plus the optional regularization
/// corrector (r1~, r2~, r3~), which enters multiplied by eps.
struct SourceTerms {
  double t = 0.0;
  double eps = 0.0;
  Field r1, r2, r3;
  Field rt1, rt2, rt3;  // empty when no corrector is attached
};

/// r1, r2 from the homogenization and r3 of the stream-function equation.
inline SourceTerms source_r(const OuterFlow& of, const Cutoff& c, const Grid2D& g, double t,
                            double mu, double kappa) {
  c.check_compatible(g);
  const auto p0 = c.profile(g, 0), p1 = c.profile(g, 1), p2 = c.profile(g, 2),
             p3 = c.profile(g, 3);
  SourceTerms s;
  s.t = t;
  s.r1 = Field(g);
  s.r2 = Field(g);
  s.r3 = Field(g);
  for (int i = 0; i < g.nx; ++i) {
    const double x = g.x(i);
    const double U = of.U(t, x), Ut = of.U(t, x, 1, 0), Px = of.Px(t, x);
    const double H = of.H(t, x), Ht = of.H(t, x, 1, 0);
    for (int j = 0; j < g.ny; ++j) {
      const double a = p1[j] * p1[j], b = p0[j] * p2[j];
      s.r1(i, j) = Ut * (a - b - p1[j]) + Px * (a - b - 1.0) + mu * U * p3[j];
      s.r2(i, j) = Ht * (a + b - p1[j]) + kappa * H * p3[j];
      s.r3(i, j) = Ht * p0[j] * (p1[j] - 1.0) + kappa * H * p2[j];
    }
  }
  return s;
}

/// sup over the sampled times of sum_{i+j<=order} ||d_t^i d_x^j (U,H,P)||_{L^2(T)},
/// each of U, H, P contributing its own norm.
inline double outer_norm_M0(const OuterFlow& of, int order, const std::vector<double>& times,
                            int nx_quad = 256) {
  const double dx = 2.0 * std::numbers::pi / nx_quad;
  double best = 0.0;
  std::vector<double> buf(nx_quad);
  for (double t : times) {
    double sum = 0.0;
    for (int i = 0; i <= order; ++i)
      for (int j = 0; i + j <= order; ++j)
        for (const TraceSeries* q : {&of.U, &of.H, &of.P}) {
          for (int n = 0; n < nx_quad; ++n) buf[n] = (*q)(t, n * dx, i, j);
          sum += fd::l2_x(buf, dx);
        }
    best = std::max(best, sum);
  }
  return best;
}

inline double outer_norm_M0(const OuterFlow& of, int order, double t_max, int n_times = 11) {
  std::vector<double> times(n_times);
  for (int k = 0; k < n_times; ++k) times[k] = n_times == 1 ? 0.0 : t_max * k / (n_times - 1);
  return outer_norm_M0(of, order, times);
}

/// Registry of built-in trace families keyed by name.
inline OuterFlow make_outer_flow(const std::string& family,
                                 const std::map<std::string, double>& p) {
  auto get = [&](const char* k, double d) {
    auto it = p.find(k);
    return it == p.end() ? d : it->second;
  };
  if (family == "constant") return OuterFlow::constant(get("U0", 1.0), get("H0", 1.0), get("P0", 0.0));
  if (family == "steady-harmonic")
    return OuterFlow::steady_harmonic(get("u0", 1.0), get("a", 0.1), get("c", 1.0));
  if (family == "burgers-compensated") return OuterFlow::burgers_compensated(get("A", 0.5));
  throw InvalidArgument("unknown trace family '" + family + "'");
}

}  // namespace mhdbl
