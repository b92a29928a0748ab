#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mhdbl/fields.hpp"
#include "mhdbl/norms.hpp"
#include "mhdbl/outer_flow.hpp"
#include "mhdbl/stencil.hpp"

namespace mhdbl {

/// h + H phi' fell below the positivity threshold.
class PositivityError : public Error {
 public:
  PositivityError(double min, int i, int j, double x, double y, double threshold)
      : Error("positivity violated: min(h + H phi') = " + std::to_string(min) + " < " +
              std::to_string(threshold) + " at (x=" + std::to_string(x) +
              ", y=" + std::to_string(y) + ")"),
        min_value(min), i(i), j(j), x(x), y(y) {}
  double min_value;
  int i, j;
  double x, y;
};

inline constexpr int kMaxTangentialOrder = 3;

namespace detail {

inline int binom(int n, int k) {
  int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// f(i,j) * xv[i].
inline Field mul_x(Field f, const std::vector<double>& xv) {
  for (int i = 0; i < f.nx(); ++i) {
    double* c = f.column(i);
    for (int j = 0; j < f.ny(); ++j) c[j] *= xv[i];
  }
  return f;
}

/// d_t from prior levels (most recent first): BDF2 when two equally spaced
/// levels exist, BDF1 otherwise.
inline Field time_derivative(const Field& now, double t, const std::vector<Field>& prev,
                             const std::vector<double>& prev_t) {
  if (prev.empty()) throw InvalidArgument("time derivative needs at least one prior level");
  const double d1 = t - prev_t[0];
  if (!(d1 > 0.0)) throw InvalidArgument("history times must be strictly decreasing below t");
  if (prev.size() >= 2) {
    const double d2 = prev_t[0] - prev_t[1];
    if (std::abs(d2 - d1) <= 1e-9 * d1) {
      Field out = now * 3.0;
      out -= prev[0] * 4.0;
      out += prev[1];
      return out * (0.5 / d1);
    }
  }
  return (now - prev[0]) * (1.0 / d1);
}

/// int_0^y F dz per column, where F(i, y, vals, dvals) depends on smooth grid
/// fields (local cubic interpolants in vals, their y-derivatives in dvals) and
/// on quantities known in closed form at y, such as the cutoff. Four Gauss
/// points per cell.
template <class F>
Field cumint_resolved(const std::vector<const Field*>& smooth, const Grid2D& g, F&& integrand) {
  if (g.ny < 4) throw InvalidArgument("cumint_resolved: ny must be >= 4");
  const double r = std::sqrt(6.0 / 5.0);
  const double ga = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * r), gb = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * r);
  const double wa = (18.0 + std::sqrt(30.0)) / 72.0, wb = (18.0 - std::sqrt(30.0)) / 72.0;
  const double gp[4] = {0.5 * (1 - gb), 0.5 * (1 - ga), 0.5 * (1 + ga), 0.5 * (1 + gb)};
  const double gw[4] = {wb, wa, wa, wb};
  const std::size_t nf = smooth.size();
  Field out(g);
  std::vector<double> vals(nf), dvals(nf);
  for (int i = 0; i < g.nx; ++i) {
    double* o = out.column(i);
    o[0] = 0.0;
    for (int a = 0; a + 1 < g.ny; ++a) {
      const int b = std::clamp(a - 1, 0, g.ny - 4);
      double cell = 0.0;
      for (int q = 0; q < 4; ++q) {
        const double sq = a - b + gp[q];
        double L[4], dL[4];
        for (int m = 0; m < 4; ++m) {
          double den = 1.0;
          L[m] = 1.0;
          dL[m] = 0.0;
          for (int n = 0; n < 4; ++n) {
            if (n == m) continue;
            den *= double(m - n);
            double term = 1.0;
            for (int k = 0; k < 4; ++k)
              if (k != m && k != n) term *= sq - k;
            dL[m] += term;
            L[m] *= sq - n;
          }
          L[m] /= den;
          dL[m] /= den * g.dy;
        }
        for (std::size_t f = 0; f < nf; ++f) {
          const double* col = smooth[f]->column(i);
          vals[f] = dvals[f] = 0.0;
          for (int m = 0; m < 4; ++m) {
            vals[f] += L[m] * col[b + m];
            dvals[f] += dL[m] * col[b + m];
          }
        }
        cell += gw[q] * integrand(i, g.y(a) + gp[q] * g.dy, vals.data(), dvals.data());
      }
      o[a + 1] = o[a] + cell * g.dy;
    }
  }
  return out;
}

/// Everything the identities need at one time level.
struct Background {
  double t = 0.0;
  std::vector<double> p0, p1, p2, p3;
  TraceSlice tr;
  DerivedFields d;
  Field a;        // h + H phi'
  Field n1, n2;   // d_y u + U phi'', d_y h + H phi''
  Field uy, hy;

  Background(const State& s, const OuterFlow& of, const Cutoff& c, const Grid2D& g)
      : t(s.t),
        p0(c.profile(g, 0)), p1(c.profile(g, 1)), p2(c.profile(g, 2)), p3(c.profile(g, 3)),
        tr(of, g, s.t, kMaxTangentialOrder + 2),
        d(recover_vg(s, g)) {
    uy = fd::dy(s.u, g);
    hy = fd::dy(s.h, g);
    a = s.h + outer(tr.H[0], p1);
    n1 = uy + outer(tr.U[0], p2);
    n2 = hy + outer(tr.H[0], p2);
  }
};

inline void check_positive(const Field& a, const Grid2D& g, double threshold) {
  double m = std::numeric_limits<double>::infinity();
  int mi = 0, mj = 0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      if (a(i, j) < m) {
        m = a(i, j);
        mi = i;
        mj = j;
      }
  if (!(m >= threshold)) throw PositivityError(m, mi, mj, g.x(mi), g.y(mj), threshold);
}

}  // namespace detail

struct EtaFields {
  Field eta1, eta2;
  Field eta1_x, eta2_x;  // quotient-rule x-derivatives
  double min_denominator = 0.0;
  double sup_weighted_eta1 = 0.0;  // || <y>^{l+1} eta_1 ||_inf
  double sup_weighted_eta2 = 0.0;
};

inline EtaFields eta_fields(const State& s, const OuterFlow& of, const Cutoff& c,
                            const StabilityThresholds& th, const Grid2D& g) {
  th.validate();
  const detail::Background bg(s, of, c, g);
  detail::check_positive(bg.a, g, th.delta0);
  EtaFields e;
  e.min_denominator = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < bg.a.size(); ++k) e.min_denominator = std::min(e.min_denominator, bg.a[k]);
  e.eta1 = divide(bg.n1, bg.a);
  e.eta2 = divide(bg.n2, bg.a);
  // d_x(n/a) = (n_x a - n a_x) / a^2
  const Field ax = fd::dx(s.h, g) + outer(bg.tr.H[1], bg.p1);
  const Field n1x = fd::dx(bg.uy, g) + outer(bg.tr.U[1], bg.p2);
  const Field n2x = fd::dx(bg.hy, g) + outer(bg.tr.H[1], bg.p2);
  const Field a2 = bg.a * bg.a;
  e.eta1_x = divide(n1x * bg.a - bg.n1 * ax, a2);
  e.eta2_x = divide(n2x * bg.a - bg.n2 * ax, a2);
  e.sup_weighted_eta1 = fd::linf(e.eta1, g, th.l + 1.0);
  e.sup_weighted_eta2 = fd::linf(e.eta2, g, th.l + 1.0);
  return e;
}

/// Tangential derivative d^beta f with bt <= 1 (bt = 1 uses the history).
struct History {
  std::vector<State> levels;  // most recent first, all at times < current t

  std::vector<double> times() const {
    std::vector<double> t;
    for (const auto& s : levels) t.push_back(s.t);
    return t;
  }
};

struct GoodUnknowns {
  MultiIndex beta;
  Field u_beta, h_beta;
  Field psi_beta;   // d^beta psi
  Field du, dh;     // d^beta u, d^beta h
  EtaFields eta;
};

namespace detail {
inline void check_beta(const MultiIndex& beta, int max_order = kMaxTangentialOrder) {
  if (beta.k != 0) throw InvalidArgument("beta must be tangential (k = 0)");
  if (beta.bt < 0 || beta.bx < 0 || beta.bt > 1)
    throw InvalidArgument("beta: bt must be 0 or 1 and bx >= 0");
  if (beta.order() > max_order)
    throw InvalidArgument("beta: |beta| = " + std::to_string(beta.order()) + " exceeds " +
                          std::to_string(max_order));
}

inline Field tangential(const Field& now, const std::vector<Field>& prev, double t,
                        const std::vector<double>& prev_t, const MultiIndex& beta,
                        const Grid2D& g) {
  Field f = beta.bt == 1 ? time_derivative(now, t, prev, prev_t) : now;
  return fd::dx_pow(f, g, beta.bx);
}
}  // namespace detail

inline GoodUnknowns good_unknowns(const State& s, const OuterFlow& of, const Cutoff& c,
                                  const StabilityThresholds& th, const Grid2D& g,
                                  const MultiIndex& beta, const History* history = nullptr) {
  detail::check_beta(beta);
  if (beta.bt == 1 && (!history || history->levels.empty()))
    throw InvalidArgument("good_unknowns: bt = 1 needs a history level");
  GoodUnknowns gu;
  gu.beta = beta;
  gu.eta = eta_fields(s, of, c, th, g);
  std::vector<Field> pu, ph;
  std::vector<double> pt;
  if (history)
    for (const auto& l : history->levels) {
      pu.push_back(l.u);
      ph.push_back(l.h);
      pt.push_back(l.t);
    }
  gu.du = detail::tangential(s.u, pu, s.t, pt, beta, g);
  gu.dh = detail::tangential(s.h, ph, s.t, pt, beta, g);
  gu.psi_beta = fd::cumint_y(gu.dh, g);
  gu.u_beta = gu.du - gu.eta.eta1 * gu.psi_beta;
  gu.h_beta = gu.dh - gu.eta.eta2 * gu.psi_beta;
  return gu;
}

/// How reconstruct evaluates int_0^y h_beta / a.
///   resolved: rebuilt from the state's smooth fields with the cutoff evaluated
///             in closed form between nodes; accurate when dy does not resolve phi''.
///   nodal:    fourth-order nodal rule on h_beta / a; linear in h_beta.
enum class Quadrature { resolved, nodal };

/// d^beta u = u_beta + (u_y + U phi'') int_0^y h_beta / a, likewise for h.
inline std::pair<Field, Field> reconstruct(const GoodUnknowns& gu, const State& s,
                                           const OuterFlow& of, const Cutoff& c,
                                           const Grid2D& g, double delta0 = 0.0,
                                           Quadrature q = Quadrature::resolved) {
  const detail::Background bg(s, of, c, g);
  detail::check_positive(bg.a, g, delta0 > 0.0 ? delta0 : std::numeric_limits<double>::min());
  Field I;
  if (q == Quadrature::nodal) {
    I = fd::cumint_y(divide(gu.h_beta, bg.a), g);
  } else {
    // h_beta + eta_2 psi_beta is smooth; h_beta / a = (that - a_y psi_beta / a) / a
    const Field carrier = gu.h_beta + gu.eta.eta2 * gu.psi_beta;
    const auto& H = bg.tr.H[0];
    I = detail::cumint_resolved({&carrier, &s.h, &gu.psi_beta}, g,
                                [&](int i, double y, const double* v, const double* dv) {
                                  const double a = v[1] + H[i] * c.d1(y);
                                  return (v[0] - (dv[1] + H[i] * c.d2(y)) * v[2] / a) / a;
                                });
  }
  return {gu.u_beta + bg.n1 * I, gu.h_beta + bg.n2 * I};
}

struct EquivalenceReport {
  double M = 0.0;
  double C_trace = 0.0;    // sup <y>^{l+1} |phi''|
  double norm_beta = 0.0;  // || d^beta (u,h) ||_{L^2_l}
  double norm_good = 0.0;  // || (u_beta, h_beta) ||_{L^2_l}
  double ratio = 0.0;      // norm_good / norm_beta
  double lower = 0.0, upper = 0.0;
  bool empty_sandwich = false;
  bool pass = false;
  // || d_y d^beta (u,h) || <= || d_y (u_beta,h_beta) || + M || h_beta ||
  double dy_lhs = 0.0, dy_rhs = 0.0;
  bool dy_pass = false;
};

inline constexpr double kEquivalenceSlack = 0.05;

inline double cutoff_weighted_sup(const Cutoff& c, const Grid2D& g, double p) {
  double m = 0.0;
  for (int j = 0; j < g.ny; ++j) m = std::max(m, weight(g.y(j), p) * std::abs(c.d2(g.y(j))));
  return m;
}

inline EquivalenceReport equivalence_check(const State& s, const OuterFlow& of, const Cutoff& c,
                                           const StabilityThresholds& th, const Grid2D& g,
                                           const MultiIndex& beta, double l,
                                           const History* history = nullptr) {
  const GoodUnknowns gu = good_unknowns(s, of, c, th, g, beta, history);
  const detail::Background bg(s, of, c, g);
  EquivalenceReport r;
  r.C_trace = cutoff_weighted_sup(c, g, l + 1.0);
  double UH = 0.0;
  for (int i = 0; i < g.nx; ++i)
    UH = std::max({UH, std::abs(bg.tr.U[0][i]), std::abs(bg.tr.H[0][i])});
  const double w1 = std::max(fd::linf(bg.uy, g, l + 1.0), fd::linf(bg.hy, g, l + 1.0));
  const double w2 = std::max(fd::linf(fd::dy(bg.uy, g), g, l + 1.0),
                             fd::linf(fd::dy(bg.hy, g), g, l + 1.0));
  r.M = 2.0 / th.delta0 * (r.C_trace * UH + w1 + w2);
  auto pair_norm = [&](const Field& a, const Field& b) {
    return std::hypot(fd::l2(a, g, l), fd::l2(b, g, l));
  };
  r.norm_beta = pair_norm(gu.du, gu.dh);
  r.norm_good = pair_norm(gu.u_beta, gu.h_beta);
  r.ratio = r.norm_beta > 0.0 ? r.norm_good / r.norm_beta : 1.0;
  r.lower = (1.0 - kEquivalenceSlack) / r.M;
  r.upper = (1.0 + kEquivalenceSlack) * r.M;
  r.empty_sandwich = r.lower > r.upper;
  const bool trivial = r.norm_beta == 0.0 && r.norm_good == 0.0;
  r.pass = trivial || (!r.empty_sandwich && r.ratio >= r.lower && r.ratio <= r.upper);
  r.dy_lhs = pair_norm(fd::dy(gu.du, g), fd::dy(gu.dh, g));
  r.dy_rhs = pair_norm(fd::dy(gu.u_beta, g), fd::dy(gu.h_beta, g)) + r.M * fd::l2(gu.h_beta, g, l);
  r.dy_pass = r.dy_lhs <= (1.0 + kEquivalenceSlack) * r.dy_rhs;
  return r;
}

struct CancellationReport {
  MultiIndex beta;
  double residual_h = 0.0;  // || LHS_h - RHS_h ||
  double residual_u = 0.0;
  double scale_h = 0.0;     // || LHS_h ||
  double scale_u = 0.0;
  double residual() const { return std::hypot(residual_h, residual_u); }
};

/// -a d_x d^beta h - (h_y + H phi'') d^beta g  vs  -a d_x h_beta - a (d_x eta_2) d^beta psi,
/// and the u-analogue with eta_1.
inline CancellationReport cancellation_check(const State& s, const OuterFlow& of, const Cutoff& c,
                                             const Grid2D& g, const MultiIndex& beta,
                                             double delta0 = 1e-12) {
  detail::check_beta(beta);
  if (beta.bt != 0) throw InvalidArgument("cancellation_check: spatial beta only");
  const GoodUnknowns gu = good_unknowns(s, of, c, {delta0, 0.0}, g, beta);
  const detail::Background bg(s, of, c, g);
  const Field gbeta = fd::dx_pow(bg.d.g, g, beta.bx);
  CancellationReport r;
  r.beta = beta;
  const Field lhs_h = -(bg.a * fd::dx(gu.dh, g)) - bg.n2 * gbeta;
  const Field rhs_h = -(bg.a * fd::dx(gu.h_beta, g)) - bg.a * gu.eta.eta2_x * gu.psi_beta;
  const Field lhs_u = -(bg.a * fd::dx(gu.du, g)) - bg.n1 * gbeta;
  const Field rhs_u = -(bg.a * fd::dx(gu.u_beta, g)) - bg.a * gu.eta.eta1_x * gu.psi_beta;
  r.residual_h = fd::l2(lhs_h - rhs_h, g);
  r.residual_u = fd::l2(lhs_u - rhs_u, g);
  r.scale_h = fd::l2(lhs_h, g);
  r.scale_u = fd::l2(lhs_u, g);
  return r;
}

/// Remainders of the transformed problem for a spatial beta = (0, k).
struct RemainderBundle {
  MultiIndex beta;
  Field R_u, R_h, R_psi;
  Field zeta1, zeta2;
  Field R1, R2;
  double norm_R1 = 0.0, norm_R2 = 0.0;  // L^2_l norms
};

/// Sources used by the identities: r1, r2, r3 at the current time. When the
/// state is not an exact solution, pass r_i plus the equation residuals.
struct IdentitySources {
  Field r1, r2, r3;
};

namespace detail {

/// Precomputed d_x^j stacks for j = 0..k+1.
struct Stacks {
  std::vector<Field> u, h, v, g, psi, uy, hy, psiy;
  Stacks(const State& s, const Background& bg, const Grid2D& gr, int k) {
    auto build = [&](const Field& f) {
      std::vector<Field> out{f};
      for (int j = 1; j <= k + 1; ++j) out.push_back(fd::dx(out.back(), gr));
      return out;
    };
    u = build(s.u);
    h = build(s.h);
    v = build(bg.d.v);
    g = build(bg.d.g);
    psi = build(bg.d.psi);
    uy = build(bg.uy);
    hy = build(bg.hy);
    psiy = build(fd::dy(bg.d.psi, gr));
  }
};

/// [d^k, (c + T phi') d_x - T_x phi d_y] w with c the state part of the
/// coefficient (given by its d_x stack) and T a trace.
inline Field commutator_transport(int k, const std::vector<Field>& cst,
                                  const std::vector<std::vector<double>>& T,
                                  const std::vector<Field>& w, const std::vector<Field>& wy,
                                  const Background& bg) {
  Field out(w[0].nx(), w[0].ny());
  for (int j = 1; j <= k; ++j) {
    const double b = binom(k, j);
    Field coef = cst[j] + outer(T[j], bg.p1);
    out += (coef * w[k - j + 1]) * b;
    out -= (outer(T[j + 1], bg.p0) * wy[k - j]) * b;
  }
  return out;
}

/// [d^k, T p] w for a trace T times y-profile p.
inline Field commutator_coeff(int k, const std::vector<std::vector<double>>& T,
                              const std::vector<double>& p, const std::vector<Field>& w) {
  Field out(w[0].nx(), w[0].ny());
  for (int j = 1; j <= k; ++j) out += (outer(T[j], p) * w[k - j]) * double(binom(k, j));
  return out;
}

/// d^k (T_x p w) by Leibniz.
inline Field leibniz_trace(int k, const std::vector<std::vector<double>>& T,
                           const std::vector<double>& p, const std::vector<Field>& w) {
  Field out(w[0].nx(), w[0].ny());
  for (int j = 0; j <= k; ++j) out += (outer(T[j + 1], p) * w[k - j]) * double(binom(k, j));
  return out;
}

inline Field inner_sum(int k, const std::vector<Field>& a, const std::vector<Field>& by) {
  Field out(a[0].nx(), a[0].ny());
  for (int j = 1; j < k; ++j) out += (a[j] * by[k - j]) * double(binom(k, j));
  return out;
}

}  // namespace detail

/// Evaluates R_u, R_h, R_psi, zeta_1, zeta_2 and R_1, R_2 term by term.
/// The history supplies d_t eta_i (at least one prior level).
inline RemainderBundle remainders(const State& s, const History& history, const OuterFlow& of,
                                  const Cutoff& c, const Grid2D& g, const MultiIndex& beta,
                                  double mu, double kappa, const IdentitySources* sources = nullptr,
                                  double l = 0.0, double delta0 = 1e-12) {
  detail::check_beta(beta, 2);
  if (beta.bt != 0) throw InvalidArgument("remainders: spatial beta only");
  if (history.levels.empty()) throw InvalidArgument("remainders: history needs a prior level");
  const int k = beta.bx;
  const StabilityThresholds th{delta0, l};
  const detail::Background bg(s, of, c, g);
  const EtaFields eta = eta_fields(s, of, c, th, g);
  const detail::Stacks S(s, bg, g, k);
  const auto& U = bg.tr.U;
  const auto& H = bg.tr.H;
  using detail::commutator_coeff;
  using detail::commutator_transport;
  using detail::inner_sum;
  using detail::leibniz_trace;

  RemainderBundle rb;
  rb.beta = beta;
  // R_u
  rb.R_u = leibniz_trace(k, H, bg.p1, S.h) - leibniz_trace(k, U, bg.p1, S.u) -
           commutator_coeff(k, U, bg.p2, S.v) + commutator_coeff(k, H, bg.p2, S.g) -
           commutator_transport(k, S.u, U, S.u, S.uy, bg) +
           commutator_transport(k, S.h, H, S.h, S.hy, bg) -
           (inner_sum(k, S.v, S.uy) - inner_sum(k, S.g, S.hy));
  // R_h
  rb.R_h = leibniz_trace(k, U, bg.p1, S.h) - leibniz_trace(k, H, bg.p1, S.u) -
           commutator_coeff(k, H, bg.p2, S.v) + commutator_coeff(k, U, bg.p2, S.g) -
           commutator_transport(k, S.u, U, S.h, S.hy, bg) +
           commutator_transport(k, S.h, H, S.u, S.uy, bg) -
           (inner_sum(k, S.v, S.hy) - inner_sum(k, S.g, S.uy));
  // R_psi
  rb.R_psi = -leibniz_trace(k, H, bg.p0, S.u) - commutator_coeff(k, H, bg.p1, S.v) -
             commutator_transport(k, S.u, U, S.psi, S.psiy, bg) - inner_sum(k, S.v, S.psiy);

  // zeta
  std::vector<Field> e1p, e2p;
  for (const auto& lv : history.levels) {
    const EtaFields el = eta_fields(lv, of, c, th, g);
    e1p.push_back(el.eta1);
    e2p.push_back(el.eta2);
  }
  const auto pt = history.times();
  const Field e1t = detail::time_derivative(eta.eta1, s.t, e1p, pt);
  const Field e2t = detail::time_derivative(eta.eta2, s.t, e2p, pt);
  const Field A_x = s.u + outer(U[0], bg.p1);          // u + U phi'
  const Field A_y = bg.d.v - outer(U[1], bg.p0);       // v - U_x phi
  const Field B_x = bg.a;                              // h + H phi'
  const Field B_y = bg.d.g - outer(H[1], bg.p0);       // g - H_x phi
  const Field e1y = fd::dy(eta.eta1, g), e2y = fd::dy(eta.eta2, g);
  rb.zeta1 = e1t + A_x * eta.eta1_x + A_y * e1y - B_x * eta.eta2_x - B_y * e2y -
             mu * fd::dyy(eta.eta1, g) + (kappa - mu) * (eta.eta1 * e2y);
  rb.zeta2 = e2t + A_x * eta.eta2_x + A_y * e2y - B_x * eta.eta1_x - B_y * e1y -
             kappa * fd::dyy(eta.eta2, g);

  IdentitySources src;
  if (sources) {
    src = *sources;
  } else {
    const auto st = source_r(of, c, g, s.t, mu, kappa);
    src = {st.r1, st.r2, st.r3};
  }
  const Field r1k = fd::dx_pow(src.r1, g, k), r2k = fd::dx_pow(src.r2, g, k),
              r3k = fd::dx_pow(src.r3, g, k);
  const Field& hk = S.h[k];
  const Field& psik = S.psi[k];
  rb.R1 = r1k - eta.eta1 * r3k + rb.R_u - eta.eta1 * rb.R_psi +
          (2.0 * mu * e1y + B_y * eta.eta2 + (mu - kappa) * (eta.eta1 * eta.eta2)) * hk -
          rb.zeta1 * psik;
  rb.R2 = r2k - eta.eta2 * r3k + rb.R_h - eta.eta2 * rb.R_psi +
          (2.0 * kappa * e2y + B_y * eta.eta1) * hk - rb.zeta2 * psik;
  rb.norm_R1 = fd::l2(rb.R1, g, l);
  rb.norm_R2 = fd::l2(rb.R2, g, l);
  return rb;
}

/// Left-hand sides of the transformed problem for (u_beta, h_beta), with
/// d_t from the history. Equals (R_1, R_2) for a solution.
inline std::pair<Field, Field> transformed_lhs(const State& s, const History& history,
                                               const OuterFlow& of, const Cutoff& c,
                                               const Grid2D& g, const MultiIndex& beta,
                                               double mu, double kappa, double delta0 = 1e-12) {
  detail::check_beta(beta, 2);
  if (history.levels.empty()) throw InvalidArgument("transformed_lhs: history needs a prior level");
  const StabilityThresholds th{delta0, 0.0};
  const GoodUnknowns gu = good_unknowns(s, of, c, th, g, beta);
  std::vector<Field> pu, ph;
  for (const auto& lv : history.levels) {
    const GoodUnknowns gl = good_unknowns(lv, of, c, th, g, beta);
    pu.push_back(gl.u_beta);
    ph.push_back(gl.h_beta);
  }
  const auto pt = history.times();
  const Field ut = detail::time_derivative(gu.u_beta, s.t, pu, pt);
  const Field ht = detail::time_derivative(gu.h_beta, s.t, ph, pt);
  const detail::Background bg(s, of, c, g);
  const Field A_x = s.u + outer(bg.tr.U[0], bg.p1);
  const Field A_y = bg.d.v - outer(bg.tr.U[1], bg.p0);
  const Field B_y = bg.d.g - outer(bg.tr.H[1], bg.p0);
  const Field ub_x = fd::dx(gu.u_beta, g), ub_y = fd::dy(gu.u_beta, g);
  const Field hb_x = fd::dx(gu.h_beta, g), hb_y = fd::dy(gu.h_beta, g);
  Field L1 = ut + A_x * ub_x + A_y * ub_y - bg.a * hb_x - B_y * hb_y -
             mu * fd::dyy(gu.u_beta, g) + (kappa - mu) * (gu.eta.eta1 * hb_y);
  Field L2 = ht + A_x * hb_x + A_y * hb_y - bg.a * ub_x - B_y * ub_y - kappa * fd::dyy(gu.h_beta, g);
  return {std::move(L1), std::move(L2)};
}

}  // namespace mhdbl
