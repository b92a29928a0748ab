#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "mhdbl/grid.hpp"
#include "mhdbl/stencil.hpp"

namespace mhdbl {

/// D^alpha = d_t^bt d_x^bx d_y^k.
struct MultiIndex {
  int bt = 0;
  int bx = 0;
  int k = 0;

  int order() const { return bt + bx + k; }
  bool operator==(const MultiIndex&) const = default;
};

struct NormContribution {
  MultiIndex alpha;
  double value = 0.0;  // || <y>^{l+k} D^alpha f ||, all fields combined
};

struct NormReport {
  double l = 0.0;
  int m = 0;
  bool includes_dt = false;
  std::vector<NormContribution> contributions;
  double total = 0.0;
};

/// Prior time level for the backward difference d_t f = (f - prev) / dt.
struct NormHistory {
  std::vector<Field> prev;
  double dt = 0.0;
};

inline constexpr int kMaxNormOrder = 4;

/// D^alpha f for a spatial index (bx, k).
inline Field spatial_derivative(const Field& f, const Grid2D& g, int bx, int k) {
  return fd::dy_pow(fd::dx_pow(f, g, bx), g, k);
}

/// Weighted norm sum_{|alpha|<=m} || <y>^{l+k} D^alpha f ||^2 over all fields,
/// t-derivatives limited to bt <= 1 and only when include_dt is set.
inline NormReport weighted_norm(const std::vector<const Field*>& fields, const Grid2D& g,
                                double l, int m, bool include_dt = false,
                                const NormHistory* history = nullptr) {
  if (m < 0 || m > kMaxNormOrder)
    throw InvalidArgument("weighted_norm: m must be in 0.." + std::to_string(kMaxNormOrder));
  if (include_dt) {
    if (!history || history->prev.size() != fields.size() || !(history->dt > 0.0))
      throw InvalidArgument("weighted_norm: include_dt needs one prior level per field and dt > 0");
  }
  NormReport rep;
  rep.l = l;
  rep.m = m;
  rep.includes_dt = include_dt;
  double total2 = 0.0;
  const int bt_max = include_dt ? 1 : 0;
  for (int bt = 0; bt <= std::min(bt_max, m); ++bt) {
    std::vector<Field> base;
    for (std::size_t q = 0; q < fields.size(); ++q) {
      if (bt == 0) {
        base.push_back(*fields[q]);
      } else {
        base.push_back((*fields[q] - history->prev[q]) * (1.0 / history->dt));
      }
    }
    for (int bx = 0; bt + bx <= m; ++bx) {
      std::vector<Field> cur;
      for (auto& b : base) cur.push_back(fd::dx_pow(b, g, bx));
      for (int k = 0; bt + bx + k <= m; ++k) {
        if (k > 0)
          for (auto& c : cur) c = fd::dy(c, g);
        double s2 = 0.0;
        for (auto& c : cur) {
          const double v = fd::l2(c, g, l + k);
          s2 += v * v;
        }
        rep.contributions.push_back({{bt, bx, k}, std::sqrt(s2)});
        total2 += s2;
      }
    }
  }
  rep.total = std::sqrt(total2);
  return rep;
}

inline NormReport weighted_norm(const Field& f, const Grid2D& g, double l, int m) {
  return weighted_norm(std::vector<const Field*>{&f}, g, l, m);
}

/// One inequality evaluation. ratio = lhs / rhs where rhs excludes the
/// inequality's constant; pass iff ratio <= bound.
struct MarginReport {
  std::string id;
  double lambda = 0.0;
  double l = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double bound = 0.0;
  int nx = 0, ny = 0;
  bool pass = false;
  std::string note;

  static std::string csv_header() { return "id,lambda,l,lhs,rhs,ratio,bound,nx,ny,pass"; }
  std::string csv_row() const {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%d", id.c_str(),
                  lambda, l, lhs, rhs, ratio, bound, nx, ny, pass ? 1 : 0);
    return buf;
  }
};

namespace detail {
inline MarginReport finish(MarginReport r, const Grid2D& g) {
  r.nx = g.nx;
  r.ny = g.ny;
  r.ratio = r.rhs > 0.0 ? r.lhs / r.rhs : (r.lhs > 0.0 ? INFINITY : 0.0);
  r.pass = r.ratio <= r.bound;
  return r;
}

/// max |f(., y_max)| relative to max |f|.
inline double top_fraction(const Field& f, const Grid2D& g) {
  double m = 0.0;
  for (int i = 0; i < g.nx; ++i) m = std::max(m, std::abs(f(i, g.ny - 1)));
  const double s = fd::max_abs(f);
  return s > 0.0 ? m / s : 0.0;
}
}  // namespace detail

inline constexpr double kDecayTol = 1e-4;

/// |int_T (fg)(x,0) dx| <= ||f_y|| ||g|| + ||f|| ||g_y||.
inline MarginReport verify_trace(const Field& f, const Field& gf, const Grid2D& g) {
  if (detail::top_fraction(f * gf, g) > kDecayTol)
    throw InvalidArgument("verify_trace: f g does not decay at y_max");
  MarginReport r;
  r.id = "trace";
  double s = 0.0;
  for (int i = 0; i < g.nx; ++i) s += f(i, 0) * gf(i, 0);
  r.lhs = std::abs(s * g.dx);
  r.rhs = fd::l2(fd::dy(f, g), g) * fd::l2(gf, g) + fd::l2(f, g) * fd::l2(fd::dy(gf, g), g);
  r.bound = 1.0 + 5.0 * g.dy;
  return detail::finish(r, g);
}

/// ||f(.,0)||_{L^2(T)} <= sqrt(2) ||f||^{1/2} ||f_y||^{1/2}.
inline MarginReport verify_trace0(const Field& f, const Grid2D& g) {
  if (detail::top_fraction(f, g) > kDecayTol)
    throw InvalidArgument("verify_trace0: f does not decay at y_max");
  MarginReport r;
  r.id = "trace0";
  std::vector<double> w(g.nx);
  for (int i = 0; i < g.nx; ++i) w[i] = f(i, 0);
  r.lhs = fd::l2_x(w, g.dx);
  r.rhs = std::sqrt(fd::l2(f, g) * fd::l2(fd::dy(f, g), g));
  r.bound = std::sqrt(2.0) * (1.0 + 5.0 * g.dy);
  return detail::finish(r, g);
}

enum class HardyVariant { normal, normal1, normal_inf, normal2 };

inline const char* to_string(HardyVariant v) {
  switch (v) {
    case HardyVariant::normal: return "normal";
    case HardyVariant::normal1: return "normal1";
    case HardyVariant::normal_inf: return "normal_inf";
    default: return "normal2";
  }
}

/// Weighted Hardy-type bounds for F = d_y^{-1} f:
///   normal:     ||<y>^{-lam} F||      <= 2/(2lam-1) ||<y>^{1-lam} f||   (lam > 1/2)
///   normal1:    lam = 1, constant 2
///   normal_inf: ||<y>^{-lam} F||_inf  <= 1/lam ||<y>^{1-lam} f||_inf     (lam > 0)
///   normal2:    ||F||_{L^inf_y L^2_x} <= (2lam-1)^{-1/2} ||<y>^lam f||   (lam > 1/2)
/// The L^2 forms are applied column-wise and integrated in x.
inline MarginReport verify_hardy(const Field& f, const Grid2D& g, double lambda,
                                 HardyVariant variant) {
  if (variant == HardyVariant::normal1) lambda = 1.0;
  if ((variant == HardyVariant::normal || variant == HardyVariant::normal2) && !(lambda > 0.5))
    throw InvalidArgument("verify_hardy: lambda must exceed 1/2");
  if (variant == HardyVariant::normal_inf && !(lambda > 0.0))
    throw InvalidArgument("verify_hardy: lambda must be positive");
  const Field F = fd::cumint_y(f, g);
  MarginReport r;
  r.id = to_string(variant);
  r.lambda = lambda;
  const double slack = 1.0 + 5.0 * g.dy;
  switch (variant) {
    case HardyVariant::normal:
    case HardyVariant::normal1:
      r.lhs = fd::l2(F, g, -lambda);
      r.rhs = fd::l2(f, g, 1.0 - lambda);
      r.bound = 2.0 / (2.0 * lambda - 1.0) * slack;
      break;
    case HardyVariant::normal_inf:
      r.lhs = fd::linf(F, g, -lambda);
      r.rhs = fd::linf(f, g, 1.0 - lambda);
      r.bound = slack / lambda;
      break;
    case HardyVariant::normal2: {
      // sup_y ||F(.,y)||_{L^2_x}
      double m = 0.0;
      for (int j = 0; j < g.ny; ++j) {
        double s = 0.0;
        for (int i = 0; i < g.nx; ++i) s += F(i, j) * F(i, j);
        m = std::max(m, std::sqrt(s * g.dx));
      }
      r.lhs = m;
      r.rhs = fd::l2(f, g, lambda);
      r.bound = slack / std::sqrt(2.0 * lambda - 1.0);
      break;
    }
  }
  return detail::finish(r, g);
}

enum class ProductVariant { morse, normal0, normal3 };

inline const char* to_string(ProductVariant v) {
  switch (v) {
    case ProductVariant::morse: return "morse";
    case ProductVariant::normal0: return "normal0";
    default: return "normal3";
  }
}

/// Product bounds with an unquantified constant C (supplied as `constant`):
///   morse:   ||D^a f D^at g||_{L^2_{l1+l2+k+kt}} <= C ||f||_{H^m_{l1}} ||g||_{H^m_{l2}}
///   normal0: ||D^a f d^at d_y^{-1} g||_{L^2_{l1+k}} <= C ||f||_{H^m_{l1+lam}} ||g||_{H^m_{1-lam}}
///   normal3: ||D^a f d^at d_y^{-1} g||_{L^2_{l1+k}} <= C ||f||_{H^m_{l1}} ||g||_{H^m_{lam}}
/// For the normal* forms at.k is ignored (tangential index only).
struct ProductCase {
  ProductVariant variant = ProductVariant::morse;
  MultiIndex a, at;
  int m = 3;
  double l1 = 0.0, l2 = 0.0;
  double lambda = 1.0;
};

inline MarginReport verify_product(const Field& f, const Field& gf, const Grid2D& g,
                                   const ProductCase& pc, double constant, double slack) {
  if (pc.m < 3) throw InvalidArgument("verify_product: m must be >= 3");
  if (pc.a.bt != 0 || pc.at.bt != 0)
    throw InvalidArgument("verify_product: only spatial indices are supported");
  const int budget = pc.variant == ProductVariant::morse ? pc.a.order() + pc.at.order()
                                                         : pc.a.order() + pc.at.bx;
  if (budget > pc.m) throw InvalidArgument("verify_product: index budget |a|+|at| > m violated");
  if (pc.variant != ProductVariant::morse && !(pc.lambda > 0.5))
    throw InvalidArgument("verify_product: lambda must exceed 1/2");
  MarginReport r;
  r.id = to_string(pc.variant);
  r.lambda = pc.lambda;
  r.l = pc.l1 + pc.l2;
  const Field Df = spatial_derivative(f, g, pc.a.bx, pc.a.k);
  switch (pc.variant) {
    case ProductVariant::morse: {
      const Field Dg = spatial_derivative(gf, g, pc.at.bx, pc.at.k);
      r.lhs = fd::l2(Df * Dg, g, pc.l1 + pc.l2 + pc.a.k + pc.at.k);
      r.rhs = weighted_norm(f, g, pc.l1, pc.m).total * weighted_norm(gf, g, pc.l2, pc.m).total;
      break;
    }
    case ProductVariant::normal0: {
      const Field G = fd::cumint_y(fd::dx_pow(gf, g, pc.at.bx), g);
      r.l = pc.l1;
      r.lhs = fd::l2(Df * G, g, pc.l1 + pc.a.k);
      r.rhs = weighted_norm(f, g, pc.l1 + pc.lambda, pc.m).total *
              weighted_norm(gf, g, 1.0 - pc.lambda, pc.m).total;
      break;
    }
    case ProductVariant::normal3: {
      const Field G = fd::cumint_y(fd::dx_pow(gf, g, pc.at.bx), g);
      r.l = pc.l1;
      r.lhs = fd::l2(Df * G, g, pc.l1 + pc.a.k);
      r.rhs = weighted_norm(f, g, pc.l1, pc.m).total *
              weighted_norm(gf, g, pc.lambda, pc.m).total;
      break;
    }
  }
  r.bound = constant * slack;
  return detail::finish(r, g);
}

inline void write_margins_csv(std::ostream& os, const std::vector<MarginReport>& rows,
                              bool header = true) {
  if (header) os << MarginReport::csv_header() << '\n';
  for (const auto& r : rows) os << r.csv_row() << '\n';
}

}  // namespace mhdbl
