#pragma once

#include <cmath>
#include <limits>

#include "mhdbl/fields.hpp"
#include "mhdbl/good_unknowns.hpp"
#include "mhdbl/norms.hpp"

namespace mhdbl {

struct MonitorSample {
  double t = 0.0;
  double E = 0.0;      // spatial H^m_l norm of (u,h)
  double W1 = 0.0;     // sup <y>^{l+1} |d_y (u,h)|
  double W2 = 0.0;     // sup <y>^{l+1} |d_y^2 (u,h)|
  double hmin = 0.0;   // min (h + H phi')
  double M = 0.0;      // equivalence constant
  double dissipation = 0.0;  // int over the sample interval of ||d_y (u,h)||^2_{L^2_l}
  double dt = 0.0;

  bool finite() const {
    return std::isfinite(E) && std::isfinite(W1) && std::isfinite(W2) && std::isfinite(hmin) &&
           std::isfinite(M);
  }
};

struct MonitorConfig {
  int m = 2;
  double l = 0.0;
  double delta0 = 0.1;
};

inline constexpr int kMaxMonitorOrder = 3;

/// ||d_y (u,h)||^2_{L^2_l}.
inline double dissipation_rate(const State& s, const Grid2D& g, double l) {
  const double a = fd::l2(fd::dy(s.u, g), g, l), b = fd::l2(fd::dy(s.h, g), g, l);
  return a * a + b * b;
}

inline MonitorSample monitor(const State& s, const OuterFlow& of, const Cutoff& c,
                             const Grid2D& g, const MonitorConfig& mc) {
  if (mc.m < 0 || mc.m > kMaxMonitorOrder)
    throw InvalidArgument("monitor: m must be in 0.." + std::to_string(kMaxMonitorOrder));
  MonitorSample ms;
  ms.t = s.t;
  ms.E = weighted_norm({&s.u, &s.h}, g, mc.l, mc.m).total;
  const double p = mc.l + 1.0;
  const Field uy = fd::dy(s.u, g), hy = fd::dy(s.h, g);
  ms.W1 = std::max(fd::linf(uy, g, p), fd::linf(hy, g, p));
  ms.W2 = std::max(fd::linf(fd::dy(uy, g), g, p), fd::linf(fd::dy(hy, g), g, p));
  const Field a = magnetic_denominator(s, of, c, g);
  ms.hmin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < a.size(); ++k) ms.hmin = std::min(ms.hmin, a[k]);
  double UH = 0.0;
  for (int i = 0; i < g.nx; ++i)
    UH = std::max({UH, std::abs(of.U(s.t, g.x(i))), std::abs(of.H(s.t, g.x(i)))});
  ms.M = 2.0 / mc.delta0 * (cutoff_weighted_sup(c, g, p) * UH + ms.W1 + ms.W2);
  return ms;
}

}  // namespace mhdbl
