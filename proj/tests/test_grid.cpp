#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mhdbl/grid.hpp"
#include "mhdbl/stencil.hpp"

using namespace mhdbl;

TEST(BuildGrid, SmallGridSpacings) {
  const auto g = build_grid(8, 9, 8.0);
  EXPECT_DOUBLE_EQ(g.dx, 2.0 * std::numbers::pi / 8.0);
  EXPECT_DOUBLE_EQ(g.dy, 1.0);
  for (int j = 0; j < 9; ++j) EXPECT_DOUBLE_EQ(g.y(j), j);
}

TEST(BuildGrid, RejectsDegenerate) {
  EXPECT_THROW(build_grid(8, 9, 0.0), InvalidArgument);
  EXPECT_THROW(build_grid(9, 9, 1.0), InvalidArgument);
  EXPECT_THROW(build_grid(8, 7, 1.0), InvalidArgument);
  EXPECT_THROW(build_grid(6, 9, 1.0), InvalidArgument);
}

TEST(BuildGrid, FineSpacing) {
  const auto g = build_grid(256, 257, 12.0);
  EXPECT_DOUBLE_EQ(g.dy, 0.046875);
  EXPECT_DOUBLE_EQ(g.y_nodes.back(), 12.0);
}

TEST(Weight, Values) {
  EXPECT_DOUBLE_EQ(weight(0, 5), 1.0);
  EXPECT_DOUBLE_EQ(weight(1, 2), 4.0);
  EXPECT_DOUBLE_EQ(weight(3, -1), 0.25);
  EXPECT_THROW(weight(-1, 1), InvalidArgument);
}

TEST(Cutoff, PlateauValues) {
  Cutoff c(1.0);
  EXPECT_EQ(cutoff_eval(c, 0.5, 0), 0.0);
  EXPECT_EQ(cutoff_eval(c, 3.0, 1), 1.0);
  EXPECT_EQ(cutoff_eval(c, 3.0, 0), 3.0);
  EXPECT_EQ(cutoff_eval(c, 3.0, 2), 0.0);
  EXPECT_EQ(cutoff_eval(c, 0.9, 3), 0.0);
  EXPECT_THROW(cutoff_eval(c, 1.0, 4), InvalidArgument);
}

TEST(Cutoff, TransitionMonotone) {
  Cutoff c(1.0);
  const double v = c.phi(1.5);
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, 1.5);
  // symmetric smoothstep: S(1/2) = 1/2
  EXPECT_NEAR(v, 0.75, 1e-14);
  double prev = 0.0;
  for (int k = 20; k < 1000; ++k) {  // below s=0.02 exp(-1/s) underflows relative to 1
    const double y = 1.0 + k / 1000.0;
    const double p = c.phi(y);
    EXPECT_GT(p, prev);
    prev = p;
  }
}

// derivatives agree with centered differences of the next-lower order
TEST(Cutoff, DerivativesMatchFiniteDifferences) {
  Cutoff c(1.3);
  const double h = 1e-5;
  for (double y = 1.35; y < 2.55; y += 0.07) {
    for (int o = 1; o <= 3; ++o) {
      const double fdv = (c.eval(y + h, o - 1) - c.eval(y - h, o - 1)) / (2 * h);
      EXPECT_NEAR(c.eval(y, o), fdv, 1e-5 * (1.0 + std::abs(fdv))) << "y=" << y << " o=" << o;
    }
  }
}

TEST(Cutoff, SlopeBounds) {
  Cutoff c(1.0);
  double mx = 0.0, mn = 1e9;
  for (int k = 0; k <= 40000; ++k) {
    const double d1 = c.d1(4.0 * k / 40000.0);
    mx = std::max(mx, d1);
    mn = std::min(mn, d1);
  }
  EXPECT_GE(mn, 0.0);
  // phi rises from 0 to 2 r0 over [r0, 2 r0], so the mean slope there is 2
  EXPECT_GE(mx, 2.0);
  EXPECT_TRUE(std::isfinite(mx));
}

TEST(Cutoff, WeightedDerivativeBoundsFinite) {
  Cutoff c(1.0);
  const auto g = build_grid(8, 1201, 12.0);
  for (int o = 2; o <= 3; ++o) {
    double m = 0.0;
    for (int j = 0; j < g.ny; ++j) m = std::max(m, std::pow(1 + g.y(j), 3.0) * std::abs(c.eval(g.y(j), o)));
    EXPECT_TRUE(std::isfinite(m));
    for (int j = 0; j < g.ny; ++j)
      if (g.y(j) >= 2.0 || g.y(j) <= 1.0) {
        EXPECT_EQ(c.eval(g.y(j), o), 0.0);
      }
  }
}

TEST(Cutoff, CompatibilityWithGrid) {
  Cutoff c(4.0);
  EXPECT_THROW(c.check_compatible(build_grid(8, 9, 12.0)), InvalidArgument);
  EXPECT_NO_THROW(Cutoff(3.0).check_compatible(build_grid(8, 9, 12.0)));
}

TEST(Stencil, CyclicSolverMatchesDense) {
  const int n = 9;
  const double lo = -0.7, di = 2.5, up = -0.4;
  std::vector<double> x(n), d(n);
  for (int i = 0; i < n; ++i) x[i] = std::sin(1.3 * i + 0.2);
  for (int i = 0; i < n; ++i) d[i] = lo * x[(i + n - 1) % n] + di * x[i] + up * x[(i + 1) % n];
  fd::solve_cyclic_constant(lo, di, up, d);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(d[i], x[i], 1e-13);
}

TEST(Stencil, DerivativesSecondOrder) {
  double prev = 0.0;
  for (int r = 0; r < 2; ++r) {
    const auto g = build_grid(32 << r, (64 << r) + 1, 6.0);
    const Field f = Field::from(g, [](double x, double y) { return std::sin(x) * std::exp(-y); });
    const Field ex = Field::from(g, [](double x, double y) { return -std::sin(x) * std::exp(-y); });
    const Field ex2 = Field::from(g, [](double x, double y) { return std::sin(x) * std::exp(-y); });
    const double e = fd::max_abs(fd::dy(f, g) - ex) + fd::max_abs(fd::dyy(f, g) - ex2);
    if (r == 1) {
      EXPECT_GT(std::log2(prev / e), 1.8);
    }
    prev = e;
  }
}
