#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mhdbl/fields.hpp"

using namespace mhdbl;

TEST(RecoverVg, SineExponential) {
  const auto g = build_grid(64, 257, 12.0);
  State s(g);
  s.u = Field::from(g, [](double x, double y) { return std::sin(x) * std::exp(-y); });
  const auto d = recover_vg(s, g);
  const Field ex = Field::from(g, [](double x, double y) { return -std::cos(x) * (1 - std::exp(-y)); });
  EXPECT_LE(fd::max_abs(d.v - ex), 5e-3);
  for (int i = 0; i < g.nx; ++i) {
    EXPECT_EQ(d.v(i, 0), 0.0);
    EXPECT_EQ(d.g(i, 0), 0.0);
    EXPECT_EQ(d.psi(i, 0), 0.0);
  }
}

TEST(RecoverVg, XIndependentGivesZeroV) {
  const auto g = build_grid(16, 33, 8.0);
  State s(g);
  s.u = Field::from(g, [](double, double y) { return y * std::exp(-y); });
  EXPECT_EQ(fd::max_abs(recover_vg(s, g).v), 0.0);
}

TEST(RecoverVg, StreamFunctionSecondOrder) {
  double prev = 0.0;
  for (int r = 0; r < 3; ++r) {
    const auto g = build_grid(16, (64 << r) + 1, 12.0);
    State s(g);
    s.h = Field::from(g, [](double x, double y) { return (1 + 0.3 * std::sin(x)) * std::exp(-y); });
    const Field ex = Field::from(g, [](double x, double y) { return (1 + 0.3 * std::sin(x)) * (1 - std::exp(-y)); });
    const double e = fd::max_abs(recover_vg(s, g).psi - ex);
    if (r > 0) {
      EXPECT_GE(std::log2(prev / e), 1.9);
    }
    prev = e;
  }
}

TEST(Physical, ZeroStateUnitTraces) {
  const auto g = build_grid(8, 49, 12.0);
  Cutoff c;
  const auto ps = to_physical(State(g), OuterFlow::constant(1, 1), c, g);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      EXPECT_EQ(ps.u1(i, j), c.d1(g.y(j)));
      EXPECT_EQ(ps.h1(i, j), c.d1(g.y(j)));
      EXPECT_EQ(ps.u2(i, j), 0.0);
      EXPECT_EQ(ps.h2(i, j), 0.0);
    }
}

TEST(Physical, RoundTrip) {
  const auto g = build_grid(16, 49, 12.0);
  Cutoff c;
  const auto of = OuterFlow::steady_harmonic(1.0, 0.1, 0.8);
  State s(g, 0.0);
  s.u = Field::from(g, [](double x, double y) { return std::sin(x) * y * std::exp(-y); });
  s.h = Field::from(g, [](double x, double y) { return std::cos(2 * x) * std::exp(-y * y); });
  const State back = from_physical(to_physical(s, of, c, g), of, c, g);
  EXPECT_LE(fd::max_abs(back.u - s.u), 1e-14);
  EXPECT_LE(fd::max_abs(back.h - s.h), 1e-14);
}

TEST(Physical, NormalVelocityCarriesTraceGradient) {
  const auto g = build_grid(16, 49, 12.0);
  Cutoff c;
  OuterFlow of = OuterFlow::constant(1.0, 1.0);
  of.U = TraceSeries{{1.0, 0, 0, 0}, {0.1, 0, 1, 0}};
  State s(g);
  s.u = Field::from(g, [](double x, double y) { return std::sin(x) * y * std::exp(-y); });
  const auto d = recover_vg(s, g);
  const auto ps = to_physical(s, of, c, g);
  const int i = 4;  // x = pi/2
  ASSERT_NEAR(g.x(i), std::numbers::pi / 2, 1e-15);
  for (int j = 0; j < g.ny; ++j)
    if (g.y(j) >= 2.0) {
      EXPECT_NEAR(ps.u2(i, j), d.v(i, j) + 0.1 * g.y(j), 1e-14);
    }
}

TEST(ValidateInitial, ZeroStateFailsPositivity) {
  const auto g = build_grid(8, 97, 12.0);
  const auto r = validate_initial(State(g), OuterFlow::constant(1, 1), Cutoff(), {0.1, 0.0}, g);
  EXPECT_EQ(r.hmin, 0.0);
  EXPECT_FALSE(r.positivity_ok);
}

TEST(ValidateInitial, ExponentialMagneticProfile) {
  const auto g = build_grid(8, 1201, 12.0);
  Cutoff c;
  State s(g);
  s.h = Field::from(g, [](double, double y) { return std::exp(-y); });
  const auto r = validate_initial(s, OuterFlow::constant(1, 1), c, {0.1, 0.0}, g);
  // oracle: dense sampling of e^{-y} + phi'(y)
  double dense = 1e9;
  for (int k = 0; k <= 9600; ++k) {
    const double y = 12.0 * k / 9600.0;
    dense = std::min(dense, std::exp(-y) + c.d1(y));
  }
  EXPECT_NEAR(r.hmin, dense, 2e-3);
  EXPECT_GE(r.hmin, dense - 1e-12);  // grid min cannot undercut the dense min
  EXPECT_EQ(r.positivity_ok, r.hmin >= 0.2);
  EXPECT_TRUE(r.positivity_ok);
}

TEST(ValidateInitial, RejectsNonPositiveDelta) {
  const auto g = build_grid(8, 97, 12.0);
  EXPECT_THROW(validate_initial(State(g), OuterFlow::constant(1, 1), Cutoff(), {0.0, 0.0}, g),
               InvalidArgument);
}

TEST(InitialLibrary, StabilityDemoIsAdmissible) {
  const auto g = build_grid(64, 193, 12.0);
  Cutoff c;
  const State s = make_initial("nonmonotone-shear", {}, c, g);
  const auto r = validate_initial(s, OuterFlow::constant(1, 1), c, {0.1, 0.0}, g);
  EXPECT_TRUE(r.ok()) << r.summary();
  EXPECT_GE(r.hmin, 0.2);
  // non-monotone tangential velocity near the wall
  const auto ps = to_physical(s, OuterFlow::constant(1, 1), c, g);
  bool decreasing_somewhere = false;
  for (int j = 1; j < g.ny; ++j)
    if (ps.u1(0, j) < ps.u1(0, j - 1) - 1e-6) decreasing_somewhere = true;
  EXPECT_TRUE(decreasing_somewhere);
}

TEST(InitialLibrary, PsiMonotoneOnValidatedState) {
  const auto g = build_grid(32, 193, 12.0);
  Cutoff c;
  const State s = make_initial("nonmonotone-shear", {}, c, g);
  const auto ps = to_physical(s, OuterFlow::constant(1, 1), c, g);
  const Field psi = fd::cumint_y(ps.h1, g);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 1; j < g.ny; ++j) EXPECT_GT(psi(i, j), psi(i, j - 1));
}
