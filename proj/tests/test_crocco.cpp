#include <gtest/gtest.h>

#include <cmath>

#include "mhdbl/crocco.hpp"

using namespace mhdbl;

namespace {

PhysicalState column_state(const Grid2D& g, double (*h)(double), double (*u)(double)) {
  PhysicalState ps{Field(g), Field(g), Field(g), Field(g), 0.0};
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      ps.h1(i, j) = h(g.y(j));
      ps.u1(i, j) = u(g.y(j));
    }
  return ps;
}

SolverConfig fixed(double dt, Scheme sc) {
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.fixed_dt = true;
  cfg.scheme = sc;
  return cfg;
}

}  // namespace

TEST(ToCrocco, UnitFieldIsIdentity) {
  const auto g = build_grid(8, 97, 8.0);
  const auto ps = column_state(g, [](double) { return 1.0; }, [](double y) { return 1.0 - std::exp(-y); });
  EXPECT_NEAR(crocco_eta_max(ps, g), 8.0, 1e-12);
  const auto eg = crocco_grid(g, 97, 8.0);
  const auto cs = to_crocco(ps, g, eg);
  for (int k = 0; k < eg.ny; ++k) EXPECT_NEAR(cs.u1(3, k), 1.0 - std::exp(-eg.y(k)), 1e-6);
}

TEST(ToCrocco, ConstantTwoHalvesEta) {
  const auto g = build_grid(8, 97, 8.0);
  const auto ps = column_state(g, [](double) { return 2.0; }, [](double y) { return y / 8.0; });
  EXPECT_NEAR(crocco_eta_max(ps, g), 16.0, 1e-12);
  const auto eg = crocco_grid(g, 65, 16.0);
  const auto cs = to_crocco(ps, g, eg);
  for (int k = 0; k < eg.ny; ++k) {
    EXPECT_NEAR(cs.u1(0, k), eg.y(k) / 16.0, 1e-12);
    EXPECT_NEAR(cs.h1(0, k), 2.0, 1e-12);
  }
}

TEST(ToCrocco, RoundTripThroughPsi) {
  // h1 = 1 + e^{-y}/2: psi = y + (1 - e^{-y})/2
  const auto g = build_grid(8, 401, 10.0);
  const auto ps = column_state(g, [](double y) { return 1.0 + 0.5 * std::exp(-y); },
                               [](double y) { return std::tanh(y); });
  const double emax = crocco_eta_max(ps, g);
  EXPECT_NEAR(emax, 10.0 + 0.5 * (1.0 - std::exp(-10.0)), 1e-8);
  const auto eg = crocco_grid(g, 201, emax);
  const auto cs = to_crocco(ps, g, eg);
  double err = 0.0;
  for (int k = 0; k < eg.ny; ++k) {
    // invert psi by Newton for the oracle
    const double eta = eg.y(k);
    double y = eta;
    for (int it = 0; it < 50; ++it)
      y -= (y + 0.5 * (1.0 - std::exp(-y)) - eta) / (1.0 + 0.5 * std::exp(-y));
    err = std::max(err, std::abs(cs.u1(5, k) - std::tanh(y)));
    err = std::max(err, std::abs(cs.h1(5, k) - (1.0 + 0.5 * std::exp(-y))));
  }
  EXPECT_LE(err, 1e-6);
}

TEST(ToCrocco, MeasureIsConsistent) {
  // int u1 deta = int u1 h1 dy
  const auto g = build_grid(8, 401, 10.0);
  const auto ps = column_state(g, [](double y) { return 1.0 + 0.5 * std::exp(-y); },
                               [](double y) { return y * std::exp(-y); });
  const auto eg = crocco_grid(g, 401, crocco_eta_max(ps, g));
  const auto cs = to_crocco(ps, g, eg);
  const double lhs = fd::integrate(cs.u1, eg);
  const double rhs = fd::integrate(ps.u1 * ps.h1, g);
  EXPECT_NEAR(lhs, rhs, 1e-4 * std::abs(rhs));
}

TEST(ToCrocco, NonPositiveH1Throws) {
  const auto g = build_grid(8, 33, 4.0);
  const auto ps = column_state(g, [](double y) { return 1.0 - y / 2.0; }, [](double) { return 0.0; });
  EXPECT_THROW(to_crocco(ps, g, crocco_grid(g, 33, 1.0)), TransformError);
}

TEST(CroccoStep, FarFieldIsFixedPoint) {
  const auto eg = build_grid(16, 49, 6.0);
  CroccoState cs{Field(eg, 1.0), Field(eg, 1.0), 0.0};
  CroccoDrivers d;
  d.boundary = [&](double) {
    BoundaryValues b = BoundaryValues::homogeneous(eg.nx);
    std::fill(b.u_wall.begin(), b.u_wall.end(), 1.0);
    std::fill(b.u_top.begin(), b.u_top.end(), 1.0);
    std::fill(b.h_top.begin(), b.h_top.end(), 1.0);
    return b;
  };
  const auto next = step_crocco(cs, OuterFlow::constant(1, 1), eg, fixed(0.01, Scheme::imex_cn), 0.01, &d);
  EXPECT_LE(fd::max_abs(next.u1 - cs.u1), 1e-14);
  EXPECT_LE(fd::max_abs(next.h1 - cs.h1), 1e-14);
}

TEST(CroccoStep, ManufacturedSpatialOrder) {
  ManufacturedCrocco m;
  const auto of = OuterFlow::constant(1, 1);
  double prev = 0.0;
  for (int r = 0; r < 3; ++r) {
    const auto eg = build_grid(16 << r, (32 << r) + 1, 6.0);
    const auto cfg = fixed(2.5e-3, Scheme::imex_cn);
    const auto d = manufactured_crocco_drivers(m, of, eg, cfg.mu, cfg.kappa);
    const auto run = run_crocco(m.sample(0.0, eg), of, eg, cfg, 0.25, &d);
    ASSERT_EQ(run.cause, Termination::t_end);
    const auto ex = m.sample(0.25, eg);
    const double e = std::hypot(fd::l2(run.final_state.u1 - ex.u1, eg), fd::l2(run.final_state.h1 - ex.h1, eg));
    if (r > 0) {
      EXPECT_GE(std::log2(prev / e), 1.8) << "r=" << r << " e=" << e;
    }
    prev = e;
  }
}

TEST(CroccoStep, ManufacturedTemporalOrder) {
  ManufacturedCrocco m;
  const auto of = OuterFlow::constant(1, 1);
  const auto eg = build_grid(32, 97, 6.0);
  for (Scheme sc : {Scheme::imex_be, Scheme::imex_cn}) {
    std::vector<double> errs;
    for (double dt : {0.02, 0.01, 0.005}) {
      const auto cfg = fixed(dt, sc);
      const auto d = manufactured_crocco_drivers(m, of, eg, cfg.mu, cfg.kappa);
      const auto run = run_crocco(m.sample(0.0, eg), of, eg, cfg, 0.4, &d);
      ASSERT_EQ(run.cause, Termination::t_end);
      const auto ex = m.sample(0.4, eg);
      errs.push_back(std::hypot(fd::l2(run.final_state.u1 - ex.u1, eg), fd::l2(run.final_state.h1 - ex.h1, eg)));
    }
    // spatial error floor removed by differencing successive levels
    const double p = std::log2((errs[0] - errs[1]) / (errs[1] - errs[2]));
    EXPECT_GE(p, sc == Scheme::imex_be ? 0.9 : 1.8) << to_string(sc);
  }
}

TEST(CroccoCompare, StabilityDataAgrees) {
  const auto of = OuterFlow::constant(1, 1);
  Cutoff c;
  SolverConfig cfg;
  std::vector<double> d;
  for (int r = 0; r < 2; ++r) {
    const auto g = build_grid(64 << r, (256 << r) + 1, 12.0);
    const auto s0 = make_initial("nonmonotone-shear", {}, c, g);
    const auto rep = crocco_compare(s0, of, c, g, g.ny, cfg, {0.25, 0.5});
    ASSERT_EQ(rep.primal_cause, Termination::t_end);
    ASSERT_EQ(rep.crocco_cause, Termination::t_end);
    ASSERT_EQ(rep.rows.size(), 3u);
    EXPECT_NEAR(rep.rows[0].distance, 0.0, 1e-12);
    d.push_back(rep.distance_at(0.5));
  }
  EXPECT_LE(d[0], 5e-2);
  EXPECT_GE(d[0] / d[1], 3.0);
}
