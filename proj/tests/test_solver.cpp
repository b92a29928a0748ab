#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mhdbl/manufactured.hpp"
#include "mhdbl/solver_primal.hpp"

using namespace mhdbl;

namespace {

const double kPi = std::numbers::pi;

SolverConfig fixed(double dt, double t_end, Scheme sc) {
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.fixed_dt = true;
  cfg.t_end = t_end;
  cfg.scheme = sc;
  cfg.monitor_m = 0;
  return cfg;
}

double state_l2(const State& a, const State& b, const Grid2D& g) {
  return std::hypot(fd::l2(a.u - b.u, g), fd::l2(a.h - b.h, g));
}

State run_manufactured(const ManufacturedPrimal& m, const OuterFlow& of, const Grid2D& g,
                       const SolverConfig& cfg) {
  Cutoff c;
  const Drivers d = manufactured_drivers(m, of, c, g, cfg);
  RunOptions opt;
  opt.drivers = &d;
  const auto rec = run_primal(m.sample(0.0, g), of, c, g, cfg, opt);
  EXPECT_EQ(rec.cause, Termination::t_end);
  return rec.final_state;
}

}  // namespace

TEST(Config, Validation) {
  SolverConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.cfl = 0.95;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = SolverConfig{};
  cfg.mu = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = SolverConfig{};
  cfg.corrector_order = 2;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  EXPECT_EQ(parse_scheme("imex-be"), Scheme::imex_be);
  EXPECT_THROW(parse_scheme("rk4"), InvalidArgument);
}

TEST(CflDt, ZeroFieldsGiveCap) {
  const auto g = build_grid(16, 65, 12.0);
  SolverConfig cfg;
  cfg.dt = 0.3;
  EXPECT_EQ(cfl_dt(State(g), OuterFlow::constant(0, 0), Cutoff(), g, cfg), 0.3);
}

TEST(CflDt, ArithmeticExample) {
  const auto g = build_grid(64, 65, 12.0, 6.4);
  ASSERT_DOUBLE_EQ(g.dx, 0.1);
  State s(g);
  s.u = Field::from(g, [](double, double) { return 2.0; });
  SolverConfig cfg;
  cfg.dt = 1.0;
  cfg.cfl = 0.5;
  EXPECT_DOUBLE_EQ(cfl_dt(s, OuterFlow::constant(0, 0), Cutoff(), g, cfg), 0.025);
}

TEST(CflDt, HalvesWithDx) {
  Cutoff c;
  const auto of = OuterFlow::constant(1, 1);
  SolverConfig cfg;
  cfg.dt = 1.0;
  double prev = 0.0;
  for (int r = 0; r < 2; ++r) {
    const auto g = build_grid(32 << r, 129, 12.0);
    const double dt = cfl_dt(make_initial("nonmonotone-shear", {}, c, g), of, c, g, cfg);
    if (r == 1) {
      EXPECT_NEAR(prev / dt, 2.0, 0.05);
    }
    prev = dt;
  }
}

TEST(CflDt, CollapseThrows) {
  const auto g = build_grid(16, 65, 12.0);
  State s(g);
  s.u = Field::from(g, [](double, double) { return 1e14; });
  SolverConfig cfg;
  EXPECT_THROW(cfl_dt(s, OuterFlow::constant(0, 0), Cutoff(), g, cfg), CflCollapse);
}

TEST(Step, ZeroIsFixedPoint) {
  const auto g = build_grid(16, 65, 12.0);
  Cutoff c;
  const auto of = OuterFlow::constant(0, 0, 0);
  for (auto sc : {Scheme::imex_be, Scheme::imex_cn}) {
    auto cfg = fixed(0.1, 1.0, sc);
    cfg.eps = 1e-2;
    const StepContext cx{&of, &c, &g, &cfg};
    const State s1 = step_primal(State(g), cx, 0.37);
    EXPECT_EQ(fd::max_abs(s1.u), 0.0);
    EXPECT_EQ(fd::max_abs(s1.h), 0.0);
    EXPECT_DOUBLE_EQ(s1.t, 0.37);
  }
}

TEST(Step, DiscreteHeatEigenDecay) {
  const auto g = build_grid(8, 97, 12.0);
  Cutoff c;
  const auto of = OuterFlow::constant(0, 0, 0);
  const double L = g.y_max, dy = g.dy, mu = 0.7, kappa = 0.3, dt = 0.05;
  // Dirichlet-Dirichlet and Neumann-Dirichlet eigenvectors of the discrete Laplacian
  const double lu = 4.0 / (dy * dy) * std::pow(std::sin(kPi * dy / (2 * L)), 2);
  const double lh = 4.0 / (dy * dy) * std::pow(std::sin(kPi * dy / (4 * L)), 2);
  State s(g);
  s.u = Field::from(g, [&](double, double y) { return std::sin(kPi * y / L); });
  s.h = Field::from(g, [&](double, double y) { return std::cos(kPi * y / (2 * L)); });
  for (int i = 0; i < g.nx; ++i) {
    s.u(i, 0) = s.u(i, g.ny - 1) = s.h(i, g.ny - 1) = 0.0;
  }
  for (auto sc : {Scheme::imex_be, Scheme::imex_cn}) {
    auto cfg = fixed(dt, 1.0, sc);
    cfg.mu = mu;
    cfg.kappa = kappa;
    const StepContext cx{&of, &c, &g, &cfg};
    const State s1 = step_primal(s, cx, dt);
    auto factor = [&](double lam) {
      return sc == Scheme::imex_be ? 1.0 / (1.0 + dt * lam)
                                   : (1.0 - 0.5 * dt * lam) / (1.0 + 0.5 * dt * lam);
    };
    EXPECT_LE(fd::max_abs(s1.u - s.u * factor(mu * lu)), 1e-13);
    EXPECT_LE(fd::max_abs(s1.h - s.h * factor(kappa * lh)), 1e-13);
  }
}

TEST(Step, ImplicitDiffusionMaxPrinciple) {
  const auto g = build_grid(8, 129, 12.0);
  Cutoff c;
  const auto of = OuterFlow::constant(0, 0, 0);
  State s(g);
  s.u = Field::from(g, [](double, double y) { return y * std::exp(-y) * (2 + std::sin(5 * y)); });
  s.h = Field::from(g, [](double, double y) { return std::exp(-y * y) * (1 + 0.5 * std::cos(7 * y)); });
  for (int i = 0; i < g.nx; ++i) s.u(i, 0) = s.u(i, g.ny - 1) = s.h(i, g.ny - 1) = 0.0;
  auto cfg = fixed(0.5, 1.0, Scheme::imex_be);
  const StepContext cx{&of, &c, &g, &cfg};
  State cur = s;
  for (int n = 0; n < 5; ++n) {
    const State nx = step_primal(cur, cx, 0.5);
    EXPECT_LE(fd::max_abs(nx.u), fd::max_abs(cur.u) + 1e-15);
    EXPECT_LE(fd::max_abs(nx.h), fd::max_abs(cur.h) + 1e-15);
    cur = nx;
  }
}

TEST(Corrector, Examples) {
  const auto g = build_grid(64, 129, 12.0);
  Cutoff c;
  const auto of = OuterFlow::constant(1, 1);
  State flat(g);
  flat.u = Field::from(g, [](double, double y) { return y * std::exp(-y); });
  const auto z = epsilon_corrector(flat, of, c, g, 0, 0.5, 1.0, 1.0);
  EXPECT_EQ(fd::max_abs(z.rt1), 0.0);
  EXPECT_EQ(fd::max_abs(z.rt2), 0.0);
  EXPECT_EQ(fd::max_abs(z.rt3), 0.0);

  State s(g);
  s.u = Field::from(g, [](double x, double y) { return std::sin(x) * y * std::exp(-y); });
  const auto a = epsilon_corrector(s, of, c, g, 0, 0.0, 1.0, 1.0);
  const auto b = epsilon_corrector(s, of, c, g, 0, 3.0, 1.0, 1.0);
  EXPECT_EQ(fd::max_abs(a.rt1 - b.rt1), 0.0);
  // -d_x^2 u0 = u0; central differences scale sin by (2 - 2 cos dx) / dx^2
  EXPECT_LE(fd::max_abs(a.rt1 - s.u), 2.0 * g.dx * g.dx * fd::max_abs(s.u) / 12.0);
  const auto o1 = epsilon_corrector(s, of, c, g, 1, 0.0, 1.0, 1.0);
  EXPECT_EQ(fd::max_abs(o1.rt1 - a.rt1), 0.0);
}

TEST(Forcing, ZeroAnalyticZeroTraces) {
  const auto g = build_grid(16, 65, 12.0);
  ManufacturedPrimal m{0.0, 0.2, 0.0};
  const auto f = manufactured_forcing(m, OuterFlow::constant(0, 0), Cutoff(), g, 1.0, 1.0, 0.1, 0.3);
  EXPECT_EQ(fd::max_abs(f.fu), 0.0);
  EXPECT_EQ(fd::max_abs(f.fh), 0.0);
  EXPECT_EQ(fd::max_abs(f.fpsi), 0.0);
}

TEST(Forcing, FlatPairLeavesMinusSources) {
  // amp = 0 leaves u = v = g = 0 and h = h_inf, so every block vanishes with constant traces
  const auto g = build_grid(16, 129, 12.0);
  Cutoff c;
  ManufacturedPrimal m{0.0, 0.2, 0.7};
  const auto of = OuterFlow::constant(1, 1);
  const double mu = 1.3, kappa = 0.6;
  const auto f = manufactured_forcing(m, of, c, g, mu, kappa, 0.0, 0.0);
  const auto src = source_r(of, c, g, 0.0, mu, kappa);
  for (int i = 0; i < g.nx; i += 3)
    for (int j = 0; j < g.ny; j += 5) {
      EXPECT_NEAR(f.fu(i, j), -src.r1(i, j), 1e-14);
      EXPECT_NEAR(f.fh(i, j), -src.r2(i, j), 1e-14);
      EXPECT_NEAR(f.fpsi(i, j), -src.r3(i, j), 1e-14);
    }
}

TEST(Forcing, DecaysWithTime) {
  const auto g = build_grid(32, 129, 12.0);
  ManufacturedPrimal m;
  const auto of = OuterFlow::constant(0, 0);
  double prev = std::numeric_limits<double>::infinity();
  const double f0 = fd::max_abs(manufactured_forcing(m, of, Cutoff(), g, 1, 1, 0, 0).fu);
  for (double t : {0.0, 1.0, 2.0, 4.0}) {
    const auto f = manufactured_forcing(m, of, Cutoff(), g, 1, 1, 0, t);
    const double s = std::max(fd::max_abs(f.fu), fd::max_abs(f.fh));
    EXPECT_TRUE(std::isfinite(s));
    EXPECT_LT(s, prev);
    EXPECT_LE(fd::max_abs(f.fu), 1.01 * f0 * std::exp(-t));
    prev = s;
  }
}

TEST(Manufactured, SpatialOrder) {
  ManufacturedPrimal m;
  const auto of = OuterFlow::steady_harmonic(1.0, 0.2, 1.0);
  double prev = 0.0;
  for (int r = 0; r < 3; ++r) {
    const auto g = build_grid(16 << r, (48 << r) + 1, 12.0);
    auto cfg = fixed(2.5e-3, 0.25, Scheme::imex_cn);
    const State s = run_manufactured(m, of, g, cfg);
    const double e = state_l2(s, m.sample(0.25, g), g);
    if (r > 0) {
      EXPECT_GE(std::log2(prev / e), 1.8) << "r=" << r << " e=" << e;
    }
    prev = e;
  }
}

TEST(Manufactured, TemporalOrder) {
  ManufacturedPrimal m;
  const auto of = OuterFlow::steady_harmonic(1.0, 0.2, 1.0);
  const auto g = build_grid(32, 97, 12.0);
  for (auto sc : {Scheme::imex_be, Scheme::imex_cn}) {
    std::vector<State> runs;
    for (double dt : {0.02, 0.01, 0.005})
      runs.push_back(run_manufactured(m, of, g, fixed(dt, 0.4, sc)));
    const double order = std::log2(state_l2(runs[0], runs[1], g) / state_l2(runs[1], runs[2], g));
    EXPECT_GE(order, sc == Scheme::imex_be ? 0.9 : 1.8) << to_string(sc);
  }
}

TEST(Manufactured, EpsilonRegularizedSpatialOrder) {
  ManufacturedPrimal m;
  const auto of = OuterFlow::steady_harmonic(1.0, 0.2, 1.0);
  double prev = 0.0;
  for (int r = 0; r < 2; ++r) {
    const auto g = build_grid(16 << r, (48 << r) + 1, 12.0);
    auto cfg = fixed(2.5e-3, 0.25, Scheme::imex_cn);
    cfg.eps = 0.05;
    const double e = state_l2(run_manufactured(m, of, g, cfg), m.sample(0.25, g), g);
    if (r > 0) {
      EXPECT_GE(std::log2(prev / e), 1.8);
    }
    prev = e;
  }
}

TEST(Run, ZeroDataReachesEnd) {
  const auto g = build_grid(16, 65, 12.0);
  auto cfg = fixed(0.1, 1.0, Scheme::imex_cn);
  cfg.enforce_positivity = false;
  cfg.monitor_m = 2;
  const auto rec = run_primal(State(g), OuterFlow::constant(0, 0, 0), Cutoff(), g, cfg);
  EXPECT_EQ(rec.cause, Termination::t_end);
  EXPECT_NEAR(rec.times.back(), 1.0, 1e-12);
  for (std::size_t k = 1; k < rec.times.size(); ++k) EXPECT_GT(rec.times[k], rec.times[k - 1]);
  for (const auto& ms : rec.samples) {
    EXPECT_EQ(ms.E, 0.0);
    EXPECT_EQ(ms.W1, 0.0);
    EXPECT_EQ(ms.W2, 0.0);
    EXPECT_EQ(ms.M, 0.0);
  }
}

TEST(Run, PositivityBreachTerminates) {
  const auto g = build_grid(16, 65, 12.0);
  State s(g);
  s.h = Field::from(g, [](double, double) { return 0.01; });
  for (int i = 0; i < g.nx; ++i) s.h(i, g.ny - 1) = 0.0;
  auto cfg = fixed(0.01, 1.0, Scheme::imex_be);
  RunOptions opt;
  opt.validate = false;
  const auto rec = run_primal(s, OuterFlow::constant(0, 0), Cutoff(), g, cfg, opt);
  EXPECT_EQ(rec.cause, Termination::positivity);
  EXPECT_EQ(rec.steps, 1);
}

TEST(Run, RejectsInadmissibleData) {
  const auto g = build_grid(16, 65, 12.0);
  EXPECT_THROW(run_primal(State(g), OuterFlow::constant(0, 0), Cutoff(), g, SolverConfig{}),
               InvalidArgument);
}

TEST(Run, StabilityScenarioCompletes) {
  const auto g = build_grid(64, 257, 12.0);
  Cutoff c;
  SolverConfig cfg;
  cfg.t_end = 1.0;
  cfg.sample_every = 10;
  const auto s0 = make_initial("nonmonotone-shear", {}, c, g);
  const auto rec = run_primal(s0, OuterFlow::constant(1, 1), c, g, cfg);
  EXPECT_EQ(rec.cause, Termination::t_end) << rec.message;
  for (const auto& ms : rec.samples) {
    EXPECT_TRUE(ms.finite());
    EXPECT_GE(ms.hmin, cfg.thresholds.delta0);
  }
}

TEST(Run, EpsilonFamilyIsCauchy) {
  const auto g = build_grid(32, 97, 12.0);
  Cutoff c;
  const auto s0 = make_initial("nonmonotone-shear", {}, c, g);
  std::vector<State> finals;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    SolverConfig cfg;
    cfg.t_end = 0.5;
    cfg.eps = eps;
    cfg.sample_every = 1000;
    const auto rec = run_primal(s0, OuterFlow::constant(1, 1), c, g, cfg);
    ASSERT_EQ(rec.cause, Termination::t_end);
    finals.push_back(rec.final_state);
  }
  EXPECT_GT(state_l2(finals[0], finals[1], g), state_l2(finals[1], finals[2], g));
}
