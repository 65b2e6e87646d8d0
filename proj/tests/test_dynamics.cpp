#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "mhdslab/dynamics.hpp"
#include "mhdslab/error.hpp"
#include "mhdslab/experiments.hpp"
#include "mhdslab/spectral.hpp"
#include "test_util.hpp"

using namespace mhdslab;
using namespace mhdslab::testing;
using std::numbers::pi;

namespace {

GridPtr cube(int n, int n3, double l = 2 * pi) {
  return plan_grid({n, n, n3, l, l, l, 2.0 / 3.0});
}

State random_state(const GridPtr& g, double amp, unsigned seed, double eps = 0.0) {
  std::mt19937_64 rng(seed);
  State s = State::zeros(*g, eps);
  s.u = random_solenoidal(*g, rng);
  s.b = random_solenoidal(*g, rng);
  const double e = l2_energy(*g, s);
  const double scale = std::sqrt(amp / e);
  s.u *= scale;
  s.b *= scale;
  return s;
}

SpectralVectorField from_physical(const Grid& g, const std::array<PhysicalField, 3>& p) {
  return {{to_spectral(g, p[0], VerticalBasis::Cosine), to_spectral(g, p[1], VerticalBasis::Cosine),
           to_spectral(g, p[2], VerticalBasis::Sine)}};
}

// exp(dt M) by scaling and squaring of the Taylor series, in long double.
std::array<std::complex<long double>, 4> expm_oracle(double k1, double k2, double kappa, double eps,
                                                     double dt) {
  using C = std::complex<long double>;
  using M = std::array<C, 4>;
  const auto m = LinearModeMatrix::at(k1, k2, kappa, eps);
  M a{C(-m.nu_u * dt), C(0, k2 * dt), C(0, k2 * dt), C(-m.nu_b * dt)};
  long double norm = 0;
  for (auto& x : a) norm = std::max(norm, std::abs(x));
  int sq = 0;
  while (norm > 0.05L) {
    norm /= 2;
    ++sq;
  }
  for (auto& x : a) x = std::ldexp(1.0L, -sq) * x;
  auto mul = [](const M& x, const M& y) {
    return M{x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2],
             x[2] * y[1] + x[3] * y[3]};
  };
  M sum{C(1), C(0), C(0), C(1)}, term = sum;
  for (int n = 1; n < 30; ++n) {
    term = mul(term, a);
    for (auto& x : term) x /= static_cast<long double>(n);
    for (int i = 0; i < 4; ++i) sum[i] += term[i];
  }
  for (int i = 0; i < sq; ++i) sum = mul(sum, sum);
  return sum;
}

}  // namespace

TEST(RhsNonlinear, ZeroIsFixedPoint) {
  auto g = cube(8, 9);
  const auto n = rhs_nonlinear(*g, State::zeros(*g));
  EXPECT_EQ(l2_norm_sq(*g, n.nu), 0.0);
  EXPECT_EQ(l2_norm_sq(*g, n.nb), 0.0);
}

TEST(RhsNonlinear, MatchesAnalyticProductsOnEightCube) {
  auto g = cube(8, 8);
  // u = (c2 c3, c2 c3, s2 s3), b = (c2 c3 / 2, c1 c3, 0); both solenoidal with slip walls.
  struct Val {
    std::array<double, 3> v;
    std::array<std::array<double, 3>, 3> grad;  // grad[i][j] = d_j v_i
  };
  auto u_at = [](double x1, double x2, double x3) {
    (void)x1;
    const double c2 = std::cos(x2), s2 = std::sin(x2), c3 = std::cos(x3), s3 = std::sin(x3);
    return Val{{c2 * c3, c2 * c3, s2 * s3},
               {{{0, -s2 * c3, -c2 * s3}, {0, -s2 * c3, -c2 * s3}, {0, c2 * s3, s2 * c3}}}};
  };
  auto b_at = [](double x1, double x2, double x3) {
    const double c1 = std::cos(x1), s1 = std::sin(x1), c2 = std::cos(x2), s2 = std::sin(x2),
                 c3 = std::cos(x3), s3 = std::sin(x3);
    return Val{{0.5 * c2 * c3, c1 * c3, 0.0},
               {{{0, -0.5 * s2 * c3, -0.5 * c2 * s3}, {-s1 * c3, 0, -c1 * s3}, {0, 0, 0}}}};
  };
  std::array<PhysicalField, 3> u, b, ru, rb;
  for (int i = 0; i < 3; ++i) {
    u[i] = sample(*g, [&](double a, double c, double d) { return u_at(a, c, d).v[i]; });
    b[i] = sample(*g, [&](double a, double c, double d) { return b_at(a, c, d).v[i]; });
    ru[i] = sample(*g, [&](double a, double c, double d) {
      const auto U = u_at(a, c, d), B = b_at(a, c, d);
      double r = 0;
      for (int j = 0; j < 3; ++j) r += -U.v[j] * U.grad[i][j] + B.v[j] * B.grad[i][j];
      return r;
    });
    rb[i] = sample(*g, [&](double a, double c, double d) {
      const auto U = u_at(a, c, d), B = b_at(a, c, d);
      double r = 0;
      for (int j = 0; j < 3; ++j) r += -U.v[j] * B.grad[i][j] + B.v[j] * U.grad[i][j];
      return r;
    });
  }
  State s = State::zeros(*g);
  s.u = from_physical(*g, u);
  s.b = from_physical(*g, b);
  ASSERT_LT(std::sqrt(l2_norm_sq(*g, divergence(*g, s.u))), 1e-13);
  ASSERT_LT(std::sqrt(l2_norm_sq(*g, divergence(*g, s.b))), 1e-13);

  const auto n = rhs_nonlinear(*g, s);
  const auto want_u = leray_project(*g, from_physical(*g, ru));
  const auto want_b = leray_project(*g, from_physical(*g, rb));
  EXPECT_LT(rel_diff(*g, n.nu, want_u), 1e-10);
  EXPECT_LT(rel_diff(*g, n.nb, want_b), 1e-10);
  EXPECT_GT(l2_norm_sq(*g, want_u), 1e-2);
  EXPECT_GT(l2_norm_sq(*g, want_b), 1e-2);
  // unprojected momentum term is the raw product
  EXPECT_LT(rel_diff(*g, momentum_advection(*g, s), from_physical(*g, ru)), 1e-10);
  EXPECT_NEAR(n.max_u, std::sqrt(2.0), 1e-12);
}

TEST(RhsNonlinear, SwappingFieldsNegatesBothTerms) {
  auto g = cube(12, 9);
  State s = random_state(g, 0.5, 7);
  State w = s;
  std::swap(w.u, w.b);
  const auto a = rhs_nonlinear(*g, s);
  const auto b = rhs_nonlinear(*g, w);
  const double scale = std::sqrt(l2_norm_sq(*g, a.nu));
  EXPECT_LT(std::sqrt(l2_norm_sq(*g, a.nu + b.nu)), 1e-12 * scale);
  EXPECT_LT(std::sqrt(l2_norm_sq(*g, a.nb + b.nb)), 1e-12 * std::sqrt(l2_norm_sq(*g, a.nb)));
}

TEST(RhsNonlinear, OutputIsSolenoidalAndEnergyNeutral) {
  auto g = cube(12, 9);
  State s = random_state(g, 1.0, 3);
  const auto n = rhs_nonlinear(*g, s, true);
  EXPECT_LT(std::sqrt(l2_norm_sq(*g, divergence(*g, n.nu))), 1e-10 * std::sqrt(l2_norm_sq(*g, n.nu)));
  EXPECT_LT(std::sqrt(l2_norm_sq(*g, divergence(*g, n.nb))), 1e-10 * std::sqrt(l2_norm_sq(*g, n.nb)));
  // <u, Nu> + <b, Nb> = 0 for the dealiased quadratic terms is only approximate;
  // with zero-mean inputs the exact identity holds up to aliasing-free roundoff.
  double work = 0;
  for (int i = 0; i < 3; ++i) work += inner_product(*g, s.u[i], n.nu[i]) + inner_product(*g, s.b[i], n.nb[i]);
  EXPECT_LT(std::abs(work), 1e-12 * std::sqrt(l2_norm_sq(*g, n.nu) * l2_norm_sq(*g, s.u)));
}

TEST(LinearPropagator, ShearModeEigenvalues) {
  const auto m = LinearModeMatrix::at(0, 1, 0, 0);
  EXPECT_EQ(m.nu_u, 0.0);
  EXPECT_EQ(m.nu_b, 1.0);
  const auto [lp, lm] = m.eigenvalues();
  EXPECT_NEAR(lp.real(), -0.5, 1e-15);
  EXPECT_NEAR(std::abs(lp.imag()), std::sqrt(3.0) / 2, 1e-15);
  EXPECT_NEAR(lm.real(), -0.5, 1e-15);
  EXPECT_NEAR(lp.imag(), -lm.imag(), 1e-15);
  // |u|^2 + |b|^2 decays at 2 Re(lambda) = -1 for the eigenvector
  const auto e = linear_propagator(0, 1, 0, 0, 2.0);
  const Complex vu = 1.0, vb = (lp + 0.0) / Complex(0, 1);  // (M - lp)v = 0, first row
  const Complex wu = e[0] * vu + e[1] * vb, wb = e[2] * vu + e[3] * vb;
  const double ratio = (std::norm(wu) + std::norm(wb)) / (std::norm(vu) + std::norm(vb));
  EXPECT_NEAR(ratio, std::exp(-2.0), 1e-14);
}

TEST(LinearPropagator, DecoupledWhenK2Vanishes) {
  for (double eps : {0.0, 0.01, 1.0}) {
    const auto e = linear_propagator(1, 0, 0.5, eps, 0.7);
    const auto m = LinearModeMatrix::at(1, 0, 0.5, eps);
    EXPECT_NEAR(e[0].real(), std::exp(-m.nu_u * 0.7), 1e-15);
    EXPECT_NEAR(e[3].real(), std::exp(-m.nu_b * 0.7), 1e-15);
    EXPECT_EQ(e[1], Complex{});
    EXPECT_EQ(e[2], Complex{});
  }
}

TEST(LinearPropagator, ZeroStepIsIdentity) {
  const auto e = linear_propagator(3, -2, 1.5, 0.1, 0.0);
  EXPECT_EQ(e[0], Complex(1.0));
  EXPECT_EQ(e[1], Complex{});
  EXPECT_EQ(e[2], Complex{});
  EXPECT_EQ(e[3], Complex(1.0));
}

TEST(LinearPropagator, MatchesSeriesOracleAcrossRegimes) {
  struct Case {
    double k1, k2, kappa, eps, dt;
  };
  // oscillatory, degenerate (d^2 = k2^2), near-degenerate, overdamped, stiff
  const std::vector<Case> cases{{0, 1, 0, 0, 0.1},     {0, 2, 0, 0, 0.3},    {0, 2, 0, 0, 1.0},
                                {0, 2.0000001, 0, 0, 0.5}, {0, 1.9999999, 0, 0, 0.5},
                                {0.5, 3, 2, 0.1, 0.2}, {2, 0.25, 1, 0.01, 0.4}, {0, 0.25, 0, 0, 2.0},
                                {1, -1.5, 0.5, 0.001, 0.05}, {0, 8, 4, 0, 0.05}, {3, 0.5, 4, 0.1, 1.5}};
  for (const auto& c : cases) {
    const auto e = linear_propagator(c.k1, c.k2, c.kappa, c.eps, c.dt);
    const auto o = expm_oracle(c.k1, c.k2, c.kappa, c.eps, c.dt);
    for (int i = 0; i < 4; ++i) {
      const Complex oi(static_cast<double>(o[i].real()), static_cast<double>(o[i].imag()));
      EXPECT_LT(std::abs(e[i] - oi), 1e-12) << c.k1 << " " << c.k2 << " " << c.dt << " entry " << i;
    }
  }
}

TEST(LinearPropagator, StiffModesKeepTheSlowRoot) {
  // eps = 0, k2 = 40: roots near -1 and -1599; the slow one must not cancel away
  const auto e = linear_propagator(0, 40, 0, 0, 3.0);
  const auto o = expm_oracle(0, 40, 0, 0, 3.0);
  for (int i = 0; i < 4; ++i) {
    const Complex oi(static_cast<double>(o[i].real()), static_cast<double>(o[i].imag()));
    EXPECT_LT(std::abs(e[i] - oi), 1e-12 * std::abs(oi) + 1e-300) << i;
  }
  EXPECT_GT(std::abs(e[0]), 1e-2);
}

TEST(LinearModeMatrix, EigenvaluesHaveNonpositiveRealPart) {
  for (double eps : {0.0, 1e-3, 0.1, 1.0})
    for (double k1 = 0; k1 <= 4; k1 += 0.25)
      for (double k2 = -4; k2 <= 4; k2 += 0.25)
        for (double kap = 0; kap <= 4; kap += 0.5) {
          const auto m = LinearModeMatrix::at(k1, k2, kap, eps);
          const auto [lp, lm] = m.eigenvalues();
          EXPECT_LE(lp.real(), 0.0);
          EXPECT_LE(lm.real(), 0.0);
          if (k2 != 0.0 || m.nu_u > 0.0) EXPECT_LT(lp.real(), 0.0) << k1 << " " << k2 << " " << kap;
        }
}

TEST(Step, ZeroStateStaysZero) {
  auto g = cube(8, 9);
  Stepper st(g, {0.05, 0.4, 1.0, 3, true, true});
  State s = State::zeros(*g);
  for (int i = 0; i < 5; ++i) s = st.step(s);
  EXPECT_EQ(l2_norm_sq(*g, s.u) + l2_norm_sq(*g, s.b), 0.0);
  EXPECT_NEAR(s.t, 0.25, 1e-15);
}

TEST(Step, LinearSingleModeMatchesClosedForm) {
  auto g = cube(8, 9);
  State s = State::zeros(*g);
  std::array<PhysicalField, 3> u{sample(*g, [](double, double x2, double) { return std::cos(x2); }),
                                 PhysicalField(g->size(), 0.0), PhysicalField(g->size(), 0.0)};
  std::array<PhysicalField, 3> b{sample(*g, [](double, double x2, double) { return 0.3 * std::sin(x2); }),
                                 PhysicalField(g->size(), 0.0), PhysicalField(g->size(), 0.0)};
  s.u = from_physical(*g, u);
  s.b = from_physical(*g, b);
  SolverConfig cfg;
  cfg.dt = 0.1;
  cfg.t_end = 0.1;
  cfg.nonlinear = false;
  const State out = step(g, s, cfg);
  const auto e = linear_propagator(0, 1, 0, 0, 0.1);
  for (int i2 : {1, g->n2() - 1}) {
    const Complex u0 = s.u[0](0, i2, 0), b0 = s.b[0](0, i2, 0);
    const auto ee = linear_propagator(0, g->k2(i2), 0, 0, 0.1);
    EXPECT_LT(std::abs(out.u[0](0, i2, 0) - (ee[0] * u0 + ee[1] * b0)), 1e-12);
    EXPECT_LT(std::abs(out.b[0](0, i2, 0) - (ee[2] * u0 + ee[3] * b0)), 1e-12);
  }
  // u = cos x2 and b = 0.3 sin x2 carry coefficients 1/2 and -0.15i at k2 = +1
  const double x2 = 0.7;
  const Complex ph = std::polar(1.0, x2);
  const double want_u = 2 * ((e[0] * 0.5 + e[1] * Complex(0, -0.15)) * ph).real();
  const double want_b = 2 * ((e[2] * 0.5 + e[3] * Complex(0, -0.15)) * ph).real();
  EXPECT_NEAR(evaluate(*g, out.u[0], 0.0, x2, 0.0), want_u, 1e-12);
  EXPECT_NEAR(evaluate(*g, out.b[0], 0.0, x2, 0.0), want_b, 1e-12);
  EXPECT_DOUBLE_EQ(out.t, 0.1);
}

TEST(Step, CflViolationReportsRequiredDt) {
  auto g = cube(8, 9);
  State s = random_state(g, 5.0, 11);
  SolverConfig cfg;
  cfg.dt = 1.0;
  cfg.t_end = 10.0;
  try {
    step(g, s, cfg);
    FAIL() << "expected CflError";
  } catch (const CflError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CflViolation);
    EXPECT_GT(e.required_dt(), 0.0);
    EXPECT_LT(e.required_dt(), 1.0);
    cfg.dt = e.required_dt();
    EXPECT_NO_THROW(step(g, s, cfg));
  }
}

TEST(Step, AdaptiveStepRespectsCfl) {
  auto g = cube(8, 9);
  State s = random_state(g, 5.0, 11);
  SolverConfig cfg;
  cfg.t_end = 10.0;
  Stepper st(g, cfg);
  const State out = st.step(s);
  const double limit = st.cfl_limit(max_magnitude_physical(*g, s.u), max_magnitude_physical(*g, s.b));
  EXPECT_LE(out.t, limit);
  EXPECT_GT(out.t, 0.5 * limit);
  const double ratio = std::log2(cfg.cfl * g->min_spacing() / out.t);
  EXPECT_NEAR(ratio, std::round(ratio), 1e-12);
}

TEST(Step, NonfiniteStateAborts) {
  auto g = cube(8, 9);
  State s = random_state(g, 0.1, 1);
  s.u[0](1, 1, 1) = Complex(std::nan(""), 0.0);
  SolverConfig cfg;
  cfg.dt = 0.01;
  try {
    evolve(g, s, cfg, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonfiniteField);
  }
}

TEST(Step, RejectsBadConfig) {
  auto g = cube(8, 9);
  SolverConfig cfg;
  cfg.rk_order = 4;
  EXPECT_THROW(Stepper(g, cfg), Error);
  cfg.rk_order = 3;
  cfg.cfl = 1.5;
  EXPECT_THROW(Stepper(g, cfg), Error);
}

class StepOrder : public ::testing::TestWithParam<int> {};

TEST_P(StepOrder, SelfConvergenceMatchesOrder) {
  const int order = GetParam();
  auto g = cube(16, 9);
  const State s0 = random_state(g, 0.5, 21, 0.1);
  auto run = [&](double dt) {
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 1.0;
    cfg.rk_order = order;
    return evolve(g, s0, cfg, 1000000).final_state;
  };
  // the second-order scheme needs smaller steps to leave the preasymptotic range
  const double h0 = order == 2 ? 1.0 / 16 : 1.0 / 8;
  const std::vector<double> dts{h0, h0 / 2, h0 / 4};
  const State ref = run(dts.back() / 8);
  std::vector<double> err;
  for (double dt : dts) {
    const State s = run(dt);
    err.push_back(std::sqrt(l2_norm_sq(*g, s.u - ref.u) + l2_norm_sq(*g, s.b - ref.b)));
  }
  const double slope = std::log2(err[0] / err[2]) / 2.0;
  EXPECT_NEAR(slope, order, 0.3) << err[0] << " " << err[1] << " " << err[2];
}

INSTANTIATE_TEST_SUITE_P(Orders, StepOrder, ::testing::Values(2, 3));

TEST(Evolve, ZeroEndTimeReturnsInitialState) {
  auto g = cube(8, 9);
  const State s = random_state(g, 0.1, 2);
  SolverConfig cfg;
  cfg.t_end = 0.0;
  int calls = 0;
  const auto tr = evolve(g, s, cfg, 1, [&](const State&, std::size_t) { ++calls; });
  EXPECT_EQ(tr.steps, 0u);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(max_coeff_diff(tr.final_state.u[0], s.u[0]), 0.0);
  EXPECT_EQ(tr.final_state.t, 0.0);
}

TEST(Evolve, ObserverCadenceAndDeterminism) {
  auto g = cube(8, 9);
  const State s = random_state(g, 0.2, 4);
  SolverConfig cfg;
  cfg.dt = 0.05;
  cfg.t_end = 0.5;
  std::vector<std::size_t> seen;
  const auto a = evolve(g, s, cfg, 3, [&](const State&, std::size_t n) { seen.push_back(n); });
  EXPECT_EQ(a.steps, 10u);
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 3, 6, 9, 10}));
  EXPECT_DOUBLE_EQ(a.final_state.t, 0.5);
  const auto b = evolve(g, s, cfg, 3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(max_coeff_diff(a.final_state.u[i], b.final_state.u[i]), 0.0);
    EXPECT_EQ(max_coeff_diff(a.final_state.b[i], b.final_state.b[i]), 0.0);
  }
  EXPECT_THROW(evolve(g, s, cfg, 0), Error);
}

TEST(Evolve, EpsZeroSystemIsTheLimitSystem) {
  // With eps = 0 the propagator reduces to the limit operator: no d2/d3
  // velocity damping and no vertical resistivity.
  auto g = cube(8, 9);
  const State s = random_state(g, 0.2, 5, 0.0);
  SolverConfig cfg;
  cfg.dt = 0.05;
  cfg.t_end = 0.5;
  const auto a = evolve(g, s, cfg, 100).final_state;
  State s2 = s;
  s2.eps = -0.0;
  const auto b = evolve(g, s2, cfg, 100).final_state;
  for (int i = 0; i < 3; ++i) EXPECT_LE(max_coeff_diff(a.u[i], b.u[i]), 1e-13);
  const auto m = LinearModeMatrix::at(1.5, 2.0, 3.0, 0.0);
  EXPECT_EQ(m.nu_u, 2.25);
  EXPECT_EQ(m.nu_b, 6.25);
}

TEST(Evolve, EnergyNonincreasingAndSolenoidal) {
  auto g = cube(16, 9);
  const State s = random_state(g, 0.05, 8, 0.01);
  SolverConfig cfg;
  cfg.dt = 0.02;
  cfg.t_end = 4.0;
  double last = l2_energy(*g, s);
  double worst_div = 0;
  evolve(g, s, cfg, 1, [&](const State& st, std::size_t n) {
    const double e = l2_energy(*g, st);
    if (n > 0) EXPECT_LE(e, last * (1 + 1e-14)) << n;
    last = e;
    const double du = std::sqrt(l2_norm_sq(*g, divergence(*g, st.u)) / l2_norm_sq(*g, st.u));
    const double db = std::sqrt(l2_norm_sq(*g, divergence(*g, st.b)) / l2_norm_sq(*g, st.b));
    worst_div = std::max({worst_div, du, db});
    EXPECT_EQ(evaluate(*g, st.u[2], 0.3, 1.1, 0.0), 0.0);
    EXPECT_NEAR(evaluate(*g, st.b[2], 0.3, 1.1, g->l3()), 0.0, 1e-14);
  });
  EXPECT_LT(worst_div, 1e-10);
}

TEST(Evolve, HorizontalMeanRetainedOnlyWhenRequested) {
  auto g = cube(8, 9);
  State s = State::zeros(*g, 0.1);
  const auto mean_mode = sample(*g, [](double, double, double x3) { return std::cos(x3); });
  s.u[0] = to_spectral(*g, mean_mode, VerticalBasis::Cosine);
  SolverConfig cfg;
  cfg.dt = 0.1;
  cfg.t_end = 1.0;
  const auto cleared = evolve(g, s, cfg, 100).final_state;
  EXPECT_EQ(l2_norm_sq(*g, cleared.u), 0.0);
  cfg.zero_horizontal_mean = false;
  const auto kept = evolve(g, s, cfg, 100).final_state;
  // slow O(eps) decay of the column mode: kappa = 1
  EXPECT_NEAR(std::sqrt(l2_norm_sq(*g, kept.u) / l2_norm_sq(*g, s.u)), std::exp(-0.1), 1e-12);
}

TEST(Evolve, EpsDifferencesShrinkMonotonically) {
  auto g = cube(16, 9);
  const State s0 = random_state(g, 0.3, 12);
  SolverConfig cfg;
  cfg.dt = 0.025;
  cfg.t_end = 1.0;
  auto run = [&](double eps) {
    State s = s0;
    s.eps = eps;
    return evolve(g, s, cfg, 1000).final_state;
  };
  const State lim = run(0.0);
  double prev = 1e300;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const State s = run(eps);
    const double d = std::sqrt(l2_norm_sq(*g, s.u - lim.u) + l2_norm_sq(*g, s.b - lim.b));
    EXPECT_LT(d, prev) << eps;
    EXPECT_GT(d, 0.0);
    prev = d;
  }
}

TEST(Pressure, ZeroStateGivesZero) {
  auto g = cube(8, 9);
  EXPECT_EQ(l2_norm_sq(*g, recover_pressure(*g, State::zeros(*g))), 0.0);
}

TEST(Pressure, GradientIsTheGradientPartOfTheRhs) {
  auto g = cube(12, 9);
  const State s = random_state(g, 1.0, 31, 0.1);
  const auto p = recover_pressure(*g, s);
  SpectralVectorField r = momentum_advection(*g, s);
  for (int i = 0; i < 3; ++i) r[i] += derivative(*g, s.b[i], 2);
  const auto grad_part = r - leray_project(*g, r);
  EXPECT_LT(rel_diff(*g, gradient(*g, p), grad_part), 1e-10);
  EXPECT_LT(std::abs(p(0, 0, 0)), 1e-15);
}

TEST(Pressure, TaylorGreenVortex) {
  auto g = cube(8, 9);
  State s = State::zeros(*g);
  std::array<PhysicalField, 3> u{
      sample(*g, [](double x1, double x2, double) { return std::sin(x1) * std::cos(x2); }),
      sample(*g, [](double x1, double x2, double) { return -std::cos(x1) * std::sin(x2); }),
      PhysicalField(g->size(), 0.0)};
  s.u = from_physical(*g, u);
  const auto p = recover_pressure(*g, s);
  const auto want = to_spectral(
      *g, sample(*g, [](double x1, double x2, double) { return 0.25 * (std::cos(2 * x1) + std::cos(2 * x2)); }),
      VerticalBasis::Cosine);
  EXPECT_LT(max_coeff_diff(p, want), 1e-14);
}

TEST(EnergyBalance, ZeroFieldGivesZero) {
  std::vector<BalanceSample> w{{0, 0, 0}, {0.5, 0, 0}, {1, 0, 0}};
  EXPECT_EQ(energy_balance_residual(w), 0.0);
}

TEST(EnergyBalance, RequiresTwoSamplesSpanningTime) {
  std::vector<BalanceSample> one{{0, 1, 1}};
  EXPECT_THROW(energy_balance_residual(one), Error);
  std::vector<BalanceSample> flat{{1, 1, 1}, {1, 1, 1}};
  EXPECT_THROW(energy_balance_residual(flat), Error);
}

TEST(EnergyBalance, LinearSingleModeIsExact) {
  auto g = cube(8, 9);
  State s = State::zeros(*g, 0.1);
  std::array<PhysicalField, 3> u{sample(*g, [](double, double x2, double x3) { return std::cos(x2) * std::cos(x3); }),
                                 PhysicalField(g->size(), 0.0), PhysicalField(g->size(), 0.0)};
  s.u = from_physical(*g, u);
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 1.0;
  cfg.nonlinear = false;
  std::vector<BalanceSample> w;
  evolve(g, s, cfg, 1, [&](const State& st, std::size_t) {
    w.push_back({st.t, l2_energy(*g, st), l2_dissipation(*g, st)});
  });
  ASSERT_EQ(w.size(), 1001u);
  EXPECT_LT(energy_balance_residual(w), 1e-10);
}

TEST(EnergyBalance, NonlinearResidualConvergesAtThirdOrder) {
  // band-limited data keeps the quadrature error of the stiff linear decay
  // below the integrator's own energy defect
  auto g = cube(16, 9);
  InitialDataSpec spec;
  spec.amplitude = 1e3;
  const State s0 = gen_initial_data(spec, *g, {}, 0.01);
  auto residual = [&](double dt) {
    SolverConfig cfg;
    cfg.dt = dt;
    cfg.t_end = 1.0;
    std::vector<BalanceSample> w;
    evolve(g, s0, cfg, 1, [&](const State& st, std::size_t) {
      w.push_back({st.t, l2_energy(*g, st), l2_dissipation(*g, st)});
    });
    return energy_balance_residual(w);
  };
  const double r1 = residual(1.0 / 16), r2 = residual(1.0 / 32), r3 = residual(1.0 / 64);
  const double slope = std::log2(r1 / r3) / 2.0;
  EXPECT_NEAR(slope, 3.0, 0.3) << r1 << " " << r2 << " " << r3;
}
