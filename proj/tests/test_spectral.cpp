#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mhdslab/error.hpp"
#include "mhdslab/spectral.hpp"
#include "test_util.hpp"

using namespace mhdslab;
using namespace mhdslab::testing;
using std::numbers::pi;

namespace {

GridPtr cube(int n, int n3, double l = 2 * pi) {
  return plan_grid({n, n, n3, l, l, l, 2.0 / 3.0});
}

// Coefficients by explicit quadrature of the basis inner products.
Complex quadrature_coefficient(const Grid& g, const PhysicalField& p, VerticalBasis basis, int i1,
                               int i2, int j) {
  const int m = g.m3();
  Complex acc = 0.0;
  for (int a = 0; a < g.n1(); ++a)
    for (int b = 0; b < g.n2(); ++b) {
      const Complex phase = std::polar(1.0, -(g.k1(i1) * g.x1(a) + g.k2(i2) * g.x2(b)));
      double v = 0.0;
      for (int l = 0; l <= m; ++l) {
        const double f = p[g.index(a, b, l)];
        if (basis == VerticalBasis::Cosine) {
          const double w = (l == 0 || l == m) ? 0.5 : 1.0;
          v += w * f * std::cos(pi * j * l / m);
        } else {
          v += f * std::sin(pi * j * l / m);
        }
      }
      // interior modes have squared norm M/2 on the nodes, wall cosines M
      v *= (basis == VerticalBasis::Cosine && (j == 0 || j == m)) ? 1.0 / m : 2.0 / m;
      acc += phase * v;
    }
  return acc / double(g.n1() * g.n2());
}

}  // namespace

TEST(PlanGrid, WavenumberTables) {
  auto g = cube(8, 9);
  for (int i = 0; i < 8; ++i) {
    const int expect = i < 4 ? i : i - 8;
    EXPECT_EQ(g->mode1(i), expect);
    EXPECT_DOUBLE_EQ(g->k1(i), expect);
  }
  EXPECT_EQ(g->n3(), 9);
  EXPECT_EQ(g->m3(), 8);
}

TEST(PlanGrid, RejectsOddHorizontalCount) {
  try {
    plan_grid({7, 8, 9, 1, 1, 1, 2.0 / 3.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidSpec);
  }
  EXPECT_THROW(plan_grid({8, 8, 3, 1, 1, 1, 2.0 / 3.0}), Error);
  EXPECT_THROW(plan_grid({8, 8, 9, 0, 1, 1, 2.0 / 3.0}), Error);
  EXPECT_THROW(plan_grid({8, 8, 9, 1, 1, 1, 0.0}), Error);
}

TEST(PlanGrid, LargeBoxSmallestWavenumber) {
  auto g = plan_grid({64, 64, 33, 16 * pi, 16 * pi, 2 * pi, 2.0 / 3.0});
  EXPECT_NEAR(g->min_horizontal_wavenumber(), 0.125, 1e-15);
  EXPECT_NEAR(g->k1(1), 0.125, 1e-15);
}

TEST(Transforms, ConstantCosineIsSingleMode) {
  auto g = cube(8, 9);
  auto f = to_spectral(*g, PhysicalField(g->size(), 3.5), VerticalBasis::Cosine);
  for (int i1 = 0; i1 < 8; ++i1)
    for (int i2 = 0; i2 < 8; ++i2)
      for (int j = 0; j < 9; ++j) {
        const Complex expect = (i1 == 0 && i2 == 0 && j == 0) ? 3.5 : 0.0;
        EXPECT_NEAR(std::abs(f(i1, i2, j) - expect), 0.0, 1e-14);
      }
}

TEST(Transforms, SineProfileIsSingleMode) {
  auto g = plan_grid({8, 8, 9, 2 * pi, 2 * pi, 3.0, 2.0 / 3.0});
  const double l3 = g->l3();
  auto f = to_spectral(*g, sample(*g, [&](double, double, double z) { return std::sin(pi * z / l3); }),
                       VerticalBasis::Sine);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Complex expect = (i == f.index(0, 0, 1)) ? 1.0 : 0.0;
    EXPECT_NEAR(std::abs(f.data()[i] - expect), 0.0, 1e-14);
  }
}

TEST(Transforms, MatchQuadratureOracle) {
  std::mt19937_64 rng(7);
  for (int n3 : {4, 5, 8}) {
    auto g = plan_grid({4, 6, n3, 2.0, 3.0, 1.5, 2.0 / 3.0});
    for (auto basis : {VerticalBasis::Cosine, VerticalBasis::Sine}) {
      auto f = random_field(*g, basis, rng, false);
      const auto p = to_physical(*g, f);
      for (int i1 = 0; i1 < g->n1(); ++i1)
        for (int i2 = 0; i2 < g->n2(); ++i2)
          for (int j = 0; j < n3; ++j)
            EXPECT_NEAR(std::abs(f(i1, i2, j) - quadrature_coefficient(*g, p, basis, i1, i2, j)),
                        0.0, 1e-13);
    }
  }
}

TEST(Transforms, RandomRoundTrip) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  auto g = plan_grid({16, 12, 9, 2.0, 5.0, 1.0, 2.0 / 3.0});
  for (auto basis : {VerticalBasis::Cosine, VerticalBasis::Sine}) {
    PhysicalField p(g->size());
    for (auto& v : p) v = n01(rng);
    if (basis == VerticalBasis::Sine)
      for (std::size_t c = 0; c < g->columns(); ++c) p[c * 9] = p[c * 9 + 8] = 0.0;
    const auto back = to_physical(*g, to_spectral(*g, p, basis));
    double num = 0, den = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      num += (back[i] - p[i]) * (back[i] - p[i]);
      den += p[i] * p[i];
    }
    EXPECT_LE(std::sqrt(num / den), 1e-12);
  }
}

TEST(Transforms, ShapeMismatchRejected) {
  auto g = cube(8, 9);
  PhysicalField wrong(10);
  try {
    to_spectral(*g, wrong, VerticalBasis::Cosine);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(Transforms, Linearity) {
  std::mt19937_64 rng(3);
  auto g = cube(8, 9);
  std::normal_distribution<double> n01;
  PhysicalField a(g->size()), b(g->size()), c(g->size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = n01(rng);
    b[i] = n01(rng);
    c[i] = 2.0 * a[i] - 0.5 * b[i];
  }
  auto fa = to_spectral(*g, a, VerticalBasis::Cosine);
  auto fb = to_spectral(*g, b, VerticalBasis::Cosine);
  auto fc = to_spectral(*g, c, VerticalBasis::Cosine);
  EXPECT_LE(max_coeff_diff(fc, 2.0 * fa - Complex(0.5) * fb), 1e-14);
}

TEST(Derivative, VerticalCosineToSine) {
  auto g = plan_grid({8, 8, 9, 2 * pi, 2 * pi, 2.5, 2.0 / 3.0});
  const double l3 = g->l3();
  auto f = to_spectral(*g, sample(*g, [&](double, double, double z) { return std::cos(pi * z / l3); }),
                       VerticalBasis::Cosine);
  auto d = derivative(*g, f, 3);
  EXPECT_EQ(d.basis(), VerticalBasis::Sine);
  auto expect = to_spectral(
      *g, sample(*g, [&](double, double, double z) { return -(pi / l3) * std::sin(pi * z / l3); }),
      VerticalBasis::Sine);
  EXPECT_LE(max_coeff_diff(d, expect), 1e-14);
  EXPECT_EQ(derivative(*g, d, 3).basis(), VerticalBasis::Cosine);
}

TEST(Derivative, HorizontalComplexExponential) {
  // d/dx1 of cos x1 + i-phase: test on the real pair cos/sin.
  auto g = cube(8, 5);
  auto c = to_spectral(*g, sample(*g, [](double x, double, double) { return std::cos(x); }),
                       VerticalBasis::Cosine);
  auto s = to_spectral(*g, sample(*g, [](double x, double, double) { return std::sin(x); }),
                       VerticalBasis::Cosine);
  // d(cos + i sin) = i (cos + i sin)  <=>  d cos = -sin, d sin = cos
  EXPECT_LE(max_coeff_diff(derivative(*g, c, 1), Complex(-1.0) * s), 1e-14);
  EXPECT_LE(max_coeff_diff(derivative(*g, s, 1), c), 1e-14);
  EXPECT_NEAR(std::abs(c(1, 0, 0) - 0.5), 0.0, 1e-15);
  auto dc = derivative(*g, c, 1);
  EXPECT_NEAR(std::abs(dc(1, 0, 0) - Complex(0, 0.5)), 0.0, 1e-15);
}

TEST(Derivative, SecondDerivativeMatchesMultiplier) {
  std::mt19937_64 rng(5);
  auto g = plan_grid({16, 16, 9, 3.0, 4.0, 1.0, 2.0 / 3.0});
  auto f = random_field(*g, VerticalBasis::Cosine, rng);
  auto twice = derivative(*g, derivative(*g, f, 2), 2);
  SpectralField mult = f;
  for (int i1 = 0; i1 < 16; ++i1)
    for (int i2 = 0; i2 < 16; ++i2)
      for (int j = 0; j < 9; ++j) mult(i1, i2, j) *= -g->kd2(i2) * g->kd2(i2);
  EXPECT_LE(rel_diff(*g, twice, mult), 1e-13);
}

TEST(Leray, GradientIsAnnihilated) {
  std::mt19937_64 rng(9);
  auto g = plan_grid({16, 16, 9, 2.0, 3.0, 1.0, 2.0 / 3.0});
  auto p = random_field(*g, VerticalBasis::Cosine, rng);
  auto grad = gradient(*g, p);
  auto proj = leray_project(*g, grad);
  EXPECT_LE(std::sqrt(l2_norm_sq(*g, proj)), 1e-13 * std::sqrt(l2_norm_sq(*g, grad)));
}

TEST(Leray, DivergenceFreeInputUnchanged) {
  std::mt19937_64 rng(10);
  auto g = cube(16, 9);
  auto v = random_solenoidal(*g, rng, false);
  EXPECT_LE(rel_diff(*g, leray_project(*g, v), v), 1e-13);
}

TEST(Leray, IdempotentContractionDivergenceFree) {
  std::mt19937_64 rng(12);
  auto g = plan_grid({16, 12, 9, 5.0, 3.0, 2.0, 2.0 / 3.0});
  for (int trial = 0; trial < 20; ++trial) {
    auto v = random_vector(*g, rng);
    auto once = leray_project(*g, v);
    auto twice = leray_project(*g, once);
    EXPECT_LE(rel_diff(*g, twice, once), 1e-13);
    EXPECT_LE(l2_norm_sq(*g, once), l2_norm_sq(*g, v) * (1 + 1e-14));
    // Orthogonality of the removed part.
    auto removed = v - once;
    double ip = 0;
    for (int i = 0; i < 3; ++i) ip += inner_product(*g, removed[i], once[i]);
    EXPECT_LE(std::abs(ip), 1e-12 * l2_norm_sq(*g, v));
    EXPECT_LE(max_abs_physical(*g, divergence(*g, once)), 1e-10 * rms(*g, once));
    EXPECT_EQ(once[2].basis(), VerticalBasis::Sine);
  }
}

TEST(Leray, CommutesWithHorizontalDerivative) {
  std::mt19937_64 rng(13);
  auto g = cube(16, 9);
  auto v = random_solenoidal(*g, rng);
  for (int axis : {1, 2}) {
    SpectralVectorField dv{{derivative(*g, v[0], axis), derivative(*g, v[1], axis),
                            derivative(*g, v[2], axis)}};
    auto pv = leray_project(*g, v);
    SpectralVectorField dpv{{derivative(*g, pv[0], axis), derivative(*g, pv[1], axis),
                             derivative(*g, pv[2], axis)}};
    EXPECT_LE(rel_diff(*g, leray_project(*g, dv), dpv), 1e-13);
  }
}

TEST(LambdaH, ZeroExponentIsIdentity) {
  std::mt19937_64 rng(14);
  auto g = cube(8, 5);
  auto f = random_field(*g, VerticalBasis::Cosine, rng);
  remove_horizontal_mean(*g, f);
  EXPECT_LE(max_coeff_diff(lambda_h_pow(*g, f, 0.0), f), 0.0);
}

TEST(LambdaH, SingleModeScaling) {
  auto g = cube(8, 5);
  auto f = to_spectral(*g, sample(*g, [](double x, double, double) { return std::cos(2 * x); }),
                       VerticalBasis::Cosine);
  auto l = lambda_h_pow(*g, f, -0.95);
  EXPECT_NEAR(std::abs(l(2, 0, 0)), 0.5 * std::pow(2.0, -0.95), 1e-15);
}

TEST(LambdaH, InverseOnZeroMeanFields) {
  std::mt19937_64 rng(15);
  auto g = plan_grid({16, 16, 9, 16 * pi, 16 * pi, 2 * pi, 2.0 / 3.0});
  auto f = random_field(*g, VerticalBasis::Sine, rng);
  remove_horizontal_mean(*g, f);
  for (double s : {0.5, 0.95, 1.7})
    EXPECT_LE(rel_diff(*g, lambda_h_pow(*g, lambda_h_pow(*g, f, s), -s), f), 1e-12);
  // Negative exponent zeroes the horizontal mean column.
  auto h = random_field(*g, VerticalBasis::Cosine, rng);
  auto l = lambda_h_pow(*g, h, -0.5);
  for (int j = 0; j < 9; ++j) EXPECT_EQ(l(0, 0, j), Complex{});
}

TEST(LambdaH, NegativePowerBound) {
  std::mt19937_64 rng(16);
  auto g = plan_grid({16, 16, 9, 16 * pi, 8 * pi, 2 * pi, 2.0 / 3.0});
  const double kmin = g->min_horizontal_wavenumber();
  for (int t = 0; t < 10; ++t) {
    auto f = random_field(*g, VerticalBasis::Cosine, rng);
    remove_horizontal_mean(*g, f);
    const double s = 0.95;
    EXPECT_LE(std::sqrt(l2_norm_sq(*g, lambda_h_pow(*g, f, -s))),
              std::pow(kmin, -s) * std::sqrt(l2_norm_sq(*g, f)) * (1 + 1e-14));
  }
}

TEST(Dealias, MaskBehaviour) {
  std::mt19937_64 rng(17);
  auto g = cube(12, 13);
  // 2/3 rule: retain |n| < N/3 horizontally, j < 2M/3 vertically.
  EXPECT_TRUE(g->retained1(3));
  EXPECT_FALSE(g->retained1(4));
  EXPECT_FALSE(g->retained1(12 - 4));
  EXPECT_TRUE(g->retained1(12 - 3));
  EXPECT_EQ(g->retained3_count(), 8);

  auto f = random_field(*g, VerticalBasis::Cosine, rng, false);
  auto d = dealias(*g, f);
  EXPECT_LE(l2_norm_sq(*g, d), l2_norm_sq(*g, f));
  EXPECT_LE(max_coeff_diff(dealias(*g, d), d), 0.0);
  EXPECT_EQ(d(4, 0, 0), Complex{});
  EXPECT_EQ(d(0, 0, 8), Complex{});
  EXPECT_EQ(d(3, 0, 7), f(3, 0, 7));
}

TEST(Parseval, EveryBasis) {
  std::mt19937_64 rng(18);
  auto g = plan_grid({12, 10, 9, 2.0, 3.0, 1.7, 2.0 / 3.0});
  for (auto basis : {VerticalBasis::Cosine, VerticalBasis::Sine}) {
    auto f = random_field(*g, basis, rng, false);
    // drop the vertical Nyquist cosine, which the trapezoid rule weights differently
    for (std::size_t c = 0; c < g->columns(); ++c) f.data()[c * 9 + 8] = 0.0;
    const auto p = to_physical(*g, f);
    double quad = 0;
    const double dv = g->l1() / g->n1() * g->l2() / g->n2() * g->l3() / g->m3();
    for (int i1 = 0; i1 < g->n1(); ++i1)
      for (int i2 = 0; i2 < g->n2(); ++i2)
        for (int j = 0; j <= g->m3(); ++j) {
          const double w = (j == 0 || j == g->m3()) ? 0.5 : 1.0;
          quad += w * dv * p[g->index(i1, i2, j)] * p[g->index(i1, i2, j)];
        }
    EXPECT_NEAR(l2_norm_sq(*g, f) / quad, 1.0, 1e-12);
  }
}

TEST(BoundaryTraces, VanishForMandatedBases) {
  std::mt19937_64 rng(19);
  auto g = plan_grid({8, 8, 9, 2.0, 2.0, 1.3, 2.0 / 3.0});
  auto v = random_solenoidal(*g, rng);
  const double scale = rms(*g, v);
  auto d3u1 = derivative(*g, v[0], 3), d3u2 = derivative(*g, v[1], 3);
  for (double x3 : {0.0, g->l3()})
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        const double x1 = 0.37 * a, x2 = 0.29 * b;
        EXPECT_LE(std::abs(evaluate(*g, v[2], x1, x2, x3)), 1e-12 * scale);
        EXPECT_LE(std::abs(evaluate(*g, d3u1, x1, x2, x3)), 1e-12 * scale);
        EXPECT_LE(std::abs(evaluate(*g, d3u2, x1, x2, x3)), 1e-12 * scale);
      }
}
