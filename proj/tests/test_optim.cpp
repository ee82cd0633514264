#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "splitkl/optim.hpp"

using namespace splitkl;

namespace {

void expect_vec_near(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "index " << i;
}

}  // namespace

TEST(ProjectSimplex, Examples) {
  expect_vec_near(project_simplex(std::vector<double>{0.5, 0.5}), {0.5, 0.5}, 1e-15);
  expect_vec_near(project_simplex(std::vector<double>{2.0, 0.0}), {1.0, 0.0}, 1e-15);
  expect_vec_near(project_simplex(std::vector<double>{0.3, 0.3, 0.3}), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
  expect_vec_near(project_simplex(std::vector<double>{-5.0}), {1.0}, 0.0);
  EXPECT_THROW(project_simplex(std::vector<double>{}), std::invalid_argument);
}

TEST(ProjectSimplex, MatchesBisectionOracle) {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> v(1 + t % 12);
    for (auto& x : v) x = nd(gen);
    const auto p = project_simplex(v);
    double total = 0;
    for (double x : p) {
      EXPECT_GE(x, 0.0);
      total += x;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    expect_vec_near(p, oracle::project_simplex(v), 1e-12);
    expect_vec_near(project_simplex(p), p, 1e-12);  // idempotent
  }
}

TEST(Irprop, QuadraticOnSegmentReachesProjection) {
  const std::vector<double> c{0.9, 0.4};  // projects to (0.75, 0.25)
  auto obj = [&](std::span<const double> x) { return (x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]); };
  auto grad = [&](std::span<const double> x, std::span<double> g) {
    g[0] = 2 * (x[0] - c[0]);
    g[1] = 2 * (x[1] - c[1]);
  };
  const std::vector<double> init{0.1, 0.9};
  const auto r = irprop_plus(grad, obj, init);
  EXPECT_NEAR(r.point[0], 0.75, 1e-6);
  EXPECT_NEAR(r.point[1], 0.25, 1e-6);
  EXPECT_LE(r.value, obj(init));
}

TEST(Irprop, ZeroGradientReturnsInit) {
  auto obj = [](std::span<const double>) { return 1.0; };
  auto grad = [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
  const std::vector<double> init{0.2, 0.3, 0.5};
  const auto r = irprop_plus(grad, obj, init);
  EXPECT_EQ(r.point, init);
  EXPECT_EQ(r.value, 1.0);
}

TEST(Irprop, NonFiniteGradientThrows) {
  auto obj = [](std::span<const double> x) { return x[0]; };
  auto grad = [](std::span<const double>, std::span<double> g) { g[0] = NAN, g[1] = 0.0; };
  EXPECT_THROW(irprop_plus(grad, obj, std::vector<double>{0.5, 0.5}), std::domain_error);
}

TEST(Irprop, ConvexQuadraticOnThreeSimplexMatchesGrid) {
  std::mt19937_64 gen(32);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    // f(x) = x^T A x + b^T x with A = B^T B + 0.1 I.
    double bm[3][3], a[3][3], b[3];
    for (auto& row : bm)
      for (double& x : row) x = u(gen);
    for (int i = 0; i < 3; ++i) {
      b[i] = u(gen);
      for (int j = 0; j < 3; ++j) {
        a[i][j] = (i == j) ? 0.1 : 0.0;
        for (int k = 0; k < 3; ++k) a[i][j] += bm[k][i] * bm[k][j];
      }
    }
    auto obj = [&](std::span<const double> x) {
      double v = 0;
      for (int i = 0; i < 3; ++i) {
        v += b[i] * x[i];
        for (int j = 0; j < 3; ++j) v += x[i] * a[i][j] * x[j];
      }
      return v;
    };
    auto grad = [&](std::span<const double> x, std::span<double> g) {
      for (int i = 0; i < 3; ++i) {
        g[i] = b[i];
        for (int j = 0; j < 3; ++j) g[i] += 2 * a[i][j] * x[j];
      }
    };
    double grid_best = 1e300;
    const int steps = 1000;
    for (int i = 0; i <= steps; ++i)
      for (int j = 0; i + j <= steps; ++j) {
        const double x[3] = {double(i) / steps, double(j) / steps, double(steps - i - j) / steps};
        grid_best = std::min(grid_best, obj(std::span<const double>(x, 3)));
      }
    const auto r = irprop_plus(grad, obj, std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3});
    EXPECT_LE(r.value, grid_best + 1e-4) << "instance " << t;
  }
}

TEST(Irprop, NeverWorseThanInit) {
  std::mt19937_64 gen(33);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> c(5), init(5);
    double s = 0;
    for (auto& x : c) x = u(gen);
    for (auto& x : init) s += x = u(gen);
    for (auto& x : init) x /= s;
    // Non-convex: sum of sin terms.
    auto obj = [&](std::span<const double> x) {
      double v = 0;
      for (std::size_t i = 0; i < 5; ++i) v += std::sin(7 * x[i] + c[i]);
      return v;
    };
    auto grad = [&](std::span<const double> x, std::span<double> g) {
      for (std::size_t i = 0; i < 5; ++i) g[i] = 7 * std::cos(7 * x[i] + c[i]);
    };
    const auto r = irprop_plus(grad, obj, init);
    EXPECT_LE(r.value, obj(init));
    EXPECT_EQ(r.value, obj(r.point));
    EXPECT_LE(r.iterations, 1000u);
  }
}
