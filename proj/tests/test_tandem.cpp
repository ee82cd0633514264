#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "splitkl/tandem.hpp"

using namespace splitkl;

namespace {

PredictionLossMatrix random_plm(std::mt19937_64& gen, std::size_t h, std::size_t n, double oob_rate) {
  std::bernoulli_distribution err(0.3), in(oob_rate);
  PredictionLossMatrix plm(h, n);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      plm.loss(i, j) = err(gen);
      plm.oob(i, j) = in(gen);
    }
  return plm;
}

}  // namespace

TEST(TandemStats, IdenticalHypotheses) {
  PredictionLossMatrix plm(2, 10);
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t i = 0; i < 3; ++i) plm.loss(h, i) = 1;
  const auto ts = compute_tandem_stats(plm);
  EXPECT_EQ(ts.single_loss, (std::vector<double>{0.3, 0.3}));
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) EXPECT_DOUBLE_EQ(ts.tandem_loss(a, b), 0.3);
  EXPECT_EQ(ts.n, 10u);
  EXPECT_EQ(ts.m, 10u);
}

TEST(TandemStats, JointErrors) {
  PredictionLossMatrix plm(2, 10);
  plm.loss(0, 1) = plm.loss(0, 2) = 1;
  plm.loss(1, 2) = plm.loss(1, 3) = 1;
  const auto ts = compute_tandem_stats(plm);
  EXPECT_DOUBLE_EQ(ts.tandem_loss(0, 1), 0.1);
  EXPECT_DOUBLE_EQ(ts.tandem_loss(1, 0), 0.1);
  EXPECT_DOUBLE_EQ(ts.single_loss[0], 0.2);
}

TEST(TandemStats, PartialMasks) {
  PredictionLossMatrix plm(2, 8);
  // h0 out-of-bag on 0..5, h1 on 2..7: overlap {2,3,4,5}.
  for (std::size_t i = 0; i < 8; ++i) {
    plm.oob(0, i) = i <= 5;
    plm.oob(1, i) = i >= 2;
  }
  plm.loss(0, 0) = 1;  // only h0's own set
  plm.loss(0, 3) = plm.loss(1, 3) = 1;
  plm.loss(1, 4) = 1;
  plm.loss(1, 7) = 1;
  const auto ts = compute_tandem_stats(plm);
  EXPECT_EQ(ts.m, 4u);
  EXPECT_EQ(ts.n, 6u);
  EXPECT_DOUBLE_EQ(ts.tandem_loss(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(ts.single_loss[0], 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(ts.single_loss[1], 3.0 / 6.0);
}

TEST(TandemStats, EmptyOverlapReportsPair) {
  PredictionLossMatrix plm(3, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    plm.oob(1, i) = i < 2;
    plm.oob(2, i) = i >= 2;
  }
  try {
    compute_tandem_stats(plm);
    FAIL() << "expected EmptyOverlapError";
  } catch (const EmptyOverlapError& e) {
    EXPECT_EQ(e.first(), 1u);
    EXPECT_EQ(e.second(), 2u);
  }
}

TEST(TandemStats, InvariantsOnRandomInput) {
  std::mt19937_64 gen(21);
  for (int t = 0; t < 20; ++t) {
    const auto plm = random_plm(gen, 2 + t % 6, 200, 0.5);
    const auto ts = compute_tandem_stats(plm);
    for (std::size_t a = 0; a < ts.hypotheses(); ++a) {
      EXPECT_EQ(ts.tandem_loss(a, a), ts.single_loss[a]);
      for (std::size_t b = 0; b < ts.hypotheses(); ++b) {
        EXPECT_EQ(ts.tandem_loss(a, b), ts.tandem_loss(b, a));
        EXPECT_GE(ts.tandem_loss(a, b), 0.0);
        EXPECT_LE(ts.tandem_loss(a, b), 1.0);
      }
    }
  }
}

TEST(AlphaStats, ZeroCollapses) {
  std::mt19937_64 gen(22);
  const auto plm = random_plm(gen, 4, 300, 0.6);
  const auto ts = compute_tandem_stats(plm);
  const auto as = alpha_stats(ts, 0.0);
  EXPECT_EQ(as.range.lo, 0.0);
  EXPECT_EQ(as.range.mid, 0.0);
  EXPECT_EQ(as.range.hi, 1.0);
  EXPECT_EQ(as.plus, ts.tandem_loss);
  EXPECT_EQ(as.mean, ts.tandem_loss);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) EXPECT_EQ(as.minus(a, b), 0.0);
}

TEST(AlphaStats, RangeAndBoundary) {
  EXPECT_THROW(alpha_stats(PredictionLossMatrix(2, 3), 0.5), std::domain_error);
  EXPECT_THROW(alpha_stats(PredictionLossMatrix(2, 3), -0.6), std::domain_error);
  PredictionLossMatrix all_wrong(2, 5);
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t i = 0; i < 5; ++i) all_wrong.loss(h, i) = 1;
  const auto as = alpha_stats(all_wrong, -0.5);
  EXPECT_DOUBLE_EQ(as.mean(0, 1), 2.25);
  EXPECT_DOUBLE_EQ(as.range.hi, 2.25);
  EXPECT_DOUBLE_EQ(as.range.lo, 0.25);
  EXPECT_DOUBLE_EQ(as.range.mid, -(-0.5) * 1.5 * -1.0 * -1.0);
  EXPECT_DOUBLE_EQ(as.range.width, 2.0);
  const auto pos = alpha_range(0.3);
  EXPECT_DOUBLE_EQ(pos.lo, -0.3 * 0.7);
  EXPECT_DOUBLE_EQ(pos.mid, 0.09);
  EXPECT_DOUBLE_EQ(pos.hi, 0.49);
  EXPECT_DOUBLE_EQ(pos.width, 0.7);
}

TEST(AlphaStats, MatchesDirectEnumeration) {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> ua(-0.5, 0.49);
  for (int t = 0; t < 20; ++t) {
    const auto plm = random_plm(gen, 3, 60, 0.6);
    const double alpha = ua(gen);
    const auto as = alpha_stats(plm, alpha);
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b) {
        std::vector<double> vals;
        for (std::size_t i = 0; i < 60; ++i)
          if (plm.oob(a, i) && plm.oob(b, i)) vals.push_back((plm.loss(a, i) - alpha) * (plm.loss(b, i) - alpha));
        double mean = 0, sq = 0, plus = 0, minus = 0;
        for (double v : vals) {
          mean += v;
          sq += v * v;
          plus += std::max(0.0, v - as.range.mid);
          minus += std::max(0.0, as.range.mid - v);
        }
        const double k = static_cast<double>(vals.size());
        mean /= k;
        double var = 0;
        for (double v : vals) var += (v - mean) * (v - mean);
        EXPECT_NEAR(as.mean(a, b), mean, 1e-12);
        EXPECT_NEAR(as.second_moment(a, b), sq / k, 1e-12);
        EXPECT_NEAR(as.variance(a, b), var / (k - 1), 1e-12);
        EXPECT_NEAR(as.plus(a, b), plus / k, 1e-12);
        EXPECT_NEAR(as.minus(a, b), minus / k, 1e-12);
        EXPECT_NEAR(as.range.mid + as.plus(a, b) - as.minus(a, b), as.mean(a, b), 1e-12);
      }
  }
}

TEST(QuadForm, MatchesDoubleSum) {
  std::mt19937_64 gen(24);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t h = 1; h <= 10; ++h) {
    Matrix<double> m(h, h);
    std::vector<std::vector<double>> nested(h, std::vector<double>(h));
    std::vector<double> rho(h);
    double s = 0;
    for (auto& r : rho) s += r = u(gen);
    for (auto& r : rho) r /= s;
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < h; ++j) nested[i][j] = m(i, j) = u(gen);
    EXPECT_NEAR(quad_form(m, rho), oracle::double_sum(nested, rho), 1e-12);
  }
}

TEST(MvRisk, Examples) {
  EvalMatrix single;
  single.predictions = Matrix<int>(1, 4);
  single.labels = {0, 1, 1, 0};
  single.predictions(0, 0) = 1;  // wrong once
  single.predictions(0, 1) = 1;
  single.predictions(0, 2) = 1;
  EXPECT_DOUBLE_EQ(mv_risk(single, std::vector<double>{1.0}), 0.25);

  EvalMatrix three;
  three.predictions = Matrix<int>(3, 4);
  three.labels = {1, 1, 1, 1};
  const int preds[3][4] = {{1, 1, 0, 1}, {1, 0, 0, 1}, {0, 1, 0, 1}};
  for (int h = 0; h < 3; ++h)
    for (int i = 0; i < 4; ++i) three.predictions(h, i) = preds[h][i];
  const std::vector<double> uniform(3, 1.0 / 3);
  EXPECT_DOUBLE_EQ(mv_risk(three, uniform), 0.25);
  EXPECT_DOUBLE_EQ(mv_risk(three, std::vector<double>{0.0, 1.0, 0.0}), 0.5);

  EvalMatrix tie;
  tie.predictions = Matrix<int>(2, 1);
  tie.predictions(0, 0) = 2;
  tie.predictions(1, 0) = 1;
  tie.labels = {2};
  EXPECT_DOUBLE_EQ(mv_risk(tie, std::vector<double>{0.5, 0.5}), 1.0);  // tie goes to label 1

  EvalMatrix empty;
  empty.predictions = Matrix<int>(1, 0);
  EXPECT_THROW(mv_risk(empty, std::vector<double>{1.0}), std::invalid_argument);
}
