#include <gtest/gtest.h>

#include <random>

#include "ktrend/lag_algebra.hpp"
#include "test_support.hpp"

using namespace ktrend;
using ktrend::testing::error_kind_of;
using Eigen::VectorXd;
using W = WeightVector<double>;

namespace {

W random_normalized(std::mt19937_64& rng, int max_len = 12, bool allow_negative = false) {
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_real_distribution<double> u(allow_negative ? -0.5 : 0.0, 1.0);
  VectorXd w(len(rng));
  do {
    for (auto& x : w) x = u(rng);
  } while (std::abs(w.sum()) < 0.1);
  return W(w / w.sum());
}

// Oracle: enumerate every index tuple (i_1..i_k) and accumulate
// w_{i_1}···w_{i_k} onto position i_1+…+i_k.
VectorXd compose_by_enumeration(const VectorXd& w, int k) {
  const int n = static_cast<int>(w.size());
  VectorXd out = VectorXd::Zero(k * (n - 1) + 1);
  std::vector<int> idx(k, 0);
  while (true) {
    double prod = 1;
    int pos = 0;
    for (int i : idx) {
      prod *= w[i];
      pos += i;
    }
    out[pos] += prod;
    int d = k - 1;
    while (d >= 0 && ++idx[d] == n) idx[d--] = 0;
    if (d < 0) break;
  }
  return out;
}

// Oracle: direct windowed dot product, no Eigen segment tricks.
double direct_ma(const VectorXd& prices, const VectorXd& w, Eigen::Index t) {
  double acc = 0;
  for (Eigen::Index i = 0; i < w.size(); ++i) acc += w[i] * prices[t - i];
  return acc;
}

VectorXd random_walk(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  VectorXd p(n);
  p[0] = 100;
  for (Eigen::Index i = 1; i < n; ++i) p[i] = p[i - 1] + g(rng);
  return p;
}

}  // namespace

TEST(WeightVector, RejectsDegenerateInput) {
  EXPECT_EQ(error_kind_of([] { W{VectorXd()}; }), ErrorKind::InvalidArgument);
  EXPECT_EQ(error_kind_of([] { W(VectorXd::Constant(2, std::nan(""))); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(error_kind_of([] { W((VectorXd(2) << 1, -1).finished()); }), ErrorKind::ZeroWeightSum);
}

TEST(WeightedMa, ConstantSeriesIsFixed) {
  std::mt19937_64 rng(1);
  auto w = random_normalized(rng);
  VectorXd p = VectorXd::Constant(40, 7.25);
  auto out = weighted_ma(p, w);
  for (auto v : out) EXPECT_NEAR(v, 7.25, 1e-12);
}

TEST(WeightedMa, UnitWeightIsIdentity) {
  VectorXd p = VectorXd::LinSpaced(10, 1, 10);
  EXPECT_EQ(weighted_ma(p, W(VectorXd::Ones(1))), p);
}

TEST(WeightedMa, TwoPointAverage) {
  VectorXd p(2);
  p << 2, 4;
  auto out = weighted_ma(p, sma(2));
  EXPECT_DOUBLE_EQ(out[1], 3.0);
  EXPECT_DOUBLE_EQ(out[0], 2.0);  // warm-up copies the raw price
}

TEST(WeightedMa, ErrorsOnShortSeriesAndUnnormalizedWeights) {
  EXPECT_EQ(error_kind_of([] { weighted_ma(VectorXd(VectorXd::Ones(3)), sma(5)); }), ErrorKind::SeriesTooShort);
  EXPECT_EQ(error_kind_of([] { weighted_ma(VectorXd(VectorXd::Ones(3)), W(VectorXd::Ones(2))); }), ErrorKind::InvalidArgument);
}

TEST(Compose, Examples) {
  auto c = compose(sma(2), 2);
  ASSERT_EQ(c.size(), 3);
  EXPECT_DOUBLE_EQ(c[0], 0.25);
  EXPECT_DOUBLE_EQ(c[1], 0.5);
  EXPECT_DOUBLE_EQ(c[2], 0.25);

  std::mt19937_64 rng(2);
  auto w = random_normalized(rng);
  EXPECT_EQ(compose(w, 1).weights(), w.weights());
  EXPECT_EQ(error_kind_of([&] { compose(w, 0); }), ErrorKind::InvalidArgument);
}

TEST(Compose, MatchesEnumerationOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto w = random_normalized(rng, 6, true);
    for (int k = 1; k <= 4; ++k) {
      VectorXd expected = compose_by_enumeration(w.weights(), k);
      auto got = compose(w, k);
      ASSERT_EQ(got.size(), expected.size());
      EXPECT_LT((got.weights() - expected).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Compose, UnitSumPreserved) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    auto w = random_normalized(rng, 10, true);
    VectorXd raw = w.weights() * 1.7;  // sum 1.7
    W unnorm(raw);
    for (int k = 1; k <= 4; ++k)
      EXPECT_NEAR(compose(unnorm, k).sum(), std::pow(unnorm.sum(), k), 1e-12 * std::pow(2.0, k));
  }
}

TEST(Lag, Examples) {
  EXPECT_DOUBLE_EQ(lag(sma(5)), 2.0);
  EXPECT_DOUBLE_EQ(lag(sma(12)), 5.5);
  EXPECT_DOUBLE_EQ(lag(W((VectorXd(3) << 1, 0, 0).finished())), 0.0);
  for (int n = 1; n <= 30; ++n) EXPECT_NEAR(lag(sma(n)), (n - 1) / 2.0, 1e-12);
}

TEST(Lag, AdditiveUnderComposition) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    auto w = random_normalized(rng);
    const double base = lag(w);
    for (int k = 1; k <= 4; ++k) ASSERT_LT(std::abs(lag(compose(w, k)) - k * base), 1e-9) << trial;
  }
}

TEST(Lag, ZeroLagCombinations) {
  for (int period : {3, 12, 26}) {
    auto w = ema(period);
    EXPECT_LT(std::abs(lag(combine(w, solve_zero_lag(2)))), 1e-9);
    EXPECT_LT(std::abs(lag(combine(w, solve_zero_lag(3)))), 1e-9);
    // The same check written out by hand for DEMA: 2w - w∘2, zero padded.
    VectorXd w2 = compose(w, 2).weights();
    VectorXd dema_w = -w2;
    dema_w.head(w.size()) += 2 * w.weights();
    EXPECT_LT(std::abs(lag(W(dema_w))), 1e-9);
  }
}

TEST(Ema, WeightsAndTruncation) {
  auto w = ema(12);
  EXPECT_NEAR(w.sum(), 1.0, 1e-12);
  const double decay = 1 - 2.0 / 13;
  EXPECT_LT(std::pow(decay, w.size()), 1e-8);
  EXPECT_GE(std::pow(decay, w.size() - 1), 1e-8);
  for (Eigen::Index i = 1; i < w.size(); ++i) EXPECT_NEAR(w[i] / w[i - 1], decay, 1e-12);
  EXPECT_EQ(error_kind_of([] { ema(0); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(error_kind_of([] { sma(0); }), ErrorKind::InvalidArgument);
  auto s = sma(2);
  EXPECT_DOUBLE_EQ(s[0], 0.5);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
}

TEST(WeightedMa, RepeatedApplicationEqualsComposedWeights) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto w = random_normalized(rng, 8, true);
    VectorXd p = random_walk(rng, 1000);
    VectorXd repeated = p;
    for (int k = 1; k <= 4; ++k) {
      repeated = weighted_ma(repeated, w);
      VectorXd once = weighted_ma(p, compose(w, k));
      const Eigen::Index valid = k * (w.size() - 1);
      EXPECT_LT((repeated.tail(p.size() - valid) - once.tail(p.size() - valid)).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(Dema, ConstantAndRamp) {
  VectorXd c = VectorXd::Constant(400, 1999.5);
  for (auto v : dema(c, 12)) EXPECT_NEAR(v, 1999.5, 1e-9);
  for (auto v : tema(c, 12)) EXPECT_NEAR(v, 1999.5, 1e-9);

  VectorXd ramp = VectorXd::LinSpaced(600, 0, 599);
  auto d = dema(ramp, 12);
  auto t = tema(ramp, 12);
  for (Eigen::Index i = ema_warmup(12, 2); i < ramp.size(); ++i) EXPECT_NEAR(d[i], ramp[i], 1e-6) << i;
  for (Eigen::Index i = ema_warmup(12, 3); i < ramp.size(); ++i) EXPECT_NEAR(t[i], ramp[i], 1e-6) << i;
}

TEST(Dema, RecursiveMatchesExpandedWeights) {
  std::mt19937_64 rng(7);
  VectorXd p = random_walk(rng, 500);
  for (int order : {2, 3}) {
    auto lc = solve_zero_lag(order);
    VectorXd expanded = combine(ema(12), lc).weights();
    VectorXd recursive = order == 2 ? dema(p, 12) : tema(p, 12);
    double worst = 0;
    for (Eigen::Index t = expanded.size() - 1; t < p.size(); ++t)
      worst = std::max(worst, std::abs(recursive[t] - direct_ma(p, expanded, t)));
    EXPECT_LT(worst, 1e-6) << "order " << order;
  }
}

TEST(Dema, ShortSeries) {
  EXPECT_EQ(error_kind_of([] { dema(VectorXd(VectorXd::Ones(20)), 12); }), ErrorKind::SeriesTooShort);
}

TEST(SolveZeroLag, PublishedCoefficients) {
  auto two = solve_zero_lag(2);
  EXPECT_EQ(two.a, 2.0);
  EXPECT_EQ(two.b, -1.0);
  EXPECT_EQ(two.c, 0.0);
  auto three = solve_zero_lag(3);
  EXPECT_EQ(three.a, 3.0);
  EXPECT_EQ(three.b, -3.0);
  EXPECT_EQ(three.c, 1.0);
  for (auto lc : {two, three}) {
    EXPECT_NEAR(lc.sum(), 1.0, 1e-15);
    EXPECT_NEAR(lc.a + 2 * lc.b + 3 * lc.c, 0.0, 1e-15);
  }
  EXPECT_EQ(error_kind_of([] { solve_zero_lag(4); }), ErrorKind::InvalidArgument);
}

TEST(LagAlgebra, WorksInLongDouble) {
  auto w = compose(sma<long double>(4), 3);
  EXPECT_NEAR(static_cast<double>(lag(w)), 4.5, 1e-15);
}
