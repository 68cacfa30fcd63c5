#include <gtest/gtest.h>

#include <random>

#include "ktrend/kalman.hpp"
#include "ktrend/models.hpp"
#include "test_support.hpp"

using namespace ktrend;
using ktrend::testing::error_kind_of;
using ktrend::testing::random_psd;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace {

KalmanSpec<double> scalar_spec(double phi, double q, double r, double x0, double p0) {
  KalmanSpec<double> s;
  s.phi = MatrixXd::Constant(1, 1, phi);
  s.H = RowVectorXd::Ones(1);
  s.Q = MatrixXd::Constant(1, 1, q);
  s.R = r;
  s.x0 = VectorXd::Constant(1, x0);
  s.P0 = MatrixXd::Constant(1, 1, p0);
  return s;
}

KalmanSpec<double> random_spec(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 0.6);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  KalmanSpec<double> s;
  s.phi = MatrixXd(n, n);
  for (Eigen::Index i = 0; i < s.phi.size(); ++i) s.phi.data()[i] = g(rng);
  s.H = RowVectorXd(n);
  for (auto& h : s.H) h = g(rng);
  s.Q = random_psd(rng, n, 0.5);
  s.R = u(rng);
  s.x0 = VectorXd::Zero(n);
  s.P0 = random_psd(rng, n);
  return s;
}

// Oracle: Joseph-form covariance update.
MatrixXd joseph(const MatrixXd& P, const RowVectorXd& H, double R) {
  const double S = (H * P * H.transpose())(0, 0) + R;
  const VectorXd K = P * H.transpose() / S;
  const MatrixXd A = MatrixXd::Identity(P.rows(), P.cols()) - K * H;
  return A * P * A.transpose() + K * R * K.transpose();
}

double min_eig(const MatrixXd& P) {
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(P, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

}  // namespace

TEST(Predict, IdentityDynamics) {
  auto spec = scalar_spec(1, 0, 1, 5, 2);
  auto out = predict(initial_state(spec), spec);
  EXPECT_EQ(out.x[0], 5.0);
  EXPECT_EQ(out.P(0, 0), 2.0);
  EXPECT_EQ(out.step, 0u);
}

TEST(Predict, ConstantVelocity) {
  BarSeries bars = synthesize(SynthKind::Trend, 5, 0, 0.0);
  auto spec = build_model1(reference_params(ModelKind::One), bars);
  FilterState<double> s{(VectorXd(2) << 100, 1).finished(), MatrixXd::Identity(2, 2), 3};
  auto out = predict(s, spec);
  EXPECT_EQ(out.x[0], 101.0);
  EXPECT_EQ(out.x[1], 1.0);
}

TEST(Predict, DimensionMismatch) {
  auto spec = scalar_spec(1, 0, 1, 0, 1);
  FilterState<double> s{VectorXd::Zero(2), MatrixXd::Identity(2, 2), 0};
  EXPECT_EQ(error_kind_of([&] { predict(s, spec); }), ErrorKind::DimensionMismatch);
}

TEST(Predict, KeepsCovarianceSymmetricPsd) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    auto spec = random_spec(rng, 1 + trial % 4);
    auto out = predict(initial_state(spec), spec);
    EXPECT_LT((out.P - out.P.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GE(min_eig(out.P), -1e-10 * std::max(1.0, out.P.cwiseAbs().maxCoeff()));
  }
}

TEST(Update, ScalarGain) {
  auto spec = scalar_spec(1, 0, 1, 0, 1);
  auto [next, step] = update(initial_state(spec), spec, 2.0);
  EXPECT_DOUBLE_EQ(step.gain[0], 0.5);
  EXPECT_DOUBLE_EQ(next.x[0], 1.0);
  EXPECT_DOUBLE_EQ(next.P(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(step.innovation, 2.0);
  EXPECT_DOUBLE_EQ(step.residual_variance, 2.0);
  EXPECT_EQ(next.step, 1u);
}

TEST(Update, ZeroInnovationLeavesState) {
  std::mt19937_64 rng(12);
  auto spec = random_spec(rng, 3);
  spec.x0 = VectorXd::Random(3);
  auto s = initial_state(spec);
  const double y = spec.H.dot(s.x);
  auto [next, step] = update(s, spec, y);
  EXPECT_EQ(step.innovation, 0.0);
  EXPECT_EQ(next.x, s.x);
}

TEST(Update, SingularResidual) {
  auto spec = scalar_spec(1, 0, 1, 0, 0);
  spec.R = 0;  // bypasses validate(); update must still refuse
  EXPECT_EQ(error_kind_of([&] { update(initial_state(spec), spec, 1.0); }), ErrorKind::SingularResidual);
}

TEST(Update, MatchesJosephForm) {
  std::mt19937_64 rng(13);
  BarSeries bars = synthesize(SynthKind::RandomWalk, 10, 1, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    auto spec = build_model1(reference_params(ModelKind::One), bars);
    FilterState<double> s{VectorXd::Random(2), random_psd(rng, 2, 3.0), 0};
    auto [next, step] = update(s, spec, 2000.0);
    EXPECT_LT((next.P - joseph(s.P, spec.H, spec.R)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Validate, RejectsBadSpecs) {
  auto spec = scalar_spec(1, 0, 1, 0, 1);
  EXPECT_NO_THROW(validate(spec));
  auto bad_r = spec;
  bad_r.R = 0;
  EXPECT_EQ(error_kind_of([&] { validate(bad_r); }), ErrorKind::InvalidParams);
  auto bad_q = spec;
  bad_q.Q(0, 0) = -1;
  EXPECT_EQ(error_kind_of([&] { validate(bad_q); }), ErrorKind::InvalidParams);
  auto bad_dim = spec;
  bad_dim.x0 = VectorXd::Zero(2);
  EXPECT_EQ(error_kind_of([&] { validate(bad_dim); }), ErrorKind::DimensionMismatch);
}

TEST(CovarianceHealth, RandomStepFuzz) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> g(0.0, 2.0);
  int steps = 0;
  while (steps < 10000) {
    auto spec = random_spec(rng, 1 + steps % 3);
    auto s = initial_state(spec);
    for (int k = 0; k < 100; ++k, ++steps) {
      auto pred = predict(s, spec);
      const double prior_var = spec.H * pred.P * spec.H.transpose();
      auto [next, step] = update(pred, spec, g(rng));
      const double scale = std::max(1.0, next.P.cwiseAbs().maxCoeff());
      ASSERT_LT((next.P - next.P.transpose()).cwiseAbs().maxCoeff(), 1e-10);
      ASSERT_GE(min_eig(next.P), -1e-10 * scale);
      const double post_var = spec.H * next.P * spec.H.transpose();
      ASSERT_LE(post_var, prior_var + 1e-9 * std::max(1.0, prior_var));
      if (spec.dim() == 1) {
        ASSERT_GE(step.gain[0] * spec.H[0], -1e-12);
        ASSERT_LE(step.gain[0] * spec.H[0], 1 + 1e-12);
      }
      s = std::move(next);
    }
  }
}

TEST(FilterSeries, WarmupCopiesInput) {
  auto spec = scalar_spec(1, 0.1, 1, 0, 1);
  VectorXd y = VectorXd::LinSpaced(12, 3, 14);
  auto out = filter_series(spec, y, 12);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    EXPECT_EQ(out[static_cast<std::size_t>(i)].predicted, y[i]);
    EXPECT_EQ(out[static_cast<std::size_t>(i)].corrected, y[i]);
  }
  EXPECT_EQ(error_kind_of([&] { filter_series(spec, VectorXd(), 0); }), ErrorKind::SeriesTooShort);
}

TEST(FilterSeries, TracksNoiseFreeRamp) {
  BarSeries bars = synthesize(SynthKind::Trend, 120, 0, 0.0, {.start_price = 1.0});
  auto spec = build_model1(ModelParams(ModelKind::One, {0, 0, 1, 1000}), bars);
  VectorXd y = bars.closes();
  auto out = filter_series(spec, y, 0);
  for (std::size_t t = 50; t < out.size(); ++t) EXPECT_NEAR(out[t].predicted, y[static_cast<Eigen::Index>(t)], 1e-3);
}

TEST(FilterSeries, RandomWalkEqualsSteadyStateEma) {
  const double q = 0.7, r = 2.3;
  // Steady state prior variance solves P² − qP − qr = 0.
  const double prior = (q + std::sqrt(q * q + 4 * q * r)) / 2;
  const double gain = prior / (prior + r);

  auto spec = scalar_spec(1, q, r, 100, 5);
  std::mt19937_64 rng(15);
  std::normal_distribution<double> g(0.0, 1.0);
  VectorXd y(400);
  double level = 100;
  for (auto& v : y) v = (level += g(rng)) + 1.5 * g(rng);

  auto out = filter_series(spec, y, 0);
  const std::size_t converged = 60;
  double ema = out[converged].corrected;
  double worst = 0;
  for (std::size_t t = converged + 1; t < out.size(); ++t) {
    ema += gain * (y[static_cast<Eigen::Index>(t)] - ema);
    worst = std::max(worst, std::abs(ema - out[t].corrected));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(FilterSeries, Causality) {
  std::mt19937_64 rng(16);
  auto spec = random_spec(rng, 2);
  spec.phi *= 0.5;
  VectorXd y = VectorXd::Random(80);
  auto base = filter_series(spec, y, 0);
  for (Eigen::Index t : {0, 10, 40, 79}) {
    VectorXd z = y;
    z[t] += 50;
    auto pert = filter_series(spec, z, 0);
    for (Eigen::Index s = 0; s <= t; ++s) EXPECT_EQ(pert[static_cast<std::size_t>(s)].predicted, base[static_cast<std::size_t>(s)].predicted);
    EXPECT_NE(pert[static_cast<std::size_t>(t)].corrected, base[static_cast<std::size_t>(t)].corrected);
  }
}

TEST(SteadyState, GainConverges) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto spec = random_spec(rng, 2);
    spec.Q += MatrixXd::Identity(2, 2) * 0.1;  // keep the pair stabilizable
    spec.phi = spec.phi / std::max(1.0, spec.phi.cwiseAbs().rowwise().sum().maxCoeff()) * 0.9;
    auto s = initial_state(spec);
    VectorXd prev;
    bool converged = false;
    for (int k = 0; k < 2000 && !converged; ++k) {
      auto [next, step] = update(predict(s, spec), spec, 0.0);
      if (prev.size() && (step.gain - prev).norm() < 1e-10) converged = true;
      prev = step.gain;
      s = std::move(next);
    }
    EXPECT_TRUE(converged) << trial;
  }
}

TEST(Kalman, DriftProvidersSeeTheStepIndex) {
  auto spec = scalar_spec(1, 0, 1, 0, 1);
  std::vector<std::size_t> seen;
  spec.state_drift = [&](std::size_t t) {
    seen.push_back(t);
    return VectorXd::Constant(1, 1.0);
  };
  spec.measurement_drift = [](std::size_t) { return 10.0; };
  auto out = filter_series(spec, VectorXd(VectorXd::Constant(3, 10.0)), 0);
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_DOUBLE_EQ(out[0].predicted, 11.0);  // H(x0 + c) + d
}
