#pragma once

// Linear-Gaussian Kalman filter with a scalar measurement:
//
//   X_{t+1} = Φ X_t + c_t + w_t,   w_t ~ N(0, Q)
//   Y_t     = H X_t + d_t + v_t,   v_t ~ N(0, R)

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ktrend/errors.hpp"

namespace ktrend {

template <typename Scalar>
struct KalmanSpec {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  /// Drift providers receive the index of the measurement being predicted and
  /// must only use information available strictly before it.
  using StateDrift = std::function<Vector(std::size_t)>;
  using MeasurementDrift = std::function<Scalar(std::size_t)>;

  Matrix phi;
  RowVector H;
  Matrix Q;
  Scalar R = Scalar(1);
  StateDrift state_drift;              // empty means c_t = 0
  MeasurementDrift measurement_drift;  // empty means d_t = 0
  Vector x0;
  Matrix P0;

  Eigen::Index dim() const noexcept { return phi.rows(); }

  Vector drift(std::size_t t) const { return state_drift ? state_drift(t) : Vector::Zero(dim()); }
  Scalar offset(std::size_t t) const { return measurement_drift ? measurement_drift(t) : Scalar(0); }
};

namespace detail {

template <typename Derived>
bool is_symmetric_psd(const Eigen::MatrixBase<Derived>& m, double tol) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (m.rows() != m.cols()) return false;
  if (!m.allFinite()) return false;
  Scalar scale = std::max(Scalar(1), m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol * scale;
}

}  // namespace detail

/// Checks dimensions, R > 0, and that Q and P0 are symmetric PSD.
template <typename Scalar>
void validate(const KalmanSpec<Scalar>& spec) {
  const Eigen::Index n = spec.dim();
  if (n == 0 || spec.phi.cols() != n || spec.H.cols() != n || spec.Q.rows() != n || spec.Q.cols() != n ||
      spec.x0.size() != n || spec.P0.rows() != n || spec.P0.cols() != n)
    throw Error(ErrorKind::DimensionMismatch, "kalman spec dimensions are inconsistent");
  if (!(spec.R > Scalar(0))) throw Error(ErrorKind::InvalidParams, "measurement variance R must be > 0");
  if (!detail::is_symmetric_psd(spec.Q, 1e-10)) throw Error(ErrorKind::InvalidParams, "Q is not symmetric PSD");
  if (!detail::is_symmetric_psd(spec.P0, 1e-10)) throw Error(ErrorKind::InvalidParams, "P0 is not symmetric PSD");
}

/// X_{t|t} and P_{t|t}. `step` counts the measurements folded in so far, which
/// is also the index of the next measurement to be predicted.
template <typename Scalar>
struct FilterState {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> P;
  std::size_t step = 0;
};

template <typename Scalar>
struct StepOutput {
  Scalar predicted_measurement = 0;  // H·X_{t+1|t} + d_t
  Scalar corrected_measurement = 0;  // H·X_{t+1|t+1} + d_t
  Scalar innovation = 0;
  Scalar residual_variance = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gain;
};

template <typename Scalar>
FilterState<Scalar> initial_state(const KalmanSpec<Scalar>& spec) {
  return {spec.x0, spec.P0, 0};
}

template <typename Scalar>
FilterState<Scalar> predict(const FilterState<Scalar>& state, const KalmanSpec<Scalar>& spec) {
  const Eigen::Index n = spec.dim();
  if (state.x.size() != n || state.P.rows() != n || state.P.cols() != n || spec.phi.cols() != n ||
      spec.Q.rows() != n || spec.Q.cols() != n)
    throw Error(ErrorKind::DimensionMismatch, "predict: state and spec dimensions differ");
  FilterState<Scalar> out;
  auto c = spec.drift(state.step);
  if (c.size() != n) throw Error(ErrorKind::DimensionMismatch, "predict: drift has wrong dimension");
  out.x = spec.phi * state.x + c;
  out.P = spec.phi * state.P * spec.phi.transpose() + spec.Q;
  out.step = state.step;
  return out;
}

/// Measurement the filter expects next from a predicted state.
template <typename Scalar>
Scalar expected_measurement(const FilterState<Scalar>& predicted, const KalmanSpec<Scalar>& spec) {
  return spec.H.dot(predicted.x) + spec.offset(predicted.step);
}

/// Correction with a scalar measurement; the covariance is re-symmetrized.
template <typename Scalar>
std::pair<FilterState<Scalar>, StepOutput<Scalar>> update(const FilterState<Scalar>& predicted,
                                                          const KalmanSpec<Scalar>& spec, Scalar y) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = spec.dim();
  if (predicted.x.size() != n || predicted.P.rows() != n || spec.H.cols() != n)
    throw Error(ErrorKind::DimensionMismatch, "update: state and spec dimensions differ");

  const Scalar d = spec.offset(predicted.step);
  StepOutput<Scalar> out;
  out.predicted_measurement = spec.H.dot(predicted.x) + d;
  out.innovation = y - out.predicted_measurement;

  const Vector PHt = predicted.P * spec.H.transpose();
  out.residual_variance = spec.H.dot(PHt) + spec.R;
  if (!(out.residual_variance > Scalar(1e-300)))
    throw Error(ErrorKind::SingularResidual, "residual variance is not positive at step " +
                                                 std::to_string(predicted.step));
  out.gain = PHt / out.residual_variance;

  FilterState<Scalar> next;
  next.x = predicted.x + out.gain * out.innovation;
  Matrix P = (Matrix::Identity(n, n) - out.gain * spec.H) * predicted.P;
  next.P = Scalar(0.5) * (P + P.transpose());
  next.step = predicted.step + 1;
  out.corrected_measurement = spec.H.dot(next.x) + d;
  return {std::move(next), std::move(out)};
}

template <typename Scalar>
struct FilterPoint {
  Scalar predicted = 0;
  Scalar corrected = 0;
};

/// Runs predict/update over every measurement. During the first `warmup`
/// steps both slots carry the raw measurement while the filter still runs.
template <typename Scalar>
std::vector<FilterPoint<Scalar>> filter_series(const KalmanSpec<Scalar>& spec,
                                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& measurements,
                                               std::size_t warmup) {
  if (measurements.size() == 0) throw Error(ErrorKind::SeriesTooShort, "filter_series needs measurements");
  std::vector<FilterPoint<Scalar>> out(static_cast<std::size_t>(measurements.size()));
  auto state = initial_state(spec);
  for (Eigen::Index i = 0; i < measurements.size(); ++i) {
    auto predicted = predict(state, spec);
    auto [corrected, step] = update(predicted, spec, measurements[i]);
    auto& slot = out[static_cast<std::size_t>(i)];
    if (static_cast<std::size_t>(i) < warmup) {
      slot = {measurements[i], measurements[i]};
    } else {
      slot = {step.predicted_measurement, step.corrected_measurement};
    }
    state = std::move(corrected);
  }
  return out;
}

}  // namespace ktrend
