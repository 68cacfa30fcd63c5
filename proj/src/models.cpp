#include "ktrend/models.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace ktrend {

using Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::One: return "one";
    case ModelKind::Two: return "two";
    case ModelKind::Three: return "three";
    case ModelKind::Four: return "four";
  }
  return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  if (name == "one" || name == "1" || name == "kf1") return ModelKind::One;
  if (name == "two" || name == "2" || name == "kf2") return ModelKind::Two;
  if (name == "three" || name == "3" || name == "kf3") return ModelKind::Three;
  if (name == "four" || name == "4" || name == "kf4") return ModelKind::Four;
  return std::nullopt;
}

std::size_t param_count(ModelKind kind) {
  switch (kind) {
    case ModelKind::One: return 4;
    case ModelKind::Two: return 5;
    case ModelKind::Three: return 10;
    case ModelKind::Four: return 15;
  }
  return 0;
}

ModelParams::ModelParams(ModelKind kind, std::vector<double> p) : kind_(kind), p_(std::move(p)) {
  const std::string name(to_string(kind_));
  if (p_.size() != param_count(kind_))
    throw Error(ErrorKind::InvalidParams, "model " + name + " takes " + std::to_string(param_count(kind_)) +
                                              " parameters, got " + std::to_string(p_.size()));
  for (double v : p_)
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidParams, "model " + name + ": non-finite parameter");

  const bool two_factor = kind_ == ModelKind::Three || kind_ == ModelKind::Four;
  const double r = two_factor ? p_[7] : p_[2];
  if (!(r > 0)) throw Error(ErrorKind::InvalidParams, "model " + name + ": measurement variance must be > 0");

  std::vector<double> p0;
  switch (kind_) {
    case ModelKind::One: p0 = {p_[3]}; break;
    case ModelKind::Two: p0 = {p_[3], p_[4]}; break;
    default: p0 = {p_[8], p_[9]}; break;
  }
  for (double v : p0)
    if (v < 0) throw Error(ErrorKind::InvalidParams, "model " + name + ": initial covariance must be >= 0");

  if (kind_ == ModelKind::Four) {
    const double d = p_[14];
    if (!(d >= 1) || d != std::floor(d))
      throw Error(ErrorKind::InvalidParams, "model four: p15 (oscillator period) must be a positive integer");
  }
}

std::size_t ModelParams::lookback() const {
  return kind_ == ModelKind::Four ? static_cast<std::size_t>(p_[14]) : 0;
}

ModelParams reference_params(ModelKind kind) {
  switch (kind) {
    case ModelKind::One: return ModelParams(kind, {5, 5, 45, 10});
    case ModelKind::Two: return ModelParams(kind, {5, 5, 41, 1, 1});
    case ModelKind::Three: return ModelParams(kind, {1, 0.4, 1.2, 1, 1, 0.8, 0.4, 0.7, 1, 0.4});
    case ModelKind::Four:
      // p14 is published as "-", read as zero.
      return ModelParams(kind, {1, 0.4, 1.2, 1, 1, 0.8, 0.4, 0.7, 1, 0.4, 0.5, 0.9, 0.5, 0, 5});
  }
  throw Error(ErrorKind::InvalidParams, "unknown model kind");
}

namespace {

OscillatorContext oscillator_window(const BarSeries& bars, std::size_t first, std::size_t t, std::size_t d) {
  OscillatorContext ctx;
  ctx.d = d;
  ctx.lowest_low = bars[first].low;
  ctx.highest_high = bars[first].high;
  for (std::size_t i = first + 1; i <= t; ++i) {
    ctx.lowest_low = std::min(ctx.lowest_low, bars[i].low);
    ctx.highest_high = std::max(ctx.highest_high, bars[i].high);
  }
  const double range = ctx.highest_high - ctx.lowest_low;
  ctx.K = range > 0 ? 100.0 * (bars[t].close - ctx.lowest_low) / range : 50.0;
  ctx.K = std::clamp(ctx.K, 0.0, 100.0);
  return ctx;
}

// Outer product v·vᵀ with v = (a, b): always rank-1 PSD.
Matrix2d outer_noise(double a, double b) {
  Matrix2d q;
  q << a * a, b * a, a * b, b * b;
  return q;
}

void require_bars(const BarSeries& bars, const char* model) {
  if (bars.empty()) throw Error(ErrorKind::SeriesTooShort, std::string("model ") + model + " needs at least one bar");
}

void require_kind(const ModelParams& p, ModelKind kind) {
  if (p.kind() != kind)
    throw Error(ErrorKind::InvalidParams, "expected model " + std::string(to_string(kind)) + " params, got " +
                                              std::string(to_string(p.kind())));
}

// Level from the first close; speed from the first difference.
VectorXd level_speed_start(const BarSeries& bars) {
  Vector2d x0(bars[0].close, bars.size() > 1 ? bars[1].close - bars[0].close : 0.0);
  return x0;
}

Spec build_level_speed(const ModelParams& p, const BarSeries& bars, double p0_level, double p0_speed) {
  Spec spec;
  spec.phi = (Matrix2d() << 1, 1, 0, 1).finished();  // δt = 1 bar
  spec.H = RowVectorXd::Zero(2);
  spec.H[0] = 1;
  spec.Q = outer_noise(p.p(1), p.p(2));
  spec.R = p.p(3);
  spec.P0 = Vector2d(p0_level, p0_speed).asDiagonal();
  spec.x0 = level_speed_start(bars);
  return spec;
}

}  // namespace

OscillatorContext oscillator_k(const BarSeries& bars, std::size_t t, std::size_t d) {
  if (d == 0) throw Error(ErrorKind::InvalidArgument, "oscillator period must be >= 1");
  if (t >= bars.size()) throw Error(ErrorKind::InvalidArgument, "oscillator index past the end of the series");
  if (t + 1 < d)
    throw Error(ErrorKind::InsufficientHistory,
                "oscillator at bar " + std::to_string(t) + " needs " + std::to_string(d) + " bars of history");
  return oscillator_window(bars, t + 1 - d, t, d);
}

Spec build_model1(const ModelParams& p, const BarSeries& bars) {
  require_kind(p, ModelKind::One);
  require_bars(bars, "one");
  return build_level_speed(p, bars, p.p(4), p.p(4));
}

Spec build_model2(const ModelParams& p, const BarSeries& bars) {
  require_kind(p, ModelKind::Two);
  require_bars(bars, "two");
  return build_level_speed(p, bars, p.p(4), p.p(5));
}

namespace {

Spec build_two_factor(const ModelParams& p, const BarSeries& bars) {
  Spec spec;
  spec.phi = (Matrix2d() << p.p(1), p.p(2), 0, p.p(3)).finished();
  spec.H = RowVectorXd(2);
  spec.H << p.p(4), p.p(5);
  spec.Q = outer_noise(p.p(6), p.p(7));
  spec.R = p.p(8);
  spec.P0 = Vector2d(p.p(9), p.p(10)).asDiagonal();
  const double hh = spec.H.squaredNorm();
  if (!(hh > 0)) throw Error(ErrorKind::InvalidParams, "measurement row H is zero");
  // Least-norm split of the first close across both factors.
  spec.x0 = spec.H.transpose() * (bars[0].close / hh);
  return spec;
}

}  // namespace

Spec build_model3(const ModelParams& p, const BarSeries& bars) {
  require_kind(p, ModelKind::Three);
  require_bars(bars, "three");
  return build_two_factor(p, bars);
}

Spec build_model4(const ModelParams& p, const BarSeries& bars) {
  require_kind(p, ModelKind::Four);
  require_bars(bars, "four");
  const std::size_t d = p.lookback();
  if (bars.size() <= d)
    throw Error(ErrorKind::InsufficientHistory,
                "model four needs more than " + std::to_string(d) + " bars, got " + std::to_string(bars.size()));

  Spec spec = build_two_factor(p, bars);

  // Normalized %K per bar; the first d-1 bars use the window available so far.
  auto k_norm = std::make_shared<std::vector<double>>(bars.size());
  for (std::size_t t = 0; t < bars.size(); ++t) {
    std::size_t first = t + 1 >= d ? t + 1 - d : 0;
    (*k_norm)[t] = oscillator_window(bars, first, t, d).K / 100.0;
  }

  const double m1 = p.p(11), n1 = p.p(12), m2 = p.p(13), n2 = p.p(14);
  spec.state_drift = [k_norm, m1, n1, m2, n2](std::size_t t) -> VectorXd {
    // Predicting measurement t uses the oscillator of the last completed bar.
    double k = t == 0 ? 0.5 : (*k_norm)[std::min(t - 1, k_norm->size() - 1)];
    return Vector2d(m1 - n1 * k, m2 - n2 * k);
  };
  return spec;
}

Spec build_model(const ModelParams& p, const BarSeries& bars) {
  switch (p.kind()) {
    case ModelKind::One: return build_model1(p, bars);
    case ModelKind::Two: return build_model2(p, bars);
    case ModelKind::Three: return build_model3(p, bars);
    case ModelKind::Four: return build_model4(p, bars);
  }
  throw Error(ErrorKind::InvalidParams, "unknown model kind");
}

}  // namespace ktrend
