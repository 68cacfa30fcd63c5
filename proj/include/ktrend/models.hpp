#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "ktrend/kalman.hpp"
#include "ktrend/market_data.hpp"

namespace ktrend {

enum class ModelKind { One = 1, Two = 2, Three = 3, Four = 4 };

std::string_view to_string(ModelKind kind);
/// Accepts "one".."four", "1".."4" and "kf1".."kf4".
std::optional<ModelKind> parse_model_kind(std::string_view name);
std::size_t param_count(ModelKind kind);

/// Flat parameter vector p1..pK for one of the four price models.
///
///   One   (4):  Q from (p1, p2), R = p3, P0 = diag(p4, p4)
///   Two   (5):  as One, P0 = diag(p4, p5)
///   Three (10): Φ = [[p1, p2], [0, p3]], H = [p4, p5], Q from (p6, p7),
///               R = p8, P0 = diag(p9, p10)
///   Four  (15): as Three plus drift (p11 - p12·K, p13 - p14·K), d = p15
class ModelParams {
 public:
  ModelParams(ModelKind kind, std::vector<double> p);

  ModelKind kind() const noexcept { return kind_; }
  const std::vector<double>& values() const noexcept { return p_; }
  /// 1-based access matching the p1..p15 naming.
  double p(std::size_t i) const { return p_.at(i - 1); }
  /// Oscillator lookback for model Four, 0 otherwise.
  std::size_t lookback() const;

 private:
  ModelKind kind_;
  std::vector<double> p_;
};

/// Optimized parameters published for the E-mini backtest, one column per model.
ModelParams reference_params(ModelKind kind);

/// Documented lookback for ad-hoc oscillator use; model Four takes d from p15.
inline constexpr std::size_t kDefaultOscillatorPeriod = 14;

struct OscillatorContext {
  std::size_t d = 0;
  double K = 50.0;  // in [0, 100]
  double lowest_low = 0.0;
  double highest_high = 0.0;
};

/// Fast stochastic %K over bars[t-d+1 .. t]. A flat window reports 50.
OscillatorContext oscillator_k(const BarSeries& bars, std::size_t t, std::size_t d);

using Spec = KalmanSpec<double>;

Spec build_model1(const ModelParams& p, const BarSeries& bars);
Spec build_model2(const ModelParams& p, const BarSeries& bars);
Spec build_model3(const ModelParams& p, const BarSeries& bars);
Spec build_model4(const ModelParams& p, const BarSeries& bars);

/// Dispatches on p.kind().
Spec build_model(const ModelParams& p, const BarSeries& bars);

}  // namespace ktrend
