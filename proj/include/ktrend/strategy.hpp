#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "ktrend/market_data.hpp"
#include "ktrend/models.hpp"

namespace ktrend {

enum class Target { Long, Short, Hold };

std::string_view to_string(Target t);

struct Signal {
  Target target = Target::Hold;
  std::size_t at = 0;      // bar index; the fill happens at this bar's close
  double prediction = 0;   // filter forecast of the next close
};

struct StrategyConfig {
  double offset = 0.0;                // band half-width in index points
  std::optional<std::size_t> warmup;  // defaults to max(20, d)
};

std::size_t effective_warmup(const StrategyConfig& cfg, const ModelParams& params);

/// Long above close + offset, Short below close - offset, Hold inside the band.
constexpr Target decide(double prediction, double last_close, double offset) {
  if (prediction > last_close + offset) return Target::Long;
  if (prediction < last_close - offset) return Target::Short;
  return Target::Hold;
}

inline Target decide(double prediction, double last_close, const StrategyConfig& cfg) {
  return decide(prediction, last_close, cfg.offset);
}

/// One signal per bar from the warm-up onward. The signal at bar t compares
/// the filter's forecast of close[t+1], built from closes up to t, against
/// close[t]. Positions are stop-and-reverse; see backtest::execute.
std::vector<Signal> run_strategy(const BarSeries& bars, const ModelParams& model, const StrategyConfig& cfg);

}  // namespace ktrend
