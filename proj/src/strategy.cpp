#include "ktrend/strategy.hpp"

#include <algorithm>
#include <string>

namespace ktrend {

std::string_view to_string(Target t) {
  switch (t) {
    case Target::Long: return "Long";
    case Target::Short: return "Short";
    case Target::Hold: return "Hold";
  }
  return "?";
}

std::size_t effective_warmup(const StrategyConfig& cfg, const ModelParams& params) {
  return cfg.warmup.value_or(std::max<std::size_t>(20, params.lookback()));
}

std::vector<Signal> run_strategy(const BarSeries& bars, const ModelParams& model, const StrategyConfig& cfg) {
  if (!(cfg.offset >= 0)) throw Error(ErrorKind::InvalidArgument, "offset must be >= 0");
  const std::size_t warmup = effective_warmup(cfg, model);
  if (bars.size() <= warmup)
    throw Error(ErrorKind::SeriesTooShort, "series of " + std::to_string(bars.size()) +
                                               " bars does not cover warm-up of " + std::to_string(warmup));

  const Spec spec = build_model(model, bars);
  validate(spec);

  // The initial speed estimate reads close[1], so bar 0 never trades.
  const std::size_t first = std::max<std::size_t>(warmup, 1);

  std::vector<Signal> signals;
  signals.reserve(bars.size() - first);
  auto state = initial_state(spec);
  for (std::size_t t = 0; t < bars.size(); ++t) {
    state = update(predict(state, spec), spec, bars[t].close).first;
    if (t < first) continue;
    const auto ahead = predict(state, spec);
    const double forecast = expected_measurement(ahead, spec);
    signals.push_back({decide(forecast, bars[t].close, cfg), t, forecast});
  }
  return signals;
}

}  // namespace ktrend
