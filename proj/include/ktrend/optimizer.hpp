#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ktrend/backtest.hpp"
#include "ktrend/models.hpp"
#include "ktrend/strategy.hpp"

namespace ktrend {

struct Bound {
  double lo = 0;
  double hi = 0;
};

/// Box over the model parameters. `grid[i]` is the number of grid points on
/// dimension i; leave `grid` empty to seed with a Latin hypercube instead.
struct SearchSpace {
  std::vector<Bound> bounds;
  std::vector<int> grid;
  std::vector<bool> integer;  // empty: only p15 of model Four is integer
};

enum class Objective { NetProfit, RecoveryRatio, ProfitFactor };

std::string_view to_string(Objective o);
std::optional<Objective> parse_objective(std::string_view name);

struct TraceEntry {
  std::vector<double> params;
  double objective = 0;
};

struct OptimizationResult {
  ModelParams best_params;
  double best_objective = 0;
  std::size_t evaluations = 0;
  std::vector<TraceEntry> trace;
};

struct OptimizeOptions {
  Objective objective = Objective::NetProfit;
  std::size_t budget = 1000;
  std::uint64_t seed = 42;
  StrategyConfig strategy;
  ExecutionConfig execution;
  unsigned threads = 1;  // concurrent objective evaluations in the seeding phase
};

/// Backtest objective for one parameter vector; any model or ledger failure
/// scores -inf.
double evaluate_objective(const BarSeries& bars, const ModelParams& params, const OptimizeOptions& options);

/// Grid (or Latin hypercube) seeding followed by Nelder–Mead refinement of the
/// continuous dimensions from the best seed, restarting until the budget is
/// spent. The evaluation sequence never depends on the budget, so a larger
/// budget extends the trace of a smaller one.
OptimizationResult optimize(const BarSeries& bars, ModelKind kind, const SearchSpace& space,
                            const OptimizeOptions& options);

}  // namespace ktrend
