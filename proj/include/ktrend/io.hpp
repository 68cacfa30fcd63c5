#pragma once

// File formats exchanged with the outside world: model and search-space JSON,
// ledger/equity/overlay CSV, report and optimization JSON.

#include <iosfwd>
#include <string>
#include <vector>

#include "ktrend/backtest.hpp"
#include "ktrend/models.hpp"
#include "ktrend/optimizer.hpp"

namespace ktrend::io {

/// {"model": "four", "params": [...]}; a null entry reads as 0.
ModelParams parse_model_config(const std::string& json_text);
ModelParams load_model_config(const std::string& path);
std::string model_config_json(const ModelParams& params);

struct SearchConfig {
  ModelKind kind = ModelKind::One;
  SearchSpace space;
  Objective objective = Objective::NetProfit;
  std::size_t budget = 1000;
  std::uint64_t seed = 42;
};

/// {"model":"four","bounds":[[lo,hi],...],"grid":[n1,...],"objective":"net_profit","budget":5000,"seed":42}
SearchConfig parse_search_config(const std::string& json_text);
SearchConfig load_search_config(const std::string& path);

/// Header-driven: needs direction, entry_price, exit_price; reads entry_date,
/// exit_date and days_in_position when present; ignores other columns.
std::vector<ReplayRow> parse_ledger_csv(std::istream& in);
std::vector<ReplayRow> load_ledger_csv(const std::string& path);

/// Trade ledger columns; currency with 1 decimal, prices with 2.
void write_trades_csv(std::ostream& out, const std::vector<Trade>& trades);
void write_equity_csv(std::ostream& out, const std::vector<EquityPoint>& equity);
std::string report_json(const PerformanceReport& report);

std::string optimization_json(const OptimizationResult& result, const SearchConfig& config);
void write_trace_csv(std::ostream& out, const OptimizationResult& result);

struct OverlayRow {
  Date date;
  double close = 0;
  double indicator = 0;
  double predicted = 0;
  double corrected = 0;
  bool warmup = false;
};

void write_overlay_csv(std::ostream& out, const std::vector<OverlayRow>& rows);

std::string read_file(const std::string& path);

}  // namespace ktrend::io
