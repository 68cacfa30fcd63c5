#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ktrend/market_data.hpp"
#include "ktrend/strategy.hpp"

namespace ktrend {

enum class Direction { Long, Short };

std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view text);

constexpr double sign(Direction d) { return d == Direction::Long ? 1.0 : -1.0; }

struct ExecutionConfig {
  double point_value = 50.0;            // USD per index point (E-mini S&P)
  double commission_round_trip = 4.0;   // USD per contract
  int contracts = 1;

  void validate() const;
  double commission() const { return commission_round_trip * contracts; }
};

/// One closed round trip.
struct Trade {
  Direction direction = Direction::Long;
  Date entry_date{};
  Date exit_date{};
  double entry_price = 0;
  double exit_price = 0;
  double profit = 0;          // net of commission
  double cumulative_pnl = 0;
  double commission = 0;
  int days_in_position = 1;   // bars held, both endpoints included
};

/// Per-bar equity: realized PnL plus the mark of the open position, split by side.
struct EquityPoint {
  Date date{};
  double closed_long = 0;
  double closed_short = 0;
  double open_long = 0;
  double open_short = 0;

  double closed_pnl() const { return closed_long + closed_short; }
  double mtm_pnl() const { return closed_pnl() + open_long + open_short; }
};

struct ExecutionResult {
  std::vector<Trade> trades;
  std::vector<EquityPoint> equity;
};

double trade_profit(Direction d, double entry, double exit, const ExecutionConfig& cfg);

/// Fills at the signal bar's close, stop-and-reverse: an opposite signal closes
/// the open trade and opens the reverse on the same close. Any open position
/// is closed at the final bar.
ExecutionResult execute(std::span<const Signal> signals, const BarSeries& bars, const ExecutionConfig& cfg);

struct ReplayRow {
  Direction direction = Direction::Long;
  double entry_price = 0;
  double exit_price = 0;
  std::optional<Date> entry_date;
  std::optional<Date> exit_date;
  std::optional<int> days_in_position;
};

/// Recomputes profit and cumulative PnL from prices. With `chain_entries`,
/// row i (i ≥ 1) enters at row i-1's exit price.
std::vector<Trade> replay_ledger(std::span<const ReplayRow> rows, const ExecutionConfig& cfg,
                                 bool chain_entries = false);

/// Closed-trade equity sampled at each exit.
std::vector<EquityPoint> closed_trade_equity(std::span<const Trade> trades);

struct DateRange {
  Date first{};
  Date last{};
};

struct SideStats {
  double net_profit = 0;
  double gross_profit = 0;
  double gross_loss = 0;  // ≤ 0
  double total_commission = 0;
  double drawdown = 0;               // marked on the equity series
  double closed_trade_drawdown = 0;  // marked on trade exits only
  double recovery_ratio = 0;
  double sharpe_ratio = 0;           // monthly PnL, annualized by √12
  double profit_factor = 0;          // +inf when there are no losses
  int num_trades = 0;
  int winning_trades = 0;
  double avg_trade_profit = 0;
  double avg_winning_trade = 0;
  double largest_winning_trade = 0;
  int max_consecutive_winners = 0;
  int losing_trades = 0;
  double avg_losing_trade = 0;
  double largest_losing_trade = 0;
  int max_consecutive_losers = 0;
  double ratio_avg_win_avg_loss = 0;
  double winning_over_total = 0;
  double avg_time_in_market_days = 0;
  double profit_per_month = 0;
  int max_time_to_recover_days = 0;
};

struct PerformanceReport {
  SideStats all;
  SideStats long_side;
  SideStats short_side;
  DateRange span;
};

/// Average days per month used to turn a calendar span into months.
inline constexpr double kDaysPerMonth = 30.4375;

/// Statistics block for all trades and each side. Trades must be in exit
/// order. An empty `equity` falls back to closed-trade marks; a missing span
/// runs from the first entry to the last exit. Throws EmptyLedger.
PerformanceReport compute_report(std::span<const Trade> trades, std::span<const EquityPoint> equity,
                                 std::optional<DateRange> span = std::nullopt);

}  // namespace ktrend
