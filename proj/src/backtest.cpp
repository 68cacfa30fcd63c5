#include "ktrend/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

namespace ktrend {

std::string_view to_string(Direction d) { return d == Direction::Long ? "Long" : "Short"; }

std::optional<Direction> parse_direction(std::string_view text) {
  if (text == "Long" || text == "long" || text == "L") return Direction::Long;
  if (text == "Short" || text == "short" || text == "S") return Direction::Short;
  return std::nullopt;
}

void ExecutionConfig::validate() const {
  if (!(point_value > 0)) throw Error(ErrorKind::InvalidArgument, "point value must be > 0");
  if (!(commission_round_trip >= 0)) throw Error(ErrorKind::InvalidArgument, "commission must be >= 0");
  if (contracts < 1) throw Error(ErrorKind::InvalidArgument, "contracts must be >= 1");
}

double trade_profit(Direction d, double entry, double exit, const ExecutionConfig& cfg) {
  return sign(d) * (exit - entry) * cfg.point_value * cfg.contracts - cfg.commission();
}

ExecutionResult execute(std::span<const Signal> signals, const BarSeries& bars, const ExecutionConfig& cfg) {
  cfg.validate();
  ExecutionResult result;
  if (bars.empty()) return result;

  struct Open {
    Direction dir;
    std::size_t bar;
    double price;
  };
  std::optional<Open> pos;
  double closed[2] = {0, 0};  // long, short
  double cumulative = 0;

  auto close_position = [&](std::size_t t) {
    const double exit = bars[t].close;
    Trade tr;
    tr.direction = pos->dir;
    tr.entry_date = bars[pos->bar].date;
    tr.exit_date = bars[t].date;
    tr.entry_price = pos->price;
    tr.exit_price = exit;
    tr.commission = cfg.commission();
    tr.profit = trade_profit(pos->dir, pos->price, exit, cfg);
    cumulative += tr.profit;
    tr.cumulative_pnl = cumulative;
    tr.days_in_position = static_cast<int>(t - pos->bar) + 1;
    closed[pos->dir == Direction::Long ? 0 : 1] += tr.profit;
    result.trades.push_back(tr);
    pos.reset();
  };

  std::size_t next = 0;
  result.equity.reserve(bars.size());
  for (std::size_t t = 0; t < bars.size(); ++t) {
    while (next < signals.size() && signals[next].at < t) ++next;  // tolerate duplicates
    if (next < signals.size() && signals[next].at == t) {
      const Target target = signals[next].target;
      if (target != Target::Hold) {
        const Direction want = target == Target::Long ? Direction::Long : Direction::Short;
        if (pos && pos->dir != want) close_position(t);
        if (!pos) pos = Open{want, t, bars[t].close};
      }
    }
    if (pos && t + 1 == bars.size()) close_position(t);

    EquityPoint ep;
    ep.date = bars[t].date;
    ep.closed_long = closed[0];
    ep.closed_short = closed[1];
    if (pos) {
      const double mark = sign(pos->dir) * (bars[t].close - pos->price) * cfg.point_value * cfg.contracts;
      (pos->dir == Direction::Long ? ep.open_long : ep.open_short) = mark;
    }
    result.equity.push_back(ep);
  }
  if (next < signals.size() && signals.back().at >= bars.size())
    throw Error(ErrorKind::InvalidArgument, "signal refers to a bar past the end of the series");
  return result;
}

namespace {

int weekdays_inclusive(Date from, Date to) {
  if (to < from) return 1;
  int count = 0;
  for (Date d = from; d <= to; d += std::chrono::days{1}) {
    std::chrono::weekday wd{d};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) ++count;
  }
  return std::max(count, 1);
}

}  // namespace

std::vector<Trade> replay_ledger(std::span<const ReplayRow> rows, const ExecutionConfig& cfg, bool chain_entries) {
  cfg.validate();
  std::vector<Trade> trades;
  trades.reserve(rows.size());
  double cumulative = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    Trade tr;
    tr.direction = row.direction;
    tr.entry_price = chain_entries && i > 0 ? rows[i - 1].exit_price : row.entry_price;
    tr.exit_price = row.exit_price;
    tr.entry_date = row.entry_date.value_or(Date{});
    tr.exit_date = row.exit_date.value_or(tr.entry_date);
    tr.commission = cfg.commission();
    tr.profit = trade_profit(row.direction, tr.entry_price, tr.exit_price, cfg);
    cumulative += tr.profit;
    tr.cumulative_pnl = cumulative;
    if (row.days_in_position)
      tr.days_in_position = *row.days_in_position;
    else if (row.entry_date && row.exit_date)
      tr.days_in_position = weekdays_inclusive(*row.entry_date, *row.exit_date);
    trades.push_back(tr);
  }
  return trades;
}

std::vector<EquityPoint> closed_trade_equity(std::span<const Trade> trades) {
  std::vector<EquityPoint> out;
  out.reserve(trades.size());
  EquityPoint ep;
  for (const auto& tr : trades) {
    (tr.direction == Direction::Long ? ep.closed_long : ep.closed_short) += tr.profit;
    ep.date = tr.exit_date;
    out.push_back(ep);
  }
  return out;
}

namespace {

struct Mark {
  Date date;
  double value;
};

double max_drawdown(std::span<const Mark> marks) {
  double peak = 0, worst = 0;
  for (const auto& m : marks) {
    peak = std::max(peak, m.value);
    worst = std::min(worst, m.value - peak);
  }
  return worst;
}

// Longest stretch from an equity high until equity first returns to it. A
// drawdown still open at the end of the span counts up to span.last.
int max_time_to_recover(std::span<const Mark> marks, const DateRange& span) {
  double peak = 0;
  Date peak_date = span.first;
  bool underwater = false;
  long longest = 0;
  for (const auto& m : marks) {
    if (m.value >= peak) {
      if (underwater) longest = std::max<long>(longest, (m.date - peak_date).count());
      underwater = false;
      peak = m.value;
      peak_date = m.date;
    } else {
      underwater = true;
    }
  }
  if (underwater) longest = std::max<long>(longest, (span.last - peak_date).count());
  return static_cast<int>(longest);
}

double monthly_sharpe(std::span<const Trade> trades, const DateRange& span) {
  using namespace std::chrono;
  auto month_index = [](Date d) {
    year_month_day ymd{d};
    return static_cast<int>(ymd.year()) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
  };
  const int first = month_index(span.first);
  const int last = month_index(span.last);
  if (last < first + 1) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> pnl(static_cast<std::size_t>(last - first + 1), 0.0);
  for (const auto& tr : trades) {
    int m = std::clamp(month_index(tr.exit_date), first, last);
    pnl[static_cast<std::size_t>(m - first)] += tr.profit;
  }
  const double n = static_cast<double>(pnl.size());
  const double mean = std::accumulate(pnl.begin(), pnl.end(), 0.0) / n;
  double ss = 0;
  for (double v : pnl) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));
  if (!(sd > 0)) return std::numeric_limits<double>::quiet_NaN();
  return mean / sd * std::sqrt(12.0);
}

SideStats side_stats(std::span<const Trade> trades, const std::vector<Mark>& equity_marks, const DateRange& span) {
  SideStats s;
  const double inf = std::numeric_limits<double>::infinity();
  int run_win = 0, run_loss = 0;
  double win_sum = 0, loss_sum = 0, days = 0;
  std::vector<Mark> closed_marks;
  closed_marks.reserve(trades.size());
  double cumulative = 0;
  for (const auto& tr : trades) {
    ++s.num_trades;
    s.total_commission += tr.commission;
    days += tr.days_in_position;
    cumulative += tr.profit;
    closed_marks.push_back({tr.exit_date, cumulative});
    if (tr.profit > 0) {
      ++s.winning_trades;
      win_sum += tr.profit;
      s.largest_winning_trade = std::max(s.largest_winning_trade, tr.profit);
      run_loss = 0;
      s.max_consecutive_winners = std::max(s.max_consecutive_winners, ++run_win);
    } else {
      // Break-even counts as a loss.
      ++s.losing_trades;
      loss_sum += tr.profit;
      s.largest_losing_trade = std::min(s.largest_losing_trade, tr.profit);
      run_win = 0;
      s.max_consecutive_losers = std::max(s.max_consecutive_losers, ++run_loss);
    }
  }
  s.gross_profit = win_sum;
  s.gross_loss = loss_sum;
  s.net_profit = win_sum + loss_sum;
  s.profit_factor = loss_sum < 0 ? win_sum / -loss_sum : inf;
  if (s.num_trades == 0) return s;

  s.avg_trade_profit = s.net_profit / s.num_trades;
  s.avg_winning_trade = s.winning_trades ? win_sum / s.winning_trades : 0.0;
  s.avg_losing_trade = s.losing_trades ? loss_sum / s.losing_trades : 0.0;
  s.ratio_avg_win_avg_loss = s.avg_losing_trade < 0 ? s.avg_winning_trade / -s.avg_losing_trade : inf;
  s.winning_over_total = static_cast<double>(s.winning_trades) / s.num_trades;
  s.avg_time_in_market_days = days / s.num_trades;

  const std::vector<Mark>& marks = equity_marks.empty() ? closed_marks : equity_marks;
  s.closed_trade_drawdown = max_drawdown(closed_marks);
  s.drawdown = max_drawdown(marks);
  s.recovery_ratio = s.drawdown < 0 ? s.net_profit / -s.drawdown : inf;
  s.max_time_to_recover_days = max_time_to_recover(marks, span);

  const double span_days = std::max<double>(1.0, static_cast<double>((span.last - span.first).count()));
  s.profit_per_month = s.net_profit / (span_days / kDaysPerMonth);
  s.sharpe_ratio = monthly_sharpe(trades, span);
  return s;
}

template <typename Pick>
std::vector<Mark> marks_from(std::span<const EquityPoint> equity, const DateRange& span, Pick pick) {
  std::vector<Mark> out;
  out.reserve(equity.size());
  for (const auto& ep : equity)
    if (ep.date >= span.first && ep.date <= span.last) out.push_back({ep.date, pick(ep)});
  return out;
}

}  // namespace

PerformanceReport compute_report(std::span<const Trade> trades, std::span<const EquityPoint> equity,
                                 std::optional<DateRange> span) {
  if (trades.empty()) throw Error(ErrorKind::EmptyLedger, "no closed trades to report on");

  PerformanceReport report;
  if (span) {
    report.span = *span;
  } else {
    report.span.first = trades.front().entry_date;
    report.span.last = trades.front().exit_date;
    for (const auto& tr : trades) {
      report.span.first = std::min(report.span.first, tr.entry_date);
      report.span.last = std::max(report.span.last, tr.exit_date);
    }
  }

  std::vector<Trade> longs, shorts;
  for (const auto& tr : trades) (tr.direction == Direction::Long ? longs : shorts).push_back(tr);

  auto all_marks = marks_from(equity, report.span, [](const EquityPoint& e) { return e.mtm_pnl(); });
  auto long_marks = marks_from(equity, report.span, [](const EquityPoint& e) { return e.closed_long + e.open_long; });
  auto short_marks =
      marks_from(equity, report.span, [](const EquityPoint& e) { return e.closed_short + e.open_short; });

  report.all = side_stats(trades, all_marks, report.span);
  report.long_side = side_stats(longs, long_marks, report.span);
  report.short_side = side_stats(shorts, short_marks, report.span);
  return report;
}

}  // namespace ktrend
