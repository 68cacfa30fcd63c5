#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace ktrend {

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD). Returns nullopt on any
/// syntax error or an impossible date such as 2015-02-30.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

/// One daily OHLCV observation.
struct Bar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  std::optional<double> volume;
};

/// Ordered, validated daily bars of one instrument. Immutable once built:
/// every constructor path checks price ranges and strictly increasing dates.
class BarSeries {
 public:
  BarSeries() = default;
  explicit BarSeries(std::vector<Bar> bars, std::string instrument = {});

  std::size_t size() const noexcept { return bars_.size(); }
  bool empty() const noexcept { return bars_.empty(); }
  const Bar& operator[](std::size_t i) const { return bars_[i]; }
  const Bar& front() const { return bars_.front(); }
  const Bar& back() const { return bars_.back(); }
  auto begin() const noexcept { return bars_.begin(); }
  auto end() const noexcept { return bars_.end(); }
  std::span<const Bar> bars() const noexcept { return bars_; }
  const std::string& instrument() const noexcept { return instrument_; }

  Eigen::VectorXd closes() const;

  /// Copy with the close of bar i replaced (high/low widened as needed).
  /// Used for perturbation checks.
  BarSeries with_close(std::size_t i, double close) const;

 private:
  std::vector<Bar> bars_;
  std::string instrument_;
};

struct CsvOptions {
  std::string instrument;
  /// When set, every price must be a multiple of this tick (0.25 for E-mini).
  std::optional<double> tick_size;
};

/// Reads `date,open,high,low,close[,volume]` with a header row.
BarSeries parse_csv(std::istream& source, const CsvOptions& options = {});
BarSeries load_csv(const std::string& path, const CsvOptions& options = {});

/// Writes the same format; numbers carry at most 6 decimals, trailing zeros trimmed.
void serialize_csv(const BarSeries& series, std::ostream& sink);

/// Shortest decimal with at most `max_decimals` places, trailing zeros trimmed.
std::string format_decimal(double value, int max_decimals = 6);

enum class SynthKind { RandomWalk, Trend, Range };

std::optional<SynthKind> parse_synth_kind(std::string_view name);

struct SynthOptions {
  double start_price = 2000.0;
  double trend_slope = 1.0;   // points per bar for Trend
  double range_band = 50.0;   // half-width around start_price for Range
  double range_period = 20.0; // bars per oscillation for Range
  Date start_date = Date{std::chrono::year{2015} / 3 / 2};
};

/// Deterministic synthetic daily bars on weekdays. Closes follow the named
/// process with Gaussian noise of stddev `noise`; open is the previous close
/// and high/low bracket open/close.
BarSeries synthesize(SynthKind kind, std::size_t n, std::uint64_t seed, double noise,
                     const SynthOptions& options = {});

}  // namespace ktrend
