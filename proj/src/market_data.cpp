#include "ktrend/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "ktrend/errors.hpp"

namespace ktrend {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto next = line.find(sep, pos);
    out.push_back(trim(line.substr(pos, next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string line_tag(std::size_t line) { return "line " + std::to_string(line); }

void check_bar(const Bar& b, const std::string& where) {
  if (!(b.open > 0 && b.high > 0 && b.low > 0 && b.close > 0))
    throw Error(ErrorKind::RangeViolation, where + ": prices must be strictly positive");
  if (b.high < b.low)
    throw Error(ErrorKind::RangeViolation, where + ": high < low");
  if (b.open < b.low || b.open > b.high || b.close < b.low || b.close > b.high)
    throw Error(ErrorKind::RangeViolation, where + ": open/close outside [low, high]");
  if (b.volume && *b.volume < 0)
    throw Error(ErrorKind::RangeViolation, where + ": negative volume");
}

bool on_tick(double price, double tick) {
  double q = price / tick;
  return std::abs(q - std::round(q)) < 1e-9 * std::max(1.0, std::abs(q));
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto field = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
    if (ec != std::errc{} || ptr != text.data() + pos + len) return std::nullopt;
    return v;
  };
  auto y = field(0, 4), m = field(5, 2), d = field(8, 2);
  if (!y || !m || !d) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month(static_cast<unsigned>(*m)),
                                  std::chrono::day(static_cast<unsigned>(*d))};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

std::string format_date(Date d) {
  std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_decimal(double value, int max_decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", max_decimals, value);
  std::string s(buf);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  if (s == "-0") s = "0";
  return s;
}

BarSeries::BarSeries(std::vector<Bar> bars, std::string instrument)
    : bars_(std::move(bars)), instrument_(std::move(instrument)) {
  for (std::size_t i = 0; i < bars_.size(); ++i) {
    check_bar(bars_[i], "bar " + std::to_string(i));
    if (i > 0 && bars_[i].date <= bars_[i - 1].date)
      throw Error(ErrorKind::OrderViolation,
                  "bar " + std::to_string(i) + ": dates must be strictly increasing");
  }
}

Eigen::VectorXd BarSeries::closes() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(bars_.size()));
  for (std::size_t i = 0; i < bars_.size(); ++i) out[static_cast<Eigen::Index>(i)] = bars_[i].close;
  return out;
}

BarSeries BarSeries::with_close(std::size_t i, double close) const {
  auto bars = bars_;
  auto& b = bars.at(i);
  b.close = close;
  b.high = std::max(b.high, close);
  b.low = std::min(b.low, close);
  return BarSeries(std::move(bars), instrument_);
}

BarSeries parse_csv(std::istream& source, const CsvOptions& options) {
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(source, line))
    throw Error(ErrorKind::MalformedRow, "line 1: missing header");
  ++line_no;
  auto header = split(line, ',');
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].remove_prefix(3);
  const std::vector<std::string_view> required{"date", "open", "high", "low", "close"};
  bool has_volume = header.size() == 6 && header[5] == "volume";
  if (header.size() < 5 || header.size() > 6 || !std::equal(required.begin(), required.end(), header.begin()) ||
      (header.size() == 6 && !has_volume))
    throw Error(ErrorKind::MalformedRow, "line 1: expected header date,open,high,low,close[,volume]");

  std::vector<Bar> bars;
  while (std::getline(source, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto where = line_tag(line_no);
    auto cells = split(line, ',');
    if (cells.size() != header.size())
      throw Error(ErrorKind::MalformedRow, where + ": expected " + std::to_string(header.size()) + " fields");

    Bar bar;
    auto date = parse_date(cells[0]);
    if (!date) throw Error(ErrorKind::MalformedRow, where + ": bad date '" + std::string(cells[0]) + "'");
    bar.date = *date;
    double* slots[] = {&bar.open, &bar.high, &bar.low, &bar.close};
    for (int k = 0; k < 4; ++k) {
      auto v = parse_number(cells[k + 1]);
      if (!v) throw Error(ErrorKind::MalformedRow, where + ": bad number '" + std::string(cells[k + 1]) + "'");
      *slots[k] = *v;
    }
    if (has_volume && !cells[5].empty()) {
      auto v = parse_number(cells[5]);
      if (!v) throw Error(ErrorKind::MalformedRow, where + ": bad volume '" + std::string(cells[5]) + "'");
      bar.volume = *v;
    }

    check_bar(bar, where);
    if (options.tick_size) {
      for (double p : {bar.open, bar.high, bar.low, bar.close})
        if (!on_tick(p, *options.tick_size))
          throw Error(ErrorKind::RangeViolation, where + ": price " + format_decimal(p) + " off tick grid");
    }
    if (!bars.empty() && bar.date <= bars.back().date)
      throw Error(ErrorKind::OrderViolation, where + ": date " + format_date(bar.date) +
                                                 " does not follow " + format_date(bars.back().date));
    bars.push_back(bar);
  }
  return BarSeries(std::move(bars), options.instrument);
}

BarSeries load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + path);
  return parse_csv(in, options);
}

void serialize_csv(const BarSeries& series, std::ostream& sink) {
  bool with_volume = std::any_of(series.begin(), series.end(), [](const Bar& b) { return b.volume.has_value(); });
  sink << "date,open,high,low,close" << (with_volume ? ",volume" : "") << '\n';
  for (const auto& b : series) {
    sink << format_date(b.date) << ',' << format_decimal(b.open) << ',' << format_decimal(b.high) << ','
         << format_decimal(b.low) << ',' << format_decimal(b.close);
    if (with_volume) sink << ',' << (b.volume ? format_decimal(*b.volume) : std::string{});
    sink << '\n';
  }
}

std::optional<SynthKind> parse_synth_kind(std::string_view name) {
  if (name == "random-walk") return SynthKind::RandomWalk;
  if (name == "trend") return SynthKind::Trend;
  if (name == "range") return SynthKind::Range;
  return std::nullopt;
}

BarSeries synthesize(SynthKind kind, std::size_t n, std::uint64_t seed, double noise, const SynthOptions& options) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "synthesize needs n >= 2");
  if (!(noise >= 0)) throw Error(ErrorKind::InvalidArgument, "noise must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double floor_price = 1.0;

  std::vector<double> closes(n);
  double level = options.start_price;
  for (std::size_t t = 0; t < n; ++t) {
    double eps = noise * gauss(rng);
    double c = 0.0;
    switch (kind) {
      case SynthKind::RandomWalk:
        level = t == 0 ? options.start_price : level + eps;
        if (level < floor_price) level = 2 * floor_price - level;  // reflect
        c = level;
        break;
      case SynthKind::Trend:
        c = options.start_price + options.trend_slope * static_cast<double>(t) + eps;
        break;
      case SynthKind::Range: {
        double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / options.range_period;
        c = options.start_price + 0.5 * options.range_band * std::sin(phase) + eps;
        c = std::clamp(c, options.start_price - options.range_band, options.start_price + options.range_band);
        break;
      }
    }
    closes[t] = std::max(c, floor_price);
  }

  std::vector<Bar> bars(n);
  Date day = options.start_date;
  auto is_weekend = [](Date d) {
    std::chrono::weekday wd{d};
    return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
  };
  while (is_weekend(day)) day += std::chrono::days{1};
  for (std::size_t t = 0; t < n; ++t) {
    Bar& b = bars[t];
    b.date = day;
    b.close = closes[t];
    b.open = t == 0 ? closes[0] : closes[t - 1];
    double wick = noise > 0 ? 0.5 * noise * std::abs(gauss(rng)) : 0.0;
    b.high = std::max(b.open, b.close) + wick;
    b.low = std::max(std::min(b.open, b.close) - wick, 0.5 * floor_price);
    do day += std::chrono::days{1};
    while (is_weekend(day));
  }
  return BarSeries(std::move(bars), "SYNTH");
}

}  // namespace ktrend
