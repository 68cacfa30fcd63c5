#include "ktrend/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace ktrend::io {

using nlohmann::json;

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s == "-0.0" || s == "-0.00") s.erase(0, 1);
  return s;
}

json number(double v, int decimals = -1) {
  if (!std::isfinite(v)) return nullptr;
  if (decimals < 0) return v;
  const double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

ModelKind kind_from(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string())
    throw Error(ErrorKind::InvalidParams, std::string("config needs a \"") + key + "\" string");
  auto kind = parse_model_kind(j[key].get<std::string>());
  if (!kind) throw Error(ErrorKind::InvalidParams, "unknown model '" + j[key].get<std::string>() + "'");
  return *kind;
}

json parse_json(const std::string& text, ErrorKind kind) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(kind, std::string("invalid JSON: ") + e.what());
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(0, 1);
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line) + ": bad number '" + s + "'");
}

json side_json(const SideStats& s) {
  return json{
      {"net_profit", number(s.net_profit, 1)},
      {"gross_profit", number(s.gross_profit, 1)},
      {"gross_loss", number(s.gross_loss, 1)},
      {"total_commission", number(s.total_commission, 1)},
      {"drawdown", number(s.drawdown, 1)},
      {"closed_trade_drawdown", number(s.closed_trade_drawdown, 1)},
      {"recovery_ratio", number(s.recovery_ratio)},
      {"sharpe_ratio", number(s.sharpe_ratio)},
      {"profit_factor", number(s.profit_factor)},
      {"num_trades", s.num_trades},
      {"winning_trades", s.winning_trades},
      {"avg_trade_profit", number(s.avg_trade_profit, 1)},
      {"avg_winning_trade", number(s.avg_winning_trade, 1)},
      {"largest_winning_trade", number(s.largest_winning_trade, 1)},
      {"max_consecutive_winners", s.max_consecutive_winners},
      {"losing_trades", s.losing_trades},
      {"avg_losing_trade", number(s.avg_losing_trade, 1)},
      {"largest_losing_trade", number(s.largest_losing_trade, 1)},
      {"max_consecutive_losers", s.max_consecutive_losers},
      {"ratio_avg_win_avg_loss", number(s.ratio_avg_win_avg_loss)},
      {"winning_over_total", number(s.winning_over_total)},
      {"avg_time_in_market_days", number(s.avg_time_in_market_days)},
      {"profit_per_month", number(s.profit_per_month, 1)},
      {"max_time_to_recover_days", s.max_time_to_recover_days},
  };
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ModelParams parse_model_config(const std::string& json_text) {
  const json j = parse_json(json_text, ErrorKind::InvalidParams);
  const ModelKind kind = kind_from(j, "model");
  if (!j.contains("params") || !j["params"].is_array())
    throw Error(ErrorKind::InvalidParams, "model config needs a \"params\" array");
  std::vector<double> p;
  for (const auto& v : j["params"]) {
    if (v.is_null()) p.push_back(0.0);
    else if (v.is_number()) p.push_back(v.get<double>());
    else throw Error(ErrorKind::InvalidParams, "params must be numbers");
  }
  return ModelParams(kind, std::move(p));
}

ModelParams load_model_config(const std::string& path) { return parse_model_config(read_file(path)); }

std::string model_config_json(const ModelParams& params) {
  return json{{"model", std::string(to_string(params.kind()))}, {"params", params.values()}}.dump();
}

namespace {

SearchConfig search_config_from(const json& j) {
  SearchConfig cfg;
  try {
    cfg.kind = kind_from(j, "model");
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidSpace, e.what());
  }
  if (!j.contains("bounds") || !j["bounds"].is_array())
    throw Error(ErrorKind::InvalidSpace, "search config needs a \"bounds\" array");
  for (const auto& b : j["bounds"]) {
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
      throw Error(ErrorKind::InvalidSpace, "each bound must be [lo, hi]");
    cfg.space.bounds.push_back({b[0].get<double>(), b[1].get<double>()});
  }
  if (j.contains("grid") && !j["grid"].is_null()) cfg.space.grid = j["grid"].get<std::vector<int>>();
  if (j.contains("integer") && !j["integer"].is_null()) cfg.space.integer = j["integer"].get<std::vector<bool>>();
  if (j.contains("objective")) {
    auto obj = parse_objective(j["objective"].get<std::string>());
    if (!obj) throw Error(ErrorKind::InvalidSpace, "unknown objective");
    cfg.objective = *obj;
  }
  if (j.contains("budget")) {
    const auto b = j["budget"].get<long long>();
    if (b < 1) throw Error(ErrorKind::InvalidSpace, "budget must be >= 1");
    cfg.budget = static_cast<std::size_t>(b);
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  return cfg;
}

}  // namespace

SearchConfig parse_search_config(const std::string& json_text) {
  const json j = parse_json(json_text, ErrorKind::InvalidSpace);
  try {
    return search_config_from(j);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidSpace, std::string("search config: ") + e.what());
  }
}

SearchConfig load_search_config(const std::string& path) { return parse_search_config(read_file(path)); }

std::vector<ReplayRow> parse_ledger_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::MalformedRow, "line 1: missing header");
  std::map<std::string, std::size_t> col;
  auto header = split_csv(line);
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* name : {"direction", "entry_price", "exit_price"})
    if (!col.count(name)) throw Error(ErrorKind::MalformedRow, std::string("line 1: missing column ") + name);

  std::vector<ReplayRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line_no) + ": wrong field count");
    ReplayRow row;
    auto dir = parse_direction(cells[col["direction"]]);
    if (!dir) throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line_no) + ": bad direction");
    row.direction = *dir;
    row.entry_price = to_number(cells[col["entry_price"]], line_no);
    row.exit_price = to_number(cells[col["exit_price"]], line_no);
    for (auto [name, slot] : {std::pair{"entry_date", &row.entry_date}, std::pair{"exit_date", &row.exit_date}}) {
      if (!col.count(name)) continue;
      auto d = parse_date(cells[col[name]]);
      if (!d) throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line_no) + ": bad " + name);
      *slot = *d;
    }
    if (col.count("days_in_position") && !cells[col["days_in_position"]].empty())
      row.days_in_position = static_cast<int>(to_number(cells[col["days_in_position"]], line_no));
    rows.push_back(row);
  }
  return rows;
}

std::vector<ReplayRow> load_ledger_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + path);
  return parse_ledger_csv(in);
}

void write_trades_csv(std::ostream& out, const std::vector<Trade>& trades) {
  out << "trade,direction,entry_date,entry_price,exit_date,exit_price,profit,pnl,commission,days_in_position\n";
  for (std::size_t i = 0; i < trades.size(); ++i) {
    const auto& t = trades[i];
    out << i + 1 << ',' << to_string(t.direction) << ',' << format_date(t.entry_date) << ','
        << fixed(t.entry_price, 2) << ',' << format_date(t.exit_date) << ',' << fixed(t.exit_price, 2) << ','
        << fixed(t.profit, 1) << ',' << fixed(t.cumulative_pnl, 1) << ',' << fixed(t.commission, 1) << ','
        << t.days_in_position << '\n';
  }
}

void write_equity_csv(std::ostream& out, const std::vector<EquityPoint>& equity) {
  out << "date,closed_pnl,mtm_pnl\n";
  for (const auto& e : equity)
    out << format_date(e.date) << ',' << fixed(e.closed_pnl(), 1) << ',' << fixed(e.mtm_pnl(), 1) << '\n';
}

std::string report_json(const PerformanceReport& report) {
  json j{
      {"span", {{"first", format_date(report.span.first)}, {"last", format_date(report.span.last)}}},
      {"all", side_json(report.all)},
      {"long", side_json(report.long_side)},
      {"short", side_json(report.short_side)},
  };
  return j.dump(2);
}

std::string optimization_json(const OptimizationResult& result, const SearchConfig& config) {
  json j{
      {"model", std::string(to_string(result.best_params.kind()))},
      {"objective", std::string(to_string(config.objective))},
      {"best_params", result.best_params.values()},
      {"best_objective", number(result.best_objective)},
      {"evaluations", result.evaluations},
      {"budget", config.budget},
      {"seed", config.seed},
  };
  return j.dump(2);
}

void write_trace_csv(std::ostream& out, const OptimizationResult& result) {
  const std::size_t n = result.best_params.values().size();
  out << "evaluation";
  for (std::size_t i = 1; i <= n; ++i) out << ",p" << i;
  out << ",objective\n";
  for (std::size_t k = 0; k < result.trace.size(); ++k) {
    out << k + 1;
    for (double v : result.trace[k].params) out << ',' << format_decimal(v, 10);
    const double f = result.trace[k].objective;
    out << ',' << (std::isfinite(f) ? format_decimal(f, 6) : (f > 0 ? "inf" : "-inf")) << '\n';
  }
}

void write_overlay_csv(std::ostream& out, const std::vector<OverlayRow>& rows) {
  out << "date,close,indicator,predicted,corrected,warmup\n";
  for (const auto& r : rows)
    out << format_date(r.date) << ',' << fixed(r.close, 2) << ',' << fixed(r.indicator, 2) << ','
        << fixed(r.predicted, 2) << ',' << fixed(r.corrected, 2) << ',' << (r.warmup ? 1 : 0) << '\n';
}

}  // namespace ktrend::io
