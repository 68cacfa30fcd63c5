// kalman_trend: smooth price series, backtest the Kalman prediction strategy,
// search model parameters, and replay trade ledgers.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ktrend/backtest.hpp"
#include "ktrend/io.hpp"
#include "ktrend/kalman.hpp"
#include "ktrend/lag_algebra.hpp"
#include "ktrend/market_data.hpp"
#include "ktrend/models.hpp"
#include "ktrend/optimizer.hpp"
#include "ktrend/strategy.hpp"

namespace fs = std::filesystem;
using namespace ktrend;

namespace {

constexpr int kExitError = 2;
constexpr int kExitEmptyLedger = 3;

// Files written by the current command; removed unless commit() is called.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
  ~OutputSet() {
    if (committed_) return;
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

  template <typename Writer>
  void write(const std::string& name, Writer&& writer) {
    const fs::path path = dir_ / name;
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
    written_.push_back(path);
    writer(out);
    out.flush();
    if (!out) throw Error(ErrorKind::InvalidArgument, "failed writing " + path.string());
    spdlog::info("wrote {}", path.string());
  }

  void commit() { committed_ = true; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

std::vector<double> parse_param_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell == "-" || cell.empty()) {
      out.push_back(0.0);
      continue;
    }
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidParams, "bad parameter '" + cell + "'");
    }
  }
  return out;
}

// --model is a JSON config path or a model name; --params overrides values.
ModelParams resolve_model(const std::string& model, const std::string& params, ModelKind fallback) {
  if (!model.empty() && fs::is_regular_file(model)) {
    ModelParams cfg = io::load_model_config(model);
    return params.empty() ? cfg : ModelParams(cfg.kind(), parse_param_list(params));
  }
  ModelKind kind = fallback;
  if (!model.empty()) {
    auto parsed = parse_model_kind(model);
    if (!parsed) throw Error(ErrorKind::InvalidParams, "'" + model + "' is neither a model name nor a config file");
    kind = *parsed;
  }
  return params.empty() ? reference_params(kind) : ModelParams(kind, parse_param_list(params));
}

struct Common {
  std::string input;
  std::string model;
  std::string params;
  double offset = 0.0;
  int warmup = -1;
  double point_value = 50.0;
  double commission = 4.0;
  int contracts = 1;
  std::string out = ".";

  StrategyConfig strategy() const {
    StrategyConfig cfg;
    cfg.offset = offset;
    if (warmup >= 0) cfg.warmup = static_cast<std::size_t>(warmup);
    return cfg;
  }

  ExecutionConfig execution() const {
    ExecutionConfig cfg{point_value, commission, contracts};
    cfg.validate();
    return cfg;
  }
};

void add_strategy_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--offset", c.offset, "Band around the last close, index points")->check(CLI::NonNegativeNumber);
  cmd->add_option("--warmup", c.warmup, "Warm-up bars (default max(20, d))");
}

void add_execution_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--point-value", c.point_value, "USD per index point")->capture_default_str();
  cmd->add_option("--commission", c.commission, "Round-trip commission per contract, USD")->capture_default_str();
  cmd->add_option("--contracts", c.contracts, "Contracts per trade")->capture_default_str();
}

int cmd_smooth(const Common& c, const std::string& indicator, int period) {
  const BarSeries bars = load_csv(c.input);
  const Eigen::VectorXd closes = bars.closes();

  std::vector<io::OverlayRow> rows(bars.size());
  for (std::size_t t = 0; t < bars.size(); ++t) {
    rows[t].date = bars[t].date;
    rows[t].close = bars[t].close;
  }

  if (auto kind = parse_model_kind(indicator); kind && indicator.starts_with("kf")) {
    const ModelParams params = resolve_model(c.model.empty() ? indicator : c.model, c.params, *kind);
    const std::size_t warmup = effective_warmup(c.strategy(), params);
    const Spec spec = build_model(params, bars);
    validate(spec);
    const auto filtered = filter_series(spec, closes, warmup);
    for (std::size_t t = 0; t < bars.size(); ++t) {
      rows[t].predicted = filtered[t].predicted;
      rows[t].corrected = filtered[t].corrected;
      rows[t].indicator = filtered[t].corrected;
      rows[t].warmup = t < warmup;
    }
  } else {
    Eigen::VectorXd smoothed;
    Eigen::Index warm = 0;
    if (indicator == "sma") {
      const auto w = sma(period);
      smoothed = weighted_ma(closes, w);
      warm = w.size() - 1;
    } else if (indicator == "ema") {
      smoothed = ema_series(closes, period);
      warm = ema_warmup(period, 1);
    } else if (indicator == "dema") {
      smoothed = dema(closes, period);
      warm = ema_warmup(period, 2);
    } else if (indicator == "tema") {
      smoothed = tema(closes, period);
      warm = ema_warmup(period, 3);
    } else {
      throw Error(ErrorKind::InvalidArgument, "unknown indicator '" + indicator + "'");
    }
    for (std::size_t t = 0; t < bars.size(); ++t) {
      const double v = smoothed[static_cast<Eigen::Index>(t)];
      rows[t].indicator = rows[t].predicted = rows[t].corrected = v;
      rows[t].warmup = static_cast<Eigen::Index>(t) < warm;
    }
  }

  OutputSet outputs(c.out);
  outputs.write("overlay.csv", [&](std::ostream& o) { io::write_overlay_csv(o, rows); });
  outputs.commit();
  return 0;
}

int write_ledger_outputs(OutputSet& outputs, const std::vector<Trade>& trades, const std::vector<EquityPoint>& equity,
                         std::optional<DateRange> span) {
  outputs.write("trades.csv", [&](std::ostream& o) { io::write_trades_csv(o, trades); });
  outputs.write("equity.csv", [&](std::ostream& o) { io::write_equity_csv(o, equity); });
  if (trades.empty()) {
    // Keep the header-only ledger so callers can see nothing traded, and drop
    // any report left over from an earlier run.
    std::error_code ec;
    fs::remove(outputs.dir() / "report.json", ec);
    outputs.commit();
    spdlog::error("EmptyLedger: no closed trades");
    return kExitEmptyLedger;
  }
  const auto report = compute_report(trades, equity, span);
  outputs.write("report.json", [&](std::ostream& o) { o << io::report_json(report) << '\n'; });
  outputs.commit();
  std::cout << "trades " << report.all.num_trades << "  net profit " << report.all.net_profit << '\n';
  return 0;
}

int cmd_backtest(const Common& c) {
  const BarSeries bars = load_csv(c.input);
  const ModelParams params = resolve_model(c.model, c.params, ModelKind::Four);
  spdlog::info("backtest model {} on {} bars", to_string(params.kind()), bars.size());
  const auto signals = run_strategy(bars, params, c.strategy());
  const auto exec = execute(signals, bars, c.execution());
  OutputSet outputs(c.out);
  return write_ledger_outputs(outputs, exec.trades, exec.equity, std::nullopt);
}

int cmd_replay(const Common& c, bool chain) {
  const auto rows = io::load_ledger_csv(c.input);
  const auto trades = replay_ledger(rows, c.execution(), chain);
  OutputSet outputs(c.out);
  return write_ledger_outputs(outputs, trades, closed_trade_equity(trades), std::nullopt);
}

int cmd_optimize(const Common& c, const std::string& space_path, long long budget, long long seed, unsigned threads) {
  const BarSeries bars = load_csv(c.input);
  io::SearchConfig cfg = io::load_search_config(space_path);
  if (!c.model.empty()) {
    auto kind = parse_model_kind(c.model);
    if (!kind || *kind != cfg.kind)
      throw Error(ErrorKind::InvalidSpace, "--model disagrees with the search space model");
  }
  if (budget > 0) cfg.budget = static_cast<std::size_t>(budget);
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);

  OptimizeOptions options;
  options.objective = cfg.objective;
  options.budget = cfg.budget;
  options.seed = cfg.seed;
  options.strategy = c.strategy();
  options.execution = c.execution();
  options.threads = threads;

  spdlog::info("optimize model {} budget {} seed {}", to_string(cfg.kind), cfg.budget, cfg.seed);
  const auto result = optimize(bars, cfg.kind, cfg.space, options);

  OutputSet outputs(c.out);
  outputs.write("result.json", [&](std::ostream& o) { o << io::optimization_json(result, cfg) << '\n'; });
  outputs.write("trace.csv", [&](std::ostream& o) { io::write_trace_csv(o, result); });
  outputs.commit();
  std::cout << "best " << to_string(cfg.objective) << ' ' << result.best_objective << " after "
            << result.evaluations << " evaluations\n";
  return 0;
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("kalman_trend");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("KALMAN_TREND_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Kalman-filter trend toolkit: smoothing, backtests, parameter search"};
  app.require_subcommand(1);

  Common common;
  std::string indicator = "kf1";
  int period = 12;
  bool chain = false;
  std::string space_path;
  long long budget = 0;
  long long seed = -1;
  unsigned threads = 1;

  auto* smooth = app.add_subcommand("smooth", "Write overlay.csv with an indicator over the closes");
  smooth->add_option("--input", common.input, "Bar CSV")->required()->check(CLI::ExistingFile);
  smooth->add_option("--indicator", indicator, "sma|ema|dema|tema|kf1|kf2|kf3|kf4")
      ->check(CLI::IsMember({"sma", "ema", "dema", "tema", "kf1", "kf2", "kf3", "kf4"}))
      ->capture_default_str();
  smooth->add_option("--period", period, "Moving-average period")->check(CLI::PositiveNumber)->capture_default_str();
  smooth->add_option("--model", common.model, "Model config JSON or name (kf indicators)");
  smooth->add_option("--params", common.params, "Comma-separated p1..pK");
  add_strategy_flags(smooth, common);
  smooth->add_option("--out", common.out, "Output directory")->capture_default_str();

  auto* backtest = app.add_subcommand("backtest", "Run the strategy; write trades.csv, report.json, equity.csv");
  backtest->add_option("--input", common.input, "Bar CSV")->required()->check(CLI::ExistingFile);
  backtest->add_option("--model", common.model, "Model config JSON or name (default four)");
  backtest->add_option("--params", common.params, "Comma-separated p1..pK");
  add_strategy_flags(backtest, common);
  add_execution_flags(backtest, common);
  backtest->add_option("--out", common.out, "Output directory")->capture_default_str();

  auto* opt = app.add_subcommand("optimize", "Search parameters; write result.json and trace.csv");
  opt->add_option("--input", common.input, "Bar CSV")->required()->check(CLI::ExistingFile);
  opt->add_option("--space", space_path, "Search-space JSON")->required()->check(CLI::ExistingFile);
  opt->add_option("--model", common.model, "Model name (must match the space)");
  opt->add_option("--budget", budget, "Override evaluation budget")->check(CLI::PositiveNumber);
  opt->add_option("--seed", seed, "Override seed")->check(CLI::NonNegativeNumber);
  opt->add_option("--threads", threads, "Concurrent evaluations while seeding")->capture_default_str();
  add_strategy_flags(opt, common);
  add_execution_flags(opt, common);
  opt->add_option("--out", common.out, "Output directory")->capture_default_str();

  auto* replay = app.add_subcommand("replay", "Recompute a trade ledger from prices");
  replay->add_option("--input", common.input, "Ledger CSV")->required()->check(CLI::ExistingFile);
  replay->add_flag("--chain", chain, "Enter each trade at the previous exit price");
  add_execution_flags(replay, common);
  replay->add_option("--out", common.out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (smooth->parsed()) return cmd_smooth(common, indicator, period);
    if (backtest->parsed()) return cmd_backtest(common);
    if (opt->parsed()) return cmd_optimize(common, space_path, budget, seed, threads);
    if (replay->parsed()) return cmd_replay(common, chain);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.kind() == ErrorKind::EmptyLedger ? kExitEmptyLedger : kExitError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }
  return 0;
}
