#include "ktrend/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include <Eigen/Core>

namespace ktrend {

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::NetProfit: return "net_profit";
    case Objective::RecoveryRatio: return "recovery_ratio";
    case Objective::ProfitFactor: return "profit_factor";
  }
  return "?";
}

std::optional<Objective> parse_objective(std::string_view name) {
  if (name == "net_profit") return Objective::NetProfit;
  if (name == "recovery_ratio") return Objective::RecoveryRatio;
  if (name == "profit_factor") return Objective::ProfitFactor;
  return std::nullopt;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

double evaluate_objective(const BarSeries& bars, const ModelParams& params, const OptimizeOptions& options) {
  try {
    auto signals = run_strategy(bars, params, options.strategy);
    auto exec = execute(signals, bars, options.execution);
    auto report = compute_report(exec.trades, exec.equity);
    double v = 0;
    switch (options.objective) {
      case Objective::NetProfit: v = report.all.net_profit; break;
      case Objective::RecoveryRatio: v = report.all.recovery_ratio; break;
      case Objective::ProfitFactor: v = report.all.profit_factor; break;
    }
    return std::isnan(v) ? kNegInf : v;
  } catch (const Error&) {
    return kNegInf;
  }
}

namespace {

struct BudgetExhausted {};

// Bounds after clamping to the model's admissible region.
struct Box {
  std::vector<Bound> bounds;
  std::vector<bool> integer;

  std::size_t dim() const { return bounds.size(); }
  bool fixed(std::size_t i) const { return bounds[i].lo == bounds[i].hi; }

  double clamp(std::size_t i, double v) const {
    v = std::clamp(v, bounds[i].lo, bounds[i].hi);
    if (integer[i]) v = std::clamp(std::round(v), std::ceil(bounds[i].lo), std::floor(bounds[i].hi));
    return v;
  }
};

Box make_box(ModelKind kind, const SearchSpace& space) {
  const std::size_t n = param_count(kind);
  if (space.bounds.size() != n)
    throw Error(ErrorKind::InvalidSpace, "model " + std::string(to_string(kind)) + " needs " + std::to_string(n) +
                                             " bounds, got " + std::to_string(space.bounds.size()));
  if (!space.grid.empty() && space.grid.size() != n)
    throw Error(ErrorKind::InvalidSpace, "grid must list one count per parameter");
  if (!space.integer.empty() && space.integer.size() != n)
    throw Error(ErrorKind::InvalidSpace, "integer flags must list one entry per parameter");
  for (int g : space.grid)
    if (g < 1) throw Error(ErrorKind::InvalidSpace, "grid counts must be >= 1");

  Box box{space.bounds, space.integer};
  if (box.integer.empty()) {
    box.integer.assign(n, false);
    if (kind == ModelKind::Four) box.integer[14] = true;
  }

  const bool two_factor = kind == ModelKind::Three || kind == ModelKind::Four;
  const std::size_t r_index = two_factor ? 7 : 2;
  std::vector<std::size_t> p0_index;
  switch (kind) {
    case ModelKind::One: p0_index = {3}; break;
    case ModelKind::Two: p0_index = {3, 4}; break;
    default: p0_index = {8, 9}; break;
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto& b = box.bounds[i];
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi)
      throw Error(ErrorKind::InvalidSpace, "bound " + std::to_string(i + 1) + " must satisfy lo <= hi");
    double floor = -std::numeric_limits<double>::infinity();
    if (i == r_index) floor = 1e-9;
    if (std::find(p0_index.begin(), p0_index.end(), i) != p0_index.end()) floor = 0.0;
    if (kind == ModelKind::Four && i == 14) floor = 1.0;
    b.lo = std::max(b.lo, floor);
    if (b.hi < b.lo) throw Error(ErrorKind::InvalidSpace, "bound " + std::to_string(i + 1) + " lies outside the admissible region");
    if (box.integer[i] && std::ceil(b.lo) > std::floor(b.hi))
      throw Error(ErrorKind::InvalidSpace, "integer bound " + std::to_string(i + 1) + " contains no integer");
  }
  return box;
}

class Search {
 public:
  Search(const BarSeries& bars, ModelKind kind, Box box, const OptimizeOptions& options)
      : bars_(bars), kind_(kind), box_(std::move(box)), options_(options) {}

  double evaluate(std::vector<double> p) {
    if (trace_.size() >= options_.budget) throw BudgetExhausted{};
    const double f = score(p);
    record(std::move(p), f);
    return f;
  }

  // Evaluates a batch in order, possibly concurrently, stopping at the budget.
  void evaluate_batch(std::vector<std::vector<double>> batch) {
    const std::size_t room = options_.budget - std::min(options_.budget, trace_.size());
    const bool exhausted = batch.size() > room;
    batch.resize(std::min(batch.size(), room));
    std::vector<double> scores(batch.size());
    const unsigned workers = std::max(1u, std::min<unsigned>(options_.threads, static_cast<unsigned>(batch.size())));
    if (workers <= 1) {
      for (std::size_t i = 0; i < batch.size(); ++i) scores[i] = score(batch[i]);
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          for (std::size_t i = w; i < batch.size(); i += workers) scores[i] = score(batch[i]);
        });
      for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < batch.size(); ++i) record(std::move(batch[i]), scores[i]);
    if (exhausted) throw BudgetExhausted{};
  }

  const std::vector<double>& best() const { return best_; }
  double best_value() const { return best_f_; }
  std::vector<TraceEntry>& trace() { return trace_; }
  const Box& box() const { return box_; }

 private:
  double score(const std::vector<double>& p) const {
    try {
      return evaluate_objective(bars_, ModelParams(kind_, p), options_);
    } catch (const Error&) {
      return kNegInf;
    }
  }

  void record(std::vector<double> p, double f) {
    if (best_.empty() || f > best_f_ || (f == best_f_ && p < best_)) {
      best_ = p;
      best_f_ = f;
    }
    trace_.push_back({std::move(p), f});
  }

  const BarSeries& bars_;
  ModelKind kind_;
  Box box_;
  const OptimizeOptions& options_;
  std::vector<TraceEntry> trace_;
  std::vector<double> best_;
  double best_f_ = kNegInf;
};

std::vector<std::vector<double>> grid_points(const Box& box, const std::vector<int>& grid, std::size_t limit) {
  const std::size_t n = box.dim();
  std::vector<std::vector<double>> axes(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& b = box.bounds[i];
    const int count = box.fixed(i) ? 1 : grid[i];
    for (int k = 0; k < count; ++k) {
      double v = count == 1 ? 0.5 * (b.lo + b.hi) : b.lo + (b.hi - b.lo) * k / (count - 1);
      v = box.clamp(i, v);
      if (axes[i].empty() || axes[i].back() != v) axes[i].push_back(v);
    }
  }
  // Mixed-radix counter, last dimension fastest.
  std::vector<std::vector<double>> points;
  std::vector<std::size_t> digit(n, 0);
  while (points.size() < limit) {
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = axes[i][digit[i]];
    points.push_back(std::move(p));
    std::size_t i = n;
    while (i > 0) {
      --i;
      if (++digit[i] < axes[i].size()) break;
      digit[i] = 0;
      if (i == 0) return points;
    }
    if (n == 0) break;
  }
  return points;
}

std::vector<std::vector<double>> latin_hypercube(const Box& box, std::size_t samples, std::mt19937_64& rng) {
  const std::size_t n = box.dim();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> points(samples, std::vector<double>(n));
  std::vector<std::size_t> strata(samples);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    const auto& b = box.bounds[i];
    for (std::size_t s = 0; s < samples; ++s) {
      const double u = (static_cast<double>(strata[s]) + unit(rng)) / static_cast<double>(samples);
      points[s][i] = box.clamp(i, b.lo + u * (b.hi - b.lo));
    }
  }
  return points;
}

// Nelder–Mead on the continuous coordinates, maximizing the objective.
void refine(Search& search, const std::vector<std::size_t>& free, std::mt19937_64& rng) {
  const std::size_t m = free.size();
  if (m == 0) return;
  const Box& box = search.box();
  std::uniform_real_distribution<double> step_scale(0.05, 0.3);
  std::bernoulli_distribution flip(0.5);

  auto cost = [](double f) { return -f; };  // -inf objective -> +inf cost

  for (;;) {
    const std::vector<double> anchor = search.best();
    auto embed = [&](const Eigen::VectorXd& z) {
      std::vector<double> p = anchor;
      for (std::size_t j = 0; j < m; ++j) p[free[j]] = box.clamp(free[j], z[static_cast<Eigen::Index>(j)]);
      return p;
    };
    auto project = [&](const std::vector<double>& p) {
      Eigen::VectorXd z(static_cast<Eigen::Index>(m));
      for (std::size_t j = 0; j < m; ++j) z[static_cast<Eigen::Index>(j)] = p[free[j]];
      return z;
    };
    auto eval = [&](Eigen::VectorXd& z) {
      auto p = embed(z);
      z = project(p);
      return cost(search.evaluate(std::move(p)));
    };

    std::vector<Eigen::VectorXd> simplex(m + 1, project(anchor));
    std::vector<double> costs(m + 1);
    costs[0] = cost(search.best_value());
    for (std::size_t j = 0; j < m; ++j) {
      const auto& b = box.bounds[free[j]];
      double step = (b.hi - b.lo) * step_scale(rng);
      if (flip(rng)) step = -step;
      auto& z = simplex[j + 1];
      const auto k = static_cast<Eigen::Index>(j);
      z[k] += step;
      if (z[k] > b.hi || z[k] < b.lo) z[k] -= 2 * step;
      costs[j + 1] = eval(z);
    }

    double scale = 0;
    for (std::size_t j = 0; j < m; ++j) scale = std::max(scale, box.bounds[free[j]].hi - box.bounds[free[j]].lo);

    for (;;) {
      std::vector<std::size_t> order(m + 1);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return costs[a] < costs[b]; });
      {
        std::vector<Eigen::VectorXd> s2;
        std::vector<double> c2;
        for (auto i : order) {
          s2.push_back(simplex[i]);
          c2.push_back(costs[i]);
        }
        simplex = std::move(s2);
        costs = std::move(c2);
      }

      double diameter = 0;
      for (std::size_t i = 1; i <= m; ++i)
        diameter = std::max(diameter, (simplex[i] - simplex[0]).cwiseAbs().maxCoeff());
      const bool flat = costs[m] == costs[0] || std::abs(costs[m] - costs[0]) <= 1e-12 * (1 + std::abs(costs[0]));
      if (diameter <= 1e-7 * std::max(scale, 1.0) || (flat && diameter <= 1e-4 * std::max(scale, 1.0))) break;

      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) centroid += simplex[i];
      centroid /= static_cast<double>(m);

      Eigen::VectorXd reflected = centroid + (centroid - simplex[m]);
      const double fr = eval(reflected);
      if (fr < costs[0]) {
        Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[m]);
        const double fe = eval(expanded);
        if (fe < fr) {
          simplex[m] = expanded;
          costs[m] = fe;
        } else {
          simplex[m] = reflected;
          costs[m] = fr;
        }
        continue;
      }
      if (fr < costs[m - 1]) {
        simplex[m] = reflected;
        costs[m] = fr;
        continue;
      }
      const bool outside = fr < costs[m];
      Eigen::VectorXd contracted =
          outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                  : Eigen::VectorXd(centroid + 0.5 * (simplex[m] - centroid));
      const double fc = eval(contracted);
      if (fc < (outside ? fr : costs[m])) {
        simplex[m] = contracted;
        costs[m] = fc;
        continue;
      }
      for (std::size_t i = 1; i <= m; ++i) {
        simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
        costs[i] = eval(simplex[i]);
      }
    }
    // Converged: restart around the incumbent with a fresh simplex.
  }
}

}  // namespace

OptimizationResult optimize(const BarSeries& bars, ModelKind kind, const SearchSpace& space,
                            const OptimizeOptions& options) {
  if (options.budget < 1) throw Error(ErrorKind::InvalidSpace, "budget must be >= 1");
  Box box = make_box(kind, space);
  Search search(bars, kind, box, options);
  std::mt19937_64 rng(options.seed);

  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < box.dim(); ++i)
    if (!box.integer[i] && !box.fixed(i)) free.push_back(i);

  try {
    bool all_fixed = true;
    for (std::size_t i = 0; i < box.dim(); ++i) all_fixed = all_fixed && box.fixed(i);
    if (all_fixed) {
      std::vector<double> p(box.dim());
      for (std::size_t i = 0; i < box.dim(); ++i) p[i] = box.clamp(i, box.bounds[i].lo);
      search.evaluate(std::move(p));
    } else {
      if (!space.grid.empty()) {
        search.evaluate_batch(grid_points(box, space.grid, options.budget));
      } else {
        const std::size_t samples = 10 * (box.dim() + 1);
        search.evaluate_batch(latin_hypercube(box, samples, rng));
      }
      refine(search, free, rng);
    }
  } catch (const BudgetExhausted&) {
  }

  OptimizationResult result{ModelParams(kind, search.best()), search.best_value(), search.trace().size(),
                            std::move(search.trace())};
  return result;
}

}  // namespace ktrend
