#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ktrend/backtest.hpp"
#include "ktrend/errors.hpp"
#include "ktrend/io.hpp"

namespace ktrend::testing {

inline std::string data_path(const std::string& name) { return std::string(KTREND_DATA_DIR) + "/" + name; }

/// Trade ledger for model Four as published, with entries chained from the
/// previous exit and the first entry back-solved from its profit.
inline std::vector<ReplayRow> ledger_rows() { return io::load_ledger_csv(data_path("emini_trades.csv")); }

struct LedgerReported {
  std::vector<double> profit;
  std::vector<double> pnl;
};

inline LedgerReported ledger_reported() {
  std::ifstream in(data_path("emini_trades.csv"));
  std::string line;
  std::getline(in, line);
  LedgerReported out;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    out.profit.push_back(std::stod(cells.at(8)));
    out.pnl.push_back(std::stod(cells.at(9)));
  }
  return out;
}

/// Random symmetric PSD matrix A·Aᵀ (rank may be deficient).
inline Eigen::MatrixXd random_psd(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  return a * a.transpose();
}

template <typename F>
ErrorKind error_kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  throw std::logic_error("expected ktrend::Error");
}

}  // namespace ktrend::testing
