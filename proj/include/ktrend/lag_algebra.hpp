#pragma once

// Moving averages as finite weight vectors and the algebra of their lag.
//
// Index convention: weight i applies to the price i bars in the past, so
// i = 0 is the newest price. Series are stored oldest -> newest.

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "ktrend/errors.hpp"

namespace ktrend {

template <typename Scalar>
using Series = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
class WeightVector {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit WeightVector(Vector weights) : w_(std::move(weights)) {
    if (w_.size() == 0) throw Error(ErrorKind::InvalidArgument, "weight vector is empty");
    if (!w_.allFinite()) throw Error(ErrorKind::InvalidArgument, "weight vector has non-finite entries");
    if (w_.sum() == Scalar(0)) throw Error(ErrorKind::ZeroWeightSum, "weights sum to zero");
  }

  const Vector& weights() const noexcept { return w_; }
  Eigen::Index size() const noexcept { return w_.size(); }
  Scalar operator[](Eigen::Index i) const { return w_[i]; }
  Scalar sum() const { return w_.sum(); }

  bool is_normalized(Scalar tol = Scalar(1e-12)) const { return std::abs(w_.sum() - Scalar(1)) <= tol; }

  WeightVector normalized() const { return WeightVector(w_ / w_.sum()); }

 private:
  Vector w_;
};

/// Coefficients (a, b, c) on MA, MA∘2, MA∘3.
template <typename Scalar>
struct LinearCombination {
  Scalar a = Scalar(1);
  Scalar b = Scalar(0);
  Scalar c = Scalar(0);

  Scalar sum() const { return a + b + c; }
};

/// Lag in bars: first moment of the weights over their sum.
template <typename Scalar>
Scalar lag(const WeightVector<Scalar>& w) {
  const auto& v = w.weights();
  Scalar total = v.sum();
  if (total == Scalar(0)) throw Error(ErrorKind::ZeroWeightSum, "lag of zero-sum weights");
  Scalar moment = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) moment += v[i] * static_cast<Scalar>(i);
  return moment / total;
}

/// Weights of MA∘k: the k-fold self-convolution of w.
template <typename Scalar>
WeightVector<Scalar> compose(const WeightVector<Scalar>& w, int k) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "compose order must be >= 1");
  using Vector = typename WeightVector<Scalar>::Vector;
  const Vector& base = w.weights();
  Vector acc = base;
  for (int step = 1; step < k; ++step) {
    Vector next = Vector::Zero(acc.size() + base.size() - 1);
    for (Eigen::Index i = 0; i < acc.size(); ++i)
      next.segment(i, base.size()) += acc[i] * base;
    acc = std::move(next);
  }
  return WeightVector<Scalar>(std::move(acc));
}

/// a·w + b·(w∘2) + c·(w∘3), zero-padded to the longest support.
template <typename Scalar>
WeightVector<Scalar> combine(const WeightVector<Scalar>& w, const LinearCombination<Scalar>& lc) {
  using Vector = typename WeightVector<Scalar>::Vector;
  const Eigen::Index n = w.size();
  const int order = lc.c != Scalar(0) ? 3 : (lc.b != Scalar(0) ? 2 : 1);
  Vector out = Vector::Zero(order * (n - 1) + 1);
  out.head(n) += lc.a * w.weights();
  if (order >= 2) {
    auto w2 = compose(w, 2);
    out.head(w2.size()) += lc.b * w2.weights();
  }
  if (order >= 3) {
    auto w3 = compose(w, 3);
    out.head(w3.size()) += lc.c * w3.weights();
  }
  return WeightVector<Scalar>(std::move(out));
}

template <typename Scalar = double>
WeightVector<Scalar> sma(int period) {
  if (period < 1) throw Error(ErrorKind::InvalidArgument, "sma period must be >= 1");
  using Vector = typename WeightVector<Scalar>::Vector;
  return WeightVector<Scalar>(Vector::Constant(period, Scalar(1) / static_cast<Scalar>(period)));
}

/// Smoothing factor 2 / (period + 1).
template <typename Scalar = double>
Scalar ema_alpha(int period) {
  if (period < 1) throw Error(ErrorKind::InvalidArgument, "ema period must be >= 1");
  return Scalar(2) / static_cast<Scalar>(period + 1);
}

/// Geometric weights α(1-α)^i truncated once the omitted tail mass (1-α)^L
/// drops below 1e-8, then renormalized.
template <typename Scalar = double>
WeightVector<Scalar> ema(int period) {
  const Scalar alpha = ema_alpha<Scalar>(period);
  const Scalar decay = Scalar(1) - alpha;
  const Scalar tail_tol = Scalar(1e-8);
  Eigen::Index length = 1;
  Scalar tail = decay;
  while (tail >= tail_tol) {
    tail *= decay;
    ++length;
  }
  using Vector = typename WeightVector<Scalar>::Vector;
  Vector w(length);
  Scalar factor = alpha;
  for (Eigen::Index i = 0; i < length; ++i, factor *= decay) w[i] = factor;
  return WeightVector<Scalar>(w / w.sum());
}

/// output[t] = Σ_i w_i · price[t-i] for t ≥ len(w)-1; earlier slots copy the
/// raw price (warm-up).
template <typename Scalar>
Series<Scalar> weighted_ma(const Series<Scalar>& prices, const WeightVector<Scalar>& w) {
  if (!w.is_normalized(Scalar(1e-9)))
    throw Error(ErrorKind::InvalidArgument, "weighted_ma needs unit-sum weights");
  const Eigen::Index n = prices.size();
  const Eigen::Index len = w.size();
  if (n < len) throw Error(ErrorKind::SeriesTooShort, "series shorter than the weight vector");
  Series<Scalar> out = prices;
  // Window prices[t-len+1 .. t] reversed lines up with w_0 .. w_{len-1}.
  for (Eigen::Index t = len - 1; t < n; ++t)
    out[t] = prices.segment(t - len + 1, len).reverse().dot(w.weights());
  return out;
}

/// Recursive EMA seeded with the first price.
template <typename Scalar>
Series<Scalar> ema_recursive(const Series<Scalar>& prices, Scalar alpha) {
  Series<Scalar> out(prices.size());
  if (prices.size() == 0) return out;
  out[0] = prices[0];
  for (Eigen::Index t = 1; t < prices.size(); ++t) out[t] = alpha * prices[t] + (Scalar(1) - alpha) * out[t - 1];
  return out;
}

namespace detail {

template <typename Scalar>
Series<Scalar> copy_warmup(Series<Scalar> smoothed, const Series<Scalar>& prices, Eigen::Index warmup) {
  const Eigen::Index m = std::min(warmup, prices.size());
  smoothed.head(m) = prices.head(m);
  return smoothed;
}

}  // namespace detail

/// Number of leading bars an indicator reports as warm-up: the support of
/// its expanded weights minus one.
template <typename Scalar = double>
Eigen::Index ema_warmup(int period, int order) {
  return order * (ema<Scalar>(period).size() - 1);
}

/// Recursive EMA with the truncated-weight support as warm-up.
template <typename Scalar>
Series<Scalar> ema_series(const Series<Scalar>& prices, int period) {
  const Eigen::Index warm = ema_warmup<Scalar>(period, 1);
  if (prices.size() <= warm) throw Error(ErrorKind::SeriesTooShort, "series shorter than EMA warm-up");
  return detail::copy_warmup(ema_recursive(prices, ema_alpha<Scalar>(period)), prices, warm);
}

/// 2·EMA − EMA(EMA), computed recursively in O(n).
template <typename Scalar>
Series<Scalar> dema(const Series<Scalar>& prices, int period) {
  const Eigen::Index warm = ema_warmup<Scalar>(period, 2);
  if (prices.size() <= warm) throw Error(ErrorKind::SeriesTooShort, "series shorter than DEMA warm-up");
  const Scalar alpha = ema_alpha<Scalar>(period);
  Series<Scalar> e1 = ema_recursive(prices, alpha);
  Series<Scalar> e2 = ema_recursive(e1, alpha);
  return detail::copy_warmup<Scalar>(Scalar(2) * e1 - e2, prices, warm);
}

/// 3·EMA − 3·EMA∘2 + EMA∘3, computed recursively in O(n).
template <typename Scalar>
Series<Scalar> tema(const Series<Scalar>& prices, int period) {
  const Eigen::Index warm = ema_warmup<Scalar>(period, 3);
  if (prices.size() <= warm) throw Error(ErrorKind::SeriesTooShort, "series shorter than TEMA warm-up");
  const Scalar alpha = ema_alpha<Scalar>(period);
  Series<Scalar> e1 = ema_recursive(prices, alpha);
  Series<Scalar> e2 = ema_recursive(e1, alpha);
  Series<Scalar> e3 = ema_recursive(e2, alpha);
  return detail::copy_warmup<Scalar>(Scalar(3) * e1 - Scalar(3) * e2 + e3, prices, warm);
}

/// Unit-sum, zero-lag combination of MA∘1..MA∘order. Since lag(MA∘k) = k·lag(MA),
/// zero combined lag reduces to Σ k·coef_k = 0. Order 3 additionally pins c = 1.
template <typename Scalar = double>
LinearCombination<Scalar> solve_zero_lag(int order) {
  if (order != 2 && order != 3) throw Error(ErrorKind::InvalidArgument, "zero-lag order must be 2 or 3");
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Matrix A = Matrix::Zero(order, order);
  Vector rhs = Vector::Zero(order);
  for (int k = 0; k < order; ++k) {
    A(0, k) = Scalar(1);                      // unit sum
    A(1, k) = static_cast<Scalar>(k + 1);     // zero lag
  }
  rhs[0] = Scalar(1);
  if (order == 3) {
    A(2, 2) = Scalar(1);
    rhs[2] = Scalar(1);
  }
  Vector x = A.fullPivLu().solve(rhs);
  // The exact solution is integral; drop the LU round-off.
  for (auto& v : x)
    if (std::abs(v - std::round(v)) < Scalar(1e-9)) v = std::round(v);
  LinearCombination<Scalar> lc;
  lc.a = x[0];
  lc.b = x[1];
  lc.c = order == 3 ? x[2] : Scalar(0);
  return lc;
}

}  // namespace ktrend
