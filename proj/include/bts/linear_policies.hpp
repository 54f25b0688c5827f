// Linear-model policies: bootstrap Thompson sampling over J online ridge
// replicates with double-or-nothing weights, and Bayesian linear Thompson
// sampling with a unit-variance Gaussian prior and unit noise variance.
//
// Dimension is a template parameter so the 8-feature factorial model runs on
// fixed-size Eigen types; Eigen::Dynamic works too.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "bts/core.hpp"

namespace bts {

template <int Dim>
using LinVector = Eigen::Matrix<double, Dim, 1>;

template <int Dim>
using LinMatrix = Eigen::Matrix<double, Dim, Dim>;

/// K x d matrix; row a is the feature vector of arm a.
template <int Dim>
using ArmDesign = Eigen::Matrix<double, Eigen::Dynamic, Dim>;

namespace detail {

template <int Dim>
void check_dim(Eigen::Index expected, const LinVector<Dim>& x) {
  if (x.size() != expected) throw ConfigError("dimension mismatch");
}

template <int Dim>
void check_finite(const LinVector<Dim>& x, double y) {
  if (!x.allFinite() || !std::isfinite(y)) throw ConfigError("non-finite observation");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Ridge accumulator
// ---------------------------------------------------------------------------

/// Summation-form ridge state: A = lambda * I + sum x x^T, b = sum y x.
template <int Dim>
class RidgeAccumulator {
 public:
  RidgeAccumulator() : RidgeAccumulator(Dim == Eigen::Dynamic ? 0 : Dim, 1.0) {}

  RidgeAccumulator(Eigen::Index dim, double lambda) : lambda_(lambda) {
    if (!(lambda > 0.0)) throw ConfigError("ridge penalty lambda must be > 0");
    if (Dim != Eigen::Dynamic && dim != Dim) throw ConfigError("dimension mismatch");
    a_ = LinMatrix<Dim>::Identity(dim, dim) * lambda;
    b_ = LinVector<Dim>::Zero(dim);
  }

  [[nodiscard]] Eigen::Index dim() const noexcept { return b_.size(); }
  [[nodiscard]] double lambda() const noexcept { return lambda_; }
  [[nodiscard]] const LinMatrix<Dim>& a() const noexcept { return a_; }
  [[nodiscard]] const LinVector<Dim>& b() const noexcept { return b_; }
  LinMatrix<Dim>& a() noexcept { return a_; }
  LinVector<Dim>& b() noexcept { return b_; }

  [[nodiscard]] std::uint64_t observations() const noexcept { return observations_; }

  void add(const LinVector<Dim>& x, double y) {
    detail::check_dim(dim(), x);
    detail::check_finite(x, y);
    add_unchecked(x, y);
  }

  void add_unchecked(const LinVector<Dim>& x, double y) {
    a_.noalias() += x * x.transpose();
    b_.noalias() += y * x;
    ++observations_;
  }

  bool operator==(const RidgeAccumulator& other) const {
    return lambda_ == other.lambda_ && a_ == other.a_ && b_ == other.b_;
  }

 private:
  double lambda_;
  LinMatrix<Dim> a_;
  LinVector<Dim> b_;
  std::uint64_t observations_ = 0;
};

template <int Dim>
void ridge_update(RidgeAccumulator<Dim>& acc, const LinVector<Dim>& x, double y) {
  acc.add(x, y);
}

/// Solves A theta = b by Cholesky.
template <int Dim>
LinVector<Dim> ridge_point(const RidgeAccumulator<Dim>& acc) {
  const Eigen::LLT<LinMatrix<Dim>> llt(acc.a());
  if (llt.info() != Eigen::Success) throw NumericError("accumulator not positive definite");
  LinVector<Dim> theta = llt.solve(acc.b());
  if (!theta.allFinite()) throw NumericError("accumulator not positive definite");
  return theta;
}

// ---------------------------------------------------------------------------
// Linear BTS
// ---------------------------------------------------------------------------

template <int Dim>
struct LinearBtsState {
  std::vector<RidgeAccumulator<Dim>> replicates;

  LinearBtsState(std::size_t count, Eigen::Index dim, double lambda)
      : replicates(count, RidgeAccumulator<Dim>(dim, lambda)) {
    if (count == 0) throw ConfigError("replicate count J must be >= 1");
  }

  [[nodiscard]] std::size_t size() const noexcept { return replicates.size(); }
};

/// Index of the best arm for coefficient vector theta, ties broken randomly.
template <int Dim>
ArmId best_arm(const ArmDesign<Dim>& arms, const LinVector<Dim>& theta, Stream& rng,
               std::vector<double>& scratch) {
  if (arms.cols() != theta.size()) throw ConfigError("dimension mismatch");
  scratch.resize(static_cast<std::size_t>(arms.rows()));
  Eigen::Map<Eigen::VectorXd>(scratch.data(), arms.rows()).noalias() = arms * theta;
  return ArmId{argmax_random_tiebreak(scratch, rng)};
}

/// One replicate drawn uniformly for the whole coefficient vector.
template <int Dim>
ArmId linear_bts_select(const LinearBtsState<Dim>& state, const ArmDesign<Dim>& arms, Stream& rng,
                        std::vector<double>& scratch) {
  const auto j = static_cast<std::size_t>(rng.below(state.size()));
  return best_arm(arms, ridge_point(state.replicates[j]), rng, scratch);
}

template <int Dim>
ArmId linear_bts_select(const LinearBtsState<Dim>& state, const ArmDesign<Dim>& arms, Stream& rng) {
  std::vector<double> scratch;
  return linear_bts_select(state, arms, rng, scratch);
}

/// Adds (x, y) to each replicate whose coin for step t is heads. `coin(j)`
/// returns the coin of replicate j.
template <int Dim, typename CoinFn>
void linear_bts_update(LinearBtsState<Dim>& state, const LinVector<Dim>& x, double y,
                       CoinFn&& coin) {
  if (state.replicates.empty()) return;
  detail::check_dim(state.replicates.front().dim(), x);
  detail::check_finite(x, y);
  for (std::size_t j = 0; j < state.size(); ++j) {
    if (coin(j)) state.replicates[j].add_unchecked(x, y);
  }
}

template <int Dim>
void linear_bts_update(LinearBtsState<Dim>& state, const LinVector<Dim>& x, double y,
                       const ReplicateWeightSource& source, std::uint64_t t) {
  linear_bts_update(state, x, y, [&](std::size_t j) { return source.coin(t, j); });
}

// ---------------------------------------------------------------------------
// Bayesian linear Thompson sampling
// ---------------------------------------------------------------------------

/// Conjugate Gaussian posterior under prior N(0, I) and unit noise variance:
/// precision A = I + X^T X, b = X^T y, posterior N(A^-1 b, A^-1).
template <int Dim>
struct BayesLinState {
  LinMatrix<Dim> a;
  LinVector<Dim> b;
  double noise_variance = 1.0;

  explicit BayesLinState(Eigen::Index dim = Dim == Eigen::Dynamic ? 0 : Dim)
      : a(LinMatrix<Dim>::Identity(dim, dim)), b(LinVector<Dim>::Zero(dim)) {
    if (Dim != Eigen::Dynamic && dim != Dim) throw ConfigError("dimension mismatch");
  }

  [[nodiscard]] Eigen::Index dim() const noexcept { return b.size(); }
};

template <int Dim>
void bayes_lin_update(BayesLinState<Dim>& state, const LinVector<Dim>& x, double y) {
  detail::check_dim(state.dim(), x);
  detail::check_finite(x, y);
  state.a.noalias() += x * x.transpose();
  state.b.noalias() += y * x;
}

template <int Dim>
struct GaussianPosterior {
  LinVector<Dim> mean;
  LinMatrix<Dim> covariance;
};

template <int Dim>
GaussianPosterior<Dim> bayes_lin_posterior(const BayesLinState<Dim>& state) {
  const Eigen::LLT<LinMatrix<Dim>> llt(state.a);
  if (llt.info() != Eigen::Success) throw NumericError("precision matrix not positive definite");
  const auto n = state.dim();
  return {llt.solve(state.b), llt.solve(LinMatrix<Dim>::Identity(n, n))};
}

/// theta = A^-1 b + L^-T z with A = L L^T and z standard normal, so that
/// Cov(theta) = A^-1.
template <int Dim>
LinVector<Dim> bayes_lin_sample(const BayesLinState<Dim>& state, Stream& rng) {
  const Eigen::LLT<LinMatrix<Dim>> llt(state.a);
  if (llt.info() != Eigen::Success) throw NumericError("precision matrix not positive definite");
  LinVector<Dim> z(state.dim());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  LinVector<Dim> theta = llt.solve(state.b);
  theta.noalias() += llt.matrixU().solve(z);
  return theta;
}

template <int Dim>
ArmId bayes_lin_sample_select(const BayesLinState<Dim>& state, const ArmDesign<Dim>& arms,
                              Stream& rng, std::vector<double>& scratch) {
  return best_arm(arms, bayes_lin_sample(state, rng), rng, scratch);
}

template <int Dim>
ArmId bayes_lin_sample_select(const BayesLinState<Dim>& state, const ArmDesign<Dim>& arms,
                              Stream& rng) {
  std::vector<double> scratch;
  return bayes_lin_sample_select(state, arms, rng, scratch);
}

// ---------------------------------------------------------------------------
// Policy objects. The arm design is the (static) context.
// ---------------------------------------------------------------------------

template <int Dim>
class LinearBtsPolicy {
 public:
  LinearBtsPolicy(std::size_t replicates, Eigen::Index dim, double lambda, Stream rng,
                  ReplicateWeightSource weights)
      : state_(replicates, dim, lambda), rng_(std::move(rng)), weights_(weights) {}

  ArmId select(const ArmDesign<Dim>& arms) {
    return linear_bts_select(state_, arms, rng_, scratch_);
  }

  void update(const LinVector<Dim>& x, double y) {
    linear_bts_update(state_, x, y, weights_, ++step_);
  }

  [[nodiscard]] const LinearBtsState<Dim>& state() const noexcept { return state_; }

 private:
  LinearBtsState<Dim> state_;
  Stream rng_;
  ReplicateWeightSource weights_;
  std::uint64_t step_ = 0;
  std::vector<double> scratch_;
};

template <int Dim>
class BayesLinearPolicy {
 public:
  BayesLinearPolicy(Eigen::Index dim, Stream rng) : state_(dim), rng_(std::move(rng)) {}

  ArmId select(const ArmDesign<Dim>& arms) {
    return bayes_lin_sample_select(state_, arms, rng_, scratch_);
  }

  void update(const LinVector<Dim>& x, double y) { bayes_lin_update(state_, x, y); }

  [[nodiscard]] const BayesLinState<Dim>& state() const noexcept { return state_; }

 private:
  BayesLinState<Dim> state_;
  Stream rng_;
  std::vector<double> scratch_;
};

}  // namespace bts
