// Policies for the K-armed Bernoulli bandit: Beta-Bernoulli Thompson
// sampling, bootstrap Thompson sampling over a bank of J online
// double-or-nothing replicates, and the sufficient-statistic variant that
// draws a fresh replicate every round.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "bts/core.hpp"

namespace bts {

// ---------------------------------------------------------------------------
// Beta-Bernoulli Thompson sampling
// ---------------------------------------------------------------------------

struct BetaTsState {
  std::vector<double> alpha;
  std::vector<double> beta;

  BetaTsState(std::size_t arms, double prior_alpha = 1.0, double prior_beta = 1.0)
      : alpha(arms, prior_alpha), beta(arms, prior_beta) {
    if (arms == 0) throw ConfigError("at least one arm is required");
    if (!(prior_alpha > 0.0) || !(prior_beta > 0.0)) throw ConfigError("invalid Beta shape");
  }

  [[nodiscard]] std::size_t arms() const noexcept { return alpha.size(); }
};

inline double sample_beta(double a, double b, Stream& rng) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ConfigError("invalid Beta shape");
  }
  const double x = rng.gamma(a);
  const double y = rng.gamma(b);
  return x / (x + y);
}

inline ArmId beta_ts_select(const BetaTsState& state, Stream& rng, std::vector<double>& scratch) {
  scratch.resize(state.arms());
  for (std::size_t i = 0; i < state.arms(); ++i) {
    scratch[i] = sample_beta(state.alpha[i], state.beta[i], rng);
  }
  return ArmId{argmax_random_tiebreak(scratch, rng)};
}

inline ArmId beta_ts_select(const BetaTsState& state, Stream& rng) {
  std::vector<double> scratch;
  return beta_ts_select(state, rng, scratch);
}

inline void beta_ts_update(BetaTsState& state, ArmId arm, Reward r) {
  require_binary(r);
  state.alpha.at(arm.index) += r;
  state.beta.at(arm.index) += 1.0 - r;
}

// ---------------------------------------------------------------------------
// Replicate bank
// ---------------------------------------------------------------------------

/// How each observation is weighted in each replicate. Double-or-nothing is
/// the default; the other two are mean-one alternatives.
enum class WeightScheme : std::uint8_t { double_or_nothing, poisson, exponential };

inline std::string_view to_string(WeightScheme w) noexcept {
  switch (w) {
    case WeightScheme::double_or_nothing: return "donb";
    case WeightScheme::poisson: return "poisson";
    case WeightScheme::exponential: return "exponential";
  }
  return "donb";
}

/// Per-arm, per-replicate Beta pseudo-counts. Row-major K x J: the J
/// replicates of one arm are contiguous.
class ReplicateBank {
 public:
  ReplicateBank(std::size_t arms, std::size_t replicates, double prior_alpha = 1.0,
                double prior_beta = 1.0)
      : arms_(arms),
        replicates_(replicates),
        prior_alpha_(prior_alpha),
        prior_beta_(prior_beta),
        alpha_(arms * replicates, prior_alpha),
        beta_(arms * replicates, prior_beta) {
    if (arms == 0) throw ConfigError("at least one arm is required");
    if (replicates == 0) throw ConfigError("replicate count J must be >= 1");
    if (!(prior_alpha > 0.0) || !(prior_beta > 0.0)) throw ConfigError("invalid Beta shape");
  }

  [[nodiscard]] std::size_t arms() const noexcept { return arms_; }
  [[nodiscard]] std::size_t replicates() const noexcept { return replicates_; }
  [[nodiscard]] double prior_alpha() const noexcept { return prior_alpha_; }
  [[nodiscard]] double prior_beta() const noexcept { return prior_beta_; }

  [[nodiscard]] double alpha(std::size_t arm, std::size_t j) const { return alpha_[index(arm, j)]; }
  [[nodiscard]] double beta(std::size_t arm, std::size_t j) const { return beta_[index(arm, j)]; }
  double& alpha(std::size_t arm, std::size_t j) { return alpha_[index(arm, j)]; }
  double& beta(std::size_t arm, std::size_t j) { return beta_[index(arm, j)]; }

  [[nodiscard]] double estimate(std::size_t arm, std::size_t j) const {
    const std::size_t k = index(arm, j);
    return alpha_[k] / (alpha_[k] + beta_[k]);
  }

  /// Adds weight(j) * r to alpha and weight(j) * (1 - r) to beta of every
  /// replicate j of `arm`. One weight evaluation per replicate.
  template <typename WeightFn>
  void update(ArmId arm, Reward r, WeightFn&& weight) {
    require_binary(r);
    check_arm(arm);
    double* row = (r == 1.0 ? alpha_.data() : beta_.data()) + arm.index * replicates_;
    for (std::size_t j = 0; j < replicates_; ++j) row[j] += weight(j);
    weight_evaluations_ += replicates_;
  }

  /// Double-or-nothing update driven by the (t, j)-indexed coins of `source`.
  void update_donb(ArmId arm, Reward r, const ReplicateWeightSource& source, std::uint64_t t) {
    require_binary(r);
    check_arm(arm);
    double* row = (r == 1.0 ? alpha_.data() : beta_.data()) + arm.index * replicates_;
    const std::size_t full_blocks = replicates_ / 64;
    for (std::size_t blk = 0; blk < full_blocks; ++blk) {
      const std::uint64_t word = source.coin_word(t, blk);
      double* out = row + blk * 64;
      for (unsigned k = 0; k < 64; ++k) out[k] += static_cast<double>((word >> k) & 1U);
    }
    const std::size_t tail = replicates_ - full_blocks * 64;
    if (tail > 0) {
      const std::uint64_t word = source.coin_word(t, full_blocks);
      double* out = row + full_blocks * 64;
      for (unsigned k = 0; k < tail; ++k) out[k] += static_cast<double>((word >> k) & 1U);
    }
    weight_evaluations_ += replicates_;
  }

  /// Total weight draws (coin evaluations for double-or-nothing) so far.
  [[nodiscard]] std::uint64_t weight_evaluations() const noexcept { return weight_evaluations_; }

 private:
  [[nodiscard]] std::size_t index(std::size_t arm, std::size_t j) const {
    if (arm >= arms_ || j >= replicates_) throw ConfigError("replicate index out of range");
    return arm * replicates_ + j;
  }

  void check_arm(ArmId arm) const {
    if (arm.index >= arms_) throw ConfigError("arm index out of range");
  }

  std::size_t arms_;
  std::size_t replicates_;
  double prior_alpha_;
  double prior_beta_;
  std::vector<double> alpha_;
  std::vector<double> beta_;
  std::uint64_t weight_evaluations_ = 0;
};

/// Draws one replicate uniformly per arm and plays the arm whose drawn
/// replicate has the largest point estimate alpha / (alpha + beta).
inline ArmId bts_select(const ReplicateBank& bank, Stream& rng, std::vector<double>& scratch) {
  scratch.resize(bank.arms());
  for (std::size_t i = 0; i < bank.arms(); ++i) {
    const auto j = static_cast<std::size_t>(rng.below(bank.replicates()));
    scratch[i] = bank.estimate(i, j);
  }
  return ArmId{argmax_random_tiebreak(scratch, rng)};
}

inline ArmId bts_select(const ReplicateBank& bank, Stream& rng) {
  std::vector<double> scratch;
  return bts_select(bank, rng, scratch);
}

/// Weight of replicate j at step t under `scheme`.
inline double replicate_weight(WeightScheme scheme, const ReplicateWeightSource& source,
                               std::uint64_t t, std::uint64_t j) {
  switch (scheme) {
    case WeightScheme::double_or_nothing:
      return source.coin(t, j) ? 1.0 : 0.0;
    case WeightScheme::exponential:
      return -std::log(source.uniform(t, j));
    case WeightScheme::poisson: {
      // Inversion for Poisson(1).
      const double u = source.uniform(t, j);
      double p = std::exp(-1.0);
      double cdf = p;
      double k = 0.0;
      while (u > cdf && k < 64.0) {
        k += 1.0;
        p /= k;
        cdf += p;
      }
      return k;
    }
  }
  return 0.0;
}

/// Applies one observation to the bank with the replicate weights of step t.
inline void bts_update(ReplicateBank& bank, ArmId arm, Reward r, const ReplicateWeightSource& source,
                       std::uint64_t t, WeightScheme scheme = WeightScheme::double_or_nothing) {
  if (scheme == WeightScheme::double_or_nothing) {
    bank.update_donb(arm, r, source, t);
  } else {
    bank.update(arm, r, [&](std::size_t j) { return replicate_weight(scheme, source, t, j); });
  }
}

// ---------------------------------------------------------------------------
// Sufficient-statistic BTS (J effectively infinite)
// ---------------------------------------------------------------------------

struct SufficientStats {
  std::vector<std::uint64_t> successes;
  std::vector<std::uint64_t> failures;
  double prior_alpha = 1.0;
  double prior_beta = 1.0;

  SufficientStats(std::size_t arms, double prior_alpha_ = 1.0, double prior_beta_ = 1.0)
      : successes(arms, 0), failures(arms, 0), prior_alpha(prior_alpha_), prior_beta(prior_beta_) {
    if (arms == 0) throw ConfigError("at least one arm is required");
    if (!(prior_alpha > 0.0) || !(prior_beta > 0.0)) throw ConfigError("invalid Beta shape");
  }

  [[nodiscard]] std::size_t arms() const noexcept { return successes.size(); }
};

/// Thins each arm's counts with Binomial(., 1/2) and plays the arm with the
/// largest prior-regularized estimate of the thinned counts.
inline ArmId bts_inf_select(const SufficientStats& stats, Stream& rng, std::vector<double>& scratch) {
  scratch.resize(stats.arms());
  for (std::size_t i = 0; i < stats.arms(); ++i) {
    const auto s = static_cast<double>(rng.binomial(stats.successes[i], 0.5));
    const auto f = static_cast<double>(rng.binomial(stats.failures[i], 0.5));
    scratch[i] = (stats.prior_alpha + s) / (stats.prior_alpha + stats.prior_beta + s + f);
  }
  return ArmId{argmax_random_tiebreak(scratch, rng)};
}

inline ArmId bts_inf_select(const SufficientStats& stats, Stream& rng) {
  std::vector<double> scratch;
  return bts_inf_select(stats, rng, scratch);
}

inline void bts_inf_update(SufficientStats& stats, ArmId arm, Reward r) {
  require_binary(r);
  if (r == 1.0) {
    ++stats.successes.at(arm.index);
  } else {
    ++stats.failures.at(arm.index);
  }
}

// ---------------------------------------------------------------------------
// Policy objects: own their state and streams; select() and update() are
// called strictly alternately.
// ---------------------------------------------------------------------------

class BetaTsPolicy {
 public:
  BetaTsPolicy(std::size_t arms, double prior_alpha, double prior_beta, Stream rng)
      : state_(arms, prior_alpha, prior_beta), rng_(std::move(rng)) {}

  ArmId select() { return beta_ts_select(state_, rng_, scratch_); }
  void update(ArmId arm, Reward r) { beta_ts_update(state_, arm, r); }

  [[nodiscard]] const BetaTsState& state() const noexcept { return state_; }

 private:
  BetaTsState state_;
  Stream rng_;
  std::vector<double> scratch_;
};

class BtsPolicy {
 public:
  BtsPolicy(std::size_t arms, std::size_t replicates, double prior_alpha, double prior_beta,
            Stream rng, ReplicateWeightSource weights,
            WeightScheme scheme = WeightScheme::double_or_nothing)
      : bank_(arms, replicates, prior_alpha, prior_beta),
        rng_(std::move(rng)),
        weights_(weights),
        scheme_(scheme) {}

  ArmId select() { return bts_select(bank_, rng_, scratch_); }

  void update(ArmId arm, Reward r) { bts_update(bank_, arm, r, weights_, ++step_, scheme_); }

  [[nodiscard]] const ReplicateBank& bank() const noexcept { return bank_; }
  [[nodiscard]] std::uint64_t steps() const noexcept { return step_; }

 private:
  ReplicateBank bank_;
  Stream rng_;
  ReplicateWeightSource weights_;
  WeightScheme scheme_;
  std::uint64_t step_ = 0;
  std::vector<double> scratch_;
};

class BtsInfPolicy {
 public:
  BtsInfPolicy(std::size_t arms, double prior_alpha, double prior_beta, Stream rng)
      : stats_(arms, prior_alpha, prior_beta), rng_(std::move(rng)) {}

  ArmId select() { return bts_inf_select(stats_, rng_, scratch_); }
  void update(ArmId arm, Reward r) { bts_inf_update(stats_, arm, r); }

  [[nodiscard]] const SufficientStats& stats() const noexcept { return stats_; }

 private:
  SufficientStats stats_;
  Stream rng_;
  std::vector<double> scratch_;
};

}  // namespace bts
