// Shared domain types, error hierarchy, random streams and tie-breaking.
#pragma once

#include <bit>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bts {

// ---------------------------------------------------------------------------
// Errors. The CLI maps each family onto an exit code.
// ---------------------------------------------------------------------------

/// Invalid parameters or an inconsistent experiment description.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numeric routine could not produce a valid result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reading or writing files failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct ArmId {
  std::size_t index = 0;

  constexpr auto operator<=>(const ArmId&) const = default;
};

using Reward = double;

/// Reward actually observed plus the reward the optimal arm would have paid
/// under the same underlying random draw.
struct PullOutcome {
  Reward reward = 0.0;
  Reward counterfactual_optimal = 0.0;
};

struct StepRecord {
  std::uint64_t t = 0;
  ArmId arm;
  Reward reward = 0.0;
  Reward counterfactual_optimal = 0.0;
};

inline void require_binary(Reward r) {
  if (r != 0.0 && r != 1.0) throw ConfigError("non-binary reward");
}

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

enum class StreamRole : std::uint8_t { environment = 0, policy = 1, replicate_weights = 2 };

struct RngStreamKey {
  std::uint64_t master_seed = 0;
  std::uint64_t run_index = 0;
  StreamRole role = StreamRole::environment;

  constexpr bool operator==(const RngStreamKey&) const = default;
};

namespace detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t hash_key(const RngStreamKey& key) noexcept {
  std::uint64_t h = mix64(key.master_seed + kGolden);
  h = mix64(h ^ (key.run_index * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
  return mix64(h ^ (static_cast<std::uint64_t>(key.role) + 1) * kGolden);
}

}  // namespace detail

/// A sequential random-number stream owned by exactly one worker.
///
/// Satisfies UniformRandomBitGenerator. The engine is std::mt19937_64, whose
/// output sequence is fixed by the standard; uniform and integer conversions
/// are done here so those are portable too. Gaussian, gamma and binomial
/// variates come from the standard library distributions.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t seed = 0) : engine_(seed) {}

  explicit Stream(std::seed_seq& seq) : engine_(seq) {}

  static constexpr result_type min() noexcept { return std::mt19937_64::min(); }
  static constexpr result_type max() noexcept { return std::mt19937_64::max(); }

  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n must be positive. Lemire's multiply-shift
  /// with rejection, so the result is exactly uniform.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ConfigError("empty range");
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double normal() { return normal_(engine_); }

  double gamma(double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(engine_);
  }

  /// Exact Binomial(n, p) draw.
  std::uint64_t binomial(std::uint64_t n, double p) {
    if (n == 0) return 0;
    return static_cast<std::uint64_t>(
        std::binomial_distribution<std::int64_t>(static_cast<std::int64_t>(n), p)(engine_));
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Deterministic stream for a (master_seed, run_index, role) triple. Equal
/// keys give identical sequences; distinct keys give unrelated sequences.
inline Stream derive_stream(const RngStreamKey& key) {
  const std::uint64_t h = detail::hash_key(key);
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(key.master_seed),
                    static_cast<std::uint32_t>(key.master_seed >> 32),
                    static_cast<std::uint32_t>(key.run_index),
                    static_cast<std::uint32_t>(key.run_index >> 32),
                    static_cast<std::uint32_t>(key.role)};
  return Stream(seq);
}

/// Counter-based source of replicate weights.
///
/// Every draw is a pure function of (key, t, block), so the coin for replicate
/// j at step t does not depend on the order in which replicates are visited.
class ReplicateWeightSource {
 public:
  ReplicateWeightSource() = default;
  explicit ReplicateWeightSource(const RngStreamKey& key) : key_(detail::hash_key(key)) {}

  /// 64 independent fair coins for replicates [64*block, 64*block + 64).
  [[nodiscard]] std::uint64_t coin_word(std::uint64_t t, std::uint64_t block) const noexcept {
    const std::uint64_t step = detail::mix64(key_ + t * detail::kGolden);
    return detail::mix64(step + (block + 1) * 0xd1b54a32d192ed03ULL);
  }

  [[nodiscard]] bool coin(std::uint64_t t, std::uint64_t j) const noexcept {
    return (coin_word(t, j >> 6) >> (j & 63)) & 1U;
  }

  /// Uniform on (0, 1) for replicate j at step t; never returns 0.
  [[nodiscard]] double uniform(std::uint64_t t, std::uint64_t j) const noexcept {
    const std::uint64_t w = detail::mix64(coin_word(t, j) ^ 0xa0761d6478bd642fULL);
    return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_ = 0;
};

// ---------------------------------------------------------------------------
// Tie-breaking
// ---------------------------------------------------------------------------

/// Index of a maximal element. When m entries tie for the maximum, each is
/// returned with probability 1/m; a unique maximum consumes no randomness.
inline std::size_t argmax_random_tiebreak(std::span<const double> values, Stream& rng) {
  if (values.empty()) throw ConfigError("empty candidate set");
  double best = values[0];
  std::size_t ties = 0;
  for (const double v : values) {
    if (std::isnan(v) || !std::isfinite(v)) throw NumericError("non-finite value");
    if (v > best) {
      best = v;
      ties = 1;
    } else if (v == best) {
      ++ties;
    }
  }
  std::uint64_t pick = ties > 1 ? rng.below(ties) : 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == best) {
      if (pick == 0) return i;
      --pick;
    }
  }
  return 0;  // unreachable
}

}  // namespace bts
