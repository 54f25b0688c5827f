// Exact double-or-nothing bootstrap distributions of the Bernoulli point
// estimate, by enumeration of the thinned counts, and the Beta reference
// densities they are compared against.
//
// For fixed data with s successes and f failures, a double-or-nothing
// replicate keeps s* ~ Binomial(s, 1/2) successes and f* ~ Binomial(f, 1/2)
// failures. Two estimators are supported:
//   prior-regularized  (a0 + s*) / (a0 + b0 + s* + f*)
//   pure mean          s* / (s* + f*), conditioned on s* + f* >= 1
// Enumeration is O(s * f) per data set and O(n^3) for the expected
// distribution over data sets, so n is capped at 256.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/distributions/beta.hpp>

#include "bts/core.hpp"

namespace bts::oracle {

inline constexpr std::uint64_t kMaxObservations = 256;
inline constexpr double kMergeTolerance = 1e-12;

struct DiscretePmf {
  std::vector<double> support;  // strictly increasing
  std::vector<double> probs;

  [[nodiscard]] std::size_t size() const noexcept { return support.size(); }
  [[nodiscard]] double mean() const;
  [[nodiscard]] double total() const;
};

struct EstimatorMode {
  enum class Kind : std::uint8_t { prior_regularized, pure_mean };

  Kind kind = Kind::pure_mean;
  double prior_alpha = 1.0;
  double prior_beta = 1.0;

  static EstimatorMode pure_mean() { return {}; }
  static EstimatorMode prior_regularized(double a0 = 1.0, double b0 = 1.0) {
    if (!(a0 > 0.0) || !(b0 > 0.0)) throw ConfigError("prior pseudo-counts must be > 0");
    return {Kind::prior_regularized, a0, b0};
  }
};

/// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double DiscretePmf::total() const {
  CompensatedSum s;
  for (const double p : probs) s.add(p);
  return s.value();
}

inline double DiscretePmf::mean() const {
  CompensatedSum s;
  for (std::size_t i = 0; i < support.size(); ++i) s.add(support[i] * probs[i]);
  return s.value();
}

namespace detail {

/// Binomial(n, 1/2) pmf for k = 0..n. C(256, 128) ~ 5.8e75 and 2^-256 are
/// both representable, so the direct product is safe.
inline std::vector<double> half_binomial_pmf(std::uint64_t n) {
  std::vector<double> pmf(n + 1);
  double c = 1.0;
  const double scale = std::ldexp(1.0, -static_cast<int>(n));
  for (std::uint64_t k = 0; k <= n; ++k) {
    pmf[k] = c * scale;
    c = c * static_cast<double>(n - k) / static_cast<double>(k + 1);
  }
  return pmf;
}

/// Binomial(n, theta) pmf via log-gamma.
inline std::vector<double> binomial_pmf(std::uint64_t n, double theta) {
  std::vector<double> pmf(n + 1);
  const double dn = static_cast<double>(n);
  const double lt = std::log(theta);
  const double l1t = std::log1p(-theta);
  for (std::uint64_t k = 0; k <= n; ++k) {
    const double dk = static_cast<double>(k);
    pmf[k] = std::exp(std::lgamma(dn + 1) - std::lgamma(dk + 1) - std::lgamma(dn - dk + 1) +
                      dk * lt + (dn - dk) * l1t);
  }
  return pmf;
}

/// Sorts (value, prob) pairs and merges values within kMergeTolerance.
inline DiscretePmf merge_atoms(std::vector<std::pair<double, double>>& atoms) {
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  DiscretePmf pmf;
  std::size_t i = 0;
  while (i < atoms.size()) {
    const double value = atoms[i].first;
    CompensatedSum mass;
    while (i < atoms.size() && atoms[i].first - value <= kMergeTolerance) {
      mass.add(atoms[i].second);
      ++i;
    }
    pmf.support.push_back(value);
    pmf.probs.push_back(mass.value());
  }
  return pmf;
}

/// Appends the weighted atoms of the fixed-data distribution to `atoms`.
/// Returns false if there is nothing to add (pure mean with no data).
inline bool append_fixed_data(std::uint64_t s, std::uint64_t f, const EstimatorMode& mode,
                              double weight, std::vector<std::pair<double, double>>& atoms) {
  const auto ps = half_binomial_pmf(s);
  const auto pf = half_binomial_pmf(f);
  double norm = 1.0;
  if (mode.kind == EstimatorMode::Kind::pure_mean) {
    if (s + f == 0) return false;
    // P(s* + f* >= 1) = 1 - 2^-(s+f)
    norm = -std::expm1(-static_cast<double>(s + f) * std::log(2.0));
  }
  for (std::uint64_t a = 0; a <= s; ++a) {
    for (std::uint64_t b = 0; b <= f; ++b) {
      double value = 0.0;
      if (mode.kind == EstimatorMode::Kind::pure_mean) {
        if (a + b == 0) continue;
        value = static_cast<double>(a) / static_cast<double>(a + b);
      } else {
        value = (mode.prior_alpha + static_cast<double>(a)) /
                (mode.prior_alpha + mode.prior_beta + static_cast<double>(a + b));
      }
      atoms.emplace_back(value, weight * ps[a] * pf[b] / norm);
    }
  }
  return true;
}

inline void check_observations(std::uint64_t n) {
  if (n > kMaxObservations) throw ConfigError("enumeration limited to n <= 256");
}

}  // namespace detail

/// Exact distribution of the replicate estimate for fixed data (s, f).
inline DiscretePmf donb_pmf_fixed_data(std::uint64_t s, std::uint64_t f, const EstimatorMode& mode) {
  if (s + f == 0) throw ConfigError("no data");
  detail::check_observations(s + f);
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve((s + 1) * (f + 1));
  detail::append_fixed_data(s, f, mode, 1.0, atoms);
  return detail::merge_atoms(atoms);
}

/// Distribution of the replicate estimate after n observations of a
/// Bernoulli(theta) arm: mixture over s ~ Binomial(n, theta).
inline DiscretePmf expected_donb_pmf(std::uint64_t n, double theta, const EstimatorMode& mode) {
  if (n == 0) throw ConfigError("no data");
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("theta must lie in (0, 1)");
  detail::check_observations(n);
  const auto strata = detail::binomial_pmf(n, theta);
  std::vector<std::pair<double, double>> atoms;
  atoms.reserve((n + 2) * (n + 2) * (n + 2) / 6 + n + 1);
  for (std::uint64_t s = 0; s <= n; ++s) {
    detail::append_fixed_data(s, n - s, mode, strata[s], atoms);
  }
  return detail::merge_atoms(atoms);
}

/// Beta(theta * n, (1 - theta) * n) density on `grid`.
inline std::vector<double> beta_reference_density(double theta, std::uint64_t n,
                                                  std::span<const double> grid) {
  const double a = theta * static_cast<double>(n);
  const double b = (1.0 - theta) * static_cast<double>(n);
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ConfigError("invalid Beta shape");
  }
  const boost::math::beta_distribution<double> dist(a, b);
  std::vector<double> out;
  out.reserve(grid.size());
  for (const double x : grid) {
    if (x < 0.0 || x > 1.0) {
      out.push_back(0.0);
    } else if ((x == 0.0 && a < 1.0) || (x == 1.0 && b < 1.0)) {
      out.push_back(std::numeric_limits<double>::infinity());
    } else {
      out.push_back(boost::math::pdf(dist, x));
    }
  }
  return out;
}

/// Beta(theta * n, (1 - theta) * n) mass of each support cell of `pmf`.
/// Cell k spans the midpoints to its neighbours; the outer cells extend to 0
/// and 1.
inline std::vector<double> discretize_beta(const DiscretePmf& pmf, double theta, std::uint64_t n) {
  const double a = theta * static_cast<double>(n);
  const double b = (1.0 - theta) * static_cast<double>(n);
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("invalid Beta shape");
  const boost::math::beta_distribution<double> dist(a, b);
  std::vector<double> mass(pmf.size());
  double lower_cdf = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    const double upper =
        k + 1 < pmf.size() ? 0.5 * (pmf.support[k] + pmf.support[k + 1]) : 1.0;
    const double upper_cdf = upper >= 1.0 ? 1.0 : boost::math::cdf(dist, std::max(upper, 0.0));
    mass[k] = upper_cdf - lower_cdf;
    lower_cdf = upper_cdf;
  }
  return mass;
}

/// Total-variation distance between `pmf` and the Beta reference discretized
/// onto the pmf's support cells.
inline double distribution_distance(const DiscretePmf& pmf, double theta, std::uint64_t n) {
  const auto reference = discretize_beta(pmf, theta, n);
  CompensatedSum tv;
  for (std::size_t k = 0; k < pmf.size(); ++k) tv.add(std::abs(pmf.probs[k] - reference[k]));
  return 0.5 * tv.value();
}

}  // namespace bts::oracle
