#pragma once

// Summaries and hypothesis tests used to compare runs.
//
// All p-values are asymptotic. One- and two-sample KS use the Kolmogorov
// limit law with Stephens' small-sample correction; chi-square and Welch use
// the exact chi-square and Student t tails.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "mcfault/error.hpp"
#include "mcfault/process.hpp"

namespace mcfault::stats {

inline constexpr std::size_t kMinKsSample = 8;

struct SampleSummary {
  std::uint64_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased; NaN when n < 2

  [[nodiscard]] bool has_variance() const noexcept { return n >= 2; }
};

/// Welford's single-pass update.
[[nodiscard]] inline SampleSummary summarize(std::span<const double> xs) {
  if (xs.empty()) throw ConfigError("summarize: empty sample");
  double mean = 0.0;
  double m2 = 0.0;
  std::uint64_t n = 0;
  for (double x : xs) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  const double var = n >= 2 ? m2 / static_cast<double>(n - 1) : std::numeric_limits<double>::quiet_NaN();
  return {n, mean, var};
}

/// Upper tail of the Kolmogorov distribution, P(K > lambda).
[[nodiscard]] inline double kolmogorov_q(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-theta form of the CDF converges fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double k = -pi2 / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int j = 1; j <= 7; j += 2) cdf += std::exp(k * j * j);
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += sign * term;
    if (term < 1e-300) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

[[nodiscard]] inline double ks_p_value(double d, double effective_n) {
  const double en = std::sqrt(effective_n);
  return kolmogorov_q((en + 0.12 + 0.11 / en) * d);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::uint64_t n = 0;
  std::uint64_t m = 0;  // second sample size; 0 for one-sample
};

/// D only; valid for any n >= 1. `cdf` is probed at the sorted sample points
/// and must be non-decreasing with values in [0,1].
template <typename Cdf>
[[nodiscard]] double ks_one_sample_statistic(std::span<const double> samples, Cdf&& cdf) {
  if (samples.empty()) throw ConfigError("ks_one_sample: empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  double prev_f = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    if (!(f >= 0.0 && f <= 1.0) || f < prev_f) {
      throw ConfigError("ks_one_sample: cdf is not monotone with values in [0,1]");
    }
    prev_f = f;
    const double hi = static_cast<double>(i + 1) / n - f;
    const double lo = f - static_cast<double>(i) / n;
    d = std::max({d, hi, lo});
  }
  return d;
}

template <typename Cdf>
[[nodiscard]] KsResult ks_one_sample(std::span<const double> samples, Cdf&& cdf) {
  if (samples.size() < kMinKsSample) {
    throw ConfigError("ks_one_sample: need at least 8 samples for a p-value");
  }
  const double d = ks_one_sample_statistic(samples, cdf);
  return {d, ks_p_value(d, static_cast<double>(samples.size())), samples.size(), 0};
}

[[nodiscard]] inline double uniform_cdf(double x) noexcept { return std::clamp(x, 0.0, 1.0); }

[[nodiscard]] inline double ks_two_sample_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ConfigError("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

[[nodiscard]] inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < kMinKsSample || b.size() < kMinKsSample) {
    throw ConfigError("ks_two_sample: need at least 8 samples on each side");
  }
  const double d = ks_two_sample_statistic(a, b);
  const double n = static_cast<double>(a.size());
  const double m = static_cast<double>(b.size());
  return {d, ks_p_value(d, n * m / (n + m)), a.size(), b.size()};
}

struct ChiSquareResult {
  double statistic = 0.0;
  std::uint64_t degrees_of_freedom = 0;
  double p_value = 1.0;
};

/// Pearson goodness of fit against category probabilities `probs`.
/// Categories with zero expected mass are skipped.
[[nodiscard]] inline ChiSquareResult chi_square(std::span<const std::uint64_t> counts, std::span<const double> probs) {
  if (counts.size() < 2) throw ConfigError("chi_square: need at least 2 categories");
  if (counts.size() != probs.size()) throw ConfigError("chi_square: counts and probabilities differ in length");
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  double stat = 0.0;
  std::uint64_t used = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double expected = total * probs[k];
    if (expected <= 0.0) continue;
    if (expected < 5.0) throw ConfigError("chi_square: expected count below 5 in some category");
    const double diff = static_cast<double>(counts[k]) - expected;
    stat += diff * diff / expected;
    ++used;
  }
  if (used < 2) throw ConfigError("chi_square: fewer than 2 categories with positive expectation");
  const std::uint64_t df = used - 1;
  const double p = stat == 0.0 ? 1.0 : boost::math::gamma_q(static_cast<double>(df) / 2.0, stat / 2.0);
  return {stat, df, p};
}

[[nodiscard]] inline ChiSquareResult chi_square_uniform(std::span<const std::uint64_t> counts) {
  const std::vector<double> probs(counts.size(), 1.0 / static_cast<double>(std::max<std::size_t>(counts.size(), 1)));
  return chi_square(counts, probs);
}

struct WelchResult {
  double statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;
};

/// Two-sided Welch t-test. When both variances are zero the result is p = 1
/// for equal means and p = 0 otherwise.
[[nodiscard]] inline WelchResult welch_t(const SampleSummary& a, const SampleSummary& b) {
  if (!a.has_variance() || !b.has_variance()) throw ConfigError("welch_t: both samples need n >= 2");
  const double va = a.variance / static_cast<double>(a.n);
  const double vb = b.variance / static_cast<double>(b.n);
  const double se2 = va + vb;
  if (se2 == 0.0) {
    if (a.mean == b.mean) return {0.0, 0.0, 1.0};
    return {std::copysign(std::numeric_limits<double>::infinity(), a.mean - b.mean), 0.0, 0.0};
  }
  const double t = (a.mean - b.mean) / std::sqrt(se2);
  const double df = se2 * se2 /
                    (va * va / static_cast<double>(a.n - 1) + vb * vb / static_cast<double>(b.n - 1));
  if (t == 0.0) return {0.0, df, 1.0};
  const boost::math::students_t dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return {t, df, std::clamp(p, 0.0, 1.0)};
}

struct DriftReport {
  double reported_time = 0.0;
  double expected_time = 0.0;
  double lag = 0.0;
  std::uint64_t ticks = 0;

  [[nodiscard]] double lag_per_tick() const noexcept { return lag / static_cast<double>(ticks); }
};

/// Lag of the trajectory's clock after its first `ticks` events, against a
/// correct clock advancing 1/nominal_rate per tick.
[[nodiscard]] inline DriftReport clock_drift(const Trajectory& traj, double nominal_rate, std::size_t ticks) {
  if (traj.empty()) throw ConfigError("clock_drift: empty trajectory");
  if (!(nominal_rate > 0.0)) throw ConfigError("clock_drift: nominal rate must be > 0");
  if (ticks == 0 || ticks > traj.size()) throw ConfigError("clock_drift: tick count out of range");
  DriftReport r;
  r.ticks = ticks;
  r.reported_time = traj.events[ticks - 1].time;
  r.expected_time = static_cast<double>(ticks) / nominal_rate;
  r.lag = r.expected_time - r.reported_time;
  return r;
}

[[nodiscard]] inline DriftReport clock_drift(const Trajectory& traj, double nominal_rate) {
  if (traj.empty()) throw ConfigError("clock_drift: empty trajectory");
  return clock_drift(traj, nominal_rate, traj.size());
}

}  // namespace mcfault::stats
