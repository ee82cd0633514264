#pragma once

// Concentration bounds for the mean of an i.i.d. sample bounded in [lo, hi]:
// kl, Empirical Bernstein, Unexpected Bernstein (with its gamma grid) and
// split-kl. All functions return raw, unclipped upper bounds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "splitkl/bound_report.hpp"
#include "splitkl/kl.hpp"

namespace splitkl {

/// Sufficient statistics of a sample for the kl and Bernstein-type bounds.
///
/// Two variance-like quantities are kept apart: `second_moment_mean` is the
/// uncentered (1/n) sum Z_i^2 used by Unexpected Bernstein, while
/// `unbiased_variance` is the centered 1/(n-1) estimator used by Empirical
/// Bernstein.
struct EmpiricalSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double second_moment_mean = 0.0;
  double unbiased_variance = 0.0;
  double lo = 0.0;
  double hi = 1.0;

  static EmpiricalSummary from_samples(std::span<const double> samples, double lo, double hi) {
    if (samples.empty()) throw std::invalid_argument("empty sample");
    if (!(lo < hi)) throw std::domain_error("interval requires lo < hi");
    EmpiricalSummary s;
    s.n = samples.size();
    s.lo = lo;
    s.hi = hi;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double z : samples) {
      if (!(z >= lo && z <= hi)) {
        throw std::domain_error("sample value " + std::to_string(z) + " outside [" +
                                std::to_string(lo) + "," + std::to_string(hi) + "]");
      }
      sum += z;
      sum_sq += z * z;
    }
    const double nd = static_cast<double>(s.n);
    s.mean = std::clamp(sum / nd, lo, hi);
    s.second_moment_mean = sum_sq / nd;
    if (s.n >= 2) {
      double centered = 0.0;
      for (double z : samples) centered += (z - s.mean) * (z - s.mean);
      s.unbiased_variance = centered / (nd - 1.0);
    }
    return s;
  }
};

/// Empirical means of Z+ = max(0, Z - mu) and Z- = max(0, mu - Z).
struct SplitSummary {
  std::size_t n = 0;
  double mu = 0.0;
  double plus_mean = 0.0;
  double minus_mean = 0.0;
  double lo = 0.0;
  double hi = 1.0;
};

inline SplitSummary split_decompose(std::span<const double> samples, double mu, double lo, double hi) {
  if (samples.empty()) throw std::invalid_argument("empty sample");
  if (!(lo <= mu && mu <= hi)) throw std::domain_error("split point outside [lo,hi]");
  double plus = 0.0;
  double minus = 0.0;
  for (double z : samples) {
    if (!(z >= lo && z <= hi)) {
      throw std::domain_error("sample value " + std::to_string(z) + " outside [lo,hi]");
    }
    plus += std::max(0.0, z - mu);
    minus += std::max(0.0, mu - z);
  }
  const double nd = static_cast<double>(samples.size());
  return SplitSummary{samples.size(), mu, std::min(plus / nd, hi - mu), std::min(minus / nd, mu - lo), lo, hi};
}

namespace detail {

inline void require_interval(double lo, double hi) {
  if (!(lo < hi)) throw std::domain_error("interval requires lo < hi");
}

inline double rescale(double value, double lo, double hi) {
  return std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
}

// (b - mu) kl^{-1,+}(p+/(b - mu), eps) - (mu - a) kl^{-1,-}(p-/(mu - a), eps);
// a zero-width side contributes nothing.
inline double split_kl_terms(double mu, double lo, double hi, double plus_mean, double minus_mean,
                             double eps) {
  double value = mu;
  const double up = hi - mu;
  const double down = mu - lo;
  if (up > 0.0) value += up * kl_inv_upper(std::clamp(plus_mean / up, 0.0, 1.0), eps);
  if (down > 0.0) value -= down * kl_inv_lower(std::clamp(minus_mean / down, 0.0, 1.0), eps);
  return value;
}

}  // namespace detail

/// kl upper bound on the mean of a variable in [lo, hi] (rescaled to [0,1]).
inline double kl_upper_bound(double mean, std::size_t n, double delta, double lo, double hi) {
  detail::require_interval(lo, hi);
  detail::require_confidence(delta);
  if (n == 0) throw std::domain_error("n must be positive");
  const double eps = std::log(1.0 / delta) / static_cast<double>(n);
  return lo + (hi - lo) * kl_inv_upper(detail::rescale(mean, lo, hi), eps);
}

/// kl lower bound, mirror of kl_upper_bound.
inline double kl_lower_bound(double mean, std::size_t n, double delta, double lo, double hi) {
  detail::require_interval(lo, hi);
  detail::require_confidence(delta);
  if (n == 0) throw std::domain_error("n must be positive");
  const double eps = std::log(1.0 / delta) / static_cast<double>(n);
  return lo + (hi - lo) * kl_inv_lower(detail::rescale(mean, lo, hi), eps);
}

/// Maurer-Pontil Empirical Bernstein bound; needs n >= 2.
inline double empirical_bernstein_bound(const EmpiricalSummary& s, double delta) {
  detail::require_confidence(delta);
  if (s.n < 2) throw std::domain_error("Empirical Bernstein needs n >= 2");
  const double nd = static_cast<double>(s.n);
  const double log_term = std::log(2.0 / delta);
  return s.mean + std::sqrt(2.0 * s.unbiased_variance * log_term / nd) +
         7.0 * (s.hi - s.lo) * log_term / (3.0 * (nd - 1.0));
}

/// Geometric grid {1/(2b), ..., 1/(2^k b)} for the Unexpected Bernstein union bound.
struct GammaGrid {
  std::vector<double> values;
  std::size_t count() const { return values.size(); }
};

inline GammaGrid make_gamma_grid(std::size_t n, double delta, double b) {
  detail::require_confidence(delta);
  if (n == 0) throw std::domain_error("n must be positive");
  if (!(b > 0.0)) throw std::domain_error("gamma grid needs b > 0");
  const double raw = std::ceil(std::log2(std::sqrt(static_cast<double>(n) / std::log(1.0 / delta)) / 2.0));
  const auto k = static_cast<std::size_t>(std::max(1.0, raw));
  GammaGrid grid;
  grid.values.reserve(k);
  double denom = 2.0 * b;
  for (std::size_t i = 0; i < k; ++i, denom *= 2.0) grid.values.push_back(1.0 / denom);
  return grid;
}

/// Unexpected Bernstein bound at a fixed gamma in (0, 1/b), b = s.hi.
inline double unexpected_bernstein_bound(const EmpiricalSummary& s, double gamma, double delta) {
  detail::require_confidence(delta);
  const double b = s.hi;
  if (!(b > 0.0)) throw std::domain_error("Unexpected Bernstein needs an upper range b > 0");
  if (!(gamma > 0.0 && gamma < 1.0 / b)) {
    throw std::domain_error("gamma must lie in (0, 1/b), got " + std::to_string(gamma));
  }
  const double nd = static_cast<double>(s.n);
  return s.mean + psi(-gamma * b) / (gamma * b * b) * s.second_moment_mean +
         std::log(1.0 / delta) / (gamma * nd);
}

/// Minimum of the Unexpected Bernstein bound over the gamma grid, each point at delta/k.
inline BoundReport unexpected_bernstein_grid_bound(const EmpiricalSummary& s, double delta) {
  const GammaGrid grid = make_gamma_grid(s.n, delta, s.hi);
  const double point_delta = delta / static_cast<double>(grid.count());
  BoundReport report{"ub", kInf, delta, {}};
  double best_gamma = grid.values.front();
  for (double gamma : grid.values) {
    const double value = unexpected_bernstein_bound(s, gamma, point_delta);
    if (value < report.value) {
      report.value = value;
      best_gamma = gamma;
    }
  }
  report.params["gamma"] = best_gamma;
  report.params["grid_size"] = static_cast<double>(grid.count());
  return report;
}

/// Split-kl bound: kl upper bound on Z+ and kl lower bound on Z-, each at delta/2.
inline double split_kl_bound(const SplitSummary& s, double delta) {
  detail::require_confidence(delta);
  if (s.n == 0) throw std::domain_error("n must be positive");
  if (!(s.lo <= s.mu && s.mu <= s.hi)) throw std::domain_error("split point outside [lo,hi]");
  const double eps = std::log(2.0 / delta) / static_cast<double>(s.n);
  return detail::split_kl_terms(s.mu, s.lo, s.hi, s.plus_mean, s.minus_mean, eps);
}

}  // namespace splitkl
