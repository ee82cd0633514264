#pragma once

// Scalar information-theoretic primitives: binary kl and its inverses,
// discrete KL between finite distributions, and the binomial tail.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitkl {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

inline void require_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error(std::string(what) + " must lie in [0,1], got " + std::to_string(p));
  }
}

inline void require_epsilon(double eps) {
  if (!(eps >= 0.0)) {
    throw std::domain_error("kl budget must be non-negative, got " + std::to_string(eps));
  }
}

inline void require_confidence(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::domain_error("delta must lie in (0,1), got " + std::to_string(delta));
  }
}

// Bisection on a monotone predicate over [lo, hi]. `keep_lo(mid)` true means
// the answer lies at or above mid. Runs until no double separates the ends.
template <typename Pred>
double bisect(double lo, double hi, Pred keep_lo, bool return_lo) {
  for (int it = 0; it < 200; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (!(mid > lo && mid < hi)) break;
    if (keep_lo(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return return_lo ? lo : hi;
}

}  // namespace detail

/// A probability vector. Weights are non-negative and sum to one within 1e-9.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;
  explicit DiscreteDistribution(std::vector<double> weights) : weights_(std::move(weights)) {
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw std::domain_error("distribution weights must be non-negative");
      total += w;
    }
    if (weights_.empty() || std::abs(total - 1.0) > 1e-9) {
      throw std::domain_error("distribution weights must sum to 1");
    }
  }

  static DiscreteDistribution uniform(std::size_t size) {
    if (size == 0) throw std::invalid_argument("uniform distribution needs at least one atom");
    return DiscreteDistribution(std::vector<double>(size, 1.0 / static_cast<double>(size)));
  }

  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }

 private:
  std::vector<double> weights_;
};

/// kl(p_hat || p) between Bernoulli(p_hat) and Bernoulli(p), with 0 ln 0 = 0.
inline double bernoulli_kl(double p_hat, double p) {
  detail::require_probability(p_hat, "p_hat");
  detail::require_probability(p, "p");
  double result = 0.0;
  if (p_hat > 0.0) {
    if (p == 0.0) return kInf;
    result += p_hat * std::log(p_hat / p);
  }
  if (p_hat < 1.0) {
    if (p == 1.0) return kInf;
    result += (1.0 - p_hat) * std::log((1.0 - p_hat) / (1.0 - p));
  }
  return std::max(result, 0.0);
}

/// Largest p in [p_hat, 1] with kl(p_hat || p) <= eps.
inline double kl_inv_upper(double p_hat, double eps) {
  detail::require_probability(p_hat, "p_hat");
  detail::require_epsilon(eps);
  if (eps == kInf || p_hat == 1.0) return 1.0;
  if (eps == 0.0) return p_hat;
  return detail::bisect(
      p_hat, 1.0, [&](double p) { return bernoulli_kl(p_hat, p) <= eps; }, true);
}

/// Smallest p in [0, p_hat] with kl(p_hat || p) <= eps.
inline double kl_inv_lower(double p_hat, double eps) {
  detail::require_probability(p_hat, "p_hat");
  detail::require_epsilon(eps);
  if (eps == kInf || p_hat == 0.0) return 0.0;
  if (eps == 0.0) return p_hat;
  return detail::bisect(
      0.0, p_hat, [&](double p) { return bernoulli_kl(p_hat, p) > eps; }, false);
}

/// KL(rho || pi) for finite distributions given as weight vectors.
/// Returns +inf when rho puts mass where pi has none.
inline double discrete_kl(std::span<const double> rho, std::span<const double> pi) {
  if (rho.size() != pi.size()) {
    throw std::invalid_argument("discrete_kl: length mismatch (" + std::to_string(rho.size()) +
                                " vs " + std::to_string(pi.size()) + ")");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] <= 0.0) continue;
    if (pi[i] <= 0.0) return kInf;
    total += rho[i] * std::log(rho[i] / pi[i]);
  }
  return std::max(total, 0.0);
}

inline double discrete_kl(const DiscreteDistribution& rho, const DiscreteDistribution& pi) {
  return discrete_kl(rho.weights(), pi.weights());
}

/// P[Binomial(n, p) <= k], accumulated in log space.
inline double binomial_tail(std::uint64_t n, std::uint64_t k, double p) {
  if (k > n) {
    throw std::domain_error("binomial_tail: k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  }
  detail::require_probability(p, "p");
  if (k == n || p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;

  const double nd = static_cast<double>(n);
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  const double log_n_fact = std::lgamma(nd + 1.0);

  // The summands are unimodal in j; find the largest for a stable log-sum-exp.
  auto log_pmf = [&](std::uint64_t j) {
    const double jd = static_cast<double>(j);
    return log_n_fact - std::lgamma(jd + 1.0) - std::lgamma(nd - jd + 1.0) + jd * log_p +
           (nd - jd) * log_q;
  };
  double peak = -kInf;
  for (std::uint64_t j = 0; j <= k; ++j) peak = std::max(peak, log_pmf(j));
  double acc = 0.0;
  for (std::uint64_t j = 0; j <= k; ++j) acc += std::exp(log_pmf(j) - peak);
  return std::min(1.0, std::exp(peak + std::log(acc)));
}

/// Largest p with P[Binomial(n, p) <= k] >= delta.
inline double binomial_tail_inverse(std::uint64_t n, std::uint64_t k, double delta) {
  if (k > n) {
    throw std::domain_error("binomial_tail_inverse: k exceeds n");
  }
  detail::require_confidence(delta);
  if (k == n) return 1.0;
  return detail::bisect(
      0.0, 1.0, [&](double p) { return binomial_tail(n, k, p) >= delta; }, true);
}

/// psi(u) = u - ln(1 + u), defined for u > -1.
inline double psi(double u) {
  if (!(u > -1.0)) throw std::domain_error("psi requires u > -1");
  return u - std::log1p(u);
}

/// phi(x) = e^x - x - 1.
inline double phi(double x) { return std::expm1(x) - x; }

}  // namespace splitkl
