#pragma once

// PAC-Bayes bounds as deterministic functions of Gibbs aggregates
// (posterior-weighted empirical quantities and the KL complexity).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "splitkl/bound_report.hpp"
#include "splitkl/concentration.hpp"
#include "splitkl/kl.hpp"

namespace splitkl {

/// Gibbs aggregates for a loss bounded in [lo, hi] with split point mu.
struct PacBayesInput {
  double gibbs_mean = 0.0;           // E_rho[empirical loss]
  double gibbs_second_moment = 0.0;  // E_rho[(1/n) sum loss^2]
  double gibbs_plus_mean = 0.0;      // E_rho[empirical loss+]
  double gibbs_minus_mean = 0.0;     // E_rho[empirical loss-]
  double kl_complexity = 0.0;        // KL(rho || pi)
  std::size_t n = 1;
  double lo = 0.0;
  double hi = 1.0;
  double mu = 0.0;
};

/// Inputs of the excess-loss bound with forward/backward informed priors.
/// `fwd_*` are measured on the second half against the reference trained on
/// the first half, `bwd_*` the other way around. The excess loss lives in
/// [-1, 1] and is split at mu.
struct ExcessLossInput {
  double fwd_plus = 0.0;
  double bwd_plus = 0.0;
  double fwd_minus = 0.0;
  double bwd_minus = 0.0;
  double kl_complexity = 0.0;
  std::size_t n = 2;
  std::uint64_t ref_errors_fwd = 0;  // errors of the first-half reference on the second half
  std::uint64_t ref_errors_bwd = 0;
  double mu = 0.0;
};

namespace detail {

inline void require_complexity(double kl) {
  if (!(kl >= 0.0)) throw std::domain_error("KL complexity must be non-negative");
}

inline void require_count(std::size_t n) {
  if (n == 0) throw std::domain_error("sample size must be positive");
}

}  // namespace detail

/// ln(2 sqrt(n) / delta).
inline double maurer_log_term(std::size_t n, double delta) {
  return std::log(2.0 * std::sqrt(static_cast<double>(n)) / delta);
}

/// PAC-Bayes-kl upper bound on E_rho[L(h)].
inline double pb_kl_bound(double gibbs_mean, double kl_complexity, std::size_t n, double delta) {
  detail::require_probability(gibbs_mean, "gibbs_mean");
  detail::require_complexity(kl_complexity);
  detail::require_confidence(delta);
  detail::require_count(n);
  return kl_inv_upper(gibbs_mean, (kl_complexity + maurer_log_term(n, delta)) / static_cast<double>(n));
}

/// Refined Pinsker relaxation of the PAC-Bayes-kl bound.
inline double pb_kl_pinsker_relaxation(double gibbs_mean, double kl_complexity, std::size_t n,
                                       double delta) {
  detail::require_complexity(kl_complexity);
  detail::require_confidence(delta);
  detail::require_count(n);
  const double rate = (kl_complexity + maurer_log_term(n, delta)) / static_cast<double>(n);
  return gibbs_mean + std::sqrt(2.0 * gibbs_mean * rate) + 2.0 * rate;
}

/// PAC-Bayes-Unexpected-Bernstein at fixed gamma in (0, 1/hi).
inline double pb_unexpected_bernstein(const PacBayesInput& in, double gamma, double delta) {
  detail::require_complexity(in.kl_complexity);
  detail::require_confidence(delta);
  detail::require_count(in.n);
  const double b = in.hi;
  if (!(b > 0.0)) throw std::domain_error("upper range must be positive");
  if (!(gamma > 0.0 && gamma < 1.0 / b)) {
    throw std::domain_error("gamma must lie in (0, 1/b), got " + std::to_string(gamma));
  }
  return in.gibbs_mean + psi(-gamma * b) / (gamma * b * b) * in.gibbs_second_moment +
         (in.kl_complexity + std::log(1.0 / delta)) / (gamma * static_cast<double>(in.n));
}

/// Grid-minimized PAC-Bayes-Unexpected-Bernstein with a union bound over the grid.
inline BoundReport pb_unexpected_bernstein_grid(const PacBayesInput& in, double delta) {
  const GammaGrid grid = make_gamma_grid(in.n, delta, in.hi);
  const double point_delta = delta / static_cast<double>(grid.count());
  BoundReport report{"pb_ub", kInf, delta, {}};
  double best_gamma = grid.values.front();
  for (double gamma : grid.values) {
    const double value = pb_unexpected_bernstein(in, gamma, point_delta);
    if (value < report.value) {
      report.value = value;
      best_gamma = gamma;
    }
  }
  report.params["gamma"] = best_gamma;
  report.params["grid_size"] = static_cast<double>(grid.count());
  return report;
}

/// PAC-Bayes-split-kl bound.
inline double pb_split_kl(const PacBayesInput& in, double delta) {
  detail::require_complexity(in.kl_complexity);
  detail::require_confidence(delta);
  detail::require_count(in.n);
  if (!(in.lo <= in.mu && in.mu <= in.hi)) throw std::domain_error("split point outside [lo,hi]");
  const double nd = static_cast<double>(in.n);
  const double eps = (in.kl_complexity + std::log(4.0 * std::sqrt(nd) / delta)) / nd;
  return detail::split_kl_terms(in.mu, in.lo, in.hi, in.gibbs_plus_mean, in.gibbs_minus_mean, eps);
}

/// Test Set Bound: exact binomial-tail inversion for a single hypothesis.
inline double test_set_bound(std::uint64_t n, std::uint64_t errors, double delta) {
  if (errors > n) throw std::domain_error("error count exceeds sample size");
  return binomial_tail_inverse(n, errors, delta);
}

/// Excess-loss bound with informed priors on two equal halves of the sample.
/// The excess loss lies in [-1, 1]; the two reference hypotheses are covered
/// by test set bounds at delta/4 each.
inline double excess_informed_bound(const ExcessLossInput& x, double delta) {
  detail::require_complexity(x.kl_complexity);
  detail::require_confidence(delta);
  if (x.n == 0 || x.n % 2 != 0) throw std::domain_error("excess-loss bound needs an even, positive n");
  if (!(x.mu >= -1.0 && x.mu <= 1.0)) throw std::domain_error("mu must lie in [-1,1]");
  const std::uint64_t half = x.n / 2;
  if (x.ref_errors_fwd > half || x.ref_errors_bwd > half) {
    throw std::domain_error("reference error count exceeds n/2");
  }
  const double hd = static_cast<double>(half);
  const double eps = (x.kl_complexity + std::log(8.0 * std::sqrt(hd) / delta)) / hd;
  const double excess = detail::split_kl_terms(x.mu, -1.0, 1.0, 0.5 * (x.fwd_plus + x.bwd_plus),
                                               0.5 * (x.fwd_minus + x.bwd_minus), eps);
  const double refs = binomial_tail_inverse(half, x.ref_errors_fwd, delta / 4.0) +
                      binomial_tail_inverse(half, x.ref_errors_bwd, delta / 4.0);
  return excess + 0.5 * refs;
}

// PAC-Bayes-lambda forms with an explicit complexity term. The majority-vote
// bounds plug in their own complexity (2 KL plus their log factor).

/// mean/(1 - lambda/2) + complexity/(lambda (1 - lambda/2) n), lambda in (0,2).
inline double lambda_relaxed_upper(double mean, double complexity, double n, double lambda) {
  if (!(lambda > 0.0 && lambda < 2.0)) throw std::domain_error("lambda must lie in (0,2)");
  const double shrink = 1.0 - lambda / 2.0;
  return mean / shrink + complexity / (lambda * shrink * n);
}

/// (1 - gamma/2) mean - complexity/(gamma n), gamma > 0. An infinite gamma
/// is the limit for mean = 0 and yields 0.
inline double lambda_relaxed_lower(double mean, double complexity, double n, double gamma) {
  if (!(gamma > 0.0)) throw std::domain_error("gamma must be positive");
  if (gamma == kInf) return mean > 0.0 ? -kInf : 0.0;
  return (1.0 - gamma / 2.0) * mean - complexity / (gamma * n);
}

inline double optimal_lambda_for(double mean, double complexity, double n) {
  return 2.0 / (std::sqrt(2.0 * n * mean / complexity + 1.0) + 1.0);
}

// Stationary point of (1 - gamma/2) mean - complexity/(gamma n).
inline double optimal_gamma_for(double mean, double complexity, double n) {
  if (mean <= 0.0) return kInf;
  return std::sqrt(2.0 * complexity / (n * mean));
}

inline double pb_lambda_upper(double gibbs_mean, double kl_complexity, std::size_t n, double delta,
                              double lambda) {
  detail::require_complexity(kl_complexity);
  detail::require_confidence(delta);
  detail::require_count(n);
  return lambda_relaxed_upper(gibbs_mean, kl_complexity + maurer_log_term(n, delta),
                              static_cast<double>(n), lambda);
}

inline double pb_lambda_lower(double gibbs_mean, double kl_complexity, std::size_t n, double delta,
                              double gamma) {
  detail::require_complexity(kl_complexity);
  detail::require_confidence(delta);
  detail::require_count(n);
  return lambda_relaxed_lower(gibbs_mean, kl_complexity + maurer_log_term(n, delta),
                              static_cast<double>(n), gamma);
}

/// Closed-form minimizer of pb_lambda_upper over lambda.
inline double optimal_lambda(double gibbs_mean, double kl_complexity, std::size_t n, double delta) {
  detail::require_complexity(kl_complexity);
  detail::require_confidence(delta);
  detail::require_count(n);
  return optimal_lambda_for(gibbs_mean, kl_complexity + maurer_log_term(n, delta), static_cast<double>(n));
}

/// Closed-form maximizer of pb_lambda_lower over gamma; +inf when gibbs_mean = 0.
inline double optimal_gamma(double gibbs_mean, double kl_complexity, std::size_t n, double delta) {
  detail::require_complexity(kl_complexity);
  detail::require_confidence(delta);
  detail::require_count(n);
  return optimal_gamma_for(gibbs_mean, kl_complexity + maurer_log_term(n, delta), static_cast<double>(n));
}

}  // namespace splitkl
