#pragma once

// Majority-vote bounds (TND and the Chebyshev-Cantelli family) and their
// posterior optimization by alternating closed-form/grid parameter steps with
// projected iRProp+ on rho.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "splitkl/bound_report.hpp"
#include "splitkl/concentration.hpp"
#include "splitkl/kl.hpp"
#include "splitkl/optim.hpp"
#include "splitkl/pac_bayes.hpp"
#include "splitkl/parallel.hpp"
#include "splitkl/tandem.hpp"

namespace splitkl {

/// Posterior rho and prior pi over H hypotheses.
struct PosteriorWeights {
  std::vector<double> rho;
  std::vector<double> pi;

  static PosteriorWeights uniform(std::size_t hypotheses) {
    if (hypotheses == 0) throw std::invalid_argument("no hypotheses");
    std::vector<double> u(hypotheses, 1.0 / static_cast<double>(hypotheses));
    return {u, u};
  }

  void validate(std::size_t hypotheses) const {
    if (rho.size() != hypotheses || pi.size() != hypotheses) {
      throw std::invalid_argument("posterior/prior length does not match the number of hypotheses");
    }
    check_simplex(rho, "rho");
    check_simplex(pi, "pi");
  }

 private:
  static void check_simplex(const std::vector<double>& v, const char* what) {
    double total = 0.0;
    for (double x : v) {
      if (!(x >= 0.0)) throw std::domain_error(std::string(what) + " has a negative or NaN entry");
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::domain_error(std::string(what) + " does not sum to one");
  }
};

/// 100 points (k - 50)/100, k = 0..99: [-0.5, 0.49] with 0 exactly on the grid.
inline std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  grid.reserve(100);
  for (int k = 0; k < 100; ++k) grid.push_back(static_cast<double>(k - 50) / 100.0);
  return grid;
}

/// Geometric grid of `count` points from `first` to `last` inclusive.
inline std::vector<double> geometric_grid(double first, double last, std::size_t count) {
  if (!(first > 0.0 && last >= first) || count == 0) throw std::invalid_argument("invalid geometric grid");
  std::vector<double> grid(count, first);
  if (count == 1) return grid;
  const double ratio = std::log(last / first) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) grid[i] = first * std::exp(ratio * static_cast<double>(i));
  grid.back() = last;
  return grid;
}

/// Lambda grid for CCPBB: 20 points from 1e-3 to 0.95 of the admissible
/// upper end 2(m-1)/m.
inline std::vector<double> ccpbb_lambda_grid(std::size_t m) {
  if (m < 2) throw std::domain_error("CCPBB needs m >= 2");
  const double top = 2.0 * static_cast<double>(m - 1) / static_cast<double>(m);
  return geometric_grid(1e-3 * top, 0.95 * top, 20);
}

inline std::vector<double> ccpbb_gamma_grid() { return geometric_grid(1e-3, 10.0, 20); }

namespace detail {

inline double cc_scale(double alpha) { return 1.0 / ((0.5 - alpha) * (0.5 - alpha)); }

inline double tandem_log_term(std::size_t m, double delta) {
  return std::log(4.0 * std::sqrt(static_cast<double>(m)) / delta);
}

inline void check_weights(std::size_t hypotheses, const PosteriorWeights& w, double delta) {
  require_confidence(delta);
  w.validate(hypotheses);
}

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// d KL(rho||pi) / d rho_i = ln(rho_i / pi_i) + 1.
inline void kl_gradient(std::span<const double> rho, std::span<const double> pi, std::span<double> out) {
  for (std::size_t i = 0; i < rho.size(); ++i) {
    out[i] = std::log(std::max(rho[i], 1e-300) / pi[i]) + 1.0;
  }
}

inline void require_positive_prior(std::span<const double> pi) {
  for (double p : pi) {
    if (!(p > 0.0)) throw std::domain_error("prior must be strictly positive for optimization");
  }
}

// Lower PAC-Bayes-lambda surrogate; an infinite gamma is treated as the zero
// surrogate (its value at a zero mean).
inline double lower_surrogate(double mean, double complexity, double n, double gamma) {
  if (gamma == kInf) return 0.0;
  return (1.0 - gamma / 2.0) * mean - complexity / (gamma * n);
}

// Shared compute form of TND and CCPBSkl: scale * split-kl over [lo, hi]
// split at mid, with the tandem complexity.
inline double kl_tandem_value(double scale, const AlphaRange& r, double plus_q, double minus_q, double eps) {
  return scale * split_kl_terms(r.mid, r.lo, r.hi, plus_q, minus_q, eps);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Compute forms

inline double tnd_bound(const TandemStats& ts, const PosteriorWeights& w, double delta) {
  detail::check_weights(ts.hypotheses(), w, delta);
  const double complexity = 2.0 * discrete_kl(w.rho, w.pi) + detail::tandem_log_term(ts.m, delta);
  const double tandem = detail::clamp01(quad_form(ts.tandem_loss, w.rho));
  return detail::kl_tandem_value(4.0, AlphaRange{0.0, 0.0, 1.0, 1.0}, tandem, 0.0,
                                 complexity / static_cast<double>(ts.m));
}

inline double cctnd_bound(const TandemStats& ts, const PosteriorWeights& w, double alpha, double delta) {
  detail::check_weights(ts.hypotheses(), w, delta);
  if (!(alpha < 0.5)) throw std::domain_error("alpha must be below 0.5");
  const double kl = discrete_kl(w.rho, w.pi);
  const double md = static_cast<double>(ts.m);
  const double nd = static_cast<double>(ts.n);
  const double tandem = detail::clamp01(quad_form(ts.tandem_loss, w.rho));
  const double gibbs = detail::clamp01(dot(ts.single_loss, w.rho));
  const double tandem_up = kl_inv_upper(tandem, (2.0 * kl + detail::tandem_log_term(ts.m, delta)) / md);
  const double eps_single = (kl + std::log(4.0 * std::sqrt(nd) / delta)) / nd;
  const double single = alpha >= 0.0 ? kl_inv_lower(gibbs, eps_single) : kl_inv_upper(gibbs, eps_single);
  return detail::cc_scale(alpha) * (tandem_up - 2.0 * alpha * single + alpha * alpha);
}

inline double ccpbb_bound(const AlphaTandemStats& ats, const PosteriorWeights& w, double lambda, double gamma,
                          double delta, std::size_t k_lambda, std::size_t k_gamma) {
  detail::check_weights(ats.hypotheses(), w, delta);
  if (ats.m < 2) throw std::domain_error("CCPBB needs m >= 2");
  const double md = static_cast<double>(ats.m);
  const double nd = static_cast<double>(ats.n);
  const double lambda_top = 2.0 * (md - 1.0) / md;
  if (!(lambda > 0.0 && lambda < lambda_top)) throw std::domain_error("lambda must lie in (0, 2(m-1)/m)");
  if (!(gamma > 0.0 && std::isfinite(gamma))) throw std::domain_error("gamma must be positive and finite");
  if (k_lambda == 0 || k_gamma == 0) throw std::domain_error("grid sizes must be positive");
  const double k = std::max(1.0 - ats.alpha, 1.0 - 2.0 * ats.alpha);
  const double complexity = 2.0 * discrete_kl(w.rho, w.pi) +
                            std::log(2.0 * static_cast<double>(k_lambda) * static_cast<double>(k_gamma) / delta);
  const double shrink = 1.0 - lambda * md / (2.0 * (md - 1.0));
  const double bennett = phi(gamma * k) / (gamma * k * k);
  const double inner = quad_form(ats.mean, w.rho) + complexity / (gamma * md) +
                       bennett * (quad_form(ats.variance, w.rho) / shrink +
                                  k * k * complexity / (nd * lambda * shrink));
  return detail::cc_scale(ats.alpha) * inner;
}

inline double ccpbub_bound(const AlphaTandemStats& ats, const PosteriorWeights& w, double gamma, double delta) {
  detail::check_weights(ats.hypotheses(), w, delta);
  const double b = ats.range.hi;
  if (!(gamma > 0.0 && gamma < 1.0 / b)) {
    throw std::domain_error("gamma must lie in (0, 1/(1-alpha)^2), got " + std::to_string(gamma));
  }
  const double md = static_cast<double>(ats.m);
  const auto k_gamma = static_cast<double>(make_gamma_grid(ats.m, delta, b).count());
  const double complexity = 2.0 * discrete_kl(w.rho, w.pi) + std::log(k_gamma / delta);
  const double inner = quad_form(ats.mean, w.rho) +
                       psi(-gamma * b) / (gamma * b * b) * quad_form(ats.second_moment, w.rho) +
                       complexity / (gamma * md);
  return detail::cc_scale(ats.alpha) * inner;
}

inline double ccpbskl_bound(const AlphaTandemStats& ats, const PosteriorWeights& w, double delta) {
  detail::check_weights(ats.hypotheses(), w, delta);
  const double complexity = 2.0 * discrete_kl(w.rho, w.pi) + detail::tandem_log_term(ats.m, delta);
  return detail::kl_tandem_value(detail::cc_scale(ats.alpha), ats.range, quad_form(ats.plus, w.rho),
                                 quad_form(ats.minus, w.rho), complexity / static_cast<double>(ats.m));
}

// ---------------------------------------------------------------------------
// Relaxed problems. Each exposes fit (parameter step at fixed rho),
// objective/gradient (relaxed surrogate in rho at fixed parameters), bound
// (compute form at the current parameters) and params/set_params.

struct MvParams {
  double alpha = 0.0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double gamma_upper = std::numeric_limits<double>::quiet_NaN();  // CCTND, alpha < 0 regime
};

namespace detail {

/// TND (scale 4 on [0,1] split at 0) and CCPBSkl at a fixed alpha.
class KlTandemProblem {
 public:
  KlTandemProblem(double scale, AlphaRange range, const Matrix<double>& plus, const Matrix<double>* minus,
                  std::size_t m, std::span<const double> pi, double delta, double alpha)
      : scale_(scale), range_(range), plus_(plus), minus_(minus), m_(static_cast<double>(m)), pi_(pi),
        log_term_(tandem_log_term(m, delta)) {
    params_.alpha = alpha;
    up_ = range_.hi - range_.mid;
    down_ = range_.mid - range_.lo;
    if (minus_ == nullptr) down_ = 0.0;
    work_.resize(pi.size());
    kl_grad_.resize(pi.size());
  }

  void fit(std::span<const double> rho) {
    const double c = complexity(rho);
    if (up_ > 0.0) params_.lambda = optimal_lambda_for(clamp01(quad_form(plus_, rho) / up_), c, m_);
    if (down_ > 0.0) params_.gamma = optimal_gamma_for(clamp01(quad_form(*minus_, rho) / down_), c, m_);
  }

  double objective(std::span<const double> rho) const {
    const double c = complexity(rho);
    double value = range_.mid;
    if (up_ > 0.0) value += up_ * lambda_relaxed_upper(quad_form(plus_, rho) / up_, c, m_, params_.lambda);
    if (down_ > 0.0) value -= down_ * lower_surrogate(quad_form(*minus_, rho) / down_, c, m_, params_.gamma);
    return scale_ * value;
  }

  void gradient(std::span<const double> rho, std::span<double> out) {
    kl_gradient(rho, pi_, kl_grad_);
    std::fill(out.begin(), out.end(), 0.0);
    if (up_ > 0.0) {
      const double shrink = 1.0 - params_.lambda / 2.0;
      mat_vec(plus_, rho, work_);
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += 2.0 * work_[i] / shrink + up_ * 2.0 * kl_grad_[i] / (params_.lambda * shrink * m_);
      }
    }
    if (down_ > 0.0 && params_.gamma != kInf) {
      mat_vec(*minus_, rho, work_);
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= (1.0 - params_.gamma / 2.0) * 2.0 * work_[i] - down_ * 2.0 * kl_grad_[i] / (params_.gamma * m_);
      }
    }
    for (double& g : out) g *= scale_;
  }

  double bound(std::span<const double> rho) const {
    const double minus_q = minus_ == nullptr ? 0.0 : quad_form(*minus_, rho);
    return kl_tandem_value(scale_, range_, quad_form(plus_, rho), minus_q, complexity(rho) / m_);
  }

  MvParams params() const { return params_; }
  void set_params(const MvParams& p) { params_ = p; }

 private:
  double complexity(std::span<const double> rho) const { return 2.0 * discrete_kl(rho, pi_) + log_term_; }

  double scale_;
  AlphaRange range_;
  const Matrix<double>& plus_;
  const Matrix<double>* minus_;
  double m_;
  std::span<const double> pi_;
  double log_term_;
  double up_ = 0.0;
  double down_ = 0.0;
  MvParams params_;
  std::vector<double> work_;
  std::vector<double> kl_grad_;
};

/// CCTND with alpha as a continuous parameter in [alpha_min, alpha_max].
class CctndProblem {
 public:
  CctndProblem(const TandemStats& ts, std::span<const double> pi, double delta, double alpha,
               double alpha_min, double alpha_max, bool alpha_free)
      : ts_(ts), pi_(pi), delta_(delta), m_(static_cast<double>(ts.m)), n_(static_cast<double>(ts.n)),
        log_m_(tandem_log_term(ts.m, delta)), log_n_(std::log(4.0 * std::sqrt(n_) / delta)),
        alpha_min_(alpha_min), alpha_max_(alpha_max), alpha_free_(alpha_free) {
    params_.alpha = alpha;
    work_.resize(pi.size());
    kl_grad_.resize(pi.size());
  }

  void fit(std::span<const double> rho) {
    fit_lambda_gamma(rho);
    if (!alpha_free_) return;
    const double kl = discrete_kl(rho, pi_);
    const double tandem = quad_form(ts_.tandem_loss, rho);
    const double gibbs = dot(ts_.single_loss, rho);
    const double t = lambda_relaxed_upper(tandem, 2.0 * kl + log_m_, m_, params_.lambda);
    const double u_lo = lower_surrogate(gibbs, kl + log_n_, n_, params_.gamma);
    const double u_up = lambda_relaxed_upper(gibbs, kl + log_n_, n_, params_.gamma_upper);
    auto value = [&](double a) {
      const double u = a >= 0.0 ? u_lo : u_up;
      return cc_scale(a) * (t - 2.0 * a * u + a * a);
    };
    // Stationary point of (t - 2 a u + a^2)/(1/2 - a)^2 within each sign regime.
    std::vector<double> candidates{params_.alpha, alpha_min_, alpha_max_};
    if (alpha_min_ <= 0.0 && 0.0 <= alpha_max_) candidates.push_back(0.0);
    if (u_lo < 0.5) candidates.push_back(std::clamp((u_lo / 2.0 - t) / (0.5 - u_lo), std::max(0.0, alpha_min_), alpha_max_));
    if (u_up < 0.5 && alpha_min_ < 0.0) {
      candidates.push_back(std::clamp((u_up / 2.0 - t) / (0.5 - u_up), alpha_min_, std::min(0.0, alpha_max_)));
    }
    double best_alpha = params_.alpha;
    double best_value = value(best_alpha);
    for (double a : candidates) {
      const double v = value(a);
      if (v < best_value) {
        best_value = v;
        best_alpha = a;
      }
    }
    params_.alpha = best_alpha;
  }

  double objective(std::span<const double> rho) const {
    const double kl = discrete_kl(rho, pi_);
    const double a = params_.alpha;
    const double t = lambda_relaxed_upper(quad_form(ts_.tandem_loss, rho), 2.0 * kl + log_m_, m_, params_.lambda);
    const double gibbs = dot(ts_.single_loss, rho);
    const double u = a >= 0.0 ? lower_surrogate(gibbs, kl + log_n_, n_, params_.gamma)
                              : lambda_relaxed_upper(gibbs, kl + log_n_, n_, params_.gamma_upper);
    return cc_scale(a) * (t - 2.0 * a * u + a * a);
  }

  void gradient(std::span<const double> rho, std::span<double> out) {
    const double a = params_.alpha;
    kl_gradient(rho, pi_, kl_grad_);
    mat_vec(ts_.tandem_loss, rho, work_);
    const double shrink = 1.0 - params_.lambda / 2.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = 2.0 * work_[i] / shrink + 2.0 * kl_grad_[i] / (params_.lambda * shrink * m_);
    }
    if (a > 0.0 && params_.gamma != kInf) {
      const double g = params_.gamma;
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= 2.0 * a * ((1.0 - g / 2.0) * ts_.single_loss[i] - kl_grad_[i] / (g * n_));
      }
    } else if (a < 0.0) {
      const double g = params_.gamma_upper;
      const double s = 1.0 - g / 2.0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= 2.0 * a * (ts_.single_loss[i] / s + kl_grad_[i] / (g * s * n_));
      }
    }
    for (double& x : out) x *= cc_scale(a);
  }

  double bound(std::span<const double> rho) const {
    return cctnd_bound(ts_, PosteriorWeights{{rho.begin(), rho.end()}, {pi_.begin(), pi_.end()}}, params_.alpha,
                       delta_);
  }

  MvParams params() const { return params_; }
  void set_params(const MvParams& p) { params_ = p; }

 private:
  void fit_lambda_gamma(std::span<const double> rho) {
    const double kl = discrete_kl(rho, pi_);
    params_.lambda = optimal_lambda_for(clamp01(quad_form(ts_.tandem_loss, rho)), 2.0 * kl + log_m_, m_);
    const double gibbs = clamp01(dot(ts_.single_loss, rho));
    params_.gamma = optimal_gamma_for(gibbs, kl + log_n_, n_);
    params_.gamma_upper = optimal_lambda_for(gibbs, kl + log_n_, n_);
  }

  const TandemStats& ts_;
  std::span<const double> pi_;
  double delta_;
  double m_;
  double n_;
  double log_m_;
  double log_n_;
  double alpha_min_;
  double alpha_max_;
  bool alpha_free_;
  MvParams params_;
  std::vector<double> work_;
  std::vector<double> kl_grad_;
};

/// CCPBB at a fixed alpha; lambda and gamma chosen on fixed grids.
class CcpbbProblem {
 public:
  CcpbbProblem(const AlphaTandemStats& ats, std::span<const double> pi, double delta)
      : ats_(ats), pi_(pi), delta_(delta), m_(static_cast<double>(ats.m)), n_(static_cast<double>(ats.n)),
        lambdas_(ccpbb_lambda_grid(ats.m)), gammas_(ccpbb_gamma_grid()),
        k_(std::max(1.0 - ats.alpha, 1.0 - 2.0 * ats.alpha)),
        log_term_(std::log(2.0 * static_cast<double>(lambdas_.size()) * static_cast<double>(gammas_.size()) / delta)) {
    params_.alpha = ats.alpha;
    params_.lambda = lambdas_.front();
    params_.gamma = gammas_.front();
    work_.resize(pi.size());
    kl_grad_.resize(pi.size());
  }

  void fit(std::span<const double> rho) {
    const double c = 2.0 * discrete_kl(rho, pi_) + log_term_;
    const double var = quad_form(ats_.variance, rho);
    // The variance bracket is multiplied by a positive factor that does not
    // involve lambda, so lambda can be chosen first.
    double best = kInf;
    for (double lambda : lambdas_) {
      const double v = variance_bracket(var, c, lambda);
      if (v < best) {
        best = v;
        params_.lambda = lambda;
      }
    }
    best = kInf;
    const double mean = quad_form(ats_.mean, rho);
    for (double gamma : gammas_) {
      const double v = inner(mean, var, c, params_.lambda, gamma);
      if (v < best) {
        best = v;
        params_.gamma = gamma;
      }
    }
  }

  double objective(std::span<const double> rho) const {
    const double c = 2.0 * discrete_kl(rho, pi_) + log_term_;
    return cc_scale(ats_.alpha) *
           inner(quad_form(ats_.mean, rho), quad_form(ats_.variance, rho), c, params_.lambda, params_.gamma);
  }

  void gradient(std::span<const double> rho, std::span<double> out) {
    kl_gradient(rho, pi_, kl_grad_);
    const double lambda = params_.lambda;
    const double gamma = params_.gamma;
    const double shrink = 1.0 - lambda * m_ / (2.0 * (m_ - 1.0));
    const double bennett = phi(gamma * k_) / (gamma * k_ * k_);
    mat_vec(ats_.mean, rho, work_);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = 2.0 * work_[i] + 2.0 * kl_grad_[i] / (gamma * m_) +
               bennett * k_ * k_ * 2.0 * kl_grad_[i] / (n_ * lambda * shrink);
    }
    mat_vec(ats_.variance, rho, work_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bennett * 2.0 * work_[i] / shrink;
    for (double& x : out) x *= cc_scale(ats_.alpha);
  }

  double bound(std::span<const double> rho) const {
    return ccpbb_bound(ats_, PosteriorWeights{{rho.begin(), rho.end()}, {pi_.begin(), pi_.end()}}, params_.lambda,
                       params_.gamma, delta_, lambdas_.size(), gammas_.size());
  }

  MvParams params() const { return params_; }
  void set_params(const MvParams& p) { params_ = p; }

 private:
  double variance_bracket(double var, double c, double lambda) const {
    const double shrink = 1.0 - lambda * m_ / (2.0 * (m_ - 1.0));
    return var / shrink + k_ * k_ * c / (n_ * lambda * shrink);
  }

  double inner(double mean, double var, double c, double lambda, double gamma) const {
    return mean + c / (gamma * m_) + phi(gamma * k_) / (gamma * k_ * k_) * variance_bracket(var, c, lambda);
  }

  const AlphaTandemStats& ats_;
  std::span<const double> pi_;
  double delta_;
  double m_;
  double n_;
  std::vector<double> lambdas_;
  std::vector<double> gammas_;
  double k_;
  double log_term_;
  MvParams params_;
  std::vector<double> work_;
  std::vector<double> kl_grad_;
};

/// CCPBUB at a fixed alpha; gamma chosen on the Unexpected Bernstein grid.
class CcpbubProblem {
 public:
  CcpbubProblem(const AlphaTandemStats& ats, std::span<const double> pi, double delta)
      : ats_(ats), pi_(pi), delta_(delta), m_(static_cast<double>(ats.m)), b_(ats.range.hi),
        gammas_(make_gamma_grid(ats.m, delta, ats.range.hi).values),
        log_term_(std::log(static_cast<double>(gammas_.size()) / delta)) {
    params_.alpha = ats.alpha;
    params_.gamma = gammas_.front();
    work_.resize(pi.size());
    kl_grad_.resize(pi.size());
  }

  void fit(std::span<const double> rho) {
    const double c = 2.0 * discrete_kl(rho, pi_) + log_term_;
    const double mean = quad_form(ats_.mean, rho);
    const double second = quad_form(ats_.second_moment, rho);
    double best = kInf;
    for (double gamma : gammas_) {
      const double v = inner(mean, second, c, gamma);
      if (v < best) {
        best = v;
        params_.gamma = gamma;
      }
    }
  }

  double objective(std::span<const double> rho) const {
    const double c = 2.0 * discrete_kl(rho, pi_) + log_term_;
    return cc_scale(ats_.alpha) *
           inner(quad_form(ats_.mean, rho), quad_form(ats_.second_moment, rho), c, params_.gamma);
  }

  void gradient(std::span<const double> rho, std::span<double> out) {
    kl_gradient(rho, pi_, kl_grad_);
    const double gamma = params_.gamma;
    const double coef = psi(-gamma * b_) / (gamma * b_ * b_);
    mat_vec(ats_.mean, rho, work_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2.0 * work_[i] + 2.0 * kl_grad_[i] / (gamma * m_);
    mat_vec(ats_.second_moment, rho, work_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += coef * 2.0 * work_[i];
    for (double& x : out) x *= cc_scale(ats_.alpha);
  }

  double bound(std::span<const double> rho) const {
    return ccpbub_bound(ats_, PosteriorWeights{{rho.begin(), rho.end()}, {pi_.begin(), pi_.end()}}, params_.gamma,
                        delta_);
  }

  MvParams params() const { return params_; }
  void set_params(const MvParams& p) { params_ = p; }

 private:
  double inner(double mean, double second, double c, double gamma) const {
    return mean + psi(-gamma * b_) / (gamma * b_ * b_) * second + c / (gamma * m_);
  }

  const AlphaTandemStats& ats_;
  std::span<const double> pi_;
  double delta_;
  double m_;
  double b_;
  std::vector<double> gammas_;
  double log_term_;
  MvParams params_;
  std::vector<double> work_;
  std::vector<double> kl_grad_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Optimization

struct MvOptions {
  double delta = 0.05;
  std::vector<double> alpha_grid = default_alpha_grid();  // ignored by TND
  std::size_t threads = 1;
  IrpropConfig irprop{};
  double tolerance = 1e-9;  // outer loop stops once the relaxed objective moves less than this
  std::size_t max_outer = 100;
};

/// Result of one optimization. `trace` holds the relaxed objective after
/// every accepted alternation step of the winning run (non-increasing);
/// `prior_value` is the best compute-form value at rho = pi.
struct MvResult {
  std::string name;
  PosteriorWeights weights;
  double value = kInf;
  MvParams params;
  std::size_t iterations = 0;
  std::vector<double> trace;
  double prior_value = kInf;
  double delta = 0.05;

  BoundReport report() const {
    BoundReport r{name, value, delta, {}};
    r.params["alpha"] = params.alpha;
    if (std::isfinite(params.lambda)) r.params["lambda"] = params.lambda;
    if (!std::isnan(params.gamma)) r.params["gamma"] = params.gamma;
    if (!std::isnan(params.gamma_upper)) r.params["gamma_upper"] = params.gamma_upper;
    r.params["iterations"] = static_cast<double>(iterations);
    return r;
  }
};

namespace detail {

struct RunOutcome {
  std::vector<double> rho;
  double value = kInf;
  MvParams params;
  std::size_t iterations = 0;
  std::vector<double> trace;
  double prior_value = kInf;
};

// Alternates parameter fits and iRProp+ on rho starting at rho = pi. A refit
// that would raise the relaxed objective is discarded, so the trace never
// increases. The best compute-form value over all visited points is kept.
template <typename Problem>
RunOutcome alternate(Problem& problem, std::span<const double> pi, const MvOptions& opt) {
  RunOutcome out;
  std::vector<double> rho(pi.begin(), pi.end());
  problem.fit(rho);
  double current = problem.objective(rho);
  out.trace.push_back(current);
  out.prior_value = problem.bound(rho);
  out.value = out.prior_value;
  out.rho = rho;
  out.params = problem.params();

  auto gradient = [&problem](std::span<const double> x, std::span<double> g) { problem.gradient(x, g); };
  auto objective = [&problem](std::span<const double> x) { return problem.objective(x); };

  for (std::size_t outer = 0; outer < opt.max_outer; ++outer) {
    const IrpropResult step = irprop_plus(gradient, objective, rho, opt.irprop);
    out.iterations += step.iterations;
    rho = step.point;
    double next = step.value;
    const MvParams kept = problem.params();
    problem.fit(rho);
    const double refit = problem.objective(rho);
    if (refit <= next) {
      next = refit;
    } else {
      problem.set_params(kept);
    }
    out.trace.push_back(next);
    const double value = problem.bound(rho);
    if (value < out.value) {
      out.value = value;
      out.rho = rho;
      out.params = problem.params();
    }
    const double change = current - next;
    current = next;
    if (change < opt.tolerance) break;
  }
  return out;
}

inline void check_prior(const TandemStats& ts, std::span<const double> pi) {
  PosteriorWeights{{pi.begin(), pi.end()}, {pi.begin(), pi.end()}}.validate(ts.hypotheses());
  require_positive_prior(pi);
}

inline MvResult to_result(std::string name, std::span<const double> pi, RunOutcome run, double delta) {
  MvResult r;
  r.name = std::move(name);
  r.weights = PosteriorWeights{std::move(run.rho), {pi.begin(), pi.end()}};
  r.value = run.value;
  r.params = run.params;
  r.iterations = run.iterations;
  r.trace = std::move(run.trace);
  r.prior_value = run.prior_value;
  r.delta = delta;
  return r;
}

// Runs `make_run(alpha)` for every alpha in the grid (in parallel) and keeps
// the smallest bound; ties go to the earliest grid point.
template <typename MakeRun>
MvResult best_over_alpha(const std::string& name, std::span<const double> pi, const MvOptions& opt,
                         MakeRun&& make_run) {
  if (opt.alpha_grid.empty()) throw std::invalid_argument("empty alpha grid");
  for (double a : opt.alpha_grid) require_alpha(a);
  std::vector<RunOutcome> runs(opt.alpha_grid.size());
  parallel_for(runs.size(), opt.threads, [&](std::size_t i) { runs[i] = make_run(opt.alpha_grid[i]); });
  std::size_t best = 0;
  double prior_value = kInf;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].value < runs[best].value) best = i;
    prior_value = std::min(prior_value, runs[i].prior_value);
  }
  MvResult r = to_result(name, pi, std::move(runs[best]), opt.delta);
  r.prior_value = prior_value;
  return r;
}

}  // namespace detail

inline MvResult tnd_optimize(const TandemStats& ts, std::span<const double> pi, const MvOptions& opt = {}) {
  detail::check_prior(ts, pi);
  detail::require_confidence(opt.delta);
  detail::KlTandemProblem problem(4.0, AlphaRange{0.0, 0.0, 1.0, 1.0}, ts.tandem_loss, nullptr, ts.m, pi,
                                  opt.delta, 0.0);
  return detail::to_result("tnd", pi, detail::alternate(problem, pi, opt), opt.delta);
}

inline MvResult cctnd_optimize(const TandemStats& ts, std::span<const double> pi, const MvOptions& opt = {}) {
  detail::check_prior(ts, pi);
  detail::require_confidence(opt.delta);
  if (opt.alpha_grid.empty()) throw std::invalid_argument("empty alpha grid");
  for (double a : opt.alpha_grid) require_alpha(a);
  const auto [lo_it, hi_it] = std::minmax_element(opt.alpha_grid.begin(), opt.alpha_grid.end());
  const double alpha_min = *lo_it;
  const double alpha_max = *hi_it;
  const bool alpha_free = opt.alpha_grid.size() > 1;

  // Start from the grid alpha that is best at rho = pi.
  const PosteriorWeights prior{{pi.begin(), pi.end()}, {pi.begin(), pi.end()}};
  double start_alpha = opt.alpha_grid.front();
  double prior_value = kInf;
  for (double a : opt.alpha_grid) {
    const double v = cctnd_bound(ts, prior, a, opt.delta);
    if (v < prior_value) {
      prior_value = v;
      start_alpha = a;
    }
  }
  detail::CctndProblem problem(ts, pi, opt.delta, start_alpha, alpha_min, alpha_max, alpha_free);
  detail::RunOutcome run = detail::alternate(problem, pi, opt);

  // The compute form at the final rho may prefer a grid alpha over the
  // continuous one.
  const PosteriorWeights final_w{run.rho, {pi.begin(), pi.end()}};
  for (double a : opt.alpha_grid) {
    const double v = cctnd_bound(ts, final_w, a, opt.delta);
    if (v < run.value) {
      run.value = v;
      run.params.alpha = a;
    }
  }
  MvResult r = detail::to_result("cctnd", pi, std::move(run), opt.delta);
  r.prior_value = prior_value;
  if (prior_value < r.value) {
    r.weights.rho = r.weights.pi;
    r.value = prior_value;
    r.params.alpha = start_alpha;
  }
  return r;
}

inline MvResult ccpbb_optimize(const TandemStats& ts, std::span<const double> pi, const MvOptions& opt = {}) {
  detail::check_prior(ts, pi);
  detail::require_confidence(opt.delta);
  return detail::best_over_alpha("ccpbb", pi, opt, [&](double alpha) {
    const AlphaTandemStats ats = alpha_stats(ts, alpha);
    detail::CcpbbProblem problem(ats, pi, opt.delta);
    return detail::alternate(problem, pi, opt);
  });
}

inline MvResult ccpbub_optimize(const TandemStats& ts, std::span<const double> pi, const MvOptions& opt = {}) {
  detail::check_prior(ts, pi);
  detail::require_confidence(opt.delta);
  return detail::best_over_alpha("ccpbub", pi, opt, [&](double alpha) {
    const AlphaTandemStats ats = alpha_stats(ts, alpha);
    detail::CcpbubProblem problem(ats, pi, opt.delta);
    return detail::alternate(problem, pi, opt);
  });
}

inline MvResult ccpbskl_optimize(const TandemStats& ts, std::span<const double> pi, const MvOptions& opt = {}) {
  detail::check_prior(ts, pi);
  detail::require_confidence(opt.delta);
  return detail::best_over_alpha("ccpbskl", pi, opt, [&](double alpha) {
    const AlphaTandemStats ats = alpha_stats(ts, alpha);
    detail::KlTandemProblem problem(detail::cc_scale(alpha), ats.range, ats.plus, &ats.minus, ats.m, pi, opt.delta,
                                    alpha);
    return detail::alternate(problem, pi, opt);
  });
}

inline const std::vector<std::string>& mv_bound_names() {
  static const std::vector<std::string> names{"tnd", "cctnd", "ccpbb", "ccpbub", "ccpbskl"};
  return names;
}

/// Dispatches on a bound name from mv_bound_names().
inline MvResult optimize_bound(const std::string& name, const TandemStats& ts, std::span<const double> pi,
                               const MvOptions& opt = {}) {
  if (name == "tnd") return tnd_optimize(ts, pi, opt);
  if (name == "cctnd") return cctnd_optimize(ts, pi, opt);
  if (name == "ccpbb") return ccpbb_optimize(ts, pi, opt);
  if (name == "ccpbub") return ccpbub_optimize(ts, pi, opt);
  if (name == "ccpbskl") return ccpbskl_optimize(ts, pi, opt);
  throw std::invalid_argument("unknown majority-vote bound: " + name);
}

}  // namespace splitkl
