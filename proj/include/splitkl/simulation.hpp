#pragma once

// Monte Carlo studies of the concentration bounds: ternary and beta samples,
// gap sweeps over a distribution parameter and coverage experiments.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "splitkl/concentration.hpp"
#include "splitkl/kl.hpp"
#include "splitkl/pac_bayes.hpp"
#include "splitkl/parallel.hpp"
#include "splitkl/rng.hpp"

namespace splitkl {

struct TernarySpec {
  double p_minus1 = 0.0;
  double p_0 = 1.0;
  double p_1 = 0.0;

  double mean() const { return p_1 - p_minus1; }

  void validate() const {
    if (!(p_minus1 >= 0.0 && p_0 >= 0.0 && p_1 >= 0.0)) throw std::domain_error("ternary probabilities must be non-negative");
    if (std::abs(p_minus1 + p_0 + p_1 - 1.0) > 1e-12) throw std::domain_error("ternary probabilities must sum to one");
  }
};

struct BetaSpec {
  double alpha_shape = 1.0;
  double beta_shape = 1.0;

  double mean() const { return alpha_shape / (alpha_shape + beta_shape); }
  double variance() const {
    const double s = alpha_shape + beta_shape;
    return alpha_shape * beta_shape / (s * s * (s + 1.0));
  }

  void validate() const {
    if (!(alpha_shape > 0.0 && beta_shape > 0.0)) throw std::domain_error("beta shapes must be positive");
  }
};

inline std::vector<double> sample_ternary(const TernarySpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw std::domain_error("n must be positive");
  Rng rng(seed);
  std::vector<double> out(n);
  const double cut = spec.p_minus1 + spec.p_0;
  for (auto& z : out) {
    const double u = rng.uniform();
    z = u < spec.p_minus1 ? -1.0 : (u < cut ? 0.0 : 1.0);
  }
  return out;
}

inline std::vector<double> sample_beta(const BetaSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  if (n == 0) throw std::domain_error("n must be positive");
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& z : out) z = rng.beta(spec.alpha_shape, spec.beta_shape);
  return out;
}

/// Order of the bounds in sweeps and coverage results.
inline const std::array<std::string, 4>& sweep_bound_names() {
  static const std::array<std::string, 4> names{"kl", "eb", "ub", "skl"};
  return names;
}

struct SampleRange {
  double lo = 0.0;
  double hi = 1.0;
  double mu = 0.5;
};

inline constexpr SampleRange kTernaryRange{-1.0, 1.0, 0.0};
inline constexpr SampleRange kBetaRange{0.0, 1.0, 0.5};

/// kl, Empirical Bernstein, Unexpected Bernstein (grid) and split-kl upper
/// bounds on the mean of one sample, unclipped.
inline std::array<double, 4> concentration_bounds(std::span<const double> sample, const SampleRange& r,
                                                  double delta) {
  const EmpiricalSummary s = EmpiricalSummary::from_samples(sample, r.lo, r.hi);
  return {kl_upper_bound(s.mean, s.n, delta, r.lo, r.hi), empirical_bernstein_bound(s, delta),
          unexpected_bernstein_grid_bound(s, delta).value,
          split_kl_bound(split_decompose(sample, r.mu, r.lo, r.hi), delta)};
}

struct SweepRow {
  double param = 0.0;
  double true_mean = 0.0;
  std::string bound;
  double gap_mean = 0.0;
  double gap_std = 0.0;     // sample standard deviation over repeats
  double gap_median = 0.0;
  std::size_t repeats = 0;
  std::size_t n = 0;
  double delta = 0.0;
  std::uint64_t seed = 0;
};

struct SweepPoint {
  double param = 0.0;
  double true_mean = 0.0;
};

enum class TernaryMode { symmetric, skew_high, skew_low };
enum class BetaMode { constant_mean, spectrum };

inline std::vector<double> linspace(double first, double last, std::size_t count) {
  std::vector<double> out(count, first);
  if (count == 1) return out;
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = first + (last - first) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  out.back() = last;
  return out;
}

inline TernarySpec ternary_spec_for(TernaryMode mode, double p0) {
  const double rest = 1.0 - p0;
  switch (mode) {
    case TernaryMode::symmetric: return {0.5 * rest, p0, 0.5 * rest};
    case TernaryMode::skew_high: return {0.01 * rest, p0, 0.99 * rest};
    case TernaryMode::skew_low: return {0.99 * rest, p0, 0.01 * rest};
  }
  throw std::invalid_argument("unknown ternary mode");
}

/// Beta shapes of the sweep: constant_mean runs alpha = beta over
/// [0.01, 10]; spectrum moves alpha up to 5 with beta = 5, then beta down
/// from 5 with alpha = 5.
inline std::vector<BetaSpec> beta_sweep_specs(BetaMode mode) {
  std::vector<BetaSpec> specs;
  if (mode == BetaMode::constant_mean) {
    for (double a : linspace(0.01, 10.0, 50)) specs.push_back({a, a});
  } else {
    for (double a : linspace(0.01, 5.0, 25)) specs.push_back({a, 5.0});
    const std::vector<double> betas = linspace(0.01, 5.0, 26);
    for (std::size_t i = betas.size() - 1; i-- > 0;) specs.push_back({5.0, betas[i]});
  }
  return specs;
}

namespace detail {

template <typename Sampler>
std::vector<SweepRow> run_sweep(const std::vector<SweepPoint>& points, Sampler&& sampler, const SampleRange& r,
                                std::size_t n, double delta, std::size_t repeats, std::uint64_t seed,
                                std::size_t threads) {
  if (repeats == 0) throw std::domain_error("repeats must be positive");
  if (n < 2) throw std::domain_error("sweeps need n >= 2");
  require_confidence(delta);
  const auto& names = sweep_bound_names();
  // gaps[point][bound][repeat]
  std::vector<std::array<std::vector<double>, 4>> gaps(points.size());
  for (auto& point : gaps)
    for (auto& v : point) v.assign(repeats, 0.0);
  parallel_for(points.size() * repeats, threads, [&](std::size_t job) {
    const std::size_t p = job / repeats;
    const std::size_t rep = job % repeats;
    const std::vector<double> sample = sampler(p, n, derive_seed(seed, p, rep));
    double mean = 0.0;
    for (double z : sample) mean += z;
    mean = std::clamp(mean / static_cast<double>(sample.size()), r.lo, r.hi);
    const auto bounds = concentration_bounds(sample, r, delta);
    for (std::size_t b = 0; b < 4; ++b) gaps[p][b][rep] = std::min(bounds[b], r.hi) - mean;
  });
  std::vector<SweepRow> rows;
  rows.reserve(points.size() * 4);
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t b = 0; b < 4; ++b) {
      std::vector<double> g = gaps[p][b];
      SweepRow row;
      row.param = points[p].param;
      row.true_mean = points[p].true_mean;
      row.bound = names[b];
      row.repeats = repeats;
      row.n = n;
      row.delta = delta;
      row.seed = seed;
      double sum = 0.0;
      for (double x : g) sum += x;
      row.gap_mean = sum / static_cast<double>(g.size());
      if (g.size() > 1) {
        double ss = 0.0;
        for (double x : g) ss += (x - row.gap_mean) * (x - row.gap_mean);
        row.gap_std = std::sqrt(ss / static_cast<double>(g.size() - 1));
      }
      std::sort(g.begin(), g.end());
      const std::size_t mid = g.size() / 2;
      row.gap_median = g.size() % 2 == 1 ? g[mid] : 0.5 * (g[mid - 1] + g[mid]);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace detail

/// Gap sweep over p0 for ternary samples; `grid` defaults to 50 points on [0,1].
inline std::vector<SweepRow> sweep_ternary(TernaryMode mode, std::size_t n, double delta, std::size_t repeats,
                                           std::uint64_t seed, std::size_t threads = 1,
                                           std::vector<double> grid = {}) {
  if (grid.empty()) grid = linspace(0.0, 1.0, 50);
  std::vector<SweepPoint> points;
  std::vector<TernarySpec> specs;
  for (double p0 : grid) {
    specs.push_back(ternary_spec_for(mode, p0));
    specs.back().validate();
    points.push_back({p0, specs.back().mean()});
  }
  auto sampler = [&](std::size_t p, std::size_t size, std::uint64_t s) { return sample_ternary(specs[p], size, s); };
  return detail::run_sweep(points, sampler, kTernaryRange, n, delta, repeats, seed, threads);
}

/// Gap sweep over beta shapes. The row parameter is the variance for
/// constant_mean and the mean for spectrum.
inline std::vector<SweepRow> sweep_beta(BetaMode mode, std::size_t n, double delta, std::size_t repeats,
                                        std::uint64_t seed, std::size_t threads = 1,
                                        std::vector<BetaSpec> specs = {}) {
  if (specs.empty()) specs = beta_sweep_specs(mode);
  std::vector<SweepPoint> points;
  for (const auto& s : specs) {
    s.validate();
    points.push_back({mode == BetaMode::constant_mean ? s.variance() : s.mean(), s.mean()});
  }
  auto sampler = [&](std::size_t p, std::size_t size, std::uint64_t s) { return sample_beta(specs[p], size, s); };
  return detail::run_sweep(points, sampler, kBetaRange, n, delta, repeats, seed, threads);
}

/// Violation counts of {true mean > bound} per bound.
struct CoverageResult {
  std::vector<std::string> bounds;  // kl, eb, ub, skl, pbkl
  std::vector<std::uint64_t> violations;
  std::uint64_t trials = 0;
  std::size_t n = 0;
  double delta = 0.0;
  double true_mean = 0.0;

  double frequency(std::size_t b) const { return static_cast<double>(violations[b]) / static_cast<double>(trials); }
};

/// delta + 3 sqrt(delta (1 - delta) / trials).
inline double coverage_ceiling(double delta, std::uint64_t trials) {
  return delta + 3.0 * std::sqrt(delta * (1.0 - delta) / static_cast<double>(trials));
}

namespace detail {

template <typename Sampler>
CoverageResult run_coverage(Sampler&& sampler, double true_mean, const SampleRange& r, std::size_t n, double delta,
                            std::uint64_t trials, std::uint64_t seed, std::size_t threads) {
  if (trials < 100) throw std::domain_error("coverage needs at least 100 trials");
  if (n < 2) throw std::domain_error("coverage needs n >= 2");
  require_confidence(delta);
  CoverageResult res;
  res.bounds = {"kl", "eb", "ub", "skl", "pbkl"};
  res.trials = trials;
  res.n = n;
  res.delta = delta;
  res.true_mean = true_mean;
  std::vector<std::array<bool, 5>> hit(trials);
  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    const std::vector<double> sample = sampler(n, derive_seed(seed, t));
    const auto b = concentration_bounds(sample, r, delta);
    const EmpiricalSummary s = EmpiricalSummary::from_samples(sample, r.lo, r.hi);
    const double pbkl = r.lo + (r.hi - r.lo) * pb_kl_bound(rescale(s.mean, r.lo, r.hi), 0.0, n, delta);
    hit[t] = {true_mean > b[0], true_mean > b[1], true_mean > b[2], true_mean > b[3], true_mean > pbkl};
  });
  res.violations.assign(5, 0);
  for (const auto& h : hit)
    for (std::size_t b = 0; b < 5; ++b) res.violations[b] += h[b] ? 1 : 0;
  return res;
}

}  // namespace detail

inline CoverageResult coverage_experiment(const TernarySpec& spec, std::size_t n, double delta,
                                          std::uint64_t trials, std::uint64_t seed, std::size_t threads = 1) {
  spec.validate();
  return detail::run_coverage([&](std::size_t size, std::uint64_t s) { return sample_ternary(spec, size, s); },
                              spec.mean(), kTernaryRange, n, delta, trials, seed, threads);
}

inline CoverageResult coverage_experiment(const BetaSpec& spec, std::size_t n, double delta, std::uint64_t trials,
                                          std::uint64_t seed, std::size_t threads = 1) {
  spec.validate();
  return detail::run_coverage([&](std::size_t size, std::uint64_t s) { return sample_beta(spec, size, s); },
                              spec.mean(), kBetaRange, n, delta, trials, seed, threads);
}

}  // namespace splitkl
