#pragma once

// Synthetic bagged ensembles for binary classification with a known error
// model, so the true majority-vote risk of any weighting is available exactly.
//
// Examples fall into latent classes; given the class, hypotheses err
// independently with class-specific rates. Correlation between hypotheses
// comes from the shared class.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "splitkl/rng.hpp"
#include "splitkl/tandem.hpp"

namespace splitkl {

struct ErrorModel {
  std::vector<double> class_weights;            // latent class probabilities
  std::vector<std::vector<double>> error_rate;  // [class][hypothesis]

  std::size_t hypotheses() const { return error_rate.empty() ? 0 : error_rate.front().size(); }
};

inline const std::vector<std::string>& noise_profiles() {
  static const std::vector<std::string> names{"identical", "independent", "correlated"};
  return names;
}

/// Error model of a named profile. "identical": every hypothesis errs on the
/// same 30% of examples. "independent": each errs independently at rate 0.3.
/// "correlated": easy/medium/hard classes (60/30/10%) with per-hypothesis
/// rates drawn from U(0.02,0.12), U(0.25,0.45) and U(0.6,0.9).
inline ErrorModel make_error_model(const std::string& profile, std::size_t h_count, std::uint64_t seed) {
  ErrorModel em;
  if (profile == "identical") {
    em.class_weights = {0.3, 0.7};
    em.error_rate = {std::vector<double>(h_count, 1.0), std::vector<double>(h_count, 0.0)};
  } else if (profile == "independent") {
    em.class_weights = {1.0};
    em.error_rate = {std::vector<double>(h_count, 0.3)};
  } else if (profile == "correlated") {
    Rng rng(seed);
    em.class_weights = {0.6, 0.3, 0.1};
    const double lo[3] = {0.02, 0.25, 0.6};
    const double hi[3] = {0.12, 0.45, 0.9};
    em.error_rate.resize(3);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t h = 0; h < h_count; ++h) em.error_rate[c].push_back(lo[c] + (hi[c] - lo[c]) * rng.uniform());
    }
  } else {
    throw std::invalid_argument("unknown noise profile: " + profile);
  }
  return em;
}

/// Exact risk of the rho-weighted vote under the model, by enumerating error
/// patterns. Binary labels drawn uniformly make a tie wrong half the time.
inline double true_mv_risk(const ErrorModel& em, std::span<const double> rho) {
  const std::size_t h_count = em.hypotheses();
  if (rho.size() != h_count) throw std::invalid_argument("rho length does not match hypotheses");
  if (h_count > 24) throw std::invalid_argument("exact risk enumeration supports at most 24 hypotheses");
  double risk = 0.0;
  const std::uint64_t patterns = std::uint64_t{1} << h_count;
  for (std::size_t c = 0; c < em.class_weights.size(); ++c) {
    const auto& rate = em.error_rate[c];
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
      double prob = 1.0;
      double wrong_mass = 0.0;
      for (std::size_t h = 0; h < h_count && prob > 0.0; ++h) {
        if (mask >> h & 1U) {
          prob *= rate[h];
          wrong_mass += rho[h];
        } else {
          prob *= 1.0 - rate[h];
        }
      }
      if (prob == 0.0) continue;
      if (std::abs(wrong_mass - 0.5) < 1e-12) {
        risk += em.class_weights[c] * prob * 0.5;
      } else if (wrong_mass > 0.5) {
        risk += em.class_weights[c] * prob;
      }
    }
  }
  return risk;
}

struct SyntheticEnsemble {
  ErrorModel model;
  PredictionLossMatrix train;  // losses with out-of-bag masks
  EvalMatrix eval;             // fresh examples for empirical vote risk
};

namespace detail {

inline std::size_t draw_class(Rng& rng, const std::vector<double>& weights) {
  double u = rng.uniform();
  for (std::size_t c = 0; c + 1 < weights.size(); ++c) {
    if (u < weights[c]) return c;
    u -= weights[c];
  }
  return weights.size() - 1;
}

inline bool masks_usable(const PredictionLossMatrix& plm) {
  const std::size_t h_count = plm.hypotheses();
  for (std::size_t h = 0; h < h_count; ++h) {
    for (std::size_t g = h; g < h_count; ++g) {
      bool any = false;
      for (std::size_t i = 0; i < plm.examples() && !any; ++i) any = plm.oob(h, i) && plm.oob(g, i);
      if (!any) return false;
    }
  }
  return true;
}

}  // namespace detail

/// Draws a bagged ensemble: every hypothesis is "trained" on
/// round(bagging_rate * n) draws with replacement and its out-of-bag set is
/// the complement. Masks with an empty pairwise overlap are redrawn (at most
/// 10 attempts).
inline SyntheticEnsemble synth_ensemble(std::size_t h_count, std::size_t n_examples, const std::string& profile,
                                        double bagging_rate, std::uint64_t seed, std::size_t eval_examples = 10000) {
  if (h_count < 2) throw std::domain_error("synthetic ensembles need at least 2 hypotheses");
  if (n_examples == 0) throw std::domain_error("n_examples must be positive");
  if (!(bagging_rate > 0.0 && bagging_rate <= 1.0)) throw std::domain_error("bagging rate must lie in (0,1]");
  SyntheticEnsemble ens;
  ens.model = make_error_model(profile, h_count, derive_seed(seed, 0));

  ens.train = PredictionLossMatrix(h_count, n_examples);
  Rng data_rng(derive_seed(seed, 1));
  for (std::size_t i = 0; i < n_examples; ++i) {
    const auto& rate = ens.model.error_rate[detail::draw_class(data_rng, ens.model.class_weights)];
    for (std::size_t h = 0; h < h_count; ++h) ens.train.loss(h, i) = data_rng.bernoulli(rate[h]) ? 1 : 0;
  }

  const auto draws = static_cast<std::size_t>(std::llround(bagging_rate * static_cast<double>(n_examples)));
  bool usable = false;
  for (std::uint64_t attempt = 0; attempt < 10 && !usable; ++attempt) {
    Rng mask_rng(derive_seed(seed, 2, attempt));
    for (std::size_t h = 0; h < h_count; ++h) {
      auto row = ens.train.oob.row(h);
      std::fill(row.begin(), row.end(), std::uint8_t{1});
      for (std::size_t d = 0; d < draws; ++d) row[mask_rng.below(n_examples)] = 0;
    }
    usable = detail::masks_usable(ens.train);
  }
  if (!usable) throw std::domain_error("could not draw out-of-bag masks with non-empty pairwise overlaps");

  if (eval_examples > 0) {
    Rng eval_rng(derive_seed(seed, 3));
    ens.eval.predictions = Matrix<int>(h_count, eval_examples);
    ens.eval.labels.resize(eval_examples);
    for (std::size_t i = 0; i < eval_examples; ++i) {
      const int label = eval_rng.bernoulli(0.5) ? 1 : 0;
      ens.eval.labels[i] = label;
      const auto& rate = ens.model.error_rate[detail::draw_class(eval_rng, ens.model.class_weights)];
      for (std::size_t h = 0; h < h_count; ++h) {
        ens.eval.predictions(h, i) = eval_rng.bernoulli(rate[h]) ? 1 - label : label;
      }
    }
  }
  return ens;
}

}  // namespace splitkl
