#pragma once

// Out-of-bag loss statistics for weighted majority votes: per-hypothesis
// losses, pairwise tandem losses and alpha-tandem losses, all estimated on
// the OOB overlaps of hypothesis pairs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace splitkl {

/// Dense row-major matrix with value semantics.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// rho^T M rho.
inline double quad_form(const Matrix<double>& m, std::span<const double> rho) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) row += m(i, j) * rho[j];
    total += rho[i] * row;
  }
  return total;
}

/// out = M rho.
inline void mat_vec(const Matrix<double>& m, std::span<const double> rho, std::span<double> out) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) row += m(i, j) * rho[j];
    out[i] = row;
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

/// Zero-one losses of H hypotheses on N examples, with a mask marking the
/// examples that are out-of-bag for each hypothesis.
struct PredictionLossMatrix {
  Matrix<std::uint8_t> loss;
  Matrix<std::uint8_t> oob;

  PredictionLossMatrix() = default;
  PredictionLossMatrix(std::size_t hypotheses, std::size_t examples)
      : loss(hypotheses, examples, 0), oob(hypotheses, examples, 1) {}

  std::size_t hypotheses() const { return loss.rows(); }
  std::size_t examples() const { return loss.cols(); }
};

/// Thrown when a hypothesis pair (or a single hypothesis, first == second)
/// has no jointly out-of-bag example.
class EmptyOverlapError : public std::domain_error {
 public:
  EmptyOverlapError(std::size_t first, std::size_t second)
      : std::domain_error("hypotheses " + std::to_string(first) + " and " + std::to_string(second) +
                          " share no out-of-bag example"),
        first_(first),
        second_(second) {}
  std::size_t first() const { return first_; }
  std::size_t second() const { return second_; }

 private:
  std::size_t first_;
  std::size_t second_;
};

/// Raw counts on OOB overlaps; everything else is derived from these.
/// Diagonal entries describe a hypothesis' own OOB set.
struct PairCounts {
  Matrix<std::uint64_t> overlap;     // |S_h ∩ S_h'|
  Matrix<std::uint64_t> both_wrong;  // both err
  Matrix<std::uint64_t> one_wrong;   // exactly one errs
};

inline PairCounts compute_pair_counts(const PredictionLossMatrix& plm) {
  const std::size_t h_count = plm.hypotheses();
  const std::size_t n_ex = plm.examples();
  if (h_count == 0) throw std::invalid_argument("no hypotheses");
  if (plm.oob.rows() != h_count || plm.oob.cols() != n_ex) throw std::invalid_argument("mask shape mismatch");
  PairCounts pc{Matrix<std::uint64_t>(h_count, h_count), Matrix<std::uint64_t>(h_count, h_count),
                Matrix<std::uint64_t>(h_count, h_count)};
  for (std::size_t h = 0; h < h_count; ++h) {
    const auto lh = plm.loss.row(h);
    const auto mh = plm.oob.row(h);
    for (std::size_t g = h; g < h_count; ++g) {
      const auto lg = plm.loss.row(g);
      const auto mg = plm.oob.row(g);
      std::uint64_t overlap = 0, both = 0, one = 0;
      for (std::size_t i = 0; i < n_ex; ++i) {
        if (!(mh[i] && mg[i])) continue;
        ++overlap;
        const unsigned errs = (lh[i] ? 1u : 0u) + (lg[i] ? 1u : 0u);
        if (g == h) {
          both += lh[i] ? 1 : 0;
        } else if (errs == 2) {
          ++both;
        } else if (errs == 1) {
          ++one;
        }
      }
      if (overlap == 0) throw EmptyOverlapError(h, g);
      pc.overlap(h, g) = pc.overlap(g, h) = overlap;
      pc.both_wrong(h, g) = pc.both_wrong(g, h) = both;
      pc.one_wrong(h, g) = pc.one_wrong(g, h) = one;
    }
  }
  return pc;
}

/// OOB losses L(h), tandem losses L(h,h') and the effective sample sizes
/// n = min_h |S_h| and m = min_{h != h'} |S_h ∩ S_h'| (m = n when H = 1).
struct TandemStats {
  std::vector<double> single_loss;
  Matrix<double> tandem_loss;
  std::size_t n = 0;
  std::size_t m = 0;
  PairCounts counts;

  std::size_t hypotheses() const { return single_loss.size(); }
};

inline TandemStats tandem_stats_from_counts(PairCounts counts) {
  const std::size_t h_count = counts.overlap.rows();
  TandemStats ts;
  ts.single_loss.resize(h_count);
  ts.tandem_loss = Matrix<double>(h_count, h_count);
  ts.n = std::numeric_limits<std::size_t>::max();
  ts.m = std::numeric_limits<std::size_t>::max();
  for (std::size_t h = 0; h < h_count; ++h) {
    for (std::size_t g = 0; g < h_count; ++g) {
      const auto overlap = counts.overlap(h, g);
      ts.tandem_loss(h, g) = static_cast<double>(counts.both_wrong(h, g)) / static_cast<double>(overlap);
      if (g != h) ts.m = std::min<std::size_t>(ts.m, overlap);
    }
    ts.single_loss[h] = ts.tandem_loss(h, h);
    ts.n = std::min<std::size_t>(ts.n, counts.overlap(h, h));
  }
  if (h_count == 1) ts.m = ts.n;
  ts.counts = std::move(counts);
  return ts;
}

inline TandemStats compute_tandem_stats(const PredictionLossMatrix& plm) {
  return tandem_stats_from_counts(compute_pair_counts(plm));
}

/// Range of the alpha-tandem loss (l_h - alpha)(l_h' - alpha), which takes
/// the values alpha^2, -alpha(1-alpha) and (1-alpha)^2. `mid` is the middle
/// value used as the split point, `width` the length of the range.
struct AlphaRange {
  double lo = 0.0;
  double mid = 0.0;
  double hi = 1.0;
  double width = 1.0;
};

inline AlphaRange alpha_range(double alpha) {
  const double both = (1.0 - alpha) * (1.0 - alpha);
  const double one = -alpha * (1.0 - alpha);
  const double none = alpha * alpha;
  AlphaRange r;
  r.hi = both;
  if (alpha >= 0.0) {
    r.lo = one;
    r.mid = none;
  } else {
    r.lo = none;
    r.mid = one;
  }
  r.width = std::max(1.0 - alpha, 1.0 - 2.0 * alpha);
  return r;
}

inline void require_alpha(double alpha) {
  if (!(alpha >= -0.5 && alpha < 0.5)) {
    throw std::domain_error("alpha must lie in [-0.5, 0.5), got " + std::to_string(alpha));
  }
}

/// Pairwise OOB statistics of the alpha-tandem loss.
struct AlphaTandemStats {
  double alpha = 0.0;
  Matrix<double> mean;           // empirical alpha-tandem loss
  Matrix<double> second_moment;  // empirical mean of its square
  Matrix<double> variance;       // unbiased variance (divisor overlap - 1)
  Matrix<double> plus;           // mean of max(0, loss - mid)
  Matrix<double> minus;          // mean of max(0, mid - loss)
  AlphaRange range;
  std::size_t n = 0;
  std::size_t m = 0;

  std::size_t hypotheses() const { return mean.rows(); }
};

inline AlphaTandemStats alpha_stats(const TandemStats& ts, double alpha) {
  require_alpha(alpha);
  const PairCounts& pc = ts.counts;
  const std::size_t h_count = pc.overlap.rows();
  AlphaTandemStats as;
  as.alpha = alpha;
  as.range = alpha_range(alpha);
  as.n = ts.n;
  as.m = ts.m;
  as.mean = Matrix<double>(h_count, h_count);
  as.second_moment = Matrix<double>(h_count, h_count);
  as.variance = Matrix<double>(h_count, h_count);
  as.plus = Matrix<double>(h_count, h_count);
  as.minus = Matrix<double>(h_count, h_count);

  const double v_both = (1.0 - alpha) * (1.0 - alpha);
  const double v_one = (1.0 - alpha) * (0.0 - alpha);
  const double v_none = alpha * alpha;
  const double mid = as.range.mid;
  for (std::size_t h = 0; h < h_count; ++h) {
    for (std::size_t g = 0; g < h_count; ++g) {
      const double total = static_cast<double>(pc.overlap(h, g));
      const double c_both = static_cast<double>(pc.both_wrong(h, g));
      // On the diagonal a hypothesis either errs (both) or not (none).
      const double c_one = static_cast<double>(pc.one_wrong(h, g));
      const double c_none = total - c_both - c_one;
      auto average = [&](double f_both, double f_one, double f_none) {
        return (c_both * f_both + c_one * f_one + c_none * f_none) / total;
      };
      const double mean = average(v_both, v_one, v_none);
      as.mean(h, g) = mean;
      as.second_moment(h, g) = average(v_both * v_both, v_one * v_one, v_none * v_none);
      if (total > 1.0) {
        const double d_both = v_both - mean, d_one = v_one - mean, d_none = v_none - mean;
        as.variance(h, g) =
            (c_both * d_both * d_both + c_one * d_one * d_one + c_none * d_none * d_none) / (total - 1.0);
      }
      as.plus(h, g) = average(std::max(0.0, v_both - mid), std::max(0.0, v_one - mid), std::max(0.0, v_none - mid));
      as.minus(h, g) = average(std::max(0.0, mid - v_both), std::max(0.0, mid - v_one), std::max(0.0, mid - v_none));
    }
  }
  return as;
}

inline AlphaTandemStats alpha_stats(const PredictionLossMatrix& plm, double alpha) {
  return alpha_stats(compute_tandem_stats(plm), alpha);
}

/// Predicted labels of H hypotheses on N examples plus the true labels.
struct EvalMatrix {
  Matrix<int> predictions;
  std::vector<int> labels;

  std::size_t hypotheses() const { return predictions.rows(); }
  std::size_t examples() const { return predictions.cols(); }
};

/// Error rate of the rho-weighted plurality vote; ties go to the smallest label.
inline double mv_risk(const EvalMatrix& eval, std::span<const double> rho) {
  const std::size_t n_ex = eval.examples();
  if (n_ex == 0) throw std::invalid_argument("empty evaluation set");
  if (rho.size() != eval.hypotheses()) throw std::invalid_argument("rho length does not match hypotheses");
  if (eval.labels.size() != n_ex) throw std::invalid_argument("label count does not match examples");
  std::map<int, double> votes;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < n_ex; ++i) {
    votes.clear();
    for (std::size_t h = 0; h < rho.size(); ++h) votes[eval.predictions(h, i)] += rho[h];
    int best_label = votes.begin()->first;
    double best_weight = votes.begin()->second;
    for (const auto& [label, weight] : votes) {
      if (weight > best_weight) {
        best_weight = weight;
        best_label = label;
      }
    }
    if (best_label != eval.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(n_ex);
}

}  // namespace splitkl
