#pragma once

// Projected iRProp+ over the probability simplex.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace splitkl {

/// Euclidean projection onto {x >= 0, sum x = 1} (sort and threshold).
inline std::vector<double> project_simplex(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("cannot project an empty vector onto the simplex");
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

struct IrpropConfig {
  double increase = 1.2;
  double decrease = 0.5;
  double step_init = 0.01;
  double step_min = 1e-8;
  double step_max = 1e-1;
  double tolerance = 1e-9;     // minimal improvement that resets the patience counter
  std::size_t patience = 10;   // iterations without such an improvement before stopping
  std::size_t max_iterations = 1000;
};

struct IrpropResult {
  std::vector<double> point;
  double value = 0.0;
  std::size_t iterations = 0;
};

/// iRProp+ with a simplex projection after every step. Only gradient signs
/// are used; the gradient is centered first so that the common component,
/// which the projection would undo, does not drive the steps. Returns the
/// best point visited, never worse than `init`.
template <typename Grad, typename Obj>
IrpropResult irprop_plus(Grad&& gradient, Obj&& objective, std::span<const double> init,
                         const IrpropConfig& cfg = {}) {
  const std::size_t dim = init.size();
  if (dim == 0) throw std::invalid_argument("irprop_plus: empty starting point");
  std::vector<double> x(init.begin(), init.end());
  double fx = objective(std::span<const double>(x));
  IrpropResult best{x, fx, 0};
  if (dim == 1) return best;

  std::vector<double> grad(dim), grad_prev(dim, 0.0), step(dim, cfg.step_init), update(dim, 0.0), trial(dim);
  std::vector<bool> blocked(dim, false);
  double f_prev = fx;
  std::size_t stalled = 0;
  std::size_t it = 0;
  for (; it < cfg.max_iterations; ++it) {
    gradient(std::span<const double>(x), std::span<double>(grad));
    for (double g : grad) {
      if (!std::isfinite(g)) throw std::domain_error("irprop_plus: non-finite gradient");
    }
    // Coordinates at zero whose gradient pushes them further out are frozen
    // and left out of the mean; otherwise they bias the sign of the others.
    std::fill(blocked.begin(), blocked.end(), false);
    double mean = 0.0;
    for (bool changed = true; changed;) {
      changed = false;
      double sum = 0.0;
      std::size_t free = 0;
      for (std::size_t i = 0; i < dim; ++i) {
        if (!blocked[i]) {
          sum += grad[i];
          ++free;
        }
      }
      mean = sum / static_cast<double>(free);
      for (std::size_t i = 0; i < dim; ++i) {
        if (!blocked[i] && x[i] <= 0.0 && grad[i] > mean) {
          blocked[i] = true;
          changed = true;
        }
      }
    }
    for (std::size_t i = 0; i < dim; ++i) grad[i] = blocked[i] ? 0.0 : grad[i] - mean;

    bool backtrack = false;
    for (std::size_t i = 0; i < dim; ++i) {
      const double sign_change = grad[i] * grad_prev[i];
      if (sign_change > 0.0) {
        step[i] = std::min(step[i] * cfg.increase, cfg.step_max);
        update[i] = grad[i] > 0.0 ? -step[i] : step[i];
      } else if (sign_change < 0.0) {
        step[i] = std::max(step[i] * cfg.decrease, cfg.step_min);
        update[i] = fx > f_prev ? -update[i] : 0.0;
        backtrack = backtrack || update[i] != 0.0;
        grad[i] = 0.0;
      } else {
        update[i] = grad[i] > 0.0 ? -step[i] : (grad[i] < 0.0 ? step[i] : 0.0);
      }
      trial[i] = x[i] + update[i];
    }
    x = project_simplex(trial);
    f_prev = fx;
    fx = objective(std::span<const double>(x));
    std::swap(grad, grad_prev);

    // Backtracking steps only undo the previous move and do not count
    // towards the patience window.
    if (fx < best.value - cfg.tolerance) {
      stalled = 0;
    } else if (!backtrack) {
      ++stalled;
    }
    if (fx < best.value) {
      best.point = x;
      best.value = fx;
    }
    if (stalled >= cfg.patience) {
      ++it;
      break;
    }
  }
  best.iterations = it;
  return best;
}

}  // namespace splitkl
