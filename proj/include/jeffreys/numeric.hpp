#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace jeffreys {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Neumaier-compensated running sum. +inf poisons the total and stays +inf.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(double init) : sum_(init) {}

  CompensatedSum& operator+=(double x) {
    if (!std::isfinite(x) || !std::isfinite(sum_)) {
      sum_ += x;
      comp_ = 0.0;
      return *this;
    }
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
    return *this;
  }

  double value() const { return std::isfinite(sum_) ? sum_ + comp_ : sum_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// ln sum_k exp(x_k), with -inf terms contributing nothing.
inline double log_sum_exp(std::span<const double> xs) {
  double hi = -kInf;
  for (double x : xs) hi = std::max(hi, x);
  if (hi == -kInf) return -kInf;
  if (hi == kInf) return kInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

struct RefineOptions {
  std::size_t points_per_round = 21;  // 10x shrink of a two-cell bracket
  std::size_t max_rounds = 60;
  double resolution = 0.0;  // stop once the bracket is this narrow (0: float floor)
};

struct SearchResult {
  double argmin = 0.0;
  double value = kInf;
  std::size_t evaluations = 0;
};

/// Minimises a scalar objective over an increasing grid, then repeatedly
/// re-grids the two cells around the incumbent. Exact for quasi-convex
/// objectives; for others it finds the best grid basin and polishes it.
template <class Objective>
SearchResult grid_minimize(std::span<const double> grid, Objective&& objective,
                           const RefineOptions& opts = {}) {
  SearchResult best;
  if (grid.empty()) return best;

  std::size_t best_i = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = objective(grid[i]);
    ++best.evaluations;
    if (v < best.value) {
      best.value = v;
      best.argmin = grid[i];
      best_i = i;
    }
  }
  if (grid.size() < 2) return best;

  double lo = grid[best_i == 0 ? 0 : best_i - 1];
  double hi = grid[best_i + 1 == grid.size() ? best_i : best_i + 1];
  const std::size_t m = std::max<std::size_t>(opts.points_per_round, 3);

  for (std::size_t round = 0; round < opts.max_rounds; ++round) {
    const double width = hi - lo;
    const double floor = 4.0 * std::numeric_limits<double>::epsilon() *
                         std::max({1.0, std::abs(lo), std::abs(hi)});
    if (width <= std::max(opts.resolution, floor)) break;

    const double step = width / static_cast<double>(m - 1);
    std::size_t local = 0;
    double local_best = kInf;
    for (std::size_t j = 0; j < m; ++j) {
      const double x = j + 1 == m ? hi : lo + step * static_cast<double>(j);
      const double v = objective(x);
      ++best.evaluations;
      if (v < local_best) {
        local_best = v;
        local = j;
      }
      if (v < best.value) {
        best.value = v;
        best.argmin = x;
      }
    }
    const double centre = local + 1 == m ? hi : lo + step * static_cast<double>(local);
    const double new_lo = std::max(lo, centre - step);
    const double new_hi = std::min(hi, centre + step);
    if (new_hi - new_lo >= width) break;
    lo = new_lo;
    hi = new_hi;
  }
  return best;
}

}  // namespace jeffreys
