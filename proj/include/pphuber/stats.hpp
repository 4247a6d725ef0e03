#pragma once

// Small order-statistic helpers shared by the solver and the harness.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace pphuber::stats {

/// Consistency constant turning the MAD into a Gaussian standard deviation.
inline constexpr double kMadToSigma = 1.4826;

inline double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of an empty range");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Median; even sizes average the two middle order statistics.
inline double median(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("median of an empty range");
  const std::size_t mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + mid, x.end());
  const double upper = x[mid];
  if (x.size() % 2 == 1) return upper;
  const double lower = *std::max_element(x.begin(), x.begin() + mid);
  return lower + (upper - lower) / 2.0;
}

inline double median(std::span<const double> x) {
  return median(std::vector<double>(x.begin(), x.end()));
}

/// Median absolute deviation around the median (unscaled).
inline double mad(std::span<const double> x) {
  const double m = median(x);
  std::vector<double> dev(x.size());
  std::transform(x.begin(), x.end(), dev.begin(), [m](double v) { return std::abs(v - m); });
  return median(std::move(dev));
}

/// Linear-interpolation quantile of a sorted range (Hyndman-Fan type 7).
inline double quantile_sorted(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty range");
  if (!(level >= 0.0 && level <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Least-squares slope of y on x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("slope needs two or more paired points");
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("slope undefined for constant abscissa");
  return sxy / sxx;
}

}  // namespace pphuber::stats
