#pragma once

// Population quantities for y = mu* + sigma * eps:
//
//   sigma_tau^2 = E[sigma^2 eps^2 1(sigma^2 eps^2 <= tau^2)]
//   tau*        : E[tau* / sqrt(tau*^2 + sigma^2 eps^2)] = 1 - z^2 / n
//
// Expectations over continuous laws use adaptive Gauss-Kronrod quadrature
// (Boost.Math) on a fixed set of breakpoints; the two tails beyond
// |eps| = kTailStart are integrated in u = 1/eps. Discrete laws are summed.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "pphuber/noise.hpp"

namespace pphuber {

struct OracleSolution {
  double tau_star = 0.0;
  double sigma_tau_star_sq = 0.0;
  /// n sigma_{tau*}^2 / (4 z^2)
  double lower_bound_sq = 0.0;
  /// n sigma^2 / (2 z^2)
  double upper_bound_sq = 0.0;
  /// E[tau / sqrt(tau^2 + sigma^2 eps^2)] - (1 - z^2/n) at tau*.
  double residual = 0.0;

  /// lower <= tau*^2 <= upper, with relative slack for quadrature error.
  bool bracket_holds(double rel_slack = 1e-6) const noexcept {
    const double t2 = tau_star * tau_star;
    return t2 >= lower_bound_sq * (1.0 - rel_slack) && t2 <= upper_bound_sq * (1.0 + rel_slack);
  }
};

struct OracleOptions {
  double quad_rel_tol = 1e-11;
  unsigned max_depth = 12;
  double residual_tol = 1e-10;
  int max_bisections = 400;
};

namespace detail {

inline constexpr double kTailStart = 1e3;

/// Breakpoints for a piecewise integration over [lo, hi] (finite ends):
/// 0, +-10^k, and any extra user points that fall inside.
inline std::vector<double> breakpoints(double lo, double hi, std::span<const double> extra) {
  std::vector<double> pts{lo, hi};
  auto add = [&](double p) {
    if (p > lo && p < hi) pts.push_back(p);
  };
  add(0.0);
  for (double p = 1e-3; p <= kTailStart * 10.0; p *= 10.0) {
    add(p);
    add(-p);
  }
  for (double p : extra) add(p);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

/// Integral of f(e) * density(e) over [lo, hi] (possibly infinite ends).
inline double integrate_density(const NoiseModel& noise, const std::function<double(double)>& f, double lo, double hi,
                                std::span<const double> extra, const OracleOptions& opt) {
  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto integrand = [&](double e) {
    const double p = noise.density(e);
    return p == 0.0 ? 0.0 : f(e) * p;
  };

  const double core_lo = std::max(lo, -kTailStart);
  const double core_hi = std::min(hi, kTailStart);
  double total = 0.0;
  if (core_lo < core_hi) {
    const auto pts = breakpoints(core_lo, core_hi, extra);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      double err = 0.0;
      total += Quad::integrate(integrand, pts[i], pts[i + 1], opt.max_depth, opt.quad_rel_tol, &err);
    }
  }
  // Tails in u = 1/e: integral_{T}^{inf} g(e) de = integral_0^{1/T} g(1/u) / u^2 du.
  if (hi > kTailStart) {
    auto upper = [&](double u) { return u == 0.0 ? 0.0 : integrand(1.0 / u) / (u * u); };
    const double u_lo = std::isinf(hi) ? 0.0 : 1.0 / hi;
    double err = 0.0;
    total += Quad::integrate(upper, u_lo, 1.0 / kTailStart, opt.max_depth, opt.quad_rel_tol, &err);
  }
  if (lo < -kTailStart) {
    auto lower = [&](double u) { return u == 0.0 ? 0.0 : integrand(-1.0 / u) / (u * u); };
    const double u_lo = std::isinf(lo) ? 0.0 : -1.0 / lo;
    double err = 0.0;
    total += Quad::integrate(lower, u_lo, 1.0 / kTailStart, opt.max_depth, opt.quad_rel_tol, &err);
  }
  if (!std::isfinite(total)) throw std::runtime_error("quadrature did not converge");
  return total;
}

/// E[f(eps)] for the standardized law.
inline double expectation(const NoiseModel& noise, const std::function<double(double)>& f,
                          std::span<const double> extra, const OracleOptions& opt) {
  if (noise.is_discrete()) {
    double acc = 0.0;
    for (const auto& [v, w] : noise.atoms()) acc += w * f(v);
    return acc;
  }
  const auto [lo, hi] = noise.support();
  return integrate_density(noise, f, lo, hi, extra, opt);
}

inline void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive");
}

}  // namespace detail

/// sigma_tau^2 = E[sigma^2 eps^2 1(sigma^2 eps^2 <= tau^2)].
inline double sigma_tau_sq(const NoiseModel& noise, double sigma, double tau, const OracleOptions& opt = {}) {
  detail::check_positive(sigma, "sigma");
  detail::check_positive(tau, "tau");
  const double cut = tau / sigma;
  if (noise.is_discrete()) {
    double acc = 0.0;
    for (const auto& [v, w] : noise.atoms()) {
      if (std::abs(v) <= cut) acc += w * v * v;
    }
    return sigma * sigma * acc;
  }
  const auto [lo, hi] = noise.support();
  const double a = std::max(lo, -cut);
  const double b = std::min(hi, cut);
  if (!(a < b)) return 0.0;
  const double inner = detail::integrate_density(noise, [](double e) { return e * e; }, a, b, {}, opt);
  return sigma * sigma * std::clamp(inner, 0.0, 1.0);
}

/// g(tau) = E[tau / sqrt(tau^2 + sigma^2 eps^2)] - (1 - z^2/n), evaluated as
/// z^2/n - E[x^2 / (h (h + tau))] with x = sigma eps, h = hypot(tau, x).
/// Strictly increasing in tau.
inline double tau_equation(const NoiseModel& noise, double sigma, double tau, std::size_t n, double z,
                           const OracleOptions& opt = {}) {
  detail::check_positive(sigma, "sigma");
  detail::check_positive(tau, "tau");
  const auto gap = [sigma, tau](double e) {
    const double x = sigma * e;
    const double h = std::hypot(tau, x);
    return (x / h) * (x / (h + tau));
  };
  const double extra[] = {tau / sigma, -tau / sigma};
  return z * z / static_cast<double>(n) - detail::expectation(noise, gap, extra, opt);
}

/// Population oracle tau* for sample size n and adjustment factor z (requires n > z^2).
inline OracleSolution tau_star(const NoiseModel& noise, double sigma, std::size_t n, double z,
                               const OracleOptions& opt = {}) {
  detail::check_positive(sigma, "sigma");
  detail::check_positive(z, "z");
  const double nd = static_cast<double>(n);
  if (!(nd > z * z)) {
    throw std::domain_error("oracle undefined: requires n > z^2 (n = " + std::to_string(n) +
                            ", z^2 = " + std::to_string(z * z) + ")");
  }

  // g(0+) = z^2/n - P(eps != 0) < 0, so only the upper end needs checking;
  // tau*^2 <= n sigma^2 / (2 z^2) puts the root below sigma sqrt(n) / z.
  double lo = 1e-12 * sigma;
  double hi = sigma * std::sqrt(nd) / z;
  double g_lo = -std::numeric_limits<double>::infinity();
  double g_hi = tau_equation(noise, sigma, hi, n, z, opt);
  if (g_hi < 0.0) {
    throw std::runtime_error("oracle root is not bracketed by [1e-12 sigma, sigma sqrt(n)/z]");
  }

  double mid = hi;
  double g_mid = g_hi;
  for (int it = 0; it < opt.max_bisections; ++it) {
    mid = lo + (hi - lo) / 2.0;
    if (mid <= lo || mid >= hi) break;
    g_mid = tau_equation(noise, sigma, mid, n, z, opt);
    if (g_mid == 0.0) break;
    if (g_mid < 0.0) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
      g_hi = g_mid;
    }
  }
  // Report the better end of the final bracket.
  if (std::abs(g_lo) < std::abs(g_mid)) {
    mid = lo;
    g_mid = g_lo;
  }
  if (std::abs(g_hi) < std::abs(g_mid)) {
    mid = hi;
    g_mid = g_hi;
  }

  OracleSolution sol;
  sol.tau_star = mid;
  sol.residual = g_mid;
  sol.sigma_tau_star_sq = sigma_tau_sq(noise, sigma, mid, opt);
  sol.lower_bound_sq = nd * sol.sigma_tau_star_sq / (4.0 * z * z);
  sol.upper_bound_sq = nd * sigma * sigma / (2.0 * z * z);
  if (!(std::abs(sol.residual) <= opt.residual_tol)) {
    throw std::runtime_error("oracle residual " + std::to_string(sol.residual) + " exceeds tolerance");
  }
  return sol;
}

/// True iff tau*(n) is strictly increasing along the sorted grid.
inline bool tau_star_monotonicity_check(const NoiseModel& noise, double sigma, std::vector<std::size_t> n_grid, double z,
                                        const OracleOptions& opt = {}) {
  std::sort(n_grid.begin(), n_grid.end());
  n_grid.erase(std::unique(n_grid.begin(), n_grid.end()), n_grid.end());
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t n : n_grid) {
    const double t = tau_star(noise, sigma, n, z, opt).tau_star;
    if (!(t > prev)) return false;
    prev = t;
  }
  return true;
}

}  // namespace pphuber
