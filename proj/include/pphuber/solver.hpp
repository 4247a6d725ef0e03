#pragma once

// Joint minimization of L_n(mu, tau) over mu in R, tau >= tau_floor.
//
// Two strategies share initialization and stopping rules:
//
//  * agd: alternating gradient descent. Each iteration takes a projected
//    gradient step in tau at the current mu, then a gradient step in mu at the
//    new tau. Step sizes start from a per-coordinate Barzilai-Borwein (secant)
//    estimate and are backtracked until the Armijo condition holds, so every
//    accepted step decreases L_n.
//  * exact_coordinate: alternating exact 1-D minimizations, each done by
//    bisection on the sign of the partial derivative. Slow but free of step
//    size assumptions; used to cross-check agd.
//
// The partials of L_n are dimensionless (invariant under y -> c y), so the
// stopping threshold is grad_tol itself.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pphuber/loss.hpp"
#include "pphuber/sample.hpp"
#include "pphuber/stats.hpp"

namespace pphuber {

enum class Strategy { agd, exact_coordinate };

/// z = 5 sqrt(log(5 / delta)).
inline double default_z(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  return 5.0 * std::sqrt(std::log(5.0 / delta));
}

struct EstimatorConfig {
  double delta = 0.05;
  std::optional<double> z_override;
  double grad_tol = 1e-10;
  std::size_t max_iters = 100000;
  /// Absolute floor for tau; when unset, 1e-8 times the data scale.
  std::optional<double> tau_floor;
  Strategy strategy = Strategy::agd;
  /// Starting point (mu0, tau0); when unset, median and scaled MAD.
  std::optional<std::pair<double, double>> user_init;

  double z() const { return z_override ? *z_override : default_z(delta); }

  void validate() const {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    if (z_override && (!(*z_override > 0.0) || !std::isfinite(*z_override))) {
      throw std::invalid_argument("z must be positive and finite");
    }
    if (!(grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be positive");
    if (max_iters == 0) throw std::invalid_argument("max_iters must be positive");
    if (tau_floor && (!(*tau_floor > 0.0) || !std::isfinite(*tau_floor))) {
      throw std::invalid_argument("tau_floor must be positive and finite");
    }
    if (user_init && (!std::isfinite(user_init->first) || !(user_init->second > 0.0) ||
                      !std::isfinite(user_init->second))) {
      throw std::invalid_argument("user initialization needs finite mu0 and positive tau0");
    }
  }
};

struct FitResult {
  double mu_hat = 0.0;
  double tau_hat = 0.0;
  double z = 0.0;
  std::size_t n = 0;
  std::size_t iterations = 0;
  /// Max-norm of the projected gradient at exit.
  double grad_norm = 0.0;
  bool converged = false;
  /// All observations identical; strict convexity fails.
  bool degenerate = false;
  double tau_floor = 0.0;
  double scale = 0.0;
  std::vector<std::string> warnings;
};

/// Optional per-iteration record of an agd run.
struct FitTrace {
  /// L_n after each iteration, starting with the initial point.
  std::vector<double> loss;
  /// Accurately computed L_n(after) - L_n(before) for each accepted coordinate step.
  std::vector<double> step_changes;
};

struct DiagnosticsReport {
  double stationarity_mu = 0.0;
  double stationarity_tau = 0.0;
  /// Minimum of d2 L_n / d mu2 at tau_hat over a 64-point grid on [mu_hat - r, mu_hat + r].
  double empirical_kappa = 0.0;
  double ball_radius = 0.0;
  /// Set when the fit was degenerate and kappa was taken at the tau floor.
  bool flagged = false;
};

/// MAD * 1.4826, else |median|, else 1.
inline double data_scale(std::span<const double> y) {
  const double s = stats::kMadToSigma * stats::mad(y);
  if (s > 0.0) return s;
  const double m = std::abs(stats::median(y));
  return m > 0.0 ? m : 1.0;
}

namespace detail {

inline constexpr double kArmijo = 1e-4;
inline constexpr double kShrink = 0.5;
inline constexpr int kMaxBacktracks = 60;
inline constexpr int kMaxBisections = 2000;

/// Projected partial in tau: zero when pinned at the floor and pushing down.
inline double projected_tau_grad(double g_tau, double tau, double floor) {
  return (tau <= floor && g_tau > 0.0) ? 0.0 : g_tau;
}

inline bool bracket_resolved(double lo, double hi, double ref) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid <= lo || mid >= hi || hi - lo <= 1e-15 * std::max({std::abs(lo), std::abs(hi), ref});
}

/// argmin over mu of L_n(., tau): bisection on the increasing map mu -> dL/dmu.
inline double argmin_mu(std::span<const double> y, double tau, double z, double scale) {
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  double lo = *mn;
  double hi = *mx;
  if (lo == hi) return lo;
  for (int it = 0; it < kMaxBisections && !bracket_resolved(lo, hi, scale); ++it) {
    const double mid = lo + (hi - lo) / 2.0;
    const double g = gradient(y, {mid, tau, z}).d_mu;
    if (g == 0.0) return mid;
    (g < 0.0 ? lo : hi) = mid;
  }
  const double g_lo = std::abs(gradient(y, {lo, tau, z}).d_mu);
  const double g_hi = std::abs(gradient(y, {hi, tau, z}).d_mu);
  return g_lo <= g_hi ? lo : hi;
}

/// argmin over tau >= floor of L_n(mu, .): bisection on the increasing map tau -> dL/dtau.
inline double argmin_tau(std::span<const double> y, double mu, double z, double floor, double start) {
  if (gradient(y, {mu, floor, z}).d_tau >= 0.0) return floor;
  double lo = floor;
  double hi = std::max(start, 2.0 * floor);
  for (int it = 0; gradient(y, {mu, hi, z}).d_tau < 0.0; ++it) {
    if (it > 2000 || !std::isfinite(hi)) throw std::runtime_error("tau minimizer is not bracketed");
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < kMaxBisections && !bracket_resolved(lo, hi, floor); ++it) {
    const double mid = lo + (hi - lo) / 2.0;
    const double g = gradient(y, {mu, mid, z}).d_tau;
    if (g == 0.0) return mid;
    (g < 0.0 ? lo : hi) = mid;
  }
  const double g_lo = std::abs(gradient(y, {mu, lo, z}).d_tau);
  const double g_hi = std::abs(gradient(y, {mu, hi, z}).d_tau);
  return g_lo <= g_hi ? lo : hi;
}

struct Prepared {
  std::span<const double> y;
  double z = 0.0;
  double scale = 0.0;
  double floor = 0.0;
};

inline Prepared prepare(const Sample& data, const EstimatorConfig& config) {
  config.validate();
  Prepared p;
  p.y = data.values();
  p.z = config.z();
  p.scale = data_scale(p.y);
  p.floor = config.tau_floor ? *config.tau_floor : 1e-8 * p.scale;
  return p;
}

/// One backtracking step along a single coordinate. Returns true when a step
/// was accepted; `x` and `eta` are updated in place.
template <class MakePoint>
bool coordinate_step(std::span<const double> y, const LossPoint& at, double grad, double& x, double& eta,
                     double lower_bound, MakePoint make_point, FitTrace* trace) {
  if (grad == 0.0) return false;
  double step_size = eta;
  for (int ls = 0; ls < kMaxBacktracks; ++ls, step_size *= kShrink) {
    const double candidate = std::max(lower_bound, x - step_size * grad);
    const double moved = candidate - x;
    if (moved == 0.0) return false;
    const double change = loss_difference(y, at, make_point(candidate));
    if (change <= kArmijo * grad * moved) {
      if (trace) trace->step_changes.push_back(change);
      x = candidate;
      eta = step_size;
      return true;
    }
  }
  return false;
}

/// Secant step size s / (g - g_prev) when it is positive, else a widened previous step.
inline double secant_step(double dx, double dg, double fallback) {
  if (dx != 0.0 && dg != 0.0) {
    const double s = dx / dg;
    if (s > 0.0 && std::isfinite(s)) return s;
  }
  return 2.0 * fallback;
}

inline void run_agd(const Prepared& p, std::size_t max_iters, double grad_tol, FitResult& r, FitTrace* trace) {
  double mu = r.mu_hat;
  double tau = r.tau_hat;
  double eta_mu = p.scale;
  double eta_tau = p.scale;
  std::optional<std::pair<double, double>> last_tau;  // (tau, g_tau) at the previous tau step
  std::optional<std::pair<double, double>> last_mu;

  if (trace) trace->loss.push_back(total_loss(p.y, {mu, tau, p.z}));

  std::size_t k = 0;
  for (; k < max_iters; ++k) {
    const Gradient g = gradient(p.y, {mu, tau, p.z});
    const double g_tau_proj = projected_tau_grad(g.d_tau, tau, p.floor);
    if (std::max(std::abs(g.d_mu), std::abs(g_tau_proj)) <= grad_tol) break;

    // tau step at the current mu.
    if (last_tau) eta_tau = secant_step(tau - last_tau->first, g.d_tau - last_tau->second, eta_tau);
    last_tau = std::pair{tau, g.d_tau};
    const bool moved_tau = coordinate_step(
        p.y, {mu, tau, p.z}, g_tau_proj, tau, eta_tau, p.floor,
        [&](double t) { return LossPoint{mu, t, p.z}; }, trace);

    // mu step at the new tau.
    const double g_mu = moved_tau ? gradient(p.y, {mu, tau, p.z}).d_mu : g.d_mu;
    if (last_mu) eta_mu = secant_step(mu - last_mu->first, g_mu - last_mu->second, eta_mu);
    last_mu = std::pair{mu, g_mu};
    const bool moved_mu = coordinate_step(
        p.y, {mu, tau, p.z}, g_mu, mu, eta_mu, -std::numeric_limits<double>::infinity(),
        [&](double m) { return LossPoint{m, tau, p.z}; }, trace);

    if (trace) trace->loss.push_back(total_loss(p.y, {mu, tau, p.z}));
    if (!moved_tau && !moved_mu) {
      ++k;
      break;  // no representable descent left
    }
  }
  r.mu_hat = mu;
  r.tau_hat = tau;
  r.iterations = k;
}

inline void run_exact_coordinate(const Prepared& p, std::size_t max_iters, double grad_tol, FitResult& r) {
  double mu = r.mu_hat;
  double tau = r.tau_hat;
  std::size_t k = 0;
  for (; k < max_iters; ++k) {
    const Gradient g = gradient(p.y, {mu, tau, p.z});
    if (std::max(std::abs(g.d_mu), std::abs(projected_tau_grad(g.d_tau, tau, p.floor))) <= grad_tol) break;
    // tau first, then mu, matching the agd ordering.
    const double next_tau = argmin_tau(p.y, mu, p.z, p.floor, tau);
    const double next_mu = argmin_mu(p.y, next_tau, p.z, p.scale);
    if (next_tau == tau && next_mu == mu) {
      ++k;
      break;
    }
    tau = next_tau;
    mu = next_mu;
  }
  r.mu_hat = mu;
  r.tau_hat = tau;
  r.iterations = k;
}

}  // namespace detail

/// Joint estimate (mu_hat, tau_hat) minimizing L_n.
inline FitResult fit(const Sample& data, const EstimatorConfig& config = {}, FitTrace* trace = nullptr) {
  const auto p = detail::prepare(data, config);
  const std::size_t n = data.size();

  FitResult r;
  r.z = p.z;
  r.n = n;
  r.scale = p.scale;
  r.tau_floor = p.floor;
  if (static_cast<double>(n) <= p.z * p.z) {
    r.warnings.push_back("n <= z^2: the tau penalty coefficient sqrt(n)/z - z/sqrt(n) is nonpositive");
  }

  if (data.all_identical()) {
    r.degenerate = true;
    r.mu_hat = data[0];
    r.tau_hat = p.floor;
    r.grad_norm = 0.0;  // d/dmu = 0 and tau is pinned at the floor with d/dtau = z/sqrt(n) > 0
    r.converged = true;
    r.warnings.push_back("degenerate sample: all observations are identical");
    if (trace) trace->loss.push_back(total_loss(p.y, {r.mu_hat, r.tau_hat, p.z}));
    return r;
  }

  if (config.user_init) {
    r.mu_hat = config.user_init->first;
    r.tau_hat = std::max(config.user_init->second, p.floor);
  } else {
    const double mad_sigma = stats::kMadToSigma * stats::mad(p.y);
    r.mu_hat = stats::median(p.y);
    r.tau_hat = std::max(mad_sigma, p.floor) * std::sqrt(static_cast<double>(n)) / p.z;
  }

  if (config.strategy == Strategy::agd) {
    detail::run_agd(p, config.max_iters, config.grad_tol, r, trace);
  } else {
    detail::run_exact_coordinate(p, config.max_iters, config.grad_tol, r);
  }

  const Gradient g = gradient(p.y, {r.mu_hat, r.tau_hat, p.z});
  r.grad_norm = std::max(std::abs(g.d_mu), std::abs(detail::projected_tau_grad(g.d_tau, r.tau_hat, p.floor)));
  r.converged = r.grad_norm <= config.grad_tol;
  return r;
}

/// Profile minimizer mu_hat(tau) for a fixed tau.
inline double fit_fixed_tau(const Sample& data, double tau, const EstimatorConfig& config = {}) {
  const auto p = detail::prepare(data, config);
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::domain_error("tau must be positive and finite");
  return detail::argmin_mu(p.y, tau, p.z, p.scale);
}

/// dL_n/dtau at (mu_hat(tau), tau); equals the derivative of the profile loss.
inline double profile_tau_gradient(const Sample& data, double tau, const EstimatorConfig& config = {}) {
  const double mu = fit_fixed_tau(data, tau, config);
  return grad_tau(data, {mu, tau, config.z()});
}

/// Empirical audit of local strong convexity in mu around a fit.
inline DiagnosticsReport diagnostics(const Sample& data, const FitResult& fit, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("radius must be positive");
  if (fit.n != data.size()) throw std::invalid_argument("fit was not produced from this sample");
  DiagnosticsReport d;
  d.ball_radius = radius;
  d.flagged = fit.degenerate;
  const LossPoint at{fit.mu_hat, fit.tau_hat, fit.z};
  const Gradient g = gradient(data, at);
  d.stationarity_mu = g.d_mu;
  d.stationarity_tau = g.d_tau;

  constexpr int kGrid = 64;
  double kappa = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double mu = fit.mu_hat - radius + 2.0 * radius * static_cast<double>(i) / (kGrid - 1);
    kappa = std::min(kappa, hessian(data, {mu, fit.tau_hat, fit.z}).d_mumu);
  }
  d.empirical_kappa = kappa;
  return d;
}

}  // namespace pphuber
