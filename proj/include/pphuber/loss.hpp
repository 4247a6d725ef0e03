#pragma once

// Penalized Pseudo-Huber loss
//
//   l(x, tau) = sqrt(n) * (sqrt(tau^2 + x^2) - tau) / z + z * tau / sqrt(n)
//
// and the empirical objective L_n(mu, tau) = (1/n) sum_i l(y_i - mu, tau),
// together with its analytic gradient and Hessian. Everything here is a pure
// function of its arguments.
//
// Numerics: sqrt(tau^2 + x^2) is evaluated with std::hypot, and the excess
// sqrt(tau^2 + x^2) - tau is always formed as x * (x / (h + tau)), which has
// no cancellation for small |x| and no overflow for large |x|.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

#include "pphuber/sample.hpp"

namespace pphuber {

/// Evaluation point of the joint objective.
struct LossPoint {
  double mu = 0.0;
  double tau = 1.0;
  double z = 1.0;
};

struct Gradient {
  double d_mu = 0.0;
  double d_tau = 0.0;
};

/// Symmetric 2x2 matrix of second partials, ordered (mu, tau).
struct Hessian2x2 {
  double d_mumu = 0.0;
  double d_mutau = 0.0;
  double d_tautau = 0.0;

  /// a c - b^2 with the product error recovered by fma (Kahan's 2x2 determinant).
  double determinant() const noexcept {
    const double bb = d_mutau * d_mutau;
    const double bb_err = std::fma(-d_mutau, d_mutau, bb);
    return std::fma(d_mumu, d_tautau, -bb) + bb_err;
  }
  double trace() const noexcept { return d_mumu + d_tautau; }

  /// Smaller eigenvalue, via the cancellation-free form det / larger eigenvalue.
  double min_eigenvalue() const noexcept {
    const double half_gap = std::hypot((d_mumu - d_tautau) / 2.0, d_mutau);
    const double hi = trace() / 2.0 + half_gap;
    if (hi <= 0.0) return trace() / 2.0 - half_gap;
    return determinant() / hi;
  }

  Hessian2x2& operator+=(const Hessian2x2& other) noexcept {
    d_mumu += other.d_mumu;
    d_mutau += other.d_mutau;
    d_tautau += other.d_tautau;
    return *this;
  }
};

namespace detail {

inline void check_scale_args(double tau, double z) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::domain_error("tau must be positive and finite");
  if (!(z > 0.0) || !std::isfinite(z)) throw std::domain_error("z must be positive and finite");
}

inline void check_point(const LossPoint& p) {
  if (!std::isfinite(p.mu)) throw std::domain_error("mu must be finite");
  check_scale_args(p.tau, p.z);
}

/// sqrt(tau^2 + x^2) - tau without cancellation; h = hypot(tau, x).
inline double excess(double x, double tau, double h) noexcept { return x * (x / (h + tau)); }

}  // namespace detail

/// Per-observation loss at residual x for sample size n.
inline double pointwise_loss(double x, double tau, std::size_t n, double z) {
  detail::check_scale_args(tau, z);
  if (!std::isfinite(x)) throw std::domain_error("residual must be finite");
  if (n == 0) throw std::domain_error("sample size must be positive");
  const double rn = std::sqrt(static_cast<double>(n));
  const double h = std::hypot(tau, x);
  return rn * detail::excess(x, tau, h) / z + z * tau / rn;
}

/// Hessian of l(y - mu, tau) in (mu, tau) for a single observation with residual x.
inline Hessian2x2 pointwise_hessian(double x, double tau, std::size_t n, double z) {
  detail::check_scale_args(tau, z);
  if (n == 0) throw std::domain_error("sample size must be positive");
  const double h = std::hypot(tau, x);
  const double c = std::sqrt(static_cast<double>(n)) / (z * h);
  const double a = tau / h;
  const double b = x / h;
  return {c * a * a, c * a * b, c * b * b};
}

/// L_n(mu, tau) = (1/(z sqrt n)) sum_i (sqrt(tau^2 + r_i^2) - tau) + z tau / sqrt n.
inline double total_loss(std::span<const double> data, const LossPoint& p) {
  detail::check_point(p);
  if (data.empty()) throw std::domain_error("empty sample");
  double sum = 0.0;
  for (double y : data) {
    const double r = y - p.mu;
    sum += detail::excess(r, p.tau, std::hypot(p.tau, r));
  }
  const double rn = std::sqrt(static_cast<double>(data.size()));
  return sum / (p.z * rn) + p.z * p.tau / rn;
}

inline double total_loss(const Sample& data, const LossPoint& p) { return total_loss(data.values(), p); }

/// Both first partials in one pass.
///
/// d/dtau is accumulated as z/sqrt(n) - (1/(z sqrt n)) sum r^2 / (h (h + tau)),
/// which equals the textbook sum tau/h - (sqrt(n)/z - z/sqrt(n)) but does not
/// subtract two O(sqrt n) quantities near the optimum.
inline Gradient gradient(std::span<const double> data, const LossPoint& p) {
  detail::check_point(p);
  if (data.empty()) throw std::domain_error("empty sample");
  double s_mu = 0.0;
  double s_tau = 0.0;
  for (double y : data) {
    const double r = y - p.mu;
    const double h = std::hypot(p.tau, r);
    const double ratio = r / h;
    s_mu += ratio;
    s_tau += ratio * (r / (h + p.tau));
  }
  const double rn = std::sqrt(static_cast<double>(data.size()));
  return {-s_mu / (p.z * rn), p.z / rn - s_tau / (p.z * rn)};
}

inline Gradient gradient(const Sample& data, const LossPoint& p) { return gradient(data.values(), p); }

inline double grad_mu(std::span<const double> data, const LossPoint& p) { return gradient(data, p).d_mu; }
inline double grad_mu(const Sample& data, const LossPoint& p) { return grad_mu(data.values(), p); }

inline double grad_tau(std::span<const double> data, const LossPoint& p) { return gradient(data, p).d_tau; }
inline double grad_tau(const Sample& data, const LossPoint& p) { return grad_tau(data.values(), p); }

/// Hessian of L_n in (mu, tau); PSD everywhere, PD with two distinct observations.
inline Hessian2x2 hessian(std::span<const double> data, const LossPoint& p) {
  detail::check_point(p);
  if (data.empty()) throw std::domain_error("empty sample");
  Hessian2x2 acc;
  for (double y : data) {
    const double r = y - p.mu;
    const double h = std::hypot(p.tau, r);
    const double a = p.tau / h;
    const double b = r / h;
    acc.d_mumu += a * a / h;
    acc.d_mutau += a * b / h;
    acc.d_tautau += b * b / h;
  }
  const double c = 1.0 / (p.z * std::sqrt(static_cast<double>(data.size())));
  acc.d_mumu *= c;
  acc.d_mutau *= c;
  acc.d_tautau *= c;
  return acc;
}

inline Hessian2x2 hessian(const Sample& data, const LossPoint& p) { return hessian(data.values(), p); }

/// Closed-form determinant of H_1 + H_2, the sum of two per-observation
/// Hessians (each carrying the factor sqrt(n)/z):
///   n tau^2 (y1 - y2)^2 / (z^2 (tau^2 + r1^2)^{3/2} (tau^2 + r2^2)^{3/2}).
inline double two_point_hessian_determinant(double y1, double y2, double mu, double tau,
                                            std::size_t n, double z) {
  detail::check_scale_args(tau, z);
  const double h1 = std::hypot(tau, y1 - mu);
  const double h2 = std::hypot(tau, y2 - mu);
  const double d = y1 - y2;
  return static_cast<double>(n) / (z * z) * (tau / (h1 * h2)) * (tau / (h1 * h2)) * (d * d) /
         (h1 * h2);
}

/// L_n(to) - L_n(from), formed term by term so that the result keeps relative
/// accuracy even when the two losses agree to many digits. Used by the line
/// search, where decreases near the optimum fall far below the rounding of L_n.
inline double loss_difference(std::span<const double> data, const LossPoint& from, const LossPoint& to) {
  detail::check_point(from);
  detail::check_point(to);
  if (from.z != to.z) throw std::domain_error("loss_difference needs a common z");
  if (data.empty()) throw std::domain_error("empty sample");
  const double d_mu = to.mu - from.mu;
  const double d_tau = to.tau - from.tau;
  double sum = 0.0;
  for (double y : data) {
    const double r0 = y - from.mu;
    const double r1 = y - to.mu;
    const double h0 = std::hypot(from.tau, r0);
    const double h1 = std::hypot(to.tau, r1);
    // (h1 - tau1) - (h0 - tau0) = [d_tau ((tau1 - h1) + (tau0 - h0)) - d_mu (r0 + r1)] / (h0 + h1)
    const double e0 = detail::excess(r0, from.tau, h0);
    const double e1 = detail::excess(r1, to.tau, h1);
    sum += (-d_tau * (e0 + e1) - d_mu * (r0 + r1)) / (h0 + h1);
  }
  const double rn = std::sqrt(static_cast<double>(data.size()));
  return sum / (from.z * rn) + from.z * d_tau / rn;
}

}  // namespace pphuber
