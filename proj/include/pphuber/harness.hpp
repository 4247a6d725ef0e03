#pragma once

// Monte Carlo studies of the penalized Pseudo-Huber estimator against
// baseline estimators.
//
// Replication r of a study draws its sample from derive_seed(base_seed, r);
// replications run on a small thread pool and write into preallocated slots,
// and every aggregate is computed afterwards in index order, so results do
// not depend on the thread count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "pphuber/noise.hpp"
#include "pphuber/oracle.hpp"
#include "pphuber/sample.hpp"
#include "pphuber/solver.hpp"
#include "pphuber/stats.hpp"

namespace pphuber {

enum class Estimator { penalized_ph, sample_mean, median_of_means, fixed_tau_ph };

inline std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::penalized_ph: return "penalized_ph";
    case Estimator::sample_mean: return "sample_mean";
    case Estimator::median_of_means: return "median_of_means";
    case Estimator::fixed_tau_ph: return "fixed_tau_ph";
  }
  return "unknown";
}

inline Estimator parse_estimator(std::string_view name) {
  for (Estimator e : {Estimator::penalized_ph, Estimator::sample_mean, Estimator::median_of_means,
                      Estimator::fixed_tau_ph}) {
    if (to_string(e) == name) return e;
  }
  throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

inline constexpr double kQuantileLevels[] = {0.5, 0.9, 0.95, 0.99};

struct StudySpec {
  NoiseModel noise;
  double sigma = 1.0;
  double mu_true = 0.0;
  std::vector<std::size_t> n_grid;
  double delta = 0.05;
  std::optional<double> z_override;
  std::size_t replications = 100;
  std::uint64_t base_seed = 0;
  std::vector<Estimator> estimators{Estimator::penalized_ph, Estimator::sample_mean};
  /// Worker threads; 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;

  double z() const { return z_override ? *z_override : default_z(delta); }

  EstimatorConfig estimator_config() const {
    EstimatorConfig c;
    c.delta = delta;
    c.z_override = z_override;
    return c;
  }

  void validate() const {
    if (replications < 1) throw std::invalid_argument("replications must be at least 1");
    if (n_grid.empty()) throw std::invalid_argument("n_grid must be nonempty");
    if (std::find(n_grid.begin(), n_grid.end(), std::size_t{0}) != n_grid.end()) {
      throw std::invalid_argument("n_grid entries must be positive");
    }
    if (estimators.empty()) throw std::invalid_argument("at least one estimator is required");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be finite and >= 0");
    if (!std::isfinite(mu_true)) throw std::invalid_argument("mu must be finite");
    estimator_config().validate();
  }
};

/// One (estimator, n) cell of a study.
struct StudyRow {
  Estimator estimator = Estimator::penalized_ph;
  std::size_t n = 0;
  /// Quantiles of |mu_hat - mu*| at kQuantileLevels.
  double q50 = 0.0;
  double q90 = 0.0;
  double q95 = 0.0;
  double q99 = 0.0;
  // penalized_ph only
  std::optional<double> median_tau_hat;
  std::optional<double> tau_star;
  /// Fraction of replications with tau_hat in [2 tau*/5, 5 tau*].
  std::optional<double> coverage;
  std::optional<double> median_tau_ratio;
  /// Least-squares slope of log(median tau_hat) on log n across the grid.
  std::optional<double> slope;
  /// Replications whose solver did not report convergence.
  std::size_t failures = 0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::size_t replications = 0;
  std::size_t total_failures = 0;

  const StudyRow& row(Estimator e, std::size_t n) const {
    for (const auto& r : rows) {
      if (r.estimator == e && r.n == n) return r;
    }
    throw std::out_of_range("no study row for " + std::string(to_string(e)) + " at n = " + std::to_string(n));
  }
};

inline double sample_mean(const Sample& data) { return stats::mean(data.values()); }

/// Sizes of `blocks` contiguous slices of n items, larger slices first.
inline std::vector<std::size_t> block_sizes(std::size_t n, std::size_t blocks) {
  std::vector<std::size_t> sizes(blocks, n / blocks);
  for (std::size_t b = 0; b < n % blocks; ++b) ++sizes[b];
  return sizes;
}

/// Median of block means; blocks are contiguous slices after a seeded shuffle.
inline double median_of_means(const Sample& data, std::size_t blocks, std::uint64_t seed = 0) {
  const std::size_t n = data.size();
  if (blocks < 1 || blocks > n) throw std::invalid_argument("blocks must lie in [1, n]");
  std::vector<double> y = data.vector();
  std::mt19937_64 rng(seed);
  std::shuffle(y.begin(), y.end(), rng);

  std::vector<double> means;
  means.reserve(blocks);
  std::size_t start = 0;
  for (std::size_t size : block_sizes(n, blocks)) {
    means.push_back(std::accumulate(y.begin() + start, y.begin() + start + size, 0.0) / static_cast<double>(size));
    start += size;
  }
  return stats::median(std::move(means));
}

/// ceil(log(1/delta)), at least 1.
inline std::size_t default_mom_blocks(double delta) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::log(1.0 / delta))));
}

/// Profile estimate at tau = sigma_known * sqrt(n) / z, i.e. with the true scale supplied.
inline double fixed_tau_ph(const Sample& data, double sigma_known, const EstimatorConfig& config = {}) {
  if (!(sigma_known > 0.0) || !std::isfinite(sigma_known)) throw std::invalid_argument("sigma_known must be positive");
  const double tau = sigma_known * std::sqrt(static_cast<double>(data.size())) / config.z();
  return fit_fixed_tau(data, tau, config);
}

namespace detail {

/// Runs body(i) for i in [0, count) on `threads` workers; rethrows the first failure.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct Replicate {
  double deviation = 0.0;
  double tau_hat = 0.0;
  bool converged = true;
};

inline StudyResult run_study(const StudySpec& spec, bool with_oracle) {
  spec.validate();
  const double z = spec.z();
  const EstimatorConfig config = spec.estimator_config();
  const std::size_t n_count = spec.n_grid.size();
  const std::size_t e_count = spec.estimators.size();
  const std::size_t reps = spec.replications;
  const std::size_t mom_blocks = default_mom_blocks(spec.delta);
  constexpr std::uint64_t kMomStream = 0x4D6F4D;

  std::vector<std::optional<OracleSolution>> oracle(n_count);
  if (with_oracle) {
    if (!(spec.sigma > 0.0)) throw std::invalid_argument("tau adaptivity study needs sigma > 0");
    for (std::size_t i = 0; i < n_count; ++i) oracle[i] = tau_star(spec.noise, spec.sigma, spec.n_grid[i], z);
  }

  // slots[(ni * e_count + ei) * reps + r]
  std::vector<Replicate> slots(n_count * e_count * reps);
  parallel_for(n_count * reps, spec.threads, [&](std::size_t task) {
    const std::size_t ni = task / reps;
    const std::size_t r = task % reps;
    const std::size_t n = spec.n_grid[ni];
    const std::uint64_t seed = derive_seed(spec.base_seed, r);
    const Sample data = sample(spec.noise, spec.sigma, n, spec.mu_true, seed);
    for (std::size_t ei = 0; ei < e_count; ++ei) {
      Replicate& out = slots[(ni * e_count + ei) * reps + r];
      double mu_hat = 0.0;
      switch (spec.estimators[ei]) {
        case Estimator::penalized_ph: {
          const FitResult f = fit(data, config);
          mu_hat = f.mu_hat;
          out.tau_hat = f.tau_hat;
          out.converged = f.converged;
          break;
        }
        case Estimator::sample_mean: mu_hat = sample_mean(data); break;
        case Estimator::median_of_means:
          mu_hat = median_of_means(data, std::min(mom_blocks, n), derive_seed(seed, kMomStream));
          break;
        case Estimator::fixed_tau_ph:
          mu_hat = spec.sigma > 0.0 ? fixed_tau_ph(data, spec.sigma, config) : spec.mu_true;
          break;
      }
      out.deviation = std::abs(mu_hat - spec.mu_true);
    }
  });

  StudyResult result;
  result.replications = reps;
  std::vector<double> log_n;
  std::vector<double> log_med_tau;
  for (std::size_t ei = 0; ei < e_count; ++ei) {
    for (std::size_t ni = 0; ni < n_count; ++ni) {
      const auto first = slots.begin() + static_cast<std::ptrdiff_t>((ni * e_count + ei) * reps);
      const std::vector<Replicate> cell(first, first + static_cast<std::ptrdiff_t>(reps));

      StudyRow row;
      row.estimator = spec.estimators[ei];
      row.n = spec.n_grid[ni];
      std::vector<double> dev(reps);
      std::transform(cell.begin(), cell.end(), dev.begin(), [](const Replicate& c) { return c.deviation; });
      std::sort(dev.begin(), dev.end());
      row.q50 = stats::quantile_sorted(dev, kQuantileLevels[0]);
      row.q90 = stats::quantile_sorted(dev, kQuantileLevels[1]);
      row.q95 = stats::quantile_sorted(dev, kQuantileLevels[2]);
      row.q99 = stats::quantile_sorted(dev, kQuantileLevels[3]);
      row.failures = static_cast<std::size_t>(
          std::count_if(cell.begin(), cell.end(), [](const Replicate& c) { return !c.converged; }));

      if (row.estimator == Estimator::penalized_ph) {
        std::vector<double> taus(reps);
        std::transform(cell.begin(), cell.end(), taus.begin(), [](const Replicate& c) { return c.tau_hat; });
        row.median_tau_hat = stats::median(taus);
        if (oracle[ni]) {
          const double ts = oracle[ni]->tau_star;
          row.tau_star = ts;
          const auto inside = std::count_if(taus.begin(), taus.end(),
                                            [ts](double t) { return t >= 0.4 * ts && t <= 5.0 * ts; });
          row.coverage = static_cast<double>(inside) / static_cast<double>(reps);
          row.median_tau_ratio = *row.median_tau_hat / ts;
        }
        if (*row.median_tau_hat > 0.0) {
          log_n.push_back(std::log(static_cast<double>(row.n)));
          log_med_tau.push_back(std::log(*row.median_tau_hat));
        }
      }
      result.total_failures += row.failures;
      result.rows.push_back(row);
    }
  }

  if (log_n.size() >= 2 && log_n.size() == n_count) {
    const double slope = stats::ols_slope(log_n, log_med_tau);
    for (auto& row : result.rows) {
      if (row.estimator == Estimator::penalized_ph) row.slope = slope;
    }
  }
  return result;
}

}  // namespace detail

/// Deviation quantiles of every requested estimator at every n.
inline StudyResult run_deviation_study(const StudySpec& spec) { return detail::run_study(spec, false); }

/// Deviation study plus tau* per n, coverage of [2 tau*/5, 5 tau*], median
/// tau_hat / tau*, and the log-log slope of median tau_hat in n. Adds the
/// penalized estimator if it was not requested; every n must exceed z^2.
inline StudyResult run_tau_adaptivity_study(StudySpec spec) {
  if (std::find(spec.estimators.begin(), spec.estimators.end(), Estimator::penalized_ph) == spec.estimators.end()) {
    spec.estimators.insert(spec.estimators.begin(), Estimator::penalized_ph);
  }
  return detail::run_study(spec, true);
}

}  // namespace pphuber
