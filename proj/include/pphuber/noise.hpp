#pragma once

// Standardized noise laws (mean 0, variance 1) with seeded sampling.
//
// Each law is stored as its raw parameters plus the affine map
// eps = (x - raw_mean) / raw_sd computed from closed-form raw moments.
// Densities come from Boost.Math and are used by the oracle quadrature;
// draws use the standard <random> distributions on a per-sample
// mt19937_64 seeded from derive_seed().

#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/pareto.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "pphuber/sample.hpp"

namespace pphuber {

namespace law {

struct Gaussian {};

struct StudentT {
  double df = 3.0;
};

/// Pareto with minimum 1 and tail index `shape`.
struct Pareto {
  double shape = 3.0;
};

struct LogNormal {
  double meanlog = 0.0;
  double sdlog = 1.0;
};

/// Rademacher: +1 or -1 with probability 1/2.
struct TwoPoint {};

/// (1 - eps) N(0, 1) + eps N(0, scale^2).
struct ContaminatedGaussian {
  double eps = 0.1;
  double scale = 10.0;
};

}  // namespace law

using LawParams = std::variant<law::Gaussian, law::StudentT, law::Pareto, law::LogNormal, law::TwoPoint,
                               law::ContaminatedGaussian>;

class NoiseModel;
NoiseModel standardize(const LawParams& params);

class NoiseModel {
 public:
  NoiseModel() : NoiseModel(standardize(law::Gaussian{})) {}

  const LawParams& params() const noexcept { return params_; }
  double raw_mean() const noexcept { return raw_mean_; }
  double raw_sd() const noexcept { return raw_sd_; }

  bool is_discrete() const noexcept { return std::holds_alternative<law::TwoPoint>(params_); }

  /// Support of the standardized law as [lo, hi]; infinite ends allowed.
  std::pair<double, double> support() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (std::holds_alternative<law::Pareto>(params_)) return {(1.0 - raw_mean_) / raw_sd_, inf};
    if (std::holds_alternative<law::LogNormal>(params_)) return {-raw_mean_ / raw_sd_, inf};
    if (is_discrete()) return {-1.0, 1.0};
    return {-inf, inf};
  }

  /// Atoms (value, probability) of a discrete law.
  std::vector<std::pair<double, double>> atoms() const {
    if (!is_discrete()) throw std::logic_error("atoms() called on a continuous law");
    return {{-1.0, 0.5}, {1.0, 0.5}};
  }

  /// Density of the standardized variable.
  double density(double e) const {
    const double x = raw_mean_ + raw_sd_ * e;
    return raw_sd_ * std::visit([x](const auto& p) { return raw_density(p, x); }, params_);
  }

  /// One standardized draw.
  template <class Engine>
  double draw(Engine& rng) const {
    const double x = std::visit([&rng](const auto& p) { return raw_draw(p, rng); }, params_);
    return (x - raw_mean_) / raw_sd_;
  }

  /// Law string in the CLI grammar, e.g. "student_t:df=3".
  std::string to_string() const {
    // Shortest representation that parses back to the same double.
    auto num = [](double v) {
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      return std::string(buf, res.ptr);
    };
    std::ostringstream out;
    std::visit(
        [&out, &num](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, law::Gaussian>) {
            out << "gaussian";
          } else if constexpr (std::is_same_v<T, law::StudentT>) {
            out << "student_t:df=" << num(p.df);
          } else if constexpr (std::is_same_v<T, law::Pareto>) {
            out << "pareto:shape=" << num(p.shape);
          } else if constexpr (std::is_same_v<T, law::LogNormal>) {
            out << "lognormal:meanlog=" << num(p.meanlog) << ",sdlog=" << num(p.sdlog);
          } else if constexpr (std::is_same_v<T, law::TwoPoint>) {
            out << "two_point";
          } else {
            out << "contaminated_gaussian:eps=" << num(p.eps) << ",scale=" << num(p.scale);
          }
        },
        params_);
    return out.str();
  }

 private:
  friend NoiseModel standardize(const LawParams& params);

  NoiseModel(LawParams params, double mean, double sd) : params_(std::move(params)), raw_mean_(mean), raw_sd_(sd) {}

  static double raw_density(const law::Gaussian&, double x) { return boost::math::pdf(boost::math::normal(), x); }
  static double raw_density(const law::StudentT& p, double x) {
    return boost::math::pdf(boost::math::students_t(p.df), x);
  }
  static double raw_density(const law::Pareto& p, double x) {
    if (x < 1.0) return 0.0;
    return boost::math::pdf(boost::math::pareto(1.0, p.shape), x);
  }
  static double raw_density(const law::LogNormal& p, double x) {
    if (x <= 0.0) return 0.0;
    return boost::math::pdf(boost::math::lognormal(p.meanlog, p.sdlog), x);
  }
  static double raw_density(const law::TwoPoint&, double) {
    throw std::logic_error("two_point law has no density");
  }
  static double raw_density(const law::ContaminatedGaussian& p, double x) {
    const boost::math::normal core;
    const boost::math::normal wide(0.0, p.scale);
    return (1.0 - p.eps) * boost::math::pdf(core, x) + p.eps * boost::math::pdf(wide, x);
  }

  template <class Engine>
  static double raw_draw(const law::Gaussian&, Engine& rng) {
    return std::normal_distribution<double>()(rng);
  }
  template <class Engine>
  static double raw_draw(const law::StudentT& p, Engine& rng) {
    return std::student_t_distribution<double>(p.df)(rng);
  }
  template <class Engine>
  static double raw_draw(const law::Pareto& p, Engine& rng) {
    // Inverse CDF on (0, 1]; generate_canonical lives in [0, 1).
    const double u = 1.0 - std::generate_canonical<double, 53>(rng);
    return std::pow(u, -1.0 / p.shape);
  }
  template <class Engine>
  static double raw_draw(const law::LogNormal& p, Engine& rng) {
    return std::lognormal_distribution<double>(p.meanlog, p.sdlog)(rng);
  }
  template <class Engine>
  static double raw_draw(const law::TwoPoint&, Engine& rng) {
    return (rng() >> 63) ? 1.0 : -1.0;
  }
  template <class Engine>
  static double raw_draw(const law::ContaminatedGaussian& p, Engine& rng) {
    const bool wide = std::bernoulli_distribution(p.eps)(rng);
    return std::normal_distribution<double>(0.0, wide ? p.scale : 1.0)(rng);
  }

  LawParams params_;
  double raw_mean_ = 0.0;
  double raw_sd_ = 1.0;
};

/// Builds the standardized model from raw law parameters using closed-form moments.
inline NoiseModel standardize(const LawParams& params) {
  return std::visit(
      [&params](const auto& p) -> NoiseModel {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, law::Gaussian> || std::is_same_v<T, law::TwoPoint>) {
          return NoiseModel(params, 0.0, 1.0);
        } else if constexpr (std::is_same_v<T, law::StudentT>) {
          if (!(p.df > 2.0) || !std::isfinite(p.df)) {
            throw std::invalid_argument("infinite variance outside model class: student_t needs df > 2");
          }
          return NoiseModel(params, 0.0, std::sqrt(p.df / (p.df - 2.0)));
        } else if constexpr (std::is_same_v<T, law::Pareto>) {
          if (!(p.shape > 2.0) || !std::isfinite(p.shape)) {
            throw std::invalid_argument("infinite variance outside model class: pareto needs shape > 2");
          }
          const double a = p.shape;
          return NoiseModel(params, a / (a - 1.0), std::sqrt(a / ((a - 1.0) * (a - 1.0) * (a - 2.0))));
        } else if constexpr (std::is_same_v<T, law::LogNormal>) {
          if (!(p.sdlog > 0.0) || !std::isfinite(p.sdlog) || !std::isfinite(p.meanlog)) {
            throw std::invalid_argument("lognormal needs finite meanlog and sdlog > 0");
          }
          const double s2 = p.sdlog * p.sdlog;
          const double mean = std::exp(p.meanlog + s2 / 2.0);
          return NoiseModel(params, mean, std::sqrt(std::expm1(s2)) * mean);
        } else {
          if (!(p.eps > 0.0 && p.eps < 1.0)) {
            throw std::invalid_argument("contaminated_gaussian needs eps in (0, 1)");
          }
          if (!(p.scale > 1.0) || !std::isfinite(p.scale)) {
            throw std::invalid_argument("contaminated_gaussian needs scale > 1");
          }
          return NoiseModel(params, 0.0, std::sqrt(1.0 - p.eps + p.eps * p.scale * p.scale));
        }
      },
      params);
}

namespace detail {

inline double parse_law_number(std::string_view text, std::string_view key) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw std::invalid_argument("bad numeric value '" + std::string(text) + "' for law parameter '" +
                                std::string(key) + "'");
  }
  return value;
}

}  // namespace detail

/// Parses "name" or "name:key=value,key=value". Unknown names or keys throw.
inline NoiseModel parse_noise(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string name(spec.substr(0, colon));
  std::map<std::string, double, std::less<>> kv;
  if (colon != std::string_view::npos) {
    std::string_view rest = spec.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        throw std::invalid_argument("malformed law parameter '" + std::string(item) + "'");
      }
      const std::string key(item.substr(0, eq));
      kv[key] = detail::parse_law_number(item.substr(eq + 1), key);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }

  auto take = [&kv](std::string_view key, double fallback) {
    if (const auto it = kv.find(key); it != kv.end()) {
      const double v = it->second;
      kv.erase(it);
      return v;
    }
    return fallback;
  };

  LawParams params;
  if (name == "gaussian") {
    params = law::Gaussian{};
  } else if (name == "student_t") {
    params = law::StudentT{take("df", 3.0)};
  } else if (name == "pareto") {
    params = law::Pareto{take("shape", 3.0)};
  } else if (name == "lognormal") {
    const double meanlog = take("meanlog", 0.0);
    params = law::LogNormal{meanlog, take("sdlog", 1.0)};
  } else if (name == "two_point") {
    params = law::TwoPoint{};
  } else if (name == "contaminated_gaussian") {
    const double eps = take("eps", 0.1);
    params = law::ContaminatedGaussian{eps, take("scale", 10.0)};
  } else {
    throw std::invalid_argument("unknown noise law '" + name + "'");
  }
  if (!kv.empty()) {
    throw std::invalid_argument("unknown parameter '" + kv.begin()->first + "' for law '" + name + "'");
  }
  return standardize(params);
}

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent seed for stream `stream` of experiment `base`.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
  return mix64(mix64(base) ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Draws y_i = mu_true + sigma * eps_i, i = 1..n; deterministic in `seed`.
inline Sample sample(const NoiseModel& noise, double sigma, std::size_t n, double mu_true, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample size must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be finite and >= 0");
  if (!std::isfinite(mu_true)) throw std::invalid_argument("mu must be finite");
  std::mt19937_64 rng(seed);
  std::vector<double> y(n);
  for (auto& v : y) v = mu_true + sigma * noise.draw(rng);
  return Sample(std::move(y));
}

}  // namespace pphuber
