#pragma once

// Command implementations behind the `pphuber` executable. Each command takes
// parsed options and output streams and returns the process exit code:
//   0 success, 1 computational failure, 2 user error.

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pphuber/harness.hpp"
#include "pphuber/noise.hpp"
#include "pphuber/oracle.hpp"
#include "pphuber/solver.hpp"

namespace pphuber::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

using Json = nlohmann::ordered_json;

/// Bad input from the user (exit code 2).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Format { text, json };

inline Format parse_format(std::string_view s) {
  if (s == "text") return Format::text;
  if (s == "json") return Format::json;
  throw UsageError("unknown format '" + std::string(s) + "' (expected json or text)");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> to_integer(std::string_view s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Shortest decimal that parses back to the same double.
inline std::string exact(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string sig12(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    const auto pos = s.find(sep);
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

}  // namespace detail

/// One finite decimal per line; blank lines and lines starting with '#' are skipped.
inline std::vector<double> read_values(std::istream& in, const std::string& source) {
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto v = detail::to_double(t);
    if (!v) {
      throw UsageError(source + ":" + std::to_string(line_no) + ": cannot parse '" + std::string(t) +
                       "' as a number");
    }
    if (!std::isfinite(*v)) {
      throw UsageError(source + ":" + std::to_string(line_no) + ": value is not finite");
    }
    values.push_back(*v);
  }
  if (values.empty()) throw UsageError(source + ": no observations found");
  return values;
}

inline std::vector<double> read_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open input file '" + path + "'");
  return read_values(in, path);
}

/// Writes one value per line with round-trip precision.
inline void write_values(std::ostream& out, const Sample& s) {
  for (double v : s) out << detail::exact(v) << '\n';
}

// ---------------------------------------------------------------- estimate

struct EstimateOptions {
  std::string input_path;
  double delta = 0.05;
  std::optional<double> z;
  Format format = Format::text;
};

inline Json fit_to_json(const FitResult& f, double delta) {
  Json j;
  j["mu_hat"] = f.mu_hat;
  j["tau_hat"] = f.tau_hat;
  j["z"] = f.z;
  j["delta"] = delta;
  j["n"] = f.n;
  j["iterations"] = f.iterations;
  j["grad_norm"] = f.grad_norm;
  j["converged"] = f.converged;
  j["degenerate"] = f.degenerate;
  j["warnings"] = f.warnings;
  return j;
}

inline int cmd_estimate(const EstimateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const Sample data(read_values_file(opt.input_path));
    EstimatorConfig config;
    config.delta = opt.delta;
    config.z_override = opt.z;
    config.validate();
    const FitResult f = fit(data, config);
    if (opt.format == Format::json) {
      out << fit_to_json(f, opt.delta).dump(2) << '\n';
    } else {
      out << "mu_hat      " << detail::sig12(f.mu_hat) << '\n'
          << "tau_hat     " << detail::sig12(f.tau_hat) << '\n'
          << "z           " << detail::sig12(f.z) << '\n'
          << "n           " << f.n << '\n'
          << "iterations  " << f.iterations << '\n'
          << "converged   " << (f.converged ? "true" : "false") << '\n'
          << "degenerate  " << (f.degenerate ? "true" : "false") << '\n';
      for (const auto& w : f.warnings) out << "warning     " << w << '\n';
    }
    if (!f.converged) {
      err << "error: solver did not converge (gradient norm " << f.grad_norm << ")\n";
      return kExitFailure;
    }
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

// ---------------------------------------------------------------- oracle

struct OracleCmdOptions {
  std::string noise = "gaussian";
  double sigma = 1.0;
  std::size_t n = 0;
  double delta = 0.05;
  std::optional<double> z;
  Format format = Format::text;
};

inline int cmd_oracle(const OracleCmdOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const NoiseModel noise = parse_noise(opt.noise);
    const double z = opt.z ? *opt.z : default_z(opt.delta);
    const OracleSolution s = tau_star(noise, opt.sigma, opt.n, z);
    if (opt.format == Format::json) {
      Json j;
      j["noise"] = noise.to_string();
      j["sigma"] = opt.sigma;
      j["n"] = opt.n;
      j["z"] = z;
      j["tau_star"] = s.tau_star;
      j["sigma_tau_star_sq"] = s.sigma_tau_star_sq;
      j["lower_bound_sq"] = s.lower_bound_sq;
      j["upper_bound_sq"] = s.upper_bound_sq;
      j["residual"] = s.residual;
      j["bracket_holds"] = s.bracket_holds();
      out << j.dump(2) << '\n';
    } else {
      out << "tau_star           " << detail::sig12(s.tau_star) << '\n'
          << "sigma_tau_star_sq  " << detail::sig12(s.sigma_tau_star_sq) << '\n'
          << "lower_bound_sq     " << detail::sig12(s.lower_bound_sq) << '\n'
          << "tau_star_sq        " << detail::sig12(s.tau_star * s.tau_star) << '\n'
          << "upper_bound_sq     " << detail::sig12(s.upper_bound_sq) << '\n'
          << "residual           " << detail::sig12(s.residual) << '\n'
          << "bracket_holds      " << (s.bracket_holds() ? "true" : "false") << '\n';
    }
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
  std::string noise = "gaussian";
  double sigma = 1.0;
  double mu = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  /// Empty or "-" writes to the output stream.
  std::string out_path;
};

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const NoiseModel noise = parse_noise(opt.noise);
    const Sample s = sample(noise, opt.sigma, opt.n, opt.mu, opt.seed);
    if (opt.out_path.empty() || opt.out_path == "-") {
      write_values(out, s);
    } else {
      std::ofstream file(opt.out_path);
      if (!file) throw UsageError("cannot open output file '" + opt.out_path + "'");
      write_values(file, s);
      if (!file) throw std::runtime_error("write to '" + opt.out_path + "' failed");
    }
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

// ---------------------------------------------------------------- study

enum class StudyKind { automatic, deviation, adaptivity };

struct StudyFile {
  StudySpec spec;
  StudyKind kind = StudyKind::automatic;
};

/// Parses the flat `key = value` study grammar.
///
///   noise        law string (default gaussian)
///   sigma, mu    reals (defaults 1, 0)
///   n_grid       comma-separated positive integers (required)
///   delta        real in (0, 1) (default 0.05)
///   z            positive real, overrides the delta-derived z
///   replications positive integer (default 100)
///   seed         unsigned 64-bit integer (default 0)
///   estimators   comma-separated subset of penalized_ph, sample_mean,
///                median_of_means, fixed_tau_ph
///   threads      worker count, 0 = all cores
///   study        auto | deviation | adaptivity
inline StudyFile parse_study_spec(std::istream& in) {
  StudyFile f;
  bool have_grid = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(detail::trim(t.substr(0, eq)));
    const auto value = detail::trim(t.substr(eq + 1));
    auto bad = [&](const std::string& why) {
      return UsageError("line " + std::to_string(line_no) + ": invalid value for key '" + key + "': " + why);
    };
    auto real = [&]() {
      const auto v = detail::to_double(value);
      if (!v || !std::isfinite(*v)) throw bad("expected a finite number");
      return *v;
    };

    if (key == "noise") {
      try {
        f.spec.noise = parse_noise(value);
      } catch (const std::invalid_argument& e) {
        throw bad(e.what());
      }
    } else if (key == "sigma") {
      f.spec.sigma = real();
      if (f.spec.sigma < 0.0) throw bad("must be >= 0");
    } else if (key == "mu") {
      f.spec.mu_true = real();
    } else if (key == "delta") {
      f.spec.delta = real();
      if (!(f.spec.delta > 0.0 && f.spec.delta < 1.0)) throw bad("must lie in (0, 1)");
    } else if (key == "z") {
      f.spec.z_override = real();
      if (!(*f.spec.z_override > 0.0)) throw bad("must be positive");
    } else if (key == "n_grid") {
      f.spec.n_grid.clear();
      for (auto item : detail::split(value, ',')) {
        const auto v = detail::to_integer<std::size_t>(item);
        if (!v || *v == 0) throw bad("expected comma-separated positive integers");
        f.spec.n_grid.push_back(*v);
      }
      have_grid = true;
    } else if (key == "replications") {
      const auto v = detail::to_integer<std::size_t>(value);
      if (!v || *v == 0) throw bad("expected a positive integer");
      f.spec.replications = *v;
    } else if (key == "seed") {
      const auto v = detail::to_integer<std::uint64_t>(value);
      if (!v) throw bad("expected an unsigned integer");
      f.spec.base_seed = *v;
    } else if (key == "threads") {
      const auto v = detail::to_integer<unsigned>(value);
      if (!v) throw bad("expected an unsigned integer");
      f.spec.threads = *v;
    } else if (key == "estimators") {
      f.spec.estimators.clear();
      for (auto item : detail::split(value, ',')) {
        try {
          const Estimator e = parse_estimator(item);
          if (std::find(f.spec.estimators.begin(), f.spec.estimators.end(), e) != f.spec.estimators.end()) {
            throw bad("duplicate estimator '" + std::string(item) + "'");
          }
          f.spec.estimators.push_back(e);
        } catch (const std::invalid_argument& e) {
          throw bad(e.what());
        }
      }
    } else if (key == "study") {
      if (value == "auto") {
        f.kind = StudyKind::automatic;
      } else if (value == "deviation") {
        f.kind = StudyKind::deviation;
      } else if (value == "adaptivity") {
        f.kind = StudyKind::adaptivity;
      } else {
        throw bad("expected auto, deviation or adaptivity");
      }
    } else {
      throw UsageError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (!have_grid) throw UsageError("missing required key 'n_grid'");
  try {
    f.spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid study spec: ") + e.what());
  }
  return f;
}

/// Runs the study the file asks for; `automatic` adds the oracle columns
/// whenever the penalized estimator is present and every n exceeds z^2.
inline StudyResult run_study_file(const StudyFile& f) {
  bool adaptivity = f.kind == StudyKind::adaptivity;
  if (f.kind == StudyKind::automatic) {
    const double z2 = f.spec.z() * f.spec.z();
    const bool has_ph = std::find(f.spec.estimators.begin(), f.spec.estimators.end(), Estimator::penalized_ph) !=
                        f.spec.estimators.end();
    adaptivity = has_ph && f.spec.sigma > 0.0 &&
                 std::all_of(f.spec.n_grid.begin(), f.spec.n_grid.end(),
                             [z2](std::size_t n) { return static_cast<double>(n) > z2; });
  }
  return adaptivity ? run_tau_adaptivity_study(f.spec) : run_deviation_study(f.spec);
}

inline constexpr std::string_view kCsvHeader = "estimator,n,q50,q90,q95,q99,median_tau_hat,tau_star,coverage,slope";

inline void write_study_csv(std::ostream& out, const StudyResult& r) {
  auto opt = [](const std::optional<double>& v) { return v ? detail::exact(*v) : std::string(); };
  out << kCsvHeader << '\n';
  for (const auto& row : r.rows) {
    out << to_string(row.estimator) << ',' << row.n << ',' << detail::exact(row.q50) << ','
        << detail::exact(row.q90) << ',' << detail::exact(row.q95) << ',' << detail::exact(row.q99) << ','
        << opt(row.median_tau_hat) << ',' << opt(row.tau_star) << ',' << opt(row.coverage) << ','
        << opt(row.slope) << '\n';
  }
}

inline Json study_to_json(const StudySpec& spec, const StudyResult& r) {
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  Json j;
  Json s;
  s["noise"] = spec.noise.to_string();
  s["sigma"] = spec.sigma;
  s["mu"] = spec.mu_true;
  s["n_grid"] = spec.n_grid;
  s["delta"] = spec.delta;
  s["z"] = spec.z();
  s["replications"] = spec.replications;
  s["seed"] = spec.base_seed;
  Json names = Json::array();
  for (Estimator e : spec.estimators) names.push_back(std::string(to_string(e)));
  s["estimators"] = names;
  j["spec"] = s;
  j["replications"] = r.replications;
  j["total_failures"] = r.total_failures;
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json o;
    o["estimator"] = std::string(to_string(row.estimator));
    o["n"] = row.n;
    o["q50"] = row.q50;
    o["q90"] = row.q90;
    o["q95"] = row.q95;
    o["q99"] = row.q99;
    o["median_tau_hat"] = opt(row.median_tau_hat);
    o["tau_star"] = opt(row.tau_star);
    o["coverage"] = opt(row.coverage);
    o["median_tau_ratio"] = opt(row.median_tau_ratio);
    o["slope"] = opt(row.slope);
    o["failures"] = row.failures;
    rows.push_back(o);
  }
  j["rows"] = rows;
  return j;
}

struct StudyCmdOptions {
  std::string spec_path;
  std::string out_csv;
  std::string out_json;
};

inline int cmd_study(const StudyCmdOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    std::ifstream in(opt.spec_path);
    if (!in) throw UsageError("cannot open spec file '" + opt.spec_path + "'");
    const StudyFile f = parse_study_spec(in);
    const StudyResult r = run_study_file(f);

    auto open = [](const std::string& path) {
      std::ofstream file(path);
      if (!file) throw UsageError("cannot open output file '" + path + "'");
      return file;
    };
    if (!opt.out_csv.empty()) {
      auto file = open(opt.out_csv);
      write_study_csv(file, r);
    }
    if (!opt.out_json.empty()) {
      auto file = open(opt.out_json);
      file << study_to_json(f.spec, r).dump(2) << '\n';
    }
    out << "rows " << r.rows.size() << ", replications " << r.replications << ", solver failures "
        << r.total_failures << '\n';
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace pphuber::cli
