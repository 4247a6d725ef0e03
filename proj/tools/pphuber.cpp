// pphuber: command-line front end for the penalized Pseudo-Huber mean estimator.
//
//   pphuber estimate data.txt [--delta 0.05] [--z Z] [--format text|json]
//   pphuber oracle   --noise student_t:df=3 --sigma 1 --n 2000 [--delta D | --z Z]
//   pphuber simulate --noise pareto:shape=3 --sigma 1 --mu 0 --n 500 --seed 7 --out y.txt
//   pphuber study    --spec study.cfg --out-csv rows.csv --out-json rows.json

#include <CLI11.hpp>

#include <iostream>

#include "pphuber/cli.hpp"

namespace {

void add_format_option(CLI::App* cmd, std::string& format) {
  cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
  using namespace pphuber::cli;

  CLI::App app{"Joint mean and robustification estimation with the penalized Pseudo-Huber loss"};
  app.require_subcommand(1, 1);

  EstimateOptions est;
  std::string est_format = "text";
  auto* estimate = app.add_subcommand("estimate", "Estimate mu and tau from a data file");
  estimate->add_option("input", est.input_path, "File with one value per line ('#' comments allowed)")->required();
  estimate->add_option("--delta", est.delta, "Confidence parameter delta in (0, 1)");
  estimate->add_option("--z", est.z, "Adjustment factor; overrides 5 sqrt(log(5/delta))");
  add_format_option(estimate, est_format);

  OracleCmdOptions orc;
  std::string orc_format = "text";
  auto* oracle = app.add_subcommand("oracle", "Population oracle tau* and its bracketing bounds");
  oracle->add_option("--noise", orc.noise, "Noise law, e.g. gaussian, student_t:df=3");
  oracle->add_option("--sigma", orc.sigma, "Noise scale sigma");
  oracle->add_option("--n", orc.n, "Sample size")->required();
  auto* orc_delta = oracle->add_option("--delta", orc.delta, "Confidence parameter delta in (0, 1)");
  auto* orc_z = oracle->add_option("--z", orc.z, "Adjustment factor");
  orc_delta->excludes(orc_z);
  add_format_option(oracle, orc_format);

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Draw y_i = mu + sigma * eps_i");
  simulate->add_option("--noise", sim.noise, "Noise law, e.g. gaussian, pareto:shape=2.5");
  simulate->add_option("--sigma", sim.sigma, "Noise scale sigma (>= 0)");
  simulate->add_option("--mu", sim.mu, "True mean");
  simulate->add_option("--n", sim.n, "Sample size")->required();
  simulate->add_option("--seed", sim.seed, "64-bit seed");
  simulate->add_option("--out", sim.out_path, "Output path ('-' or omitted for stdout)");

  StudyCmdOptions stu;
  auto* study = app.add_subcommand("study", "Run a Monte Carlo study from a key=value spec file");
  study->add_option("--spec", stu.spec_path, "Study spec file")->required();
  study->add_option("--out-csv", stu.out_csv, "CSV output path");
  study->add_option("--out-json", stu.out_json, "JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*estimate) {
    est.format = parse_format(est_format);
    return cmd_estimate(est, std::cout, std::cerr);
  }
  if (*oracle) {
    orc.format = parse_format(orc_format);
    return cmd_oracle(orc, std::cout, std::cerr);
  }
  if (*simulate) return cmd_simulate(sim, std::cout, std::cerr);
  return cmd_study(stu, std::cout, std::cerr);
}
