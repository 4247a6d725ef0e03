#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "pphuber/harness.hpp"

using namespace pphuber;

namespace {

StudySpec small_spec(const char* law) {
  StudySpec s;
  s.noise = parse_noise(law);
  s.n_grid = {150, 400};
  s.replications = 40;
  s.base_seed = 17;
  s.estimators = {Estimator::penalized_ph, Estimator::sample_mean, Estimator::median_of_means,
                  Estimator::fixed_tau_ph};
  s.threads = 2;
  return s;
}

void expect_same_rows(const StudyResult& a, const StudyResult& b) {
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].q50, b.rows[i].q50);
    EXPECT_EQ(a.rows[i].q90, b.rows[i].q90);
    EXPECT_EQ(a.rows[i].q95, b.rows[i].q95);
    EXPECT_EQ(a.rows[i].q99, b.rows[i].q99);
    EXPECT_EQ(a.rows[i].median_tau_hat, b.rows[i].median_tau_hat);
  }
}

}  // namespace

TEST(Baselines, SampleMean) { EXPECT_DOUBLE_EQ(sample_mean(Sample{1.0, 2.0, 6.0}), 3.0); }

TEST(Baselines, MedianOfMeansWithOutlier) {
  // Every split of {0, 0, 0, 100} into two pairs gives block means {0, 50}.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    EXPECT_DOUBLE_EQ(median_of_means(Sample{0.0, 0.0, 0.0, 100.0}, 2, seed), 25.0);
  }
  EXPECT_DOUBLE_EQ(median_of_means(Sample{0.0, 0.0, 0.0, 100.0}, 1), 25.0);
  EXPECT_DOUBLE_EQ(median_of_means(Sample{0.0, 0.0, 0.0, 100.0}, 4), 0.0);
}

TEST(Baselines, BlockSizesCoverSample) {
  const auto sizes = block_sizes(10, 3);
  EXPECT_EQ(sizes, (std::vector<std::size_t>{4, 3, 3}));
  EXPECT_EQ(default_mom_blocks(0.05), 3u);
  EXPECT_EQ(default_mom_blocks(0.5), 1u);
}

TEST(Baselines, FixedTauUsesKnownScale) {
  const Sample y = sample(parse_noise("student_t:df=3"), 2.0, 500, 1.0, 3);
  const EstimatorConfig c;
  const double tau = 2.0 * std::sqrt(500.0) / c.z();
  EXPECT_EQ(fixed_tau_ph(y, 2.0, c), fit_fixed_tau(y, tau, c));
  EXPECT_THROW(fixed_tau_ph(y, 0.0, c), std::invalid_argument);
}

TEST(Estimators, NamesRoundTrip) {
  for (Estimator e : {Estimator::penalized_ph, Estimator::sample_mean, Estimator::median_of_means,
                      Estimator::fixed_tau_ph}) {
    EXPECT_EQ(parse_estimator(to_string(e)), e);
  }
  EXPECT_THROW(parse_estimator("trimmed_mean"), std::invalid_argument);
}

TEST(Study, SingleReplicationQuantilesCoincide) {
  StudySpec s = small_spec("gaussian");
  s.replications = 1;
  const StudyResult r = run_deviation_study(s);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.q50, row.q90);
    EXPECT_EQ(row.q90, row.q99);
  }
}

TEST(Study, QuantilesOrderedAndRowsComplete) {
  const StudyResult r = run_deviation_study(small_spec("pareto:shape=3"));
  EXPECT_EQ(r.rows.size(), 8u);
  for (const auto& row : r.rows) {
    EXPECT_LE(row.q50, row.q90);
    EXPECT_LE(row.q90, row.q95);
    EXPECT_LE(row.q95, row.q99);
    EXPECT_GE(row.q50, 0.0);
  }
  EXPECT_NO_THROW(r.row(Estimator::median_of_means, 400));
  EXPECT_THROW(r.row(Estimator::median_of_means, 999), std::out_of_range);
}

TEST(Study, IndependentOfThreadCount) {
  StudySpec s = small_spec("student_t:df=3");
  s.threads = 1;
  const StudyResult one = run_deviation_study(s);
  s.threads = 4;
  const StudyResult four = run_deviation_study(s);
  expect_same_rows(one, four);
}

TEST(Study, SeedChangesResults) {
  StudySpec s = small_spec("gaussian");
  const StudyResult a = run_deviation_study(s);
  s.base_seed = 18;
  const StudyResult b = run_deviation_study(s);
  EXPECT_NE(a.rows.front().q50, b.rows.front().q50);
}

TEST(Study, ZeroSigmaGivesZeroDeviation) {
  StudySpec s = small_spec("gaussian");
  s.sigma = 0.0;
  s.mu_true = 4.0;
  for (const auto& row : run_deviation_study(s).rows) EXPECT_EQ(row.q99, 0.0);
}

TEST(Study, RejectsInvalidSpecs) {
  StudySpec s = small_spec("gaussian");
  s.replications = 0;
  EXPECT_THROW(run_deviation_study(s), std::invalid_argument);
  s = small_spec("gaussian");
  s.n_grid.clear();
  EXPECT_THROW(run_deviation_study(s), std::invalid_argument);
  s = small_spec("gaussian");
  s.estimators.clear();
  EXPECT_THROW(run_deviation_study(s), std::invalid_argument);
}

TEST(Adaptivity, CoverageAndOracleFilled) {
  StudySpec s = small_spec("two_point");
  s.estimators = {Estimator::sample_mean};
  s.n_grid = {300, 1200};
  const StudyResult r = run_tau_adaptivity_study(s);
  const double z = s.z();
  for (std::size_t n : s.n_grid) {
    const StudyRow& row = r.row(Estimator::penalized_ph, n);
    ASSERT_TRUE(row.coverage && row.tau_star && row.slope && row.median_tau_ratio);
    EXPECT_GE(*row.coverage, 0.0);
    EXPECT_LE(*row.coverage, 1.0);
    const double a = 1.0 - z * z / static_cast<double>(n);
    EXPECT_NEAR(*row.tau_star, a / std::sqrt(1.0 - a * a), 1e-8);
  }
}

TEST(Adaptivity, TauHatScalesWithSigma) {
  StudySpec s = small_spec("student_t:df=3");
  s.n_grid = {1000};
  const double base = *run_tau_adaptivity_study(s).row(Estimator::penalized_ph, 1000).median_tau_hat;
  s.sigma = 2.0;
  const double doubled = *run_tau_adaptivity_study(s).row(Estimator::penalized_ph, 1000).median_tau_hat;
  EXPECT_GE(doubled / base, 1.8);
  EXPECT_LE(doubled / base, 2.2);
}

TEST(Adaptivity, RequiresSampleSizeAboveZSquared) {
  StudySpec s = small_spec("gaussian");
  s.n_grid = {100};
  EXPECT_THROW(run_tau_adaptivity_study(s), std::domain_error);
}

TEST(Stats, QuantileTypeSeven) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
  EXPECT_DOUBLE_EQ(stats::quantile_sorted(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(stats::quantile_sorted(v, 0.9), 4.6);
  EXPECT_DOUBLE_EQ(stats::quantile_sorted(v, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(stats::median(std::vector<double>{4.0, 1.0, 3.0, 2.0}), 2.5);
}
