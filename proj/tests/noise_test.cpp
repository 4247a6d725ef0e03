#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "pphuber/noise.hpp"

using namespace pphuber;

TEST(Standardize, StudentThreeScale) {
  const NoiseModel t = parse_noise("student_t:df=3");
  EXPECT_EQ(t.raw_mean(), 0.0);
  EXPECT_NEAR(1.0 / t.raw_sd(), std::sqrt(1.0 / 3.0), 1e-15);
}

TEST(Standardize, ParetoThreeMoments) {
  const NoiseModel p = parse_noise("pareto:shape=3");
  EXPECT_NEAR(p.raw_mean(), 1.5, 1e-15);
  EXPECT_NEAR(p.raw_sd(), std::sqrt(0.75), 1e-15);
  EXPECT_NEAR(p.support().first, (1.0 - 1.5) / std::sqrt(0.75), 1e-15);
}

TEST(Standardize, LogNormalMoments) {
  const NoiseModel l = parse_noise("lognormal:meanlog=0.2,sdlog=0.5");
  const double m = std::exp(0.2 + 0.125);
  EXPECT_NEAR(l.raw_mean(), m, 1e-14);
  EXPECT_NEAR(l.raw_sd(), m * std::sqrt(std::exp(0.25) - 1.0), 1e-14);
}

TEST(Standardize, ContaminatedGaussianScale) {
  const NoiseModel c = parse_noise("contaminated_gaussian:eps=0.1,scale=10");
  EXPECT_NEAR(c.raw_sd(), std::sqrt(0.9 + 10.0), 1e-14);
}

TEST(Standardize, RejectsInfiniteVariance) {
  for (const char* spec : {"student_t:df=2", "student_t:df=1.5", "pareto:shape=2", "pareto:shape=1.2"}) {
    try {
      parse_noise(spec);
      ADD_FAILURE() << spec;
    } catch (const std::invalid_argument& e) {
      EXPECT_NE(std::string(e.what()).find("infinite variance outside model class"), std::string::npos);
    }
  }
  EXPECT_THROW(parse_noise("lognormal:sdlog=0"), std::invalid_argument);
  EXPECT_THROW(parse_noise("contaminated_gaussian:eps=1"), std::invalid_argument);
  EXPECT_THROW(parse_noise("contaminated_gaussian:scale=0.5"), std::invalid_argument);
}

TEST(Parse, RejectsUnknownNamesAndKeys) {
  EXPECT_THROW(parse_noise("cauchy"), std::invalid_argument);
  EXPECT_THROW(parse_noise("student_t:nu=3"), std::invalid_argument);
  EXPECT_THROW(parse_noise("student_t:df=abc"), std::invalid_argument);
  EXPECT_THROW(parse_noise("student_t:df"), std::invalid_argument);
  EXPECT_THROW(parse_noise("gaussian:df=3"), std::invalid_argument);
}

TEST(Parse, RoundTripsThroughString) {
  for (const char* spec : {"gaussian", "student_t:df=3", "pareto:shape=2.5", "lognormal:meanlog=0,sdlog=1",
                           "two_point", "contaminated_gaussian:eps=0.1,scale=10"}) {
    EXPECT_EQ(parse_noise(spec).to_string(), spec);
  }
}

TEST(Density, IntegratesToOneOnGrid) {
  for (const char* spec : {"gaussian", "student_t:df=5", "contaminated_gaussian:eps=0.1,scale=3"}) {
    const NoiseModel m = parse_noise(spec);
    double acc = 0.0;
    const double h = 1e-3;
    for (double e = -200.0; e < 200.0; e += h) acc += m.density(e + h / 2.0) * h;
    EXPECT_NEAR(acc, 1.0, 2e-3) << spec;
  }
}

TEST(Sampling, DeterministicInSeed) {
  const NoiseModel m = parse_noise("pareto:shape=3");
  const Sample a = sample(m, 2.0, 100, 1.0, 42);
  const Sample b = sample(m, 2.0, 100, 1.0, 42);
  const Sample c = sample(m, 2.0, 100, 1.0, 43);
  EXPECT_EQ(a.vector(), b.vector());
  EXPECT_NE(a.vector(), c.vector());
}

TEST(Sampling, ZeroSigmaGivesConstant) {
  const Sample y = sample(parse_noise("student_t:df=3"), 0.0, 50, 3.25, 1);
  for (double v : y) EXPECT_EQ(v, 3.25);
}

TEST(Sampling, RejectsBadArguments) {
  const NoiseModel g = parse_noise("gaussian");
  EXPECT_THROW(sample(g, -1.0, 10, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(sample(g, 1.0, 0, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(sample(g, 1.0, 10, NAN, 1), std::invalid_argument);
}

TEST(Sampling, TwoPointValuesExact) {
  const Sample y = sample(parse_noise("two_point"), 1.0, 1000, 0.0, 5);
  std::set<double> seen(y.begin(), y.end());
  EXPECT_EQ(seen, (std::set<double>{-1.0, 1.0}));
}

TEST(Sampling, StandardizedMomentsMatch) {
  // 1e6 draws: mean within 5/sqrt(n) and variance within a generous band for
  // heavier tails, where the variance estimate converges slowly.
  constexpr std::size_t n = 1'000'000;
  const struct {
    const char* spec;
    double var_tol;
  } cases[] = {{"gaussian", 0.01}, {"student_t:df=5", 0.05}, {"pareto:shape=4.5", 0.1},
               {"lognormal:sdlog=0.5", 0.02}, {"two_point", 0.01}, {"contaminated_gaussian:eps=0.1,scale=5", 0.03}};
  for (const auto& c : cases) {
    const Sample y = sample(parse_noise(c.spec), 1.0, n, 0.0, 2024);
    double s = 0.0;
    double s2 = 0.0;
    for (double v : y) {
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    EXPECT_NEAR(mean, 0.0, 5.0 / std::sqrt(static_cast<double>(n))) << c.spec;
    EXPECT_NEAR(s2 / n - mean * mean, 1.0, c.var_tol) << c.spec;
  }
}

TEST(Seeds, DeriveSeedSeparatesStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base = 0; base < 20; ++base) {
    for (std::uint64_t s = 0; s < 50; ++s) seen.insert(derive_seed(base, s));
  }
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}
