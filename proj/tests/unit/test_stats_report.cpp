#include <gtest/gtest.h>

#include <cmath>

#include "cdlab/errors.hpp"
#include "cdlab/report.hpp"
#include "cdlab/stats.hpp"

using namespace cdlab;

TEST(RateFit, ExactPowerLaw) {
  std::vector<std::pair<double, double>> pts;
  for (double n : {100.0, 1000.0, 10000.0, 100000.0}) pts.emplace_back(n, 3.0 / n);
  const auto fit = rate_fit(pts);
  EXPECT_NEAR(fit.slope, -1.0, 1e-12);
  EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-10);
  EXPECT_NEAR(fit.slope_stderr, 0.0, 1e-7);
}

TEST(RateFit, HalfPowerLaw) {
  std::vector<std::pair<double, double>> pts;
  for (double n : {4.0, 16.0, 64.0}) pts.emplace_back(n, 1.0 / std::sqrt(n));
  EXPECT_NEAR(rate_fit(pts).slope, -0.5, 1e-12);
}

TEST(RateFit, NoisySlopeWithinStandardErrors) {
  Rng rng(1);
  int covered = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    std::vector<std::pair<double, double>> pts;
    for (int e = 6; e <= 14; ++e) {
      const double n = std::ldexp(1.0, e);
      pts.emplace_back(n, 2.0 * std::pow(n, -0.8) * std::exp(0.1 * rng.normal()));
    }
    const auto fit = rate_fit(pts);
    if (std::abs(fit.slope + 0.8) <= 3 * fit.slope_stderr) ++covered;
  }
  EXPECT_GE(covered, 190);
}

TEST(RateFit, RejectsDegenerateInput) {
  EXPECT_THROW(rate_fit({{1.0, 1.0}, {2.0, 0.5}}), InvalidInput);
  EXPECT_THROW(rate_fit({{1.0, 1.0}, {2.0, 0.0}, {4.0, 0.25}}), InvalidInput);
}

TEST(VarianceRatio, Examples) {
  EXPECT_DOUBLE_EQ(variance_ratio(100, 0.02, Matrix::Identity(2, 2)), 1.0);
  EXPECT_DOUBLE_EQ(variance_ratio(100, 0.08, Matrix::Identity(2, 2)), 4.0);
  Matrix F(2, 2);
  F << 2, 0, 0, 4;
  EXPECT_DOUBLE_EQ(inverse_trace(F), 0.75);
  Matrix singular(2, 2);
  singular << 1, 1, 1, 1;
  EXPECT_THROW(inverse_trace(singular), LinearAlgebraError);
  EXPECT_THROW(variance_ratio(10, 0.1, singular), LinearAlgebraError);
}

TEST(MeanAndStderr, Examples) {
  const auto e = mean_and_stderr({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_NEAR(e.std_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_EQ(e.count, 4u);
  EXPECT_EQ(mean_and_stderr({7.0}).std_error, 0.0);
}

namespace {

ExperimentReport sample_report() {
  ExperimentReport r;
  r.config.root_seed = 42;
  r.config.replications = 10;
  r.estimator = "online";
  for (std::size_t n : {64u, 256u}) {
    SizeResult s;
    s.n = n;
    s.m = 3;
    s.C = 1.0 / 3.0;
    s.mse_last = {0.1 / static_cast<double>(n), 1e-4, 10};
    s.mse_average = {0.05 / static_cast<double>(n), 2e-5, 10};
    s.projection_hits = {0.0, 0.0, 10};
    s.variance_ratio_last = 1.2345678901234567;
    s.bound = OnlineBoundTerms{1e10, 0.5, 1e10 + 0.5};
    r.sizes.push_back(s);
  }
  return r;
}

}  // namespace

TEST(Csv, EmptyReportIsHeaderOnly) {
  const std::string csv = format_csv(report_rows(ExperimentReport{}));
  EXPECT_EQ(csv, std::string(kCsvHeader) + "\n");
  EXPECT_TRUE(parse_csv(csv).empty());
}

TEST(Csv, RoundTripIsExact) {
  const auto rows = report_rows(sample_report());
  ASSERT_FALSE(rows.empty());
  const auto back = parse_csv(format_csv(rows));
  EXPECT_EQ(back, rows);
  EXPECT_EQ(format_csv(back), format_csv(rows));
}

TEST(Csv, RowsCarryEstimatorAndSeed) {
  const auto rows = report_rows(sample_report());
  bool saw_bound = false, saw_last = false;
  for (const auto& r : rows) {
    EXPECT_EQ(r.seed, 42u);
    if (r.estimator == "bound" && r.stat == "online_bound") saw_bound = true;
    if (r.estimator == "online/last" && r.stat == "mse") saw_last = true;
  }
  EXPECT_TRUE(saw_bound);
  EXPECT_TRUE(saw_last);
}

TEST(Csv, RejectsWrongHeader) { EXPECT_THROW(parse_csv("a,b,c\n"), Error); }

TEST(SummaryJson, HasSchemaVersionAndSizes) {
  const auto j = summary_json(sample_report());
  EXPECT_EQ(j.at("schema_version").get<std::string>(), kSchemaVersion);
  EXPECT_EQ(j.at("sizes").size(), 2u);
}

TEST(Svg, RendersPlot) {
  const std::string svg = render_svg(sample_report());
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
