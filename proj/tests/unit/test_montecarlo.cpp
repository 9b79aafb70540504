#include "jde/errors.hpp"
#include "jde/montecarlo.hpp"
#include "jde/prediction.hpp"
#include "jde/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace jde;

TEST(Rng, CounterStreamsAreReproducibleAndDistinct) {
  CounterRng a(1, 2, 3), b(1, 2, 3), c(1, 2, 4), d(1, 3, 3), e(2, 2, 3);
  const auto va = a();
  EXPECT_EQ(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(va, d());
  EXPECT_NE(va, e());
}

TEST(Rng, UniformRange) {
  CounterRng r(9, 0, 0);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  EXPECT_LT(lo, 1e-3);
  EXPECT_GT(hi, 1 - 1e-3);
}

TEST(Rng, NormalMoments) {
  NormalSource src(42, 0, 0);
  const int n = 1000000;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  int tail = 0;
  for (int i = 0; i < n; ++i) {
    const double x = src();
    s1 += x;
    s2 += x * x;
    s3 += x * x * x;
    s4 += x * x * x * x;
    if (x > 3.0) ++tail;
  }
  const double m = s1 / n, v = s2 / n - m * m;
  EXPECT_NEAR(m, 0.0, 5 * std::sqrt(1.0 / n));
  EXPECT_NEAR(v, 1.0, 5 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s3 / n, 0.0, 5 * std::sqrt(15.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 5 * std::sqrt(96.0 / n));
  const double p = gaussian_tail(3.0);
  EXPECT_NEAR(tail / double(n), p, 5 * std::sqrt(p / n));
}

TEST(Histogram, InteriorMassIsConserved) {
  std::vector<double> centers;
  std::vector<std::uint64_t> counts(400, 0);
  for (int i = 0; i < 400; ++i) centers.push_back(0.01 * i);
  counts[150] = 7;
  counts[200] = 30;
  counts[233] = 3;
  const auto h = make_density_histogram(centers, counts, 0.01, 50, 1000);
  EXPECT_EQ(h.total(), 40u);
  EXPECT_NEAR(h.integral(), 40.0 / 1000.0, 1e-12);
  EXPECT_EQ(h.window_counts[200], 40u);
  EXPECT_NEAR(h.density[200], 40.0 / (101 * 0.01 * 1000), 1e-15);
  EXPECT_NEAR(h.density_se(200), std::sqrt(40.0) / (101 * 0.01 * 1000), 1e-15);
}

TEST(Histogram, NoSmoothingAndEdgeNormalization) {
  const std::vector<double> centers{0.0, 0.5, 1.0, 1.5};
  const auto h = make_density_histogram(centers, {4, 0, 2, 0}, 0.5, 0, 10);
  EXPECT_NEAR(h.density[0], 4.0 / (0.5 * 10), 1e-15);
  EXPECT_NEAR(h.density[2], 2.0 / (0.5 * 10), 1e-15);
  const auto e = make_density_histogram(centers, {6, 0, 0, 0}, 0.5, 1, 10);
  EXPECT_NEAR(e.density[0], 6.0 / (1.0 * 10), 1e-15);  // truncated window of two bins
  EXPECT_THROW(make_density_histogram(centers, {1, 2}, 0.5, 0, 10), ConfigError);
  EXPECT_THROW(make_density_histogram(centers, {1, 2, 3, 4}, 0.5, 0, 0), ConfigError);
}

TEST(Wilson, Interval) {
  const auto [lo, hi] = wilson_interval(99, 100);
  EXPECT_LT(lo, 0.99);
  EXPECT_GT(hi, 0.99);
  EXPECT_NEAR(lo, 0.9455, 1e-3);
  const auto [l0, h0] = wilson_interval(0, 50);
  EXPECT_EQ(l0, 0.0);
  EXPECT_GT(h0, 0.0);
}

TEST(ExperimentKind, Names) {
  for (auto k : {ExperimentKind::FaSigma, ExperimentKind::FaShift, ExperimentKind::Accuracy,
                 ExperimentKind::OracleAgreement}) {
    EXPECT_EQ(experiment_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(experiment_kind_from_string("nope"), ConfigError);
}

namespace {

FaSigmaConfig small_sigma(std::uint64_t n) {
  FaSigmaConfig c;
  c.lambda0 = {3.0, 4.0};
  c.n_trials = n;
  return c;
}

}  // namespace

TEST(FaSigma, DeterministicAcrossWorkerCounts) {
  const auto c = small_sigma(150000);
  const auto a = run_fa_sigma(c, RunOptions{11, 1});
  const auto b = run_fa_sigma(c, RunOptions{11, 3});
  ASSERT_EQ(a.levels.size(), 2u);
  EXPECT_EQ(a.refined_trials, b.refined_trials);
  EXPECT_EQ(a.boundary_maxima, b.boundary_maxima);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(a.levels[l].count, b.levels[l].count);
    EXPECT_EQ(a.levels[l].histogram.counts, b.levels[l].histogram.counts);
  }
  EXPECT_GT(a.levels[0].count, a.levels[1].count);
  EXPECT_GT(a.levels[1].count, 0u);
  const auto other = run_fa_sigma(c, RunOptions{12, 1});
  EXPECT_NE(other.levels[0].histogram.counts, a.levels[0].histogram.counts);
}

TEST(FaSigma, RateNearPredictionAtLowThreshold) {
  // A loose statistical check at a threshold low enough to need few trials.
  auto c = small_sigma(200000);
  c.lambda0 = {4.0};
  const auto r = run_fa_sigma(c, RunOptions{5, 1});
  const GaussianPulseModel m(2.0, {PulseAxis::Width}, 0.0, 4.0,
                             GaussianPulseModel::default_support_radius(16.2));
  const double pred = integrated_fa(m, PriorCostSpec::from_lambda0(4.0, ParamPoint{4.0}), 1.0, 16.0,
                                    FaFormula::General);
  EXPECT_NEAR(r.levels[0].rate / pred, 1.0, 0.15);
  EXPECT_NEAR(r.levels[0].histogram.integral(), r.levels[0].rate, 0.05 * r.levels[0].rate);
}

TEST(FaSigma, ConfigValidation) {
  auto c = small_sigma(0);
  EXPECT_THROW(run_fa_sigma(c, RunOptions{}), ConfigError);
  c = small_sigma(10);
  c.axis.lo = 0.0;
  EXPECT_THROW(run_fa_sigma(c, RunOptions{}), ConfigError);
}

TEST(FaShift, DeterministicAndSymmetric) {
  FaShiftConfig c;
  c.amplitudes = {1.3, 1.6};
  c.lambda0 = 4.0;
  c.total_samples = 3'000'000;
  const auto a = run_fa_shift(c, RunOptions{3, 1});
  const auto b = run_fa_shift(c, RunOptions{3, 2});
  ASSERT_EQ(a.points.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a.points[i].count, b.points[i].count);
    EXPECT_EQ(a.points[i].count, a.points[i].left + a.points[i].right);
    EXPECT_GT(a.points[i].count, 100u);
    EXPECT_GT(a.points[i].predicted, 0.0);
    EXPECT_NEAR(a.points[i].r, a.points[i].amplitude * a.unit_snr, 1e-12);
  }
  EXPECT_GE(a.usable_samples, c.total_samples);
  const double l = static_cast<double>(a.points[0].left), r = static_cast<double>(a.points[0].right);
  EXPECT_LT(std::abs(l - r), 5 * std::sqrt(l + r));
}

TEST(FaShift, ConfigValidation) {
  FaShiftConfig c;
  EXPECT_THROW(run_fa_shift(c, RunOptions{}), ConfigError);
  c.amplitudes = {1.0};
  c.realization_length = 16;
  EXPECT_THROW(run_fa_shift(c, RunOptions{}), ConfigError);
}

TEST(Accuracy, SmallRunTracksBound) {
  AccuracyConfig c;
  const GaussianPulseModel unit(1.0, {PulseAxis::Shift}, 0.0, 4.0, GaussianPulseModel::default_support_radius(8));
  const double r1 = snr(unit, ParamPoint{0.0});
  c.amplitudes = {16.0 / r1};
  c.n_trials = 400;
  const auto a = run_accuracy(c, RunOptions{2, 1});
  const auto b = run_accuracy(c, RunOptions{2, 2});
  ASSERT_EQ(a.points.size(), 1u);
  const auto& p = a.points[0];
  EXPECT_EQ(p.covariance, b.points[0].covariance);
  EXPECT_NEAR(p.r, 16.0, 1e-9);
  // variance ratio of 400 samples: sd about 0.07
  EXPECT_NEAR(p.covariance(0, 0) / p.bound(0, 0), 1.0, 0.25);
  EXPECT_NEAR(p.covariance(1, 1) / p.bound(1, 1), 1.0, 0.25);
  EXPECT_LT(std::abs(p.correlation), 0.2);
  EXPECT_EQ(p.boundary, 0u);
}

TEST(Oracle, SmallRunAgreesAndReplays) {
  OracleConfig c;
  c.n_trials = 120;
  const auto a = run_oracle_agreement(c, RunOptions{4, 1});
  const auto b = run_oracle_agreement(c, RunOptions{4, 2});
  EXPECT_EQ(a.agree, b.agree);
  EXPECT_EQ(a.compared, b.compared);
  EXPECT_EQ(a.fraction, b.fraction);
  EXPECT_GT(a.signal_compared, 30u);
  EXPECT_GE(a.fraction, 0.97);
  EXPECT_LE(a.ci_lo, a.fraction);
  EXPECT_GE(a.ci_hi, a.fraction);
}

TEST(Oracle, AlwaysAcceptDiagnosticIsReported) {
  OracleConfig c;
  c.n_trials = 40;
  c.lambda0 = {-50.0};
  const auto r = run_oracle_agreement(c, RunOptions{4, 1});
  EXPECT_GT(r.compared, 0u);
  EXPECT_GE(r.both_accept, 0u);
  EXPECT_LE(r.both_accept, r.compared);
}
