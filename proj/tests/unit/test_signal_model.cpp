#include "jde/errors.hpp"
#include "jde/signal_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace jde;

namespace {

const int kRadius = GaussianPulseModel::default_support_radius(20.0);

GaussianPulseModel width_model(double a = 2.0) {
  return GaussianPulseModel(a, {PulseAxis::Width}, 0.0, 4.0, kRadius);
}
GaussianPulseModel shift_model(double a = 2.0, double w = 4.0) {
  return GaussianPulseModel(a, {PulseAxis::Shift}, 0.0, w, kRadius);
}
GaussianPulseModel joint_model(double a = 2.0) {
  return GaussianPulseModel(a, {PulseAxis::Shift, PulseAxis::Width}, 0.0, 4.0, kRadius);
}

double sample_at(const SampledSignal& s, long xi) {
  return s.values.at(static_cast<std::size_t>(xi - s.first));
}

// brute-force sum over every integer with no truncation
double brute_inner(double a, double s1, double w1, double s2, double w2) {
  double sum = 0.0;
  for (long xi = -400; xi <= 400; ++xi) {
    const double x = static_cast<double>(xi);
    sum += a * std::exp(-(x - s1) * (x - s1) / (2 * w1 * w1)) * a *
           std::exp(-(x - s2) * (x - s2) / (2 * w2 * w2));
  }
  return sum;
}

}  // namespace

TEST(Pulse, SampleValues) {
  const auto s = signal_vector(width_model(), ParamPoint{4.0});
  EXPECT_DOUBLE_EQ(sample_at(s, 0), 2.0);
  EXPECT_NEAR(sample_at(s, 4), 2.0 * std::exp(-0.5), 1e-15);
  EXPECT_NEAR(sample_at(s, 4), 1.2131, 1e-4);

  const GaussianPulseModel m(3.0, {PulseAxis::Shift, PulseAxis::Width}, 0.0, 4.0, kRadius);
  const auto s2 = signal_vector(m, ParamPoint{0.3, 4.0});
  EXPECT_NEAR(sample_at(s2, 0), 3.0 * std::exp(-0.09 / 32.0), 1e-15);
}

TEST(Pulse, RejectsNonPositiveWidth) {
  EXPECT_THROW(width_model().validate(ParamPoint{0.0}), DomainError);
  EXPECT_THROW(width_model().validate(ParamPoint{-1.0}), DomainError);
  EXPECT_THROW(signal_vector(width_model(), ParamPoint{0.0}), DomainError);
}

TEST(Pulse, SupportCoversTail) {
  const auto m = width_model();
  EXPECT_LT(m.truncation_tail(ParamPoint{16.0}), 1e-12);
}

TEST(Snr, MatchesContinuumForm) {
  const auto m = width_model();
  const double r4 = snr(m, ParamPoint{4.0});
  EXPECT_NEAR(r4 * r4 / (16.0 * std::sqrt(std::numbers::pi)), 1.0, 1e-3);
  EXPECT_NEAR(r4 * r4, 28.359, 2e-3);
  const double r8 = snr(m, ParamPoint{8.0});
  EXPECT_NEAR(r8 * r8, 56.72, 1e-2);
  EXPECT_NEAR(r8 * r8 / (r4 * r4), 2.0, 1e-3);
  for (double w : {1.01, 1.5, 2.5, 6.0, 12.0}) {
    const double r = snr(m, ParamPoint{w});
    EXPECT_LT(std::abs(r * r / (4.0 * std::sqrt(std::numbers::pi) * w) - 1.0), 1e-3) << w;
  }
}

TEST(Snr, MatchesBruteForceSum) {
  const auto m = joint_model(1.7);
  const double r = snr(m, ParamPoint{0.37, 3.3});
  EXPECT_NEAR(r * r, brute_inner(1.7, 0.37, 3.3, 0.37, 3.3), 1e-10);
}

TEST(Correlation, UnitOnDiagonalAndBelowOneElsewhere) {
  const auto m = joint_model();
  EXPECT_DOUBLE_EQ(correlation(m, ParamPoint{0.0, 4.0}, ParamPoint{0.0, 4.0}), 1.0);
  const double c = correlation(m, ParamPoint{0.0, 4.0}, ParamPoint{8.0, 4.0});
  EXPECT_GT(c, 0.0);
  EXPECT_LT(c, 1.0);
  const double oracle = brute_inner(2.0, 0.0, 4.0, 8.0, 4.0) / brute_inner(2.0, 0.0, 4.0, 0.0, 4.0);
  EXPECT_NEAR(c, oracle, 1e-12);
}

TEST(Correlation, SchwarzBoundOnDenseGrid) {
  const auto m = joint_model();
  const ParamPoint ref{0.25, 4.0};
  int equal = 0;
  for (int i = -40; i <= 40; ++i) {
    for (int j = 0; j <= 60; ++j) {
      const ParamPoint x{0.25 + 0.1 * i, 1.0 + 0.1 * j};
      const double c = correlation(m, ref, x);
      const bool same = x == ref || (i == 0 && std::abs(x[1] - 4.0) < 1e-12);
      if (same) {
        EXPECT_NEAR(c, 1.0, 1e-14);
        ++equal;
      } else {
        ASSERT_LT(std::abs(c), 1.0) << x[0] << ' ' << x[1];
        ASSERT_LT(std::abs(c), 1.0 - 1e-9) << x[0] << ' ' << x[1];
      }
    }
  }
  EXPECT_EQ(equal, 1);
}

TEST(Correlation, Symmetric) {
  const auto m = joint_model();
  const ParamPoint a{0.3, 3.1}, b{-1.7, 5.4};
  EXPECT_NEAR(correlation(m, a, b), correlation(m, b, a), 1e-15);
}

TEST(Gradient, MatchesFiniteDifferences) {
  const auto m = joint_model();
  for (const ParamPoint x : {ParamPoint{0.2, 4.0}, ParamPoint{-0.3, 2.5}, ParamPoint{0.1, 7.3}}) {
    const auto g = m.gradient(x);
    const auto s = signal_vector(m, x);
    for (std::size_t a = 0; a < 2; ++a) {
      const double h = 1e-5 * (a == 0 ? 1.0 : x[1]);
      ParamPoint xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      const auto sp = signal_vector(m, xp);
      const auto sm = signal_vector(m, xm);
      ASSERT_EQ(sp.first, s.first);
      ASSERT_EQ(sm.first, s.first);
      ASSERT_EQ(g[a].first, s.first);
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < s.size(); ++k) {
        const double fd = (sp.values[k] - sm.values[k]) / (2 * h);
        num += (fd - g[a].values[k]) * (fd - g[a].values[k]);
        den += g[a].values[k] * g[a].values[k];
      }
      EXPECT_LT(std::sqrt(num / den), 1e-5) << "axis " << a;
    }
  }
}

TEST(Geometry, CurvatureMatchesContinuumForm) {
  const auto m = joint_model();
  const auto g = geometry(m, ParamPoint{0.0, 4.0});
  EXPECT_NEAR(g.Q(0, 0), 0.03125, 0.01 * 0.03125);
  EXPECT_NEAR(g.Q(1, 1), 0.046875, 0.01 * 0.046875);
  EXPECT_LT(std::abs(g.Q(0, 1)), 1e-6);
  const Eigen::VectorXd lg = g.log_gradient();
  EXPECT_NEAR(lg(0), 0.0, 1e-10);
  EXPECT_NEAR(lg(1), 1.0 / 8.0, 1e-3);
}

TEST(Geometry, QIsMPlusLogGradientOuterProduct) {
  const auto m = joint_model();
  for (const ParamPoint x : {ParamPoint{0.0, 4.0}, ParamPoint{0.4, 2.2}, ParamPoint{-0.2, 9.0}}) {
    const auto g = geometry(m, x);
    const Eigen::VectorXd lg = g.log_gradient();
    const Eigen::MatrixXd diff = g.Q - g.M - lg * lg.transpose();
    EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-14 * g.Q.norm());
  }
}

TEST(Geometry, MIsCurvatureOfCorrelation) {
  // gradient covariance of the normalized output equals -d2 sigma(x', x)/dx'^2 at x' = x
  const auto m = joint_model();
  const ParamPoint x{0.2, 4.5};
  const auto g = geometry(m, x);
  const double h = 1e-3;
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      auto at = [&](double di, double dj) {
        ParamPoint p = x;
        p[i] += di;
        p[j] += dj;
        return correlation(m, p, x);
      };
      const double d2 = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
      EXPECT_NEAR(-d2, g.M(i, j), 1e-4 * g.M.norm()) << i << j;
    }
  }
}

TEST(Geometry, WidthModelScalars) {
  const auto m = width_model();
  const auto g = geometry(m, ParamPoint{4.0});
  EXPECT_NEAR(g.gamma, 0.5, 0.01);
  EXPECT_NEAR(g.zeta, 1.0 / 3.0, 0.01);
  EXPECT_NEAR(g.zeta, g.gamma / (1 + g.gamma), 1e-14);
  EXPECT_NEAR(g.V, 2.0 * std::sqrt(2.0 * std::numbers::pi / 3.0) * 4.0, 0.01 * 11.58);
  EXPECT_NEAR(g.V, 11.58, 0.01 * 11.58);
  EXPECT_NEAR(g.V, std::pow((g.Q / (2 * std::numbers::pi)).determinant(), -0.5), 1e-12 * g.V);
}

TEST(Geometry, ZetaIdentityAcrossDomain) {
  const auto m = joint_model();
  for (double w = 1.2; w < 12.0; w += 0.7) {
    const auto g = geometry(m, ParamPoint{0.1, w});
    const Eigen::VectorXd lg = g.log_gradient();
    EXPECT_NEAR(g.gamma, lg.dot(g.M.ldlt().solve(lg)), 1e-12 * (1 + g.gamma));
    EXPECT_NEAR(g.zeta, g.gamma / (1 + g.gamma), 1e-14);
  }
}

TEST(Geometry, ShiftModelIsHomogeneous) {
  const auto m = shift_model();
  const auto a = geometry(m, ParamPoint{0.0});
  const auto b = geometry(m, ParamPoint{3.6});
  EXPECT_NEAR(a.r, b.r, 1e-12);
  EXPECT_NEAR(a.gamma, 0.0, 1e-12);
  EXPECT_NEAR(a.V, b.V, 1e-10);
}
