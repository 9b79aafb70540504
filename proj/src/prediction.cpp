#include "jde/prediction.hpp"

#include "jde/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace jde {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

double log_gaussian_tail(double z) {
  if (z < 30.0) return std::log(0.5 * std::erfc(z * kInvSqrt2));
  // asymptotic series; erfc underflows long before this loses accuracy
  const double iz2 = 1.0 / (z * z);
  return -0.5 * z * z - std::log(z * std::sqrt(2.0 * std::numbers::pi)) +
         std::log1p(-iz2 + 3.0 * iz2 * iz2 - 15.0 * iz2 * iz2 * iz2);
}

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;

template <class F>
double adaptive(F f, double a, double b, double rel_tol) {
  double err = 0.0;
  return Kronrod::integrate(f, a, b, 20, rel_tol, &err);
}

}  // namespace

double gaussian_tail(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

LocalGeometry LocalGeometry::from(const ModelGeometry& g) {
  return {g.dimension(), g.r, g.V, g.gamma, g.zeta};
}

double detection_probability(std::size_t d, double r, double lambda_r) {
  const double dd = static_cast<double>(d);
  const double rt = std::sqrt(r * r + 0.5 * dd);
  const double z = (lambda_r - 0.25 * dd) / rt - 0.5 * rt;
  return gaussian_tail(z);
}

double detection_probability(const SignalModel& model, const PriorCostSpec& priors,
                             const ParamPoint& x) {
  const ModelGeometry g = geometry(model, x);
  return detection_probability(model.dimension(), g.r, ThresholdRule(model, priors)(x, g));
}

double fa_density_general(const LocalGeometry& g, double lambda_r) {
  if (!(g.V > 0.0)) throw DomainError("false-alarm density needs a positive volume scale");
  if (!(g.r > 0.0)) return 0.0;
  const double d = static_cast<double>(g.d);
  const double k = std::sqrt(1.0 + g.gamma) / g.r;
  const double shift = 0.5 * (g.gamma - 1.0) / (g.gamma + 1.0) * g.r * g.r;

  auto log_f = [&](double u) {
    const double z = k * (lambda_r - (shift + 0.5 * u * u));
    const double poly = g.d == 1 ? 0.0 : (d - 1.0) * std::log(u);
    return log_gaussian_tail(z) - u * u + poly;
  };

  // Locate the integrand peak, then stop where even G = 1 leaves it 1e-16 below.
  const double step = 0.01;
  double peak = -std::numeric_limits<double>::infinity();
  double u_peak = 0.0;
  double u_end = step;
  for (double u = (g.d == 1 ? 0.0 : step);; u += step) {
    const double lf = log_f(u);
    if (lf > peak) {
      peak = lf;
      u_peak = u;
    }
    const double bound = -u * u + (g.d == 1 ? 0.0 : (d - 1.0) * std::log(u));
    if (u > u_peak && bound < peak - 37.0) {
      u_end = u;
      break;
    }
  }

  auto f = [&](double u) { return u <= 0.0 && g.d > 1 ? 0.0 : std::exp(log_f(u) - peak); };
  double integral = 0.0;
  if (u_peak > 0.0) integral += adaptive(f, 0.0, u_peak, 1e-12);
  integral += adaptive(f, u_peak, u_end, 1e-12);
  if (!(integral > 0.0)) return 0.0;

  const double log_pref = std::log(2.0) - 0.5 * d * std::log(2.0) - std::lgamma(0.5 * d) +
                          d * std::log(g.r) - std::log(g.V) - 0.5 * g.zeta * g.r * g.r;
  return std::exp(log_pref + peak + std::log(integral));
}

double fa_density_homogeneous(const LocalGeometry& g, double lambda_r) {
  if (!(g.V > 0.0)) throw DomainError("false-alarm density needs a positive volume scale");
  if (!(g.r > 0.0)) return 0.0;
  const double d = static_cast<double>(g.d);
  const double rt = std::sqrt(g.r * g.r + 0.5 * d);
  const double z = (lambda_r - 0.25 * d) / rt + 0.5 * rt;
  return std::exp(d * std::log(g.r) - 0.25 * d - std::log(g.V) + log_gaussian_tail(z));
}

double fa_density(const LocalGeometry& g, double lambda_r, FaFormula formula) {
  return formula == FaFormula::General ? fa_density_general(g, lambda_r)
                                       : fa_density_homogeneous(g, lambda_r);
}

const char* to_string(FaFormula f) {
  return f == FaFormula::General ? "general" : "homogeneous";
}

double fa_density_general(const SignalModel& model, const PriorCostSpec& priors,
                          const ParamPoint& x) {
  const ModelGeometry g = geometry(model, x);
  return fa_density_general(LocalGeometry::from(g), ThresholdRule(model, priors)(x, g));
}

double fa_density_homogeneous(const SignalModel& model, const PriorCostSpec& priors,
                              const ParamPoint& x) {
  const ModelGeometry g = geometry(model, x);
  return fa_density_homogeneous(LocalGeometry::from(g), ThresholdRule(model, priors)(x, g));
}

double integrated_fa(const SignalModel& model, const PriorCostSpec& priors, double lo, double hi,
                     FaFormula formula, double rel_tol) {
  if (model.dimension() != 1) throw DomainError("integrated false-alarm rate needs a 1-D model");
  if (!(hi > lo)) throw ConfigError("integration domain must have hi > lo");
  const ThresholdRule rule(model, priors);
  auto density = [&](double v) {
    const ParamPoint x{v};
    const ModelGeometry g = geometry(model, x);
    return fa_density(LocalGeometry::from(g), rule(x, g), formula);
  };
  // fixed panels keep the sharply peaked integrand resolved at every threshold
  constexpr int kPanels = 32;
  const double h = (hi - lo) / kPanels;
  double total = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    const double a = lo + h * i;
    const double b = i + 1 == kPanels ? hi : a + h;
    total += adaptive(density, a, b, rel_tol);
  }
  return total;
}

Eigen::MatrixXd cramer_rao_cov(const SignalModel& model, const ParamPoint& x_s) {
  const ModelGeometry g = geometry(model, x_s);
  const Eigen::MatrixXd cov = g.Q.inverse() / (g.r * g.r);
  return 0.5 * (cov + cov.transpose());
}

double expected_peak_llr(double r, std::size_t d) {
  return 0.5 * r * r + 0.5 * static_cast<double>(d);
}

double expected_peak_llr(const SignalModel& model, const ParamPoint& x_s) {
  return expected_peak_llr(snr(model, x_s), model.dimension());
}

DetectionCurve detection_curve(const SignalModel& model, const PriorCostSpec& priors,
                               std::span<const ParamPoint> points) {
  const ThresholdRule rule(model, priors);
  DetectionCurve c;
  for (const auto& x : points) {
    const ModelGeometry g = geometry(model, x);
    const double lr = rule(x, g);
    c.points.push_back(x);
    c.r.push_back(g.r);
    c.lambda_r.push_back(lr);
    c.p_d.push_back(detection_probability(model.dimension(), g.r, lr));
  }
  return c;
}

FalseAlarmCurve fa_curve(const SignalModel& model, const PriorCostSpec& priors,
                         std::span<const ParamPoint> points, FaFormula formula) {
  const ThresholdRule rule(model, priors);
  FalseAlarmCurve c;
  c.formula = formula;
  for (const auto& x : points) {
    const ModelGeometry g = geometry(model, x);
    const double lr = rule(x, g);
    c.points.push_back(x);
    c.r.push_back(g.r);
    c.lambda_r.push_back(lr);
    c.v_f.push_back(fa_density(LocalGeometry::from(g), lr, formula));
  }
  return c;
}

OperatingCharacteristic global_oc(std::span<const double> lambda_grid,
                                  std::span<const double> p_d,
                                  std::span<const double> lambda_t) {
  const std::size_t n = lambda_grid.size();
  if (n < 3 || p_d.size() != n) throw ConfigError("P_D table needs at least 3 matching entries");
  const double h = (lambda_grid[n - 1] - lambda_grid[0]) / static_cast<double>(n - 1);
  if (!(h > 0.0) || h > 0.1 + 1e-12) throw ConfigError("P_D table spacing must be in (0, 0.1]");
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(lambda_grid[i] - lambda_grid[i - 1] - h) > 1e-6 * h) {
      throw ConfigError("P_D table must be uniformly spaced");
    }
  }

  std::vector<double> dp(n);
  // differences against the end value: exactly zero for a flat table
  dp[0] = (4.0 * (p_d[1] - p_d[0]) - (p_d[2] - p_d[0])) / (2.0 * h);
  dp[n - 1] = (4.0 * (p_d[n - 1] - p_d[n - 2]) - (p_d[n - 1] - p_d[n - 3])) / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) dp[i] = (p_d[i + 1] - p_d[i - 1]) / (2.0 * h);

  auto dp_at = [&](double l) {
    const double t = (l - lambda_grid[0]) / h;
    if (t < 0.0 || t > static_cast<double>(n - 1)) return 0.0;
    const auto i = std::min(static_cast<std::size_t>(t), n - 2);
    const double f = t - static_cast<double>(i);
    return dp[i] + f * (dp[i + 1] - dp[i]);
  };
  auto p_at = [&](double l) {
    const double t = std::clamp((l - lambda_grid[0]) / h, 0.0, static_cast<double>(n - 1));
    const auto i = std::min(static_cast<std::size_t>(t), n - 2);
    const double f = t - static_cast<double>(i);
    return p_d[i] + f * (p_d[i + 1] - p_d[i]);
  };

  OperatingCharacteristic oc;
  double dp_max = 0.0;
  for (double v : dp) dp_max = std::max(dp_max, std::abs(v));
  oc.truncated = dp_max > 0.0 && (std::abs(dp.front()) > 1e-6 * dp_max ||
                                  std::abs(dp.back()) > 1e-6 * dp_max);

  for (double lt : lambda_t) {
    if (lt < lambda_grid[0] - 1e-12 || lt > lambda_grid[n - 1] + 1e-12) {
      throw ConfigError("lambda_T outside the tabulated P_D range");
    }
    // dP_D/dlambda is piecewise linear: integrate each piece against exp(-t) exactly
    std::vector<double> knots{0.0};
    const double first = std::ceil((lt - lambda_grid[0]) / h - 1e-9);
    for (auto k = static_cast<std::size_t>(std::max(first, 0.0)); k < n; ++k) {
      const double t = lambda_grid[k] - lt;
      if (t > 1e-12) knots.push_back(t);
    }
    double integral = 0.0;
    for (std::size_t k = 1; k < knots.size(); ++k) {
      const double a = knots[k - 1];
      const double b = knots[k];
      const double delta = b - a;
      const double pa = dp_at(lt + a);
      const double pb = dp_at(lt + b);
      const double ea = std::exp(-a);
      const double i0 = ea * (-std::expm1(-delta));
      const double i1 = ea * (1.0 - (1.0 + delta) * std::exp(-delta));
      integral += pa * i0 + (pb - pa) / delta * i1;
    }
    oc.lambda_t.push_back(lt);
    oc.p_d.push_back(p_at(lt));
    oc.p_f.push_back(-std::exp(-lt) * integral);
    if (lt + 1.0 > lambda_grid[n - 1]) oc.truncated = true;
    oc.p_f_first_order.push_back(-std::exp(-lt) * dp_at(lt + 1.0));
  }
  return oc;
}

std::vector<double> net_detection_probability(const SignalModel& model, double lo, double hi,
                                              std::span<const double> lambda_t,
                                              std::size_t nodes) {
  if (model.dimension() != 1) throw DomainError("net detection probability needs a 1-D model");
  if (!(hi > lo)) throw ConfigError("domain must have hi > lo");
  if (nodes < 3) nodes = 3;
  if (nodes % 2 == 0) ++nodes;
  const double length = hi - lo;
  const double h = length / static_cast<double>(nodes - 1);
  const double d = static_cast<double>(model.dimension());

  std::vector<double> r(nodes), offset(nodes), w(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const ModelGeometry g = geometry(model, ParamPoint{lo + h * static_cast<double>(k)});
    r[k] = g.r;
    offset[k] = std::log(length) + d * std::log(g.r) - std::log(g.V);
    w[k] = (k == 0 || k + 1 == nodes ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0)) * h / 3.0;
  }
  std::vector<double> out;
  out.reserve(lambda_t.size());
  for (double lt : lambda_t) {
    double sum = 0.0;
    for (std::size_t k = 0; k < nodes; ++k) {
      sum += w[k] * detection_probability(model.dimension(), r[k], lt + offset[k]);
    }
    out.push_back(sum / length);
  }
  return out;
}

double oc_threshold_offset(const SignalModel& model, double lo, double hi, const ParamPoint& x0) {
  const ModelGeometry g = geometry(model, x0);
  return std::log(hi - lo) + static_cast<double>(model.dimension()) * std::log(g.r) - std::log(g.V);
}

}  // namespace jde
