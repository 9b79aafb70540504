#include "jde/decision.hpp"

#include "jde/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace jde {

PriorDensity PriorDensity::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError("prior density must be positive and finite");
  }
  PriorDensity p;
  p.value_ = value;
  return p;
}

PriorDensity PriorDensity::tabulated(std::size_t axis, std::vector<double> at,
                                     std::vector<double> values) {
  if (at.size() < 2 || at.size() != values.size()) {
    throw ConfigError("tabulated prior density needs matching abscissae and values");
  }
  for (std::size_t i = 0; i < at.size(); ++i) {
    if (!(values[i] > 0.0)) throw ConfigError("tabulated prior density must be positive");
    if (i > 0 && !(at[i] > at[i - 1])) {
      throw ConfigError("tabulated prior abscissae must increase");
    }
  }
  PriorDensity p;
  p.axis_ = axis;
  p.at_ = std::move(at);
  p.values_ = std::move(values);
  return p;
}

double PriorDensity::operator()(const ParamPoint& x) const {
  if (at_.empty()) return value_;
  const double v = x[axis_];
  if (v <= at_.front()) return values_.front();
  if (v >= at_.back()) return values_.back();
  const auto it = std::upper_bound(at_.begin(), at_.end(), v);
  const auto i = static_cast<std::size_t>(it - at_.begin());
  const double t = (v - at_[i - 1]) / (at_[i] - at_[i - 1]);
  return values_[i - 1] + t * (values_[i] - values_[i - 1]);
}

double PriorDensity::mass(std::span<const double> lo, std::span<const double> hi) const {
  double other = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (at_.empty() || i != axis_) other *= hi[i] - lo[i];
  }
  if (at_.empty()) return value_ * other;

  // exact integral of the piecewise-linear table over [a, b]
  const double a = lo[axis_];
  const double b = hi[axis_];
  auto eval = [&](double v) { ParamPoint x(std::vector<double>(lo.size(), 0.0)); x[axis_] = v; return (*this)(x); };
  std::vector<double> knots{a};
  for (double t : at_) if (t > a && t < b) knots.push_back(t);
  knots.push_back(b);
  double sum = 0.0;
  for (std::size_t k = 1; k < knots.size(); ++k) {
    sum += 0.5 * (eval(knots[k - 1]) + eval(knots[k])) * (knots[k] - knots[k - 1]);
  }
  return sum * other;
}

PriorCostSpec PriorCostSpec::explicit_priors(double a0, PriorDensity density, double cost) {
  if (!(a0 > 0.0 && a0 < 1.0)) throw ConfigError("a0 must lie in (0, 1)");
  if (!(cost > 0.0) || !std::isfinite(cost)) throw ConfigError("false-alarm cost must be positive");
  PriorCostSpec p;
  p.form_ = ExplicitPriors{a0, std::move(density), cost};
  return p;
}

PriorCostSpec PriorCostSpec::from_lambda0(double lambda0, ParamPoint reference) {
  if (std::isnan(lambda0)) throw ConfigError("lambda0 must be a number");
  if (reference.dim() == 0) throw ConfigError("lambda0 form needs a reference point");
  PriorCostSpec p;
  p.form_ = ThresholdOffset{lambda0, std::move(reference)};
  return p;
}

PriorCostSpec PriorCostSpec::from_fields(std::optional<double> a0,
                                         std::optional<PriorDensity> density,
                                         std::optional<double> cost,
                                         std::optional<double> lambda0,
                                         std::optional<ParamPoint> reference) {
  const bool any_explicit = a0 || density || cost;
  if (any_explicit && lambda0) {
    throw ConfigError("give either explicit priors (a0, prior density, cost) or lambda0, not both");
  }
  if (lambda0) {
    if (!reference) throw ConfigError("lambda0 form needs a reference point");
    return from_lambda0(*lambda0, std::move(*reference));
  }
  if (!(a0 && density && cost)) {
    throw ConfigError("explicit priors need a0, prior density and cost together");
  }
  return explicit_priors(*a0, std::move(*density), *cost);
}

void PriorCostSpec::check_normalization(std::span<const double> lo, std::span<const double> hi,
                                        double tol) const {
  if (!is_explicit()) return;
  const auto& e = explicit_form();
  const double total = e.a0 + e.density.mass(lo, hi);
  if (std::abs(total - 1.0) > tol) {
    throw ConfigError("a0 plus the integrated prior density must equal 1");
  }
}

ThresholdRule::ThresholdRule(const SignalModel& model, PriorCostSpec priors)
    : model_(&model), priors_(std::move(priors)) {
  if (!priors_.is_explicit()) {
    const ModelGeometry g0 = geometry(model, priors_.offset_form().reference);
    r0_ = g0.r;
    v0_ = g0.V;
    log_r0_ = std::log(g0.r);
    log_v0_ = std::log(g0.V);
  }
}

double ThresholdRule::log_cost_ratio(const ParamPoint& x) const {
  const auto d = static_cast<double>(model_->dimension());
  if (priors_.is_explicit()) {
    const auto& e = priors_.explicit_form();
    return std::log(e.a0 * e.cost / e.density(x));
  }
  return priors_.offset_form().lambda0 + log_v0_ - d * log_r0_;
}

double ThresholdRule::operator()(const ParamPoint& x, const ModelGeometry& g) const {
  if (!(g.r > 0.0) || !(g.V > 0.0)) throw DomainError("threshold needs positive SNR and volume");
  const auto d = static_cast<double>(model_->dimension());
  if (priors_.is_explicit()) {
    return log_cost_ratio(x) + d * std::log(g.r) - std::log(g.V);
  }
  // written as ratios so the reference point reproduces lambda0 exactly
  return priors_.offset_form().lambda0 + d * std::log(g.r / r0_) - std::log(g.V / v0_);
}

double ThresholdRule::operator()(const ParamPoint& x) const {
  return (*this)(x, geometry(*model_, x));
}

double threshold(const SignalModel& model, const PriorCostSpec& priors, const ParamPoint& x) {
  return ThresholdRule(model, priors)(x);
}

std::vector<Detection> evaluate_peaks(const SignalModel& model, const PriorCostSpec& priors,
                                      std::span<const FieldPeak> peaks) {
  const ThresholdRule rule(model, priors);
  std::vector<Detection> out;
  out.reserve(peaks.size());
  for (const auto& p : peaks) {
    Detection det;
    det.x_m = p.location;
    det.lambda_m = p.llr;
    det.lambda_r = rule(p.location);
    det.accepted = det.lambda_m > det.lambda_r;
    out.push_back(std::move(det));
  }
  return out;
}

std::vector<Detection> decide(const SignalModel& model, const PriorCostSpec& priors,
                              std::span<const FieldPeak> peaks) {
  std::vector<Detection> all = evaluate_peaks(model, priors, peaks);
  std::vector<Detection> accepted;
  for (auto& d : all) {
    if (d.accepted) accepted.push_back(std::move(d));
  }
  std::stable_sort(accepted.begin(), accepted.end(),
                   [](const Detection& a, const Detection& b) { return a.margin() > b.margin(); });
  return accepted;
}

double containment_constant(std::size_t d) {
  switch (d) {
    case 2: return 3.0;
    case 3: return 3.8;
    case 4: return 4.7;
    default: break;
  }
  const boost::math::chi_squared_distribution<double> chi2(static_cast<double>(std::max<std::size_t>(d, 1)));
  return 0.5 * boost::math::quantile(chi2, 0.95);
}

namespace {

// log(sum_i exp(v_i) w_i) for positive weights
struct LogSum {
  double max = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, double>> terms;  // (log value, weight)

  void add(double log_value, double weight) {
    if (!(weight > 0.0)) return;
    terms.emplace_back(log_value, weight);
    max = std::max(max, log_value);
  }
  double result() const {
    if (terms.empty()) return -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (const auto& [lv, w] : terms) s += w * std::exp(lv - max);
    return max + std::log(s);
  }
};

// Returns false when the point lies outside the model domain or measurement.
bool log_integrand(const SignalModel& model, const PriorCostSpec& priors, const ParamPoint& x,
                   const Measurement& m, double& out) {
  try {
    model.validate(x);
    const LlrValue v = llr(model, x, m);
    const double a = priors.is_explicit() ? priors.explicit_form().density(x) : 1.0;
    out = v.llr + std::log(a);
    return true;
  } catch (const DomainError&) {
    return false;
  } catch (const RangeError&) {
    return false;
  }
}

}  // namespace

BayesStatistic bayes_statistic_numeric(const SignalModel& model, const PriorCostSpec& priors,
                                       const ParamPoint& candidate, const Measurement& m,
                                       const QuadratureSpec& quad) {
  const std::size_t d = model.dimension();
  if (d != 1 && d != 2) throw DomainError("numeric Bayes statistic supports d = 1 or 2");
  if (quad.radial_points < 3) throw ConfigError("quadrature needs at least 3 points");

  const ModelGeometry g = geometry(model, candidate);
  BayesStatistic out;
  out.containment = containment_constant(d);
  if (priors.is_explicit()) {
    const auto& e = priors.explicit_form();
    out.log_cost = std::log(e.a0 * e.cost);
  } else {
    // a(x) = 1 and a0 C chosen so the asymptotic threshold is lambda0 at the reference
    const ThresholdRule rule(model, priors);
    out.log_cost = rule.log_cost_ratio(candidate);
  }

  // region: (1/2) dx^T r^2 Q dx <= c; with r^2 Q = L L^T, u = L^T dx lies in |u|^2 <= 2c
  const Eigen::MatrixXd curvature = g.r * g.r * g.Q;
  const Eigen::LLT<Eigen::MatrixXd> llt(curvature);
  const Eigen::MatrixXd lt_inv =
      llt.matrixU().solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
  const double jac = std::abs(lt_inv.determinant());
  const double radius = std::sqrt(2.0 * out.containment);

  LogSum sum;
  ParamPoint x = candidate;
  double lv = 0.0;
  const std::size_t n = quad.radial_points;
  if (d == 1) {
    const double h = 2.0 * radius / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = -radius + h * static_cast<double>(i);
      x[0] = candidate[0] + lt_inv(0, 0) * u;
      const double w = (i == 0 || i + 1 == n ? 0.5 : 1.0) * h * jac;
      if (log_integrand(model, priors, x, m, lv)) sum.add(lv, w); else out.truncated = true;
    }
  } else {
    // polar trapezoid: periodic in angle, rho * drho radially
    const std::size_t na = quad.angular_points;
    const double hr = radius / static_cast<double>(n - 1);
    const double ha = 2.0 * std::numbers::pi / static_cast<double>(na);
    if (log_integrand(model, priors, candidate, m, lv)) {
      // centre carries no weight (rho = 0) but keeps max finite for empty sums
      sum.add(lv, 0.0);
    }
    for (std::size_t i = 1; i < n; ++i) {
      const double rho = hr * static_cast<double>(i);
      const double wr = (i + 1 == n ? 0.5 : 1.0) * hr * rho;
      for (std::size_t k = 0; k < na; ++k) {
        const double th = ha * static_cast<double>(k);
        Eigen::Vector2d u(rho * std::cos(th), rho * std::sin(th));
        const Eigen::VectorXd dx = lt_inv * u;
        x[0] = candidate[0] + dx(0);
        x[1] = candidate[1] + dx(1);
        if (log_integrand(model, priors, x, m, lv)) sum.add(lv, wr * ha * jac); else out.truncated = true;
      }
    }
  }
  out.log_evidence = sum.result();
  out.value = std::exp(out.log_evidence) - std::exp(out.log_cost);
  return out;
}

}  // namespace jde
