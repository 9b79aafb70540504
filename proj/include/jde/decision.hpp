#pragma once

#include "jde/llr_field.hpp"
#include "jde/signal_model.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace jde {

/// Prior signal density a(x): a constant, or a table along one axis with
/// linear interpolation (constant beyond the table ends).
class PriorDensity {
 public:
  static PriorDensity constant(double value);
  static PriorDensity tabulated(std::size_t axis, std::vector<double> at, std::vector<double> values);

  double operator()(const ParamPoint& x) const;
  bool is_constant() const noexcept { return at_.empty(); }

  /// Integral over the box [lo_i, hi_i].
  double mass(std::span<const double> lo, std::span<const double> hi) const;

 private:
  double value_ = 1.0;
  std::size_t axis_ = 0;
  std::vector<double> at_;
  std::vector<double> values_;
};

/// Explicit priors and a spatially constant false-alarm cost.
struct ExplicitPriors {
  double a0 = 0.5;
  PriorDensity density = PriorDensity::constant(1.0);
  double cost = 1.0;
};

/// Threshold offset lambda0 lumping amplitude, costs and priors, anchored at
/// a reference point where the threshold equals lambda0.
struct ThresholdOffset {
  double lambda0 = 0.0;
  ParamPoint reference;
};

class PriorCostSpec {
 public:
  static PriorCostSpec explicit_priors(double a0, PriorDensity density, double cost);
  static PriorCostSpec from_lambda0(double lambda0, ParamPoint reference);

  /// Builds from optional config fields; exactly one of the two forms must be
  /// given, otherwise ConfigError.
  static PriorCostSpec from_fields(std::optional<double> a0, std::optional<PriorDensity> density,
                                   std::optional<double> cost, std::optional<double> lambda0,
                                   std::optional<ParamPoint> reference);

  bool is_explicit() const noexcept { return std::holds_alternative<ExplicitPriors>(form_); }
  const ExplicitPriors& explicit_form() const { return std::get<ExplicitPriors>(form_); }
  const ThresholdOffset& offset_form() const { return std::get<ThresholdOffset>(form_); }

  /// Throws ConfigError unless a0 + integral of a(x) over the box is 1 within `tol`.
  void check_normalization(std::span<const double> lo, std::span<const double> hi,
                           double tol = 1e-9) const;

 private:
  std::variant<ExplicitPriors, ThresholdOffset> form_;
};

/// Evaluates the variable threshold lambda_r(x) = log[a0 C r^d / (a V)].
class ThresholdRule {
 public:
  ThresholdRule(const SignalModel& model, PriorCostSpec priors);

  double operator()(const ParamPoint& x) const;
  double operator()(const ParamPoint& x, const ModelGeometry& g) const;

  /// log(a0 C / a(x)): the part of the threshold that is not geometry.
  double log_cost_ratio(const ParamPoint& x) const;

  const SignalModel& model() const noexcept { return *model_; }
  const PriorCostSpec& priors() const noexcept { return priors_; }

 private:
  const SignalModel* model_;
  PriorCostSpec priors_;
  double log_r0_ = 0.0;
  double log_v0_ = 0.0;
  double r0_ = 0.0;
  double v0_ = 0.0;
};

double threshold(const SignalModel& model, const PriorCostSpec& priors, const ParamPoint& x);

struct Detection {
  ParamPoint x_m;
  double lambda_m = 0.0;
  double lambda_r = 0.0;
  bool accepted = false;

  double margin() const noexcept { return lambda_m - lambda_r; }
};

/// Threshold test for every peak, in input order.
std::vector<Detection> evaluate_peaks(const SignalModel& model, const PriorCostSpec& priors,
                                      std::span<const FieldPeak> peaks);

/// Accepted detections only, largest lambda_m - lambda_r first.
std::vector<Detection> decide(const SignalModel& model, const PriorCostSpec& priors,
                              std::span<const FieldPeak> peaks);

/// Half the 95% chi-square quantile for d <= 1; tabulated 3.0 / 3.8 / 4.7 for d = 2..4.
double containment_constant(std::size_t d);

struct QuadratureSpec {
  std::size_t radial_points = 41;   ///< nodes across the region (per axis for d = 1)
  std::size_t angular_points = 64;  ///< d = 2 only
};

struct BayesStatistic {
  double value = 0.0;          ///< integral of a(x) L(m|x) over X(x') minus a0 C
  double log_evidence = 0.0;   ///< log of the integral term
  double log_cost = 0.0;       ///< log(a0 C)
  double containment = 0.0;    ///< c used for the region
  bool truncated = false;      ///< part of the region fell outside the domain

  bool accept() const noexcept { return log_evidence > log_cost; }
};

/// Exact-form decision statistic around a candidate x' by quadrature of the
/// likelihood ratio over the 95% containment ellipsoid (d = 1 or 2).
BayesStatistic bayes_statistic_numeric(const SignalModel& model, const PriorCostSpec& priors,
                                       const ParamPoint& candidate, const Measurement& m,
                                       const QuadratureSpec& quad = {});

}  // namespace jde
