#pragma once

#include "jde/decision.hpp"
#include "jde/signal_model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace jde {

/// G(z) = (1/sqrt(2 pi)) int_z^inf exp(-t^2/2) dt.
double gaussian_tail(double z);

/// Scalars that the analytic predictions depend on at one parameter point.
struct LocalGeometry {
  std::size_t d = 1;
  double r = 0.0;
  double V = 1.0;
  double gamma = 0.0;
  double zeta = 0.0;

  static LocalGeometry from(const ModelGeometry& g);
};

/// p_D = G(z_D), z_D = (lambda_r - d/4) / r~ - r~ / 2, r~^2 = r^2 + d/2.
double detection_probability(std::size_t d, double r, double lambda_r);
double detection_probability(const SignalModel& model, const PriorCostSpec& priors,
                             const ParamPoint& x);

/// False-alarm density for a field with varying SNR (radial-integral form).
double fa_density_general(const LocalGeometry& g, double lambda_r);
double fa_density_general(const SignalModel& model, const PriorCostSpec& priors,
                          const ParamPoint& x);

/// Closed-form false-alarm density for a homogeneous field.
double fa_density_homogeneous(const LocalGeometry& g, double lambda_r);
double fa_density_homogeneous(const SignalModel& model, const PriorCostSpec& priors,
                              const ParamPoint& x);

enum class FaFormula { General, Homogeneous };

const char* to_string(FaFormula f);

double fa_density(const LocalGeometry& g, double lambda_r, FaFormula formula);

/// Integral of the false-alarm density over [lo, hi] of a one-parameter model.
double integrated_fa(const SignalModel& model, const PriorCostSpec& priors, double lo, double hi,
                     FaFormula formula, double rel_tol = 1e-9);

/// r^-2 Q^-1 at the signal location.
Eigen::MatrixXd cramer_rao_cov(const SignalModel& model, const ParamPoint& x_s);

/// <lambda_m> = r^2 / 2 + d / 2.
double expected_peak_llr(double r, std::size_t d);
double expected_peak_llr(const SignalModel& model, const ParamPoint& x_s);

struct DetectionCurve {
  std::vector<ParamPoint> points;
  std::vector<double> r;
  std::vector<double> lambda_r;
  std::vector<double> p_d;
};

struct FalseAlarmCurve {
  std::vector<ParamPoint> points;
  std::vector<double> r;
  std::vector<double> lambda_r;
  std::vector<double> v_f;
  FaFormula formula = FaFormula::General;
};

DetectionCurve detection_curve(const SignalModel& model, const PriorCostSpec& priors,
                               std::span<const ParamPoint> points);
FalseAlarmCurve fa_curve(const SignalModel& model, const PriorCostSpec& priors,
                         std::span<const ParamPoint> points, FaFormula formula);

struct OperatingCharacteristic {
  std::vector<double> lambda_t;
  std::vector<double> p_d;
  std::vector<double> p_f;              ///< integral form
  std::vector<double> p_f_first_order;  ///< -exp(-lambda_T) dP_D/dlambda (lambda_T + 1)
  bool truncated = false;               ///< P_D not flat at the table ends
};

/// Global false-alarm probability from a net detection probability tabulated
/// on a uniform lambda grid (spacing <= 0.1). Derivatives are central
/// differences on the table.
OperatingCharacteristic global_oc(std::span<const double> lambda_grid,
                                  std::span<const double> p_d,
                                  std::span<const double> lambda_t);

/// Net detection probability P_D(lambda_T) of a one-parameter model with a
/// uniform pseudo-prior over [lo, hi]: the local threshold is
/// lambda_T + log(L r^d / V).
std::vector<double> net_detection_probability(const SignalModel& model, double lo, double hi,
                                              std::span<const double> lambda_t,
                                              std::size_t nodes = 4001);

/// log(L r0^d / V0): lambda_T = lambda0 - offset for a lambda0 threshold with
/// reference x0 and a uniform prior over [lo, hi].
double oc_threshold_offset(const SignalModel& model, double lo, double hi, const ParamPoint& x0);

}  // namespace jde
