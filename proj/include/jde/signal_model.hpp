#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace jde {

/// A point in the continuous signal-parameter domain.
struct ParamPoint {
  std::vector<double> coords;

  ParamPoint() = default;
  ParamPoint(std::initializer_list<double> values) : coords(values) {}
  explicit ParamPoint(std::vector<double> values) : coords(std::move(values)) {}

  std::size_t dim() const noexcept { return coords.size(); }
  double operator[](std::size_t i) const { return coords[i]; }
  double& operator[](std::size_t i) { return coords[i]; }

  friend bool operator==(const ParamPoint&, const ParamPoint&) = default;
  friend auto operator<=>(const ParamPoint& a, const ParamPoint& b) {
    return a.coords <=> b.coords;
  }
};

/// Samples on consecutive integer indices `first, first + 1, ...`.
struct SampledSignal {
  long first = 0;
  std::vector<double> values;

  long last() const noexcept { return first + static_cast<long>(values.size()) - 1; }
  std::size_t size() const noexcept { return values.size(); }
};

/// Inner product of two sampled vectors over their common support.
double inner_product(const SampledSignal& a, const SampledSignal& b);

/// A parametric family of known, real, deterministic signals s(x).
///
/// Implementations supply the signal and its analytic first derivatives on a
/// finite support of integer sample indices. Noise covariance is the identity
/// throughout, so all geometry reduces to plain inner products.
class SignalModel {
 public:
  virtual ~SignalModel() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::string axis_name(std::size_t axis) const = 0;

  /// Throws DomainError when `x` is not a valid point of the domain.
  virtual void validate(const ParamPoint& x) const = 0;

  /// Writes s(x) into `values` (resized) and returns the index of the first sample.
  virtual long fill_signal(const ParamPoint& x, std::vector<double>& values) const = 0;

  /// Derivatives ds/dx_i on the same support that fill_signal uses.
  virtual std::vector<SampledSignal> gradient(const ParamPoint& x) const = 0;

  SampledSignal signal(const ParamPoint& x) const {
    SampledSignal s;
    s.first = fill_signal(x, s.values);
    return s;
  }
};

enum class PulseAxis { Shift, Width };

const char* to_string(PulseAxis axis);

/// Shift/width of a Gaussian pulse, with both coordinates resolved.
struct PulseState {
  double shift = 0.0;
  double width = 1.0;
};

/// s_xi(x) = A exp(-(xi - shift)^2 / (2 width^2)) on integer xi, truncated to
/// `support_radius` samples either side of the nearest integer to `shift`.
///
/// Any subset of {shift, width} may be free; the remaining coordinate takes
/// its fixed value. Free coordinates appear in ParamPoint in the order given
/// by `active`.
class GaussianPulseModel final : public SignalModel {
 public:
  GaussianPulseModel(double amplitude, std::vector<PulseAxis> active,
                     double fixed_shift, double fixed_width, int support_radius);

  /// Smallest radius keeping the discarded tail below 1e-12 A at `max_width`.
  static int default_support_radius(double max_width);

  std::size_t dimension() const override { return active_.size(); }
  std::string axis_name(std::size_t axis) const override;
  void validate(const ParamPoint& x) const override;
  long fill_signal(const ParamPoint& x, std::vector<double>& values) const override;
  std::vector<SampledSignal> gradient(const ParamPoint& x) const override;

  double amplitude() const noexcept { return amplitude_; }
  int support_radius() const noexcept { return support_radius_; }
  const std::vector<PulseAxis>& active() const noexcept { return active_; }
  double fixed_shift() const noexcept { return fixed_shift_; }
  double fixed_width() const noexcept { return fixed_width_; }

  /// Index of `axis` among the free coordinates, or -1 if it is fixed.
  int axis_index(PulseAxis axis) const noexcept;

  PulseState state(const ParamPoint& x) const;
  ParamPoint point(const PulseState& state) const;

  /// Largest discarded sample magnitude relative to A.
  double truncation_tail(const ParamPoint& x) const;

  GaussianPulseModel with_amplitude(double amplitude) const;

 private:
  double amplitude_;
  std::vector<PulseAxis> active_;
  double fixed_shift_;
  double fixed_width_;
  int support_radius_;
};

/// Local geometry of the log-likelihood field at a parameter point.
struct ModelGeometry {
  double r = 0.0;              ///< amplitude SNR
  Eigen::VectorXd grad_r;      ///< dr/dx_i
  Eigen::MatrixXd M;           ///< gradient covariance of the normalized filter output
  Eigen::MatrixXd Q;           ///< M + (grad r / r)(grad r / r)^T
  double V = 0.0;              ///< det(Q / 2 pi)^(-1/2)
  double gamma = 0.0;
  double zeta = 0.0;           ///< gamma / (1 + gamma)

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(grad_r.size()); }
  Eigen::VectorXd log_gradient() const { return grad_r / r; }
};

SampledSignal signal_vector(const SignalModel& model, const ParamPoint& x);

double snr(const SignalModel& model, const ParamPoint& x);

/// s(x1).s(x2) / (r(x1) r(x2)).
double correlation(const SignalModel& model, const ParamPoint& x1, const ParamPoint& x2);

/// Exact inner-product geometry; throws GeometryError if M or Q is not
/// positive definite.
ModelGeometry geometry(const SignalModel& model, const ParamPoint& x);

}  // namespace jde
