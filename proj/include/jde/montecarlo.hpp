#pragma once

#include "jde/decision.hpp"
#include "jde/llr_field.hpp"
#include "jde/signal_model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace jde {

enum class ExperimentKind { FaSigma, FaShift, Accuracy, OracleAgreement };

const char* to_string(ExperimentKind kind);
/// Throws ConfigError for an unknown name.
ExperimentKind experiment_kind_from_string(const std::string& name);

/// Scheduling knobs. Trials are cut into fixed blocks, so results depend on
/// the seed and the block layout but never on `workers`.
struct RunOptions {
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

/// Over-threshold maxima binned on a fine grid and smoothed with a running
/// window of 2 * half_window + 1 bins.
struct DensityHistogram {
  std::vector<double> centers;
  std::vector<std::uint64_t> counts;
  std::vector<std::uint64_t> window_counts;
  /// window_counts / (window width * n_trials); windows cut by the grid ends
  /// are normalized by their truncated width.
  std::vector<double> density;
  double bin_width = 0.0;
  std::size_t half_window = 0;
  std::uint64_t n_trials = 0;

  std::uint64_t total() const;
  /// Riemann sum of `density` over the grid.
  double integral() const;
  /// Poisson standard error of density[i].
  double density_se(std::size_t i) const;
};

DensityHistogram make_density_histogram(std::vector<double> centers,
                                        std::vector<std::uint64_t> counts, double bin_width,
                                        std::size_t half_window, std::uint64_t n_trials);

// ---------------------------------------------------------------------------
// False alarms over the width axis

struct FaSigmaConfig {
  double amplitude = 2.0;
  double reference_width = 4.0;           ///< x0 of the lambda0 threshold
  GridAxis axis{1.0, 16.0, 0.2, 0.002};
  int support_radius = 0;                 ///< 0 selects the default for axis.hi
  std::vector<double> lambda0{5.0};
  std::uint64_t n_trials = 20'000'000;
  std::size_t half_window = 50;
  /// Refine only when the coarse maximum is within this much of the lowest
  /// threshold on the grid.
  double refine_margin = 2.0;

  void validate() const;
};

struct FaSigmaLevel {
  double lambda0 = 0.0;
  std::uint64_t count = 0;            ///< accepted interior maxima
  std::uint64_t boundary_count = 0;   ///< over-threshold maxima on the grid edge (discarded)
  double rate = 0.0;
  double rate_se = 0.0;
  DensityHistogram histogram;
};

struct FaSigmaResult {
  std::uint64_t n_trials = 0;
  std::uint64_t refined_trials = 0;
  std::uint64_t boundary_maxima = 0;  ///< trials whose global maximizer sat on the edge
  std::vector<FaSigmaLevel> levels;
  double seconds = 0.0;
};

FaSigmaResult run_fa_sigma(const FaSigmaConfig& cfg, const RunOptions& opts);

// ---------------------------------------------------------------------------
// False alarms over the shift axis (homogeneous field)

struct FaShiftConfig {
  double width = 4.0;
  int support_radius = 0;
  std::vector<double> amplitudes;
  double lambda0 = 10.0;
  std::size_t realization_length = std::size_t{1} << 14;
  std::uint64_t total_samples = 2'000'000'000;  ///< usable samples to reach (at least)

  void validate() const;
};

struct FaShiftPoint {
  double amplitude = 0.0;
  double r = 0.0;
  std::uint64_t count = 0;
  std::uint64_t left = 0;   ///< counts in the first half of each realization
  std::uint64_t right = 0;
  double density = 0.0;     ///< per shift sample
  double density_se = 0.0;
  double predicted = 0.0;   ///< homogeneous closed form at lambda_r = lambda0
};

struct FaShiftResult {
  std::uint64_t realizations = 0;
  std::uint64_t usable_samples = 0;
  double unit_snr = 0.0;    ///< r at unit amplitude
  std::vector<FaShiftPoint> points;
  double seconds = 0.0;
};

FaShiftResult run_fa_shift(const FaShiftConfig& cfg, const RunOptions& opts);

// ---------------------------------------------------------------------------
// Estimation accuracy against the Cramer-Rao bound

struct AccuracyConfig {
  double width = 4.0;
  std::vector<double> amplitudes;
  std::uint64_t n_trials = 20'000;
  double span_sd = 6.0;            ///< search half-width in bound standard deviations
  double min_width = 0.5;
  double shift_coarse = 1.0;
  double shift_fine = 0.05;
  double width_coarse = 0.2;
  double width_fine = 0.02;

  void validate() const;
};

struct AccuracyPoint {
  double amplitude = 0.0;
  double r = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t boundary = 0;      ///< global maximum on the search box edge (kept)
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();      ///< (shift, width) error
  Eigen::Vector2d mean_se = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d bound = Eigen::Matrix2d::Zero();
  double correlation = 0.0;
};

struct AccuracyResult {
  std::vector<AccuracyPoint> points;
  double seconds = 0.0;
};

AccuracyResult run_accuracy(const AccuracyConfig& cfg, const RunOptions& opts);

// ---------------------------------------------------------------------------
// Asymptotic threshold rule against the numeric decision statistic

struct OracleConfig {
  double amplitude = 2.0;
  double reference_width = 4.0;
  GridAxis axis{1.0, 16.0, 0.2, 0.002};
  int support_radius = 0;
  std::vector<double> lambda0{5.0, 6.0, 7.0, 8.0};   ///< cycled over trials
  double signal_width_lo = 4.0;   ///< injected width drawn uniformly from [lo, hi]
  double signal_width_hi = 8.0;
  bool noise_only_trials = true;  ///< even trials carry no signal
  std::uint64_t n_trials = 10'000;
  QuadratureSpec quadrature;

  void validate() const;
};

struct OracleResult {
  std::uint64_t trials = 0;
  std::uint64_t compared = 0;
  std::uint64_t agree = 0;
  std::uint64_t signal_compared = 0;
  std::uint64_t signal_agree = 0;
  std::uint64_t boundary = 0;      ///< skipped: global maximum on the grid edge
  std::uint64_t truncated = 0;     ///< quadrature region left the domain
  std::uint64_t both_accept = 0;
  double fraction = 0.0;
  double ci_lo = 0.0;              ///< 95% Wilson interval
  double ci_hi = 0.0;
  double seconds = 0.0;
};

OracleResult run_oracle_agreement(const OracleConfig& cfg, const RunOptions& opts);

/// 95% Wilson score interval for k successes in n trials.
std::pair<double, double> wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054);

}  // namespace jde
