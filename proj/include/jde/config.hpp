#pragma once

#include "jde/decision.hpp"
#include "jde/llr_field.hpp"
#include "jde/montecarlo.hpp"
#include "jde/prediction.hpp"
#include "jde/signal_model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace jde {

struct ModelBlock {
  double amplitude = 2.0;
  double shift = 0.0;
  double width = 4.0;
  std::vector<PulseAxis> active{PulseAxis::Width};
  int support_radius = 0;  ///< 0: smallest radius valid for the widest pulse searched

  GaussianPulseModel build(double max_width) const;
  /// Nominal point (shift, width) restricted to the free axes.
  ParamPoint nominal() const;
};

struct DecisionBlock {
  std::vector<double> lambda0;
  std::optional<ParamPoint> reference;
  std::optional<double> a0;
  std::optional<PriorDensity> prior_density;
  std::optional<double> cost;

  bool explicit_form() const { return lambda0.empty(); }
  /// Number of threshold levels (1 for explicit priors).
  std::size_t levels() const { return explicit_form() ? 1 : lambda0.size(); }
  PriorCostSpec spec(std::size_t level, const ParamPoint& default_reference) const;
};

struct MonteCarloBlock {
  std::uint64_t n_trials = 0;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t half_window = 50;
  double refine_margin = 2.0;
  std::vector<double> amplitudes;
  std::vector<double> snr;              ///< alternative to amplitudes
  std::uint64_t total_samples = 2'000'000'000;
  std::size_t realization_length = std::size_t{1} << 14;
  double span_sd = 6.0;
  double min_width = 0.5;
  double shift_coarse = 1.0;
  double shift_fine = 0.05;
  double width_coarse = 0.2;
  double width_fine = 0.02;
  double signal_width_lo = 4.0;
  double signal_width_hi = 8.0;
  bool noise_only_trials = true;
  std::size_t radial_points = 41;
  std::size_t angular_points = 64;
};

struct PredictionBlock {
  FaFormula formula = FaFormula::General;
  double step = 0.0;           ///< curve spacing; 0 means coarse step / 10
  double oc_lambda_lo = -30.0;
  double oc_lambda_hi = 150.0;
  double oc_step = 0.05;
  std::size_t oc_nodes = 4001;
};

struct CompareBlock {
  double rel_tol = 0.10;
  double n_sigma = 3.0;
  std::uint64_t min_counts = 100;
};

struct RunConfig {
  std::optional<ExperimentKind> kind;
  std::optional<ModelBlock> model;
  std::optional<DecisionBlock> decision;
  std::optional<SearchGrid> grid;
  std::optional<MonteCarloBlock> montecarlo;
  PredictionBlock prediction;
  std::optional<CompareBlock> compare;
  std::string output_dir = ".";
  nlohmann::json source;

  // Each throws ConfigError naming the block when it is absent.
  ExperimentKind require_kind() const;
  const ModelBlock& require_model() const;
  const DecisionBlock& require_decision() const;
  const SearchGrid& require_grid() const;
  const MonteCarloBlock& require_montecarlo() const;
};

/// Fail-closed parse: unknown keys and wrongly typed values raise ConfigError.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace jde
