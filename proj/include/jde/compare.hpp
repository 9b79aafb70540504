#pragma once

#include "jde/config.hpp"
#include "jde/io.hpp"

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace jde {

enum class Verdict { Pass, Fail, Inconclusive };

const char* to_string(Verdict v);

struct ComparisonRow {
  double x = 0.0;
  double theory = 0.0;
  double simulation = 0.0;
  double ratio = 0.0;
  double sigma = 0.0;          ///< Poisson standard error of the simulation value
  std::uint64_t counts = 0;
  bool evaluated = false;      ///< enough counts and inside the theory range
  bool pass = false;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  bool regridded = false;
  std::size_t evaluated = 0;
  std::size_t failed = 0;
  Verdict verdict = Verdict::Inconclusive;

  CsvTable table() const;
};

/// Linear interpolation of (x, y) at `at`; NaN outside [x.front(), x.back()].
std::vector<double> regrid(const std::vector<double>& x, const std::vector<double>& y,
                           const std::vector<double>& at);

/// A point passes when |sim - theory| <= max(rel_tol * theory, n_sigma * sigma);
/// only points with at least min_counts events are judged. No judged point
/// gives INCONCLUSIVE.
ComparisonReport compare_curves(const std::vector<double>& theory_x, const std::vector<double>& theory_y,
                                const std::vector<double>& sim_x, const std::vector<double>& sim_y,
                                const std::vector<std::uint64_t>& sim_counts,
                                const std::vector<double>& sim_sigma, const CompareBlock& rule);

/// Reads a theory table (value column v_f, else predicted, else the second
/// column) and a simulation table (density/count/density_se columns) sharing
/// the abscissa column `x_column` (empty: the first simulation column).
ComparisonReport compare_files(const std::filesystem::path& theory, const std::filesystem::path& sim,
                               const CompareBlock& rule, const std::string& x_column,
                               std::ostream& warnings);

}  // namespace jde
