#pragma once

#include "jde/signal_model.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace jde {

/// Sampled observation m_xi for xi = origin, origin + 1, ...
struct Measurement {
  long origin = 0;
  std::vector<double> samples;

  Measurement() = default;
  Measurement(std::vector<double> values, long first_index = 0);

  std::size_t length() const noexcept { return samples.size(); }
  long first() const noexcept { return origin; }
  long last() const noexcept { return origin + static_cast<long>(samples.size()) - 1; }
  bool covers(long lo, long hi) const noexcept { return lo >= first() && hi <= last(); }
  double at(long xi) const { return samples[static_cast<std::size_t>(xi - origin)]; }
};

/// A refined local maximum of the log-likelihood-ratio field.
struct FieldPeak {
  ParamPoint location;
  double llr = 0.0;
  double y = 0.0;                  ///< normalized matched-filter output at `location`
  std::vector<long> fine_index;    ///< per-axis index on the fine grid (from axis lo)
};

struct LlrValue {
  double llr = 0.0;
  double y = 0.0;
  double r = 0.0;
};

/// sum_xi s_xi(x) m_xi; throws RangeError if the support leaves the measurement.
double matched_filter(const SignalModel& model, const ParamPoint& x, const Measurement& m);

/// lambda = s.m - r^2/2 and y = s.m / r.
LlrValue llr(const SignalModel& model, const ParamPoint& x, const Measurement& m);

/// Same as llr() for a precomputed signal.
LlrValue llr(const SampledSignal& s, double r2, const Measurement& m);

// ---------------------------------------------------------------------------
// Shift search by circular correlation

/// Matched-filter output for every integer shift of a shift-only pulse.
///
/// `values[i]` is the output at shift `origin + i`. Entries outside
/// [valid_begin, valid_end) see circular wrap-around and must not be used.
struct ShiftFilterOutput {
  long origin = 0;
  std::vector<double> values;
  std::size_t valid_begin = 0;
  std::size_t valid_end = 0;

  bool valid(std::size_t i) const noexcept { return i >= valid_begin && i < valid_end; }
};

/// Reusable FFTW plans correlating length-N inputs with a fixed template.
class ShiftCorrelator {
 public:
  /// `pulse` holds the template at shift zero: pulse.values[k] is sample
  /// pulse.first + k.
  ShiftCorrelator(const SampledSignal& pulse, std::size_t length);
  ~ShiftCorrelator();
  ShiftCorrelator(const ShiftCorrelator&) = delete;
  ShiftCorrelator& operator=(const ShiftCorrelator&) = delete;
  ShiftCorrelator(ShiftCorrelator&&) noexcept;
  ShiftCorrelator& operator=(ShiftCorrelator&&) noexcept;

  std::size_t length() const noexcept;
  /// Samples lost at each end to wrap-around.
  std::size_t margin() const noexcept;

  /// out[j] = sum_k pulse[k] in[(j + k) mod N].
  void correlate(std::span<const double> in, std::span<double> out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Requires a GaussianPulseModel whose only free axis is the shift.
ShiftFilterOutput matched_filter_fft(const GaussianPulseModel& model, const Measurement& m);

// ---------------------------------------------------------------------------
// Grid search

struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  double coarse_step = 1.0;
  double fine_step = 1.0;

  std::size_t coarse_count() const;
  double coarse_point(std::size_t i) const { return lo + static_cast<double>(i) * coarse_step; }
  /// Number of fine steps per coarse step.
  std::size_t refine_ratio() const;
  double fine_point(long k) const { return lo + static_cast<double>(k) * fine_step; }
};

struct SearchGrid {
  std::vector<GridAxis> axes;

  /// Throws ConfigError for an empty grid or a fine step that does not divide
  /// the coarse step.
  void validate() const;
  std::size_t dimension() const noexcept { return axes.size(); }
  std::size_t size() const;
  std::vector<std::size_t> unravel(std::size_t flat) const;
  ParamPoint coarse_point(std::size_t flat) const;
  bool on_boundary(std::size_t flat) const;
};

/// Signals for every coarse grid point, evaluated once and reused across
/// measurements.
class FilterBank {
 public:
  FilterBank(const SignalModel& model, SearchGrid grid);

  const SearchGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return signals_.size(); }
  /// Smallest and largest sample index touched by any filter.
  long first_index() const noexcept { return first_; }
  long last_index() const noexcept { return last_; }

  /// lambda at every coarse point, flat row-major order (last axis fastest).
  void evaluate(const Measurement& m, std::vector<double>& llr_out) const;
  /// lambda at flat indices [begin, end) written to out[0 .. end - begin).
  void evaluate(const Measurement& m, std::size_t begin, std::size_t end, double* out) const;
  double r2(std::size_t i) const { return r2_[i]; }

 private:
  SearchGrid grid_;
  std::vector<SampledSignal> signals_;
  std::vector<double> r2_;
  long first_ = 0;
  long last_ = 0;
  // Filters share a centre and are even about it: fold the measurement first.
  bool symmetric_ = false;
  long center_ = 0;
};

/// Interior coarse points that beat every axis neighbour; equal neighbours
/// resolve to the lower index.
std::vector<std::size_t> coarse_maxima(const SearchGrid& grid, std::span<const double> llr);

/// Flat index of the largest coarse value (first on ties).
std::size_t coarse_argmax(std::span<const double> llr);

/// Dense re-evaluation of lambda on the fine grid within one coarse cell of
/// `coarse_flat`; returns the fine-grid argmax.
FieldPeak refine_peak(const SignalModel& model, const Measurement& m, const SearchGrid& grid,
                      std::size_t coarse_flat);

/// All refined local maxima, sorted by location.
std::vector<FieldPeak> find_peaks(const SignalModel& model, const Measurement& m,
                                  const SearchGrid& grid);

}  // namespace jde
