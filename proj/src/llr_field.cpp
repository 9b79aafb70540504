#include "jde/llr_field.hpp"

#include "jde/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <sstream>

namespace jde {

Measurement::Measurement(std::vector<double> values, long first_index)
    : origin(first_index), samples(std::move(values)) {
  for (double v : samples) {
    if (!std::isfinite(v)) throw DomainError("measurement samples must be finite");
  }
}

namespace {

double dot_with_measurement(const SampledSignal& s, const Measurement& m) {
  if (!m.covers(s.first, s.last())) {
    std::ostringstream os;
    os << "signal support [" << s.first << ", " << s.last() << "] exceeds measurement ["
       << m.first() << ", " << m.last() << "]";
    throw RangeError(os.str());
  }
  const double* mp = m.samples.data() + (s.first - m.origin);
  double sum = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) sum += s.values[k] * mp[k];
  return sum;
}

}  // namespace

double matched_filter(const SignalModel& model, const ParamPoint& x, const Measurement& m) {
  return dot_with_measurement(model.signal(x), m);
}

LlrValue llr(const SampledSignal& s, double r2, const Measurement& m) {
  if (!(r2 > 0.0)) throw DomainError("log-likelihood ratio undefined for zero SNR");
  const double mfo = dot_with_measurement(s, m);
  const double r = std::sqrt(r2);
  return {mfo - 0.5 * r2, mfo / r, r};
}

LlrValue llr(const SignalModel& model, const ParamPoint& x, const Measurement& m) {
  const SampledSignal s = model.signal(x);
  return llr(s, inner_product(s, s), m);
}

// ---------------------------------------------------------------------------

namespace {
// FFTW planning is not thread safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}
}  // namespace

struct ShiftCorrelator::Impl {
  std::size_t n = 0;
  std::size_t margin = 0;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  std::vector<std::complex<double>> kernel;  // conj(FFT(template)) / n
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Impl() {
    std::lock_guard lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
  }
};

ShiftCorrelator::ShiftCorrelator(const SampledSignal& pulse, std::size_t length)
    : impl_(std::make_unique<Impl>()) {
  const long reach = std::max(std::abs(pulse.first), std::abs(pulse.last()));
  if (length < 2 * static_cast<std::size_t>(reach) + 3) {
    throw RangeError("correlation length too short for pulse support");
  }
  auto& s = *impl_;
  s.n = length;
  s.margin = static_cast<std::size_t>(reach);
  const std::size_t nc = length / 2 + 1;
  s.real = fftw_alloc_real(length);
  s.spec = fftw_alloc_complex(nc);
  {
    std::lock_guard lock(fftw_planner_mutex());
    s.forward = fftw_plan_dft_r2c_1d(static_cast<int>(length), s.real, s.spec, FFTW_ESTIMATE);
    s.backward = fftw_plan_dft_c2r_1d(static_cast<int>(length), s.spec, s.real, FFTW_ESTIMATE);
  }
  std::fill(s.real, s.real + length, 0.0);
  const auto n = static_cast<long>(length);
  for (std::size_t k = 0; k < pulse.size(); ++k) {
    const long idx = ((pulse.first + static_cast<long>(k)) % n + n) % n;
    s.real[idx] += pulse.values[k];
  }
  fftw_execute(s.forward);
  s.kernel.resize(nc);
  const double scale = 1.0 / static_cast<double>(length);
  for (std::size_t k = 0; k < nc; ++k) {
    s.kernel[k] = std::conj(std::complex<double>(s.spec[k][0], s.spec[k][1])) * scale;
  }
}

ShiftCorrelator::~ShiftCorrelator() = default;
ShiftCorrelator::ShiftCorrelator(ShiftCorrelator&&) noexcept = default;
ShiftCorrelator& ShiftCorrelator::operator=(ShiftCorrelator&&) noexcept = default;

std::size_t ShiftCorrelator::length() const noexcept { return impl_->n; }
std::size_t ShiftCorrelator::margin() const noexcept { return impl_->margin; }

void ShiftCorrelator::correlate(std::span<const double> in, std::span<double> out) {
  auto& s = *impl_;
  if (in.size() != s.n || out.size() != s.n) throw RangeError("correlator length mismatch");
  std::copy(in.begin(), in.end(), s.real);
  fftw_execute(s.forward);
  const std::size_t nc = s.n / 2 + 1;
  for (std::size_t k = 0; k < nc; ++k) {
    const std::complex<double> v(s.spec[k][0], s.spec[k][1]);
    const std::complex<double> p = v * s.kernel[k];
    s.spec[k][0] = p.real();
    s.spec[k][1] = p.imag();
  }
  fftw_execute(s.backward);
  std::copy(s.real, s.real + s.n, out.begin());
}

ShiftFilterOutput matched_filter_fft(const GaussianPulseModel& model, const Measurement& m) {
  if (model.dimension() != 1 || model.active()[0] != PulseAxis::Shift) {
    throw DomainError("FFT search needs a shift-only pulse model");
  }
  const SampledSignal pulse = model.signal(ParamPoint{0.0});
  ShiftCorrelator corr(pulse, m.length());
  ShiftFilterOutput out;
  out.origin = m.origin;
  out.values.resize(m.length());
  corr.correlate(m.samples, out.values);
  out.valid_begin = corr.margin();
  out.valid_end = m.length() - corr.margin();
  return out;
}

// ---------------------------------------------------------------------------

std::size_t GridAxis::coarse_count() const {
  if (!(coarse_step > 0.0) || hi < lo) return 0;
  return static_cast<std::size_t>(std::floor((hi - lo) / coarse_step + 1e-9)) + 1;
}

std::size_t GridAxis::refine_ratio() const {
  return static_cast<std::size_t>(std::llround(coarse_step / fine_step));
}

void SearchGrid::validate() const {
  if (axes.empty()) throw ConfigError("search grid has no axes");
  for (const auto& a : axes) {
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || !(a.coarse_step > 0.0) ||
        !(a.fine_step > 0.0)) {
      throw ConfigError("search grid axis needs finite bounds and positive steps");
    }
    if (a.coarse_count() < 3) throw ConfigError("search grid axis has fewer than 3 points");
    const double ratio = a.coarse_step / a.fine_step;
    if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-6 * ratio) {
      throw ConfigError("fine step must divide the coarse step");
    }
  }
}

std::size_t SearchGrid::size() const {
  std::size_t n = axes.empty() ? 0 : 1;
  for (const auto& a : axes) n *= a.coarse_count();
  return n;
}

std::vector<std::size_t> SearchGrid::unravel(std::size_t flat) const {
  std::vector<std::size_t> idx(axes.size());
  for (std::size_t a = axes.size(); a-- > 0;) {
    const std::size_t n = axes[a].coarse_count();
    idx[a] = flat % n;
    flat /= n;
  }
  return idx;
}

ParamPoint SearchGrid::coarse_point(std::size_t flat) const {
  const auto idx = unravel(flat);
  ParamPoint x;
  for (std::size_t a = 0; a < axes.size(); ++a) x.coords.push_back(axes[a].coarse_point(idx[a]));
  return x;
}

bool SearchGrid::on_boundary(std::size_t flat) const {
  const auto idx = unravel(flat);
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (idx[a] == 0 || idx[a] + 1 == axes[a].coarse_count()) return true;
  }
  return false;
}

FilterBank::FilterBank(const SignalModel& model, SearchGrid grid) : grid_(std::move(grid)) {
  grid_.validate();
  const std::size_t n = grid_.size();
  signals_.reserve(n);
  r2_.reserve(n);
  first_ = std::numeric_limits<long>::max();
  last_ = std::numeric_limits<long>::min();
  for (std::size_t i = 0; i < n; ++i) {
    SampledSignal s = model.signal(grid_.coarse_point(i));
    const double r2 = inner_product(s, s);
    if (!(r2 > 0.0)) throw DomainError("zero signal in filter bank");
    // drop samples that cannot affect lambda at double precision
    double peak = 0.0;
    for (double v : s.values) peak = std::max(peak, std::abs(v));
    const double cut = 1e-17 * peak;
    std::size_t lo = 0, hi = s.size();
    while (lo + 1 < hi && std::abs(s.values[lo]) < cut) ++lo;
    while (hi > lo + 1 && std::abs(s.values[hi - 1]) < cut) --hi;
    SampledSignal t;
    t.first = s.first + static_cast<long>(lo);
    t.values.assign(s.values.begin() + static_cast<long>(lo), s.values.begin() + static_cast<long>(hi));
    first_ = std::min(first_, t.first);
    last_ = std::max(last_, t.last());
    signals_.push_back(std::move(t));
    r2_.push_back(r2);
  }

  symmetric_ = true;
  for (std::size_t i = 0; i < signals_.size() && symmetric_; ++i) {
    const auto& s = signals_[i];
    if ((s.first + s.last()) % 2 != 0) {
      symmetric_ = false;
      break;
    }
    const long c = (s.first + s.last()) / 2;
    if (i == 0) center_ = c;
    if (c != center_) symmetric_ = false;
    for (std::size_t k = 0; k < s.size() / 2 && symmetric_; ++k) {
      if (s.values[k] != s.values[s.size() - 1 - k]) symmetric_ = false;
    }
  }
  if (symmetric_) {
    // keep only the centre and right half
    for (auto& s : signals_) {
      const auto half = static_cast<long>(s.size() / 2);
      s.values.erase(s.values.begin(), s.values.begin() + half);
      s.first = center_;
    }
  }
}

namespace {

// four partial sums so the compiler can keep several multiply-adds in flight
double dot4(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace

void FilterBank::evaluate(const Measurement& m, std::vector<double>& llr_out) const {
  llr_out.resize(signals_.size());
  evaluate(m, 0, signals_.size(), llr_out.data());
}

void FilterBank::evaluate(const Measurement& m, std::size_t begin, std::size_t end,
                          double* out) const {
  if (!m.covers(first_, last_)) throw RangeError("filter bank support exceeds measurement");
  end = std::min(end, signals_.size());
  if (symmetric_) {
    thread_local std::vector<double> folded;
    const auto reach = static_cast<std::size_t>(last_ - center_);
    folded.resize(reach + 1);
    const double* mc = m.samples.data() + (center_ - m.origin);
    folded[0] = mc[0];
    for (std::size_t j = 1; j <= reach; ++j) {
      folded[j] = mc[j] + mc[-static_cast<long>(j)];
    }
    for (std::size_t i = begin; i < end; ++i) {
      const auto& s = signals_[i];
      out[i - begin] = dot4(s.values.data(), folded.data(), s.size()) - 0.5 * r2_[i];
    }
    return;
  }
  for (std::size_t i = begin; i < end; ++i) {
    const auto& s = signals_[i];
    const double* mp = m.samples.data() + (s.first - m.origin);
    out[i - begin] = dot4(s.values.data(), mp, s.size()) - 0.5 * r2_[i];
  }
}

std::vector<std::size_t> coarse_maxima(const SearchGrid& grid, std::span<const double> llr) {
  const std::size_t d = grid.dimension();
  std::vector<std::size_t> counts(d), strides(d);
  std::size_t stride = 1;
  for (std::size_t a = d; a-- > 0;) {
    counts[a] = grid.axes[a].coarse_count();
    strides[a] = stride;
    stride *= counts[a];
  }
  std::vector<std::size_t> found;
  for (std::size_t flat = 0; flat < llr.size(); ++flat) {
    bool is_max = true;
    std::size_t rem = flat;
    for (std::size_t a = 0; a < d && is_max; ++a) {
      const std::size_t i = (rem / strides[a]) % counts[a];
      if (i == 0 || i + 1 == counts[a]) {
        is_max = false;
        break;
      }
      const double v = llr[flat];
      // lower neighbour must be strictly smaller; the upper one may tie
      if (!(v > llr[flat - strides[a]]) || !(v >= llr[flat + strides[a]])) is_max = false;
    }
    if (is_max) found.push_back(flat);
  }
  return found;
}

std::size_t coarse_argmax(std::span<const double> llr) {
  return static_cast<std::size_t>(std::distance(llr.begin(), std::max_element(llr.begin(), llr.end())));
}

FieldPeak refine_peak(const SignalModel& model, const Measurement& m, const SearchGrid& grid,
                      std::size_t coarse_flat) {
  const std::size_t d = grid.dimension();
  const auto idx = grid.unravel(coarse_flat);
  std::vector<long> kmin(d), kmax(d);
  for (std::size_t a = 0; a < d; ++a) {
    const auto& ax = grid.axes[a];
    const auto ratio = static_cast<long>(ax.refine_ratio());
    const long centre = static_cast<long>(idx[a]) * ratio;
    const long last = static_cast<long>(ax.coarse_count() - 1) * ratio;
    kmin[a] = std::max(0L, centre - ratio);
    kmax[a] = std::min(last, centre + ratio);
  }

  FieldPeak best;
  best.llr = -std::numeric_limits<double>::infinity();
  std::vector<long> k = kmin;
  ParamPoint x;
  x.coords.resize(d);
  SampledSignal s;
  while (true) {
    for (std::size_t a = 0; a < d; ++a) x[a] = grid.axes[a].fine_point(k[a]);
    s.first = model.fill_signal(x, s.values);
    const LlrValue v = llr(s, inner_product(s, s), m);
    if (v.llr > best.llr) {
      best.llr = v.llr;
      best.y = v.y;
      best.location = x;
      best.fine_index = k;
    }
    std::size_t a = d;
    while (a-- > 0) {
      if (++k[a] <= kmax[a]) break;
      k[a] = kmin[a];
    }
    if (a == static_cast<std::size_t>(-1)) break;
  }
  return best;
}

std::vector<FieldPeak> find_peaks(const SignalModel& model, const Measurement& m,
                                  const SearchGrid& grid) {
  const FilterBank bank(model, grid);
  std::vector<double> values;
  bank.evaluate(m, values);
  std::vector<FieldPeak> peaks;
  for (std::size_t flat : coarse_maxima(bank.grid(), values)) {
    peaks.push_back(refine_peak(model, m, bank.grid(), flat));
  }
  std::sort(peaks.begin(), peaks.end(),
            [](const FieldPeak& a, const FieldPeak& b) { return a.location < b.location; });
  return peaks;
}

}  // namespace jde
