#include "jde/montecarlo.hpp"

#include "jde/errors.hpp"
#include "jde/prediction.hpp"
#include "jde/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

namespace jde {

namespace {

// stream ids keep experiments that share a seed independent
constexpr std::uint64_t kStreamFaSigma = 1;
constexpr std::uint64_t kStreamFaShift = 2;
constexpr std::uint64_t kStreamAccuracy = 3;
constexpr std::uint64_t kStreamOracle = 4;

constexpr std::uint64_t kFaSigmaBlock = 1 << 16;
constexpr std::uint64_t kAccuracyBlock = 500;
constexpr std::uint64_t kOracleBlock = 100;

// Runs f(worker, block) for every block; results land in block order.
template <class R, class F>
std::vector<R> run_blocks(std::size_t n_blocks, std::size_t workers, F&& f) {
  std::vector<R> out(n_blocks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&](std::size_t w) {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        out[b] = f(w, b);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n_blocks);
        return;
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n_blocks, 1));
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int resolve_radius(int requested, double max_width) {
  return requested > 0 ? requested : GaussianPulseModel::default_support_radius(max_width);
}

Measurement blank_measurement(long first, long last) {
  Measurement m;
  m.origin = first;
  m.samples.assign(static_cast<std::size_t>(last - first + 1), 0.0);
  return m;
}

void add_signal(const SampledSignal& s, Measurement& m) {
  for (std::size_t k = 0; k < s.size(); ++k) {
    const long xi = s.first + static_cast<long>(k);
    if (xi < m.first() || xi > m.last()) throw RangeError("injected signal leaves the measurement");
    m.samples[static_cast<std::size_t>(xi - m.origin)] += s.values[k];
  }
}

// Width-axis search shared by the false-alarm and oracle experiments: a
// coarse bank for the global maximum and a bank on every fine point for the
// refinement.
struct WidthSearch {
  GaussianPulseModel model;
  SearchGrid coarse;
  FilterBank coarse_bank;
  FilterBank fine_bank;
  std::size_t ratio;
  std::vector<double> delta;  // lambda_r - lambda0 on the fine grid

  WidthSearch(double amplitude, double reference_width, const GridAxis& axis, int radius)
      : model(amplitude, {PulseAxis::Width}, 0.0, reference_width, radius),
        coarse{{axis}},
        coarse_bank(model, coarse),
        fine_bank(model, SearchGrid{{GridAxis{axis.lo, axis.lo + axis.fine_step *
                                                   static_cast<double>((axis.coarse_count() - 1) * axis.refine_ratio()),
                                              axis.fine_step, axis.fine_step}}}),
        ratio(axis.refine_ratio()) {
    const ThresholdRule rule(model, PriorCostSpec::from_lambda0(0.0, ParamPoint{reference_width}));
    delta.resize(fine_bank.size());
    for (std::size_t k = 0; k < delta.size(); ++k) delta[k] = rule(ParamPoint{fine_point(k)});
  }

  double fine_point(std::size_t k) const { return fine_bank.grid().axes[0].coarse_point(k); }
  std::size_t coarse_count() const { return coarse_bank.size(); }
  long first() const { return std::min(coarse_bank.first_index(), fine_bank.first_index()); }
  long last() const { return std::max(coarse_bank.last_index(), fine_bank.last_index()); }

  // Fine-grid argmax within one coarse cell of coarse index i.
  std::pair<std::size_t, double> refine(const Measurement& m, std::size_t i,
                                        std::vector<double>& buf) const {
    const std::size_t centre = i * ratio;
    const std::size_t lo = centre >= ratio ? centre - ratio : 0;
    const std::size_t hi = std::min(centre + ratio + 1, fine_bank.size());
    buf.resize(hi - lo);
    fine_bank.evaluate(m, lo, hi, buf.data());
    const auto best = static_cast<std::size_t>(std::max_element(buf.begin(), buf.end()) - buf.begin());
    return {lo + best, buf[best]};
  }
};

}  // namespace

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::FaSigma: return "fa_sigma";
    case ExperimentKind::FaShift: return "fa_shift";
    case ExperimentKind::Accuracy: return "accuracy";
    case ExperimentKind::OracleAgreement: return "oracle_agreement";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::FaSigma, ExperimentKind::FaShift, ExperimentKind::Accuracy,
                 ExperimentKind::OracleAgreement}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown experiment kind '" + name + "'");
}

// ---------------------------------------------------------------------------

std::uint64_t DensityHistogram::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

double DensityHistogram::integral() const {
  double s = 0.0;
  for (double v : density) s += v;
  return s * bin_width;
}

double DensityHistogram::density_se(std::size_t i) const {
  if (window_counts[i] == 0) return 0.0;
  return density[i] / std::sqrt(static_cast<double>(window_counts[i]));
}

DensityHistogram make_density_histogram(std::vector<double> centers,
                                        std::vector<std::uint64_t> counts, double bin_width,
                                        std::size_t half_window, std::uint64_t n_trials) {
  if (centers.size() != counts.size()) throw ConfigError("histogram centers and counts differ in size");
  if (n_trials == 0) throw ConfigError("histogram needs n_trials >= 1");
  DensityHistogram h;
  h.centers = std::move(centers);
  h.counts = std::move(counts);
  h.bin_width = bin_width;
  h.half_window = half_window;
  h.n_trials = n_trials;
  const std::size_t n = h.counts.size();
  std::vector<std::uint64_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + h.counts[i];
  h.window_counts.resize(n);
  h.density.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half_window ? i - half_window : 0;
    const std::size_t hi = std::min(n, i + half_window + 1);
    h.window_counts[i] = prefix[hi] - prefix[lo];
    const double width = static_cast<double>(hi - lo) * bin_width;
    h.density[i] = static_cast<double>(h.window_counts[i]) / (width * static_cast<double>(n_trials));
  }
  return h;
}

std::pair<double, double> wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / (1.0 + z2 / nn);
  // the interval always reaches the boundary when p sits on it
  const double lo = k == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = k == n ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

// ---------------------------------------------------------------------------

void FaSigmaConfig::validate() const {
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (!(amplitude > 0.0)) throw ConfigError("amplitude must be positive");
  if (!(axis.lo > 0.0)) throw ConfigError("width axis must stay above zero");
  if (lambda0.empty()) throw ConfigError("lambda0 list is empty");
  SearchGrid{{axis}}.validate();
}

FaSigmaResult run_fa_sigma(const FaSigmaConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const WidthSearch search(cfg.amplitude, cfg.reference_width, cfg.axis,
                           resolve_radius(cfg.support_radius, cfg.axis.hi));
  const std::size_t nl = cfg.lambda0.size();
  const double min_l0 = *std::min_element(cfg.lambda0.begin(), cfg.lambda0.end());
  const double min_delta = *std::min_element(search.delta.begin(), search.delta.end());
  const double refine_floor = min_l0 + min_delta - cfg.refine_margin;
  const std::size_t nc = search.coarse_count();

  struct Hit {
    std::uint32_t fine;
    double llr;
  };
  struct Block {
    std::vector<Hit> hits;
    std::vector<std::uint64_t> boundary_over;
    std::uint64_t boundary = 0;
    std::uint64_t refined = 0;
  };

  const std::uint64_t n_blocks = (cfg.n_trials + kFaSigmaBlock - 1) / kFaSigmaBlock;
  auto blocks = run_blocks<Block>(n_blocks, opts.workers, [&](std::size_t, std::size_t b) {
    Block out;
    out.boundary_over.assign(nl, 0);
    Measurement m = blank_measurement(search.first(), search.last());
    std::vector<double> coarse, fine;
    const std::uint64_t begin = b * kFaSigmaBlock;
    const std::uint64_t end = std::min(cfg.n_trials, begin + kFaSigmaBlock);
    for (std::uint64_t t = begin; t < end; ++t) {
      NormalSource noise(opts.seed, kStreamFaSigma, t);
      noise.fill(m.samples);
      search.coarse_bank.evaluate(m, coarse);
      const std::size_t i = coarse_argmax(coarse);
      if (i == 0 || i + 1 == nc) {
        ++out.boundary;
        const double d = search.delta[i * search.ratio];
        for (std::size_t l = 0; l < nl; ++l) {
          if (coarse[i] > cfg.lambda0[l] + d) ++out.boundary_over[l];
        }
        continue;
      }
      if (coarse[i] <= refine_floor) continue;
      ++out.refined;
      const auto [k, lm] = search.refine(m, i, fine);
      if (lm > min_l0 + search.delta[k]) out.hits.push_back({static_cast<std::uint32_t>(k), lm});
    }
    return out;
  });

  FaSigmaResult res;
  res.n_trials = cfg.n_trials;
  std::vector<std::vector<std::uint64_t>> counts(nl, std::vector<std::uint64_t>(search.fine_bank.size(), 0));
  std::vector<std::uint64_t> boundary_over(nl, 0);
  for (const auto& blk : blocks) {
    res.refined_trials += blk.refined;
    res.boundary_maxima += blk.boundary;
    for (std::size_t l = 0; l < nl; ++l) boundary_over[l] += blk.boundary_over[l];
    for (const auto& h : blk.hits) {
      for (std::size_t l = 0; l < nl; ++l) {
        if (h.llr > cfg.lambda0[l] + search.delta[h.fine]) ++counts[l][h.fine];
      }
    }
  }
  std::vector<double> centers(search.fine_bank.size());
  for (std::size_t k = 0; k < centers.size(); ++k) centers[k] = search.fine_point(k);
  const double n = static_cast<double>(cfg.n_trials);
  for (std::size_t l = 0; l < nl; ++l) {
    FaSigmaLevel lev;
    lev.lambda0 = cfg.lambda0[l];
    lev.histogram = make_density_histogram(centers, counts[l], cfg.axis.fine_step, cfg.half_window,
                                           cfg.n_trials);
    lev.count = lev.histogram.total();
    lev.boundary_count = boundary_over[l];
    lev.rate = static_cast<double>(lev.count) / n;
    lev.rate_se = std::sqrt(static_cast<double>(lev.count)) / n;
    res.levels.push_back(std::move(lev));
  }
  res.seconds = elapsed(t0);
  return res;
}

// ---------------------------------------------------------------------------

void FaShiftConfig::validate() const {
  if (!(width > 0.0)) throw ConfigError("pulse width must be positive");
  if (amplitudes.empty()) throw ConfigError("amplitude sweep is empty");
  for (double a : amplitudes) {
    if (!(a > 0.0)) throw ConfigError("amplitudes must be positive");
  }
  if (total_samples < 1) throw ConfigError("total_samples must be >= 1");
  if (realization_length < 64) throw ConfigError("realization_length is too short");
}

FaShiftResult run_fa_shift(const FaShiftConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const GaussianPulseModel unit(1.0, {PulseAxis::Shift}, 0.0, cfg.width,
                                resolve_radius(cfg.support_radius, cfg.width));
  const SampledSignal pulse = unit.signal(ParamPoint{0.0});
  const double r1 = std::sqrt(inner_product(pulse, pulse));
  const std::size_t n = cfg.realization_length;
  const auto margin = static_cast<std::size_t>(std::max(-pulse.first, pulse.last()));
  if (n < 2 * margin + 8) throw ConfigError("realization_length is too short for the pulse");
  // local maxima need both neighbours inside the valid range
  const std::size_t first = margin + 1;
  const std::size_t last = n - margin - 2;
  const std::uint64_t usable = last - first + 1;
  const std::size_t half = n / 2;
  const std::uint64_t n_real = (cfg.total_samples + usable - 1) / usable;

  // lambda = A v - A^2 r1^2 / 2 > lambda0 needs v > lambda0 / A + A r1^2 / 2 >= r1 sqrt(2 lambda0)
  const double floor_v = cfg.lambda0 > 0.0 ? r1 * std::sqrt(2.0 * cfg.lambda0) : -1e300;

  struct Candidate {
    double v;
    bool left;
  };
  struct Worker {
    std::unique_ptr<ShiftCorrelator> corr;
    std::vector<double> in, out;
  };
  const std::size_t workers = std::clamp<std::size_t>(opts.workers, 1, std::max<std::uint64_t>(n_real, 1));
  std::vector<Worker> state(workers);

  auto blocks = run_blocks<std::vector<Candidate>>(n_real, workers, [&](std::size_t w, std::size_t b) {
    auto& ws = state[w];
    if (!ws.corr) {
      ws.corr = std::make_unique<ShiftCorrelator>(pulse, n);
      ws.in.resize(n);
      ws.out.resize(n);
    }
    NormalSource noise(opts.seed, kStreamFaShift, b);
    noise.fill(ws.in);
    ws.corr->correlate(ws.in, ws.out);
    std::vector<Candidate> found;
    const double* o = ws.out.data();
    for (std::size_t i = first; i <= last; ++i) {
      const double v = o[i];
      if (v > floor_v && v > o[i - 1] && v >= o[i + 1]) found.push_back({v, i < half});
    }
    return found;
  });

  FaShiftResult res;
  res.realizations = n_real;
  res.usable_samples = n_real * usable;
  res.unit_snr = r1;
  const double total = static_cast<double>(res.usable_samples);
  for (double a : cfg.amplitudes) {
    FaShiftPoint p;
    p.amplitude = a;
    p.r = a * r1;
    const double offset = 0.5 * a * a * r1 * r1;
    for (const auto& blk : blocks) {
      for (const auto& c : blk) {
        if (a * c.v - offset > cfg.lambda0) {
          ++p.count;
          if (c.left) ++p.left; else ++p.right;
        }
      }
    }
    p.density = static_cast<double>(p.count) / total;
    p.density_se = std::sqrt(static_cast<double>(p.count)) / total;
    const ModelGeometry g = geometry(unit.with_amplitude(a), ParamPoint{0.0});
    p.predicted = fa_density_homogeneous(LocalGeometry::from(g), cfg.lambda0);
    res.points.push_back(p);
  }
  res.seconds = elapsed(t0);
  return res;
}

// ---------------------------------------------------------------------------

void AccuracyConfig::validate() const {
  if (n_trials < 2) throw ConfigError("accuracy runs need n_trials >= 2");
  if (!(width > 0.0)) throw ConfigError("pulse width must be positive");
  if (amplitudes.empty()) throw ConfigError("amplitude list is empty");
  if (!(span_sd > 0.0) || !(min_width > 0.0)) throw ConfigError("search span must be positive");
  SearchGrid{{GridAxis{-1.0, 1.0, shift_coarse, shift_fine},
              GridAxis{1.0, 1.0 + 2.0 * width_coarse, width_coarse, width_fine}}}
      .validate();
}

AccuracyResult run_accuracy(const AccuracyConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  AccuracyResult res;

  for (std::size_t ai = 0; ai < cfg.amplitudes.size(); ++ai) {
    const double amp = cfg.amplitudes[ai];
    const ParamPoint truth_nominal{0.0, cfg.width};
    const GaussianPulseModel probe(amp, {PulseAxis::Shift, PulseAxis::Width}, 0.0, cfg.width,
                                   GaussianPulseModel::default_support_radius(cfg.width));
    const Eigen::MatrixXd crb = cramer_rao_cov(probe, truth_nominal);
    const double sd_shift = std::sqrt(crb(0, 0));
    const double sd_width = std::sqrt(crb(1, 1));

    GridAxis sx;
    const double kx = std::ceil(cfg.span_sd * sd_shift / cfg.shift_coarse);
    sx.lo = -kx * cfg.shift_coarse;
    sx.hi = kx * cfg.shift_coarse;
    sx.coarse_step = cfg.shift_coarse;
    sx.fine_step = cfg.shift_fine;
    GridAxis sw;
    const double below = std::min(cfg.span_sd * sd_width, cfg.width - cfg.min_width);
    sw.lo = cfg.width - std::floor(below / cfg.width_coarse) * cfg.width_coarse;
    sw.hi = cfg.width + std::ceil(cfg.span_sd * sd_width / cfg.width_coarse) * cfg.width_coarse;
    sw.coarse_step = cfg.width_coarse;
    sw.fine_step = cfg.width_fine;
    // refinement may step one coarse cell past the box
    const double reach_w = sw.hi + cfg.width_coarse;
    const GaussianPulseModel model(amp, {PulseAxis::Shift, PulseAxis::Width}, 0.0, cfg.width,
                                   GaussianPulseModel::default_support_radius(reach_w));
    const SearchGrid grid{{sx, sw}};
    const FilterBank bank(model, grid);
    const long pad = model.support_radius() + 2;
    const long m_first = static_cast<long>(std::floor(sx.lo - cfg.shift_coarse)) - pad;
    const long m_last = static_cast<long>(std::ceil(sx.hi + cfg.shift_coarse)) + pad;
    const std::size_t nx = sx.coarse_count();
    const std::size_t nw = sw.coarse_count();

    struct Block {
      std::uint64_t n = 0, boundary = 0;
      Eigen::Vector2d sum = Eigen::Vector2d::Zero();
      Eigen::Matrix2d sum2 = Eigen::Matrix2d::Zero();
    };
    const std::uint64_t n_blocks = (cfg.n_trials + kAccuracyBlock - 1) / kAccuracyBlock;
    const std::uint64_t stream = (kStreamAccuracy << 32) | ai;
    auto blocks = run_blocks<Block>(n_blocks, opts.workers, [&](std::size_t, std::size_t b) {
      Block out;
      Measurement m = blank_measurement(m_first, m_last);
      std::vector<double> values;
      std::vector<double> sig;
      const std::uint64_t begin = b * kAccuracyBlock;
      const std::uint64_t end = std::min(cfg.n_trials, begin + kAccuracyBlock);
      for (std::uint64_t t = begin; t < end; ++t) {
        NormalSource noise(opts.seed, stream, t);
        const double shift = noise.engine().uniform() - 0.5;
        noise.fill(m.samples);
        const ParamPoint truth{shift, cfg.width};
        add_signal(model.signal(truth), m);
        bank.evaluate(m, values);
        const std::size_t flat = coarse_argmax(values);
        const std::size_t ix = flat / nw;
        const std::size_t iw = flat % nw;
        if (ix == 0 || ix + 1 == nx || iw == 0 || iw + 1 == nw) ++out.boundary;
        const FieldPeak peak = refine_peak(model, m, grid, flat);
        const Eigen::Vector2d e(peak.location[0] - shift, peak.location[1] - cfg.width);
        ++out.n;
        out.sum += e;
        out.sum2 += e * e.transpose();
      }
      return out;
    });

    Block tot;
    for (const auto& blk : blocks) {
      tot.n += blk.n;
      tot.boundary += blk.boundary;
      tot.sum += blk.sum;
      tot.sum2 += blk.sum2;
    }
    AccuracyPoint p;
    p.amplitude = amp;
    p.r = snr(model, truth_nominal);
    p.trials = tot.n;
    p.boundary = tot.boundary;
    const double nn = static_cast<double>(tot.n);
    p.mean = tot.sum / nn;
    p.covariance = (tot.sum2 - nn * p.mean * p.mean.transpose()) / (nn - 1.0);
    p.mean_se = (p.covariance.diagonal() / nn).cwiseSqrt();
    p.bound = crb;
    p.correlation = p.covariance(0, 1) / std::sqrt(p.covariance(0, 0) * p.covariance(1, 1));
    res.points.push_back(p);
  }
  res.seconds = elapsed(t0);
  return res;
}

// ---------------------------------------------------------------------------

void OracleConfig::validate() const {
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (lambda0.empty()) throw ConfigError("lambda0 list is empty");
  if (!(amplitude > 0.0)) throw ConfigError("amplitude must be positive");
  if (!(signal_width_hi >= signal_width_lo) || !(signal_width_lo > 0.0)) {
    throw ConfigError("injected width range is invalid");
  }
  if (!(axis.lo > 0.0)) throw ConfigError("width axis must stay above zero");
  SearchGrid{{axis}}.validate();
}

OracleResult run_oracle_agreement(const OracleConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const WidthSearch search(cfg.amplitude, cfg.reference_width, cfg.axis,
                           resolve_radius(cfg.support_radius, cfg.axis.hi));
  const std::size_t nc = search.coarse_count();
  std::vector<PriorCostSpec> priors;
  for (double l : cfg.lambda0) priors.push_back(PriorCostSpec::from_lambda0(l, ParamPoint{cfg.reference_width}));

  struct Block {
    OracleResult r;
  };
  const std::uint64_t n_blocks = (cfg.n_trials + kOracleBlock - 1) / kOracleBlock;
  auto blocks = run_blocks<Block>(n_blocks, opts.workers, [&](std::size_t, std::size_t b) {
    Block out;
    Measurement m = blank_measurement(search.first(), search.last());
    std::vector<double> coarse, fine;
    const std::uint64_t begin = b * kOracleBlock;
    const std::uint64_t end = std::min(cfg.n_trials, begin + kOracleBlock);
    for (std::uint64_t t = begin; t < end; ++t) {
      ++out.r.trials;
      NormalSource noise(opts.seed, kStreamOracle, t);
      const bool with_signal = !cfg.noise_only_trials || t % 2 == 1;
      const double w = cfg.signal_width_lo +
                       (cfg.signal_width_hi - cfg.signal_width_lo) * noise.engine().uniform();
      noise.fill(m.samples);
      if (with_signal) add_signal(search.model.signal(ParamPoint{w}), m);
      const PriorCostSpec& pr = priors[t % priors.size()];

      search.coarse_bank.evaluate(m, coarse);
      const std::size_t i = coarse_argmax(coarse);
      if (i == 0 || i + 1 == nc) {
        ++out.r.boundary;
        continue;
      }
      const auto [k, lm] = search.refine(m, i, fine);
      FieldPeak peak;
      peak.location = ParamPoint{search.fine_point(k)};
      peak.llr = lm;
      const bool accept = !decide(search.model, pr, std::span<const FieldPeak>(&peak, 1)).empty();
      const BayesStatistic stat =
          bayes_statistic_numeric(search.model, pr, peak.location, m, cfg.quadrature);
      if (stat.truncated) ++out.r.truncated;
      const bool same = accept == stat.accept();
      ++out.r.compared;
      if (same) ++out.r.agree;
      if (accept && stat.accept()) ++out.r.both_accept;
      if (with_signal) {
        ++out.r.signal_compared;
        if (same) ++out.r.signal_agree;
      }
    }
    return out;
  });

  OracleResult res;
  for (const auto& blk : blocks) {
    res.trials += blk.r.trials;
    res.compared += blk.r.compared;
    res.agree += blk.r.agree;
    res.signal_compared += blk.r.signal_compared;
    res.signal_agree += blk.r.signal_agree;
    res.boundary += blk.r.boundary;
    res.truncated += blk.r.truncated;
    res.both_accept += blk.r.both_accept;
  }
  res.fraction = res.compared ? static_cast<double>(res.agree) / static_cast<double>(res.compared) : 0.0;
  std::tie(res.ci_lo, res.ci_hi) = wilson_interval(res.agree, res.compared);
  res.seconds = elapsed(t0);
  return res;
}

}  // namespace jde
