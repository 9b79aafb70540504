#include "jde/signal_model.hpp"

#include "jde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace jde {

namespace {

constexpr double kTailTolerance = 1e-12;

long nearest_index(double v) { return static_cast<long>(std::floor(v + 0.5)); }

}  // namespace

double inner_product(const SampledSignal& a, const SampledSignal& b) {
  const long lo = std::max(a.first, b.first);
  const long hi = std::min(a.last(), b.last());
  double sum = 0.0;
  for (long i = lo; i <= hi; ++i) {
    sum += a.values[static_cast<std::size_t>(i - a.first)] *
           b.values[static_cast<std::size_t>(i - b.first)];
  }
  return sum;
}

const char* to_string(PulseAxis axis) {
  return axis == PulseAxis::Shift ? "shift" : "width";
}

GaussianPulseModel::GaussianPulseModel(double amplitude, std::vector<PulseAxis> active,
                                       double fixed_shift, double fixed_width,
                                       int support_radius)
    : amplitude_(amplitude),
      active_(std::move(active)),
      fixed_shift_(fixed_shift),
      fixed_width_(fixed_width),
      support_radius_(support_radius) {
  if (!(amplitude_ > 0.0) || !std::isfinite(amplitude_)) {
    throw DomainError("pulse amplitude must be positive and finite");
  }
  if (active_.empty() || active_.size() > 2) {
    throw DomainError("pulse model needs one or two free axes");
  }
  if (active_.size() == 2 && active_[0] == active_[1]) {
    throw DomainError("duplicate free axis in pulse model");
  }
  if (support_radius_ < 1) throw DomainError("support radius must be at least 1");
  if (!std::isfinite(fixed_shift_)) throw DomainError("fixed shift must be finite");
  if (!(fixed_width_ > 0.0) || !std::isfinite(fixed_width_)) {
    throw DomainError("fixed width must be positive");
  }
}

int GaussianPulseModel::default_support_radius(double max_width) {
  return static_cast<int>(std::ceil(8.0 * max_width));
}

std::string GaussianPulseModel::axis_name(std::size_t axis) const {
  return to_string(active_.at(axis));
}

int GaussianPulseModel::axis_index(PulseAxis axis) const noexcept {
  for (std::size_t i = 0; i < active_.size(); ++i) {
    if (active_[i] == axis) return static_cast<int>(i);
  }
  return -1;
}

PulseState GaussianPulseModel::state(const ParamPoint& x) const {
  PulseState st{fixed_shift_, fixed_width_};
  for (std::size_t i = 0; i < active_.size(); ++i) {
    (active_[i] == PulseAxis::Shift ? st.shift : st.width) = x[i];
  }
  return st;
}

ParamPoint GaussianPulseModel::point(const PulseState& st) const {
  ParamPoint x;
  for (auto axis : active_) x.coords.push_back(axis == PulseAxis::Shift ? st.shift : st.width);
  return x;
}

double GaussianPulseModel::truncation_tail(const ParamPoint& x) const {
  const PulseState st = state(x);
  const long center = nearest_index(st.shift);
  // nearest discarded sample on either side
  const double left = st.shift - static_cast<double>(center - support_radius_ - 1);
  const double right = static_cast<double>(center + support_radius_ + 1) - st.shift;
  const double d = std::min(left, right);
  return std::exp(-d * d / (2.0 * st.width * st.width));
}

void GaussianPulseModel::validate(const ParamPoint& x) const {
  if (x.dim() != active_.size()) {
    std::ostringstream os;
    os << "parameter point has " << x.dim() << " coordinates, model expects "
       << active_.size();
    throw DomainError(os.str());
  }
  for (double c : x.coords) {
    if (!std::isfinite(c)) throw DomainError("parameter coordinates must be finite");
  }
  const PulseState st = state(x);
  if (!(st.width > 0.0)) throw DomainError("pulse width must be positive");
  if (truncation_tail(x) > kTailTolerance) {
    std::ostringstream os;
    os << "support radius " << support_radius_ << " too small for width " << st.width;
    throw DomainError(os.str());
  }
}

long GaussianPulseModel::fill_signal(const ParamPoint& x, std::vector<double>& values) const {
  validate(x);
  const PulseState st = state(x);
  const long center = nearest_index(st.shift);
  const long first = center - support_radius_;
  const std::size_t n = 2 * static_cast<std::size_t>(support_radius_) + 1;
  values.resize(n);
  const double inv = 1.0 / (2.0 * st.width * st.width);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = static_cast<double>(first + static_cast<long>(k)) - st.shift;
    values[k] = amplitude_ * std::exp(-u * u * inv);
  }
  return first;
}

std::vector<SampledSignal> GaussianPulseModel::gradient(const ParamPoint& x) const {
  const SampledSignal s = signal(x);
  const PulseState st = state(x);
  const double w2 = st.width * st.width;
  const double w3 = w2 * st.width;
  std::vector<SampledSignal> grad(active_.size());
  for (std::size_t i = 0; i < active_.size(); ++i) {
    grad[i].first = s.first;
    grad[i].values.resize(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double u = static_cast<double>(s.first + static_cast<long>(k)) - st.shift;
      grad[i].values[k] = active_[i] == PulseAxis::Shift ? s.values[k] * u / w2
                                                          : s.values[k] * u * u / w3;
    }
  }
  return grad;
}

GaussianPulseModel GaussianPulseModel::with_amplitude(double amplitude) const {
  return GaussianPulseModel(amplitude, active_, fixed_shift_, fixed_width_, support_radius_);
}

SampledSignal signal_vector(const SignalModel& model, const ParamPoint& x) {
  return model.signal(x);
}

double snr(const SignalModel& model, const ParamPoint& x) {
  const SampledSignal s = model.signal(x);
  return std::sqrt(inner_product(s, s));
}

double correlation(const SignalModel& model, const ParamPoint& x1, const ParamPoint& x2) {
  const SampledSignal a = model.signal(x1);
  const SampledSignal b = model.signal(x2);
  const double raa = inner_product(a, a);
  const double rbb = inner_product(b, b);
  if (!(raa > 0.0) || !(rbb > 0.0)) throw DomainError("correlation of a zero signal");
  if (&x1 == &x2 || x1 == x2) return 1.0;
  return inner_product(a, b) / std::sqrt(raa * rbb);
}

ModelGeometry geometry(const SignalModel& model, const ParamPoint& x) {
  const SampledSignal s = model.signal(x);
  const std::vector<SampledSignal> ds = model.gradient(x);
  const auto d = static_cast<Eigen::Index>(ds.size());

  ModelGeometry g;
  const double r2 = inner_product(s, s);
  if (!(r2 > 0.0)) throw DomainError("zero signal has no geometry");
  g.r = std::sqrt(r2);

  Eigen::MatrixXd gram(d, d);
  g.grad_r.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    g.grad_r(i) = inner_product(ds[i], s) / g.r;
    for (Eigen::Index j = 0; j <= i; ++j) {
      gram(i, j) = gram(j, i) = inner_product(ds[i], ds[j]);
    }
  }
  g.Q = gram / r2;
  const Eigen::VectorXd lg = g.grad_r / g.r;
  g.M = g.Q - lg * lg.transpose();

  Eigen::LLT<Eigen::MatrixXd> q_llt(g.Q);
  Eigen::LLT<Eigen::MatrixXd> m_llt(g.M);
  if (q_llt.info() != Eigen::Success || m_llt.info() != Eigen::Success) {
    throw GeometryError("curvature matrix is not positive definite");
  }
  const double det = (g.Q / (2.0 * std::numbers::pi)).determinant();
  if (!(det > 0.0)) throw GeometryError("curvature matrix is singular");
  g.V = 1.0 / std::sqrt(det);
  g.gamma = lg.dot(m_llt.solve(lg));
  g.zeta = g.gamma / (1.0 + g.gamma);
  return g;
}

}  // namespace jde
