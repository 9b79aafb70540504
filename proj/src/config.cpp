#include "jde/config.hpp"

#include "jde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace jde {

using nlohmann::json;

namespace {

void check_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError("'" + where + "' must be a JSON object");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  check_object(j, where);
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) throw ConfigError("unknown key '" + key + "' in '" + where + "'");
  }
}

double number(const json& j, const std::string& key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError("'" + where + "." + key + "' must be a number");
  return v.get<double>();
}

template <class T>
T integer(const json& j, const std::string& key, const std::string& where) {
  const json& v = j.at(key);
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<T>(v.get<long long>());
  // 2e7 style literals arrive as floats
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<T>(d);
  }
  throw ConfigError("'" + where + "." + key + "' must be a non-negative integer");
}

std::vector<double> numbers(const json& j, const std::string& key, const std::string& where) {
  const json& v = j.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw ConfigError("'" + where + "." + key + "' must be a number or array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError("'" + where + "." + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

bool flag(const json& j, const std::string& key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError("'" + where + "." + key + "' must be true or false");
  return v.get<bool>();
}

std::string text(const json& j, const std::string& key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_string()) throw ConfigError("'" + where + "." + key + "' must be a string");
  return v.get<std::string>();
}

PulseAxis axis_from(const std::string& name) {
  if (name == "shift") return PulseAxis::Shift;
  if (name == "width") return PulseAxis::Width;
  throw ConfigError("unknown model axis '" + name + "' (expected shift or width)");
}

ModelBlock parse_model(const json& j) {
  check_keys(j, "model", {"amplitude", "shift", "width", "active", "support_radius"});
  ModelBlock m;
  if (j.contains("amplitude")) m.amplitude = number(j, "amplitude", "model");
  if (j.contains("shift")) m.shift = number(j, "shift", "model");
  if (j.contains("width")) m.width = number(j, "width", "model");
  if (j.contains("support_radius")) m.support_radius = integer<int>(j, "support_radius", "model");
  if (j.contains("active")) {
    const json& a = j.at("active");
    if (!a.is_array() || a.empty()) throw ConfigError("'model.active' must be a non-empty array");
    m.active.clear();
    for (const auto& e : a) {
      if (!e.is_string()) throw ConfigError("'model.active' must hold axis names");
      const PulseAxis ax = axis_from(e.get<std::string>());
      if (std::find(m.active.begin(), m.active.end(), ax) != m.active.end()) {
        throw ConfigError("'model.active' lists an axis twice");
      }
      m.active.push_back(ax);
    }
  }
  if (!(m.amplitude > 0.0)) throw ConfigError("'model.amplitude' must be positive");
  if (!(m.width > 0.0)) throw ConfigError("'model.width' must be positive");
  return m;
}

DecisionBlock parse_decision(const json& j) {
  check_keys(j, "decision", {"lambda0", "reference", "a0", "prior_density", "cost"});
  DecisionBlock d;
  if (j.contains("lambda0")) {
    d.lambda0 = numbers(j, "lambda0", "decision");
    if (d.lambda0.empty()) throw ConfigError("'decision.lambda0' is empty");
  }
  if (j.contains("reference")) d.reference = ParamPoint(numbers(j, "reference", "decision"));
  if (j.contains("a0")) d.a0 = number(j, "a0", "decision");
  if (j.contains("cost")) d.cost = number(j, "cost", "decision");
  if (j.contains("prior_density")) {
    const json& p = j.at("prior_density");
    if (p.is_number()) {
      d.prior_density = PriorDensity::constant(p.get<double>());
    } else {
      check_keys(p, "decision.prior_density", {"axis", "at", "values"});
      const auto axis = p.contains("axis") ? integer<std::size_t>(p, "axis", "decision.prior_density") : 0;
      d.prior_density = PriorDensity::tabulated(axis, numbers(p, "at", "decision.prior_density"),
                                                numbers(p, "values", "decision.prior_density"));
    }
  }
  // validates the either/or rule once, with a placeholder reference
  const std::optional<double> l0 = d.lambda0.empty() ? std::nullopt : std::optional<double>(d.lambda0[0]);
  PriorCostSpec::from_fields(d.a0, d.prior_density, d.cost, l0,
                             d.reference ? d.reference : std::optional<ParamPoint>(ParamPoint{1.0}));
  return d;
}

SearchGrid parse_grid(const json& j) {
  check_keys(j, "grid", {"axes"});
  if (!j.contains("axes") || !j.at("axes").is_array()) throw ConfigError("'grid.axes' must be an array");
  SearchGrid g;
  for (const auto& a : j.at("axes")) {
    check_keys(a, "grid.axes[]", {"lo", "hi", "coarse", "fine"});
    for (const char* k : {"lo", "hi", "coarse", "fine"}) {
      if (!a.contains(k)) throw ConfigError(std::string("'grid.axes[]' needs '") + k + "'");
    }
    g.axes.push_back(GridAxis{number(a, "lo", "grid.axes[]"), number(a, "hi", "grid.axes[]"),
                              number(a, "coarse", "grid.axes[]"), number(a, "fine", "grid.axes[]")});
  }
  g.validate();
  return g;
}

MonteCarloBlock parse_montecarlo(const json& j) {
  const char* w = "montecarlo";
  check_keys(j, w,
             {"n_trials", "seed", "workers", "half_window", "refine_margin", "amplitudes", "snr",
              "total_samples", "realization_length", "span_sd", "min_width", "shift_coarse",
              "shift_fine", "width_coarse", "width_fine", "signal_width_lo", "signal_width_hi",
              "noise_only_trials", "radial_points", "angular_points"});
  MonteCarloBlock m;
  if (j.contains("n_trials")) m.n_trials = integer<std::uint64_t>(j, "n_trials", w);
  if (j.contains("seed")) m.seed = integer<std::uint64_t>(j, "seed", w);
  if (j.contains("workers")) m.workers = integer<std::size_t>(j, "workers", w);
  if (j.contains("half_window")) m.half_window = integer<std::size_t>(j, "half_window", w);
  if (j.contains("refine_margin")) m.refine_margin = number(j, "refine_margin", w);
  if (j.contains("amplitudes")) m.amplitudes = numbers(j, "amplitudes", w);
  if (j.contains("snr")) m.snr = numbers(j, "snr", w);
  if (j.contains("total_samples")) m.total_samples = integer<std::uint64_t>(j, "total_samples", w);
  if (j.contains("realization_length")) m.realization_length = integer<std::size_t>(j, "realization_length", w);
  if (j.contains("span_sd")) m.span_sd = number(j, "span_sd", w);
  if (j.contains("min_width")) m.min_width = number(j, "min_width", w);
  if (j.contains("shift_coarse")) m.shift_coarse = number(j, "shift_coarse", w);
  if (j.contains("shift_fine")) m.shift_fine = number(j, "shift_fine", w);
  if (j.contains("width_coarse")) m.width_coarse = number(j, "width_coarse", w);
  if (j.contains("width_fine")) m.width_fine = number(j, "width_fine", w);
  if (j.contains("signal_width_lo")) m.signal_width_lo = number(j, "signal_width_lo", w);
  if (j.contains("signal_width_hi")) m.signal_width_hi = number(j, "signal_width_hi", w);
  if (j.contains("noise_only_trials")) m.noise_only_trials = flag(j, "noise_only_trials", w);
  if (j.contains("radial_points")) m.radial_points = integer<std::size_t>(j, "radial_points", w);
  if (j.contains("angular_points")) m.angular_points = integer<std::size_t>(j, "angular_points", w);
  if (!m.amplitudes.empty() && !m.snr.empty()) {
    throw ConfigError("give either 'montecarlo.amplitudes' or 'montecarlo.snr', not both");
  }
  return m;
}

PredictionBlock parse_prediction(const json& j) {
  const char* w = "prediction";
  check_keys(j, w, {"formula", "step", "oc_lambda_lo", "oc_lambda_hi", "oc_step", "oc_nodes"});
  PredictionBlock p;
  if (j.contains("formula")) {
    const std::string f = text(j, "formula", w);
    if (f == "general") p.formula = FaFormula::General;
    else if (f == "homogeneous") p.formula = FaFormula::Homogeneous;
    else throw ConfigError("'prediction.formula' must be general or homogeneous");
  }
  if (j.contains("step")) p.step = number(j, "step", w);
  if (j.contains("oc_lambda_lo")) p.oc_lambda_lo = number(j, "oc_lambda_lo", w);
  if (j.contains("oc_lambda_hi")) p.oc_lambda_hi = number(j, "oc_lambda_hi", w);
  if (j.contains("oc_step")) p.oc_step = number(j, "oc_step", w);
  if (j.contains("oc_nodes")) p.oc_nodes = integer<std::size_t>(j, "oc_nodes", w);
  if (p.step < 0.0) throw ConfigError("'prediction.step' must be >= 0");
  if (!(p.oc_step > 0.0) || !(p.oc_lambda_hi > p.oc_lambda_lo)) {
    throw ConfigError("'prediction' operating-characteristic grid is empty");
  }
  return p;
}

CompareBlock parse_compare(const json& j) {
  check_keys(j, "compare", {"rel_tol", "n_sigma", "min_counts"});
  CompareBlock c;
  if (j.contains("rel_tol")) c.rel_tol = number(j, "rel_tol", "compare");
  if (j.contains("n_sigma")) c.n_sigma = number(j, "n_sigma", "compare");
  if (j.contains("min_counts")) c.min_counts = integer<std::uint64_t>(j, "min_counts", "compare");
  return c;
}

}  // namespace

GaussianPulseModel ModelBlock::build(double max_width) const {
  const int radius = support_radius > 0
                         ? support_radius
                         : GaussianPulseModel::default_support_radius(std::max(max_width, width));
  return GaussianPulseModel(amplitude, active, shift, width, radius);
}

ParamPoint ModelBlock::nominal() const {
  ParamPoint p;
  for (auto a : active) p.coords.push_back(a == PulseAxis::Shift ? shift : width);
  return p;
}

PriorCostSpec DecisionBlock::spec(std::size_t level, const ParamPoint& default_reference) const {
  if (explicit_form()) return PriorCostSpec::explicit_priors(*a0, *prior_density, *cost);
  return PriorCostSpec::from_lambda0(lambda0.at(level), reference ? *reference : default_reference);
}

ExperimentKind RunConfig::require_kind() const {
  if (!kind) throw ConfigError("missing 'experiment' block (experiment.kind)");
  return *kind;
}
const ModelBlock& RunConfig::require_model() const {
  if (!model) throw ConfigError("missing 'model' block");
  return *model;
}
const DecisionBlock& RunConfig::require_decision() const {
  if (!decision) throw ConfigError("missing 'decision' block");
  return *decision;
}
const SearchGrid& RunConfig::require_grid() const {
  if (!grid) throw ConfigError("missing 'grid' block");
  return *grid;
}
const MonteCarloBlock& RunConfig::require_montecarlo() const {
  if (!montecarlo) throw ConfigError("missing 'montecarlo' block");
  return *montecarlo;
}

RunConfig parse_config(const json& doc) {
  check_keys(doc, "config",
             {"experiment", "model", "decision", "grid", "montecarlo", "prediction", "compare", "output"});
  RunConfig c;
  c.source = doc;
  try {
    if (doc.contains("experiment")) {
      check_keys(doc.at("experiment"), "experiment", {"kind"});
      if (!doc.at("experiment").contains("kind")) throw ConfigError("'experiment' needs 'kind'");
      c.kind = experiment_kind_from_string(text(doc.at("experiment"), "kind", "experiment"));
    }
    if (doc.contains("model")) c.model = parse_model(doc.at("model"));
    if (doc.contains("decision")) c.decision = parse_decision(doc.at("decision"));
    if (doc.contains("grid")) c.grid = parse_grid(doc.at("grid"));
    if (doc.contains("montecarlo")) c.montecarlo = parse_montecarlo(doc.at("montecarlo"));
    if (doc.contains("prediction")) c.prediction = parse_prediction(doc.at("prediction"));
    if (doc.contains("compare")) c.compare = parse_compare(doc.at("compare"));
    if (doc.contains("output")) {
      check_keys(doc.at("output"), "output", {"dir"});
      if (doc.at("output").contains("dir")) c.output_dir = text(doc.at("output"), "dir", "output");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (c.model && c.grid && c.grid->dimension() != c.model->active.size()) {
    throw ConfigError("'grid.axes' must have one entry per active model axis");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(doc);
}

}  // namespace jde
