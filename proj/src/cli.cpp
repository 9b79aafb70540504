#include "jde/cli.hpp"

#include "jde/compare.hpp"
#include "jde/config.hpp"
#include "jde/errors.hpp"
#include "jde/io.hpp"
#include "jde/montecarlo.hpp"
#include "jde/prediction.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

namespace jde {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string theory;
  std::string sim;
  std::string x_column;
};

fs::path output_dir(const RunConfig& cfg, const Options& o) {
  return o.out.empty() ? fs::path(cfg.output_dir) : fs::path(o.out);
}

// Widest pulse any search or refinement step can ask for.
double max_width(const ModelBlock& m, const std::optional<SearchGrid>& grid) {
  double w = m.width;
  if (!grid) return w;
  for (std::size_t a = 0; a < m.active.size() && a < grid->dimension(); ++a) {
    if (m.active[a] == PulseAxis::Width) w = std::max(w, grid->axes[a].hi + grid->axes[a].coarse_step);
  }
  return w;
}

std::vector<ParamPoint> curve_points(const SearchGrid& g, double step) {
  std::vector<ParamPoint> pts;
  if (g.dimension() == 1) {
    const GridAxis& a = g.axes[0];
    const double h = step > 0.0 ? step : a.coarse_step / 10.0;
    const auto n = static_cast<std::size_t>(std::floor((a.hi - a.lo) / h + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) pts.push_back(ParamPoint{a.lo + h * static_cast<double>(i)});
    return pts;
  }
  for (std::size_t i = 0; i < g.size(); ++i) pts.push_back(g.coarse_point(i));
  return pts;
}

std::vector<std::string> axis_header(const SignalModel& model) {
  std::vector<std::string> h;
  for (std::size_t a = 0; a < model.dimension(); ++a) h.push_back(model.axis_name(a));
  return h;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

std::string level_suffix(const DecisionBlock& d, std::size_t l) {
  if (d.explicit_form() || d.lambda0.size() < 2) return "";
  return "_lambda" + number_tag(d.lambda0[l]);
}

double trapezoid(const std::vector<ParamPoint>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (y[i] + y[i - 1]) * (x[i][0] - x[i - 1][0]);
  return s;
}

// ---------------------------------------------------------------------------

int cmd_predict(const RunConfig& cfg, const Options& o, std::ostream& out) {
  const ModelBlock& mb = cfg.require_model();
  const DecisionBlock& db = cfg.require_decision();
  const SearchGrid& grid = cfg.require_grid();
  const GaussianPulseModel model = mb.build(max_width(mb, cfg.grid));
  const ParamPoint nominal = mb.nominal();
  const ParamPoint reference = db.reference ? *db.reference : nominal;
  const fs::path dir = output_dir(cfg, o);
  const auto pts = curve_points(grid, cfg.prediction.step);
  const auto header = axis_header(model);

  json summary;
  summary["formula"] = to_string(cfg.prediction.formula);
  summary["levels"] = json::array();
  for (std::size_t l = 0; l < db.levels(); ++l) {
    const PriorCostSpec priors = db.spec(l, nominal);
    const std::string sfx = level_suffix(db, l);
    const DetectionCurve pd = detection_curve(model, priors, pts);
    const FalseAlarmCurve fa = fa_curve(model, priors, pts, cfg.prediction.formula);

    CsvTable tpd, tfa;
    tpd.header = header;
    tfa.header = header;
    for (const char* c : {"r", "lambda_r"}) {
      tpd.header.push_back(c);
      tfa.header.push_back(c);
    }
    tpd.header.push_back("p_d");
    tfa.header.push_back("v_f");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::vector<double> row = pts[i].coords;
      row.push_back(pd.r[i]);
      row.push_back(pd.lambda_r[i]);
      auto row_fa = row;
      row.push_back(pd.p_d[i]);
      row_fa.push_back(fa.v_f[i]);
      tpd.rows.push_back(std::move(row));
      tfa.rows.push_back(std::move(row_fa));
    }
    write_csv(dir / ("pd_curve" + sfx + ".csv"), tpd);
    write_csv(dir / ("fa_density" + sfx + ".csv"), tfa);

    json lev;
    if (!db.explicit_form()) lev["lambda0"] = db.lambda0[l];
    if (grid.dimension() == 1) {
      const double total = integrated_fa(model, priors, grid.axes[0].lo, grid.axes[0].hi, cfg.prediction.formula);
      lev["integrated_fa"] = total;
      lev["curve_integral"] = trapezoid(pts, fa.v_f);
      out << "lambda level " << l << ": integrated false-alarm probability " << format_number(total) << '\n';
    }
    summary["levels"].push_back(lev);
  }

  if (grid.dimension() == 1) {
    const PredictionBlock& pb = cfg.prediction;
    std::vector<double> lam;
    const auto n = static_cast<std::size_t>(std::floor((pb.oc_lambda_hi - pb.oc_lambda_lo) / pb.oc_step + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) lam.push_back(pb.oc_lambda_lo + pb.oc_step * static_cast<double>(i));
    const double lo = grid.axes[0].lo;
    const double hi = grid.axes[0].hi;
    const auto pdn = net_detection_probability(model, lo, hi, lam, pb.oc_nodes);
    // first-order form looks one unit past lambda_T
    std::vector<double> at;
    for (double l : lam) {
      if (l + 1.0 <= lam.back()) at.push_back(l);
    }
    const auto oc = global_oc(lam, pdn, at);
    CsvTable t;
    t.header = {"lambda_t", "p_d", "p_f", "p_f_first_order"};
    const bool with_l0 = !db.explicit_form();
    const double offset = with_l0 ? oc_threshold_offset(model, lo, hi, reference) : 0.0;
    if (with_l0) t.header.push_back("lambda0");
    for (std::size_t i = 0; i < at.size(); ++i) {
      std::vector<double> row{oc.lambda_t[i], oc.p_d[i], oc.p_f[i], oc.p_f_first_order[i]};
      if (with_l0) row.push_back(oc.lambda_t[i] + offset);
      t.rows.push_back(std::move(row));
    }
    write_csv(dir / "oc.csv", t);
    summary["oc_truncated"] = oc.truncated;
    if (oc.truncated) out << "warning: operating-characteristic table is not flat at its ends\n";
  }

  const ModelGeometry g = geometry(model, reference);
  json cr;
  cr["point"] = reference.coords;
  cr["axes"] = header;
  cr["r"] = g.r;
  cr["covariance"] = matrix_json(cramer_rao_cov(model, reference));
  cr["expected_peak_llr"] = expected_peak_llr(model, reference);
  cr["Q"] = matrix_json(g.Q);
  cr["M"] = matrix_json(g.M);
  cr["V"] = g.V;
  cr["gamma"] = g.gamma;
  cr["zeta"] = g.zeta;
  cr["containment_constant"] = containment_constant(model.dimension());
  write_json(dir / "cramer_rao.json", cr);
  write_json(dir / "predict_summary.json", summary);
  out << "wrote predictions to " << dir.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

std::vector<double> amplitudes_of(const MonteCarloBlock& mc, const ModelBlock& mb) {
  if (!mc.amplitudes.empty()) return mc.amplitudes;
  if (mc.snr.empty()) throw ConfigError("'montecarlo' needs 'amplitudes' or 'snr'");
  // r scales linearly with amplitude
  ModelBlock unit = mb;
  unit.amplitude = 1.0;
  unit.active = {PulseAxis::Shift};
  const double r1 = snr(unit.build(mb.width), ParamPoint{mb.shift});
  std::vector<double> a;
  for (double r : mc.snr) a.push_back(r / r1);
  return a;
}

void require_axes(const ModelBlock& mb, std::vector<PulseAxis> want, const char* kind) {
  if (mb.active != want) {
    std::string names;
    for (auto a : want) names += std::string(names.empty() ? "" : ", ") + to_string(a);
    throw ConfigError(std::string(kind) + " needs model.active = [" + names + "]");
  }
}

json histogram_meta(const DensityHistogram& h) {
  return {{"bins", h.counts.size()}, {"bin_width", h.bin_width}, {"half_window", h.half_window},
          {"total", h.total()}, {"integral", h.integral()}};
}

int cmd_simulate(const RunConfig& cfg, const Options& o, std::ostream& out) {
  const ExperimentKind kind = cfg.require_kind();
  const ModelBlock& mb = cfg.require_model();
  MonteCarloBlock mc = cfg.require_montecarlo();
  if (o.seed) mc.seed = *o.seed;
  if (o.workers) mc.workers = *o.workers;
  if (mc.workers == 0) throw ConfigError("workers must be >= 1");
  const RunOptions run{mc.seed, mc.workers};
  const fs::path dir = output_dir(cfg, o);
  const std::string seed_tag = "_seed" + std::to_string(mc.seed);

  json s;
  s["kind"] = to_string(kind);
  s["seed"] = mc.seed;
  s["workers"] = mc.workers;
  s["config"] = cfg.source;

  switch (kind) {
    case ExperimentKind::FaSigma: {
      require_axes(mb, {PulseAxis::Width}, "fa_sigma");
      const DecisionBlock& db = cfg.require_decision();
      const SearchGrid& grid = cfg.require_grid();
      if (db.explicit_form()) throw ConfigError("fa_sigma needs decision.lambda0");
      if (mc.n_trials < 1) throw ConfigError("montecarlo.n_trials must be >= 1");
      FaSigmaConfig c;
      c.amplitude = mb.amplitude;
      c.reference_width = db.reference ? (*db.reference)[0] : mb.width;
      c.axis = grid.axes[0];
      c.support_radius = mb.support_radius;
      c.lambda0 = db.lambda0;
      c.n_trials = mc.n_trials;
      c.half_window = mc.half_window;
      c.refine_margin = mc.refine_margin;
      const FaSigmaResult r = run_fa_sigma(c, run);
      const GaussianPulseModel model = mb.build(max_width(mb, cfg.grid));
      s["n_trials"] = r.n_trials;
      s["refined_trials"] = r.refined_trials;
      s["boundary_maxima"] = r.boundary_maxima;
      s["runtime_seconds"] = r.seconds;
      s["levels"] = json::array();
      for (const auto& lev : r.levels) {
        const std::string name = "fa_sigma_lambda" + number_tag(lev.lambda0) + seed_tag + ".csv";
        CsvTable t;
        t.header = {"width", "r", "count", "window_count", "density", "density_se"};
        const auto& h = lev.histogram;
        for (std::size_t i = 0; i < h.centers.size(); ++i) {
          t.rows.push_back({h.centers[i], snr(model, ParamPoint{h.centers[i]}),
                            static_cast<double>(h.counts[i]), static_cast<double>(h.window_counts[i]),
                            h.density[i], h.density_se(i)});
        }
        write_csv(dir / name, t);
        s["levels"].push_back({{"lambda0", lev.lambda0}, {"count", lev.count},
                               {"boundary_count", lev.boundary_count}, {"rate", lev.rate},
                               {"rate_se", lev.rate_se}, {"histogram", histogram_meta(h)},
                               {"histogram_file", name}});
        out << "lambda0 " << number_tag(lev.lambda0) << ": " << lev.count << " false alarms in "
            << r.n_trials << " trials, rate " << format_number(lev.rate) << " +/- "
            << format_number(lev.rate_se) << '\n';
      }
      write_json(dir / ("fa_sigma" + seed_tag + ".json"), s);
      break;
    }
    case ExperimentKind::FaShift: {
      require_axes(mb, {PulseAxis::Shift}, "fa_shift");
      const DecisionBlock& db = cfg.require_decision();
      if (db.lambda0.size() != 1) throw ConfigError("fa_shift needs a single decision.lambda0");
      FaShiftConfig c;
      c.width = mb.width;
      c.support_radius = mb.support_radius;
      c.amplitudes = amplitudes_of(mc, mb);
      c.lambda0 = db.lambda0[0];
      c.realization_length = mc.realization_length;
      c.total_samples = mc.total_samples;
      const FaShiftResult r = run_fa_shift(c, run);
      const std::string stem = "fa_shift_lambda" + number_tag(c.lambda0) + seed_tag;
      CsvTable t;
      t.header = {"amplitude", "r", "count", "left", "right", "density", "density_se", "predicted"};
      s["points"] = json::array();
      for (const auto& p : r.points) {
        t.rows.push_back({p.amplitude, p.r, static_cast<double>(p.count), static_cast<double>(p.left),
                          static_cast<double>(p.right), p.density, p.density_se, p.predicted});
        s["points"].push_back({{"amplitude", p.amplitude}, {"r", p.r}, {"count", p.count},
                               {"left", p.left}, {"right", p.right}, {"density", p.density},
                               {"predicted", p.predicted}});
      }
      s["realizations"] = r.realizations;
      s["usable_samples"] = r.usable_samples;
      s["runtime_seconds"] = r.seconds;
      write_csv(dir / (stem + ".csv"), t);
      write_json(dir / (stem + ".json"), s);
      out << "fa_shift: " << r.usable_samples << " usable samples over " << r.realizations
          << " realizations\n";
      break;
    }
    case ExperimentKind::Accuracy: {
      require_axes(mb, {PulseAxis::Shift, PulseAxis::Width}, "accuracy");
      if (mc.n_trials < 1) throw ConfigError("montecarlo.n_trials must be >= 1");
      AccuracyConfig c;
      c.width = mb.width;
      c.amplitudes = amplitudes_of(mc, mb);
      c.n_trials = mc.n_trials;
      c.span_sd = mc.span_sd;
      c.min_width = mc.min_width;
      c.shift_coarse = mc.shift_coarse;
      c.shift_fine = mc.shift_fine;
      c.width_coarse = mc.width_coarse;
      c.width_fine = mc.width_fine;
      const AccuracyResult r = run_accuracy(c, run);
      CsvTable t;
      t.header = {"amplitude", "r", "var_shift", "bound_shift", "var_width", "bound_width",
                  "correlation", "mean_shift", "mean_width", "se_shift", "se_width", "boundary"};
      s["points"] = json::array();
      for (const auto& p : r.points) {
        t.rows.push_back({p.amplitude, p.r, p.covariance(0, 0), p.bound(0, 0), p.covariance(1, 1),
                          p.bound(1, 1), p.correlation, p.mean(0), p.mean(1), p.mean_se(0),
                          p.mean_se(1), static_cast<double>(p.boundary)});
        s["points"].push_back({{"amplitude", p.amplitude}, {"r", p.r}, {"trials", p.trials},
                               {"covariance", matrix_json(p.covariance)},
                               {"bound", matrix_json(p.bound)}, {"correlation", p.correlation},
                               {"mean", {p.mean(0), p.mean(1)}}, {"boundary", p.boundary}});
      }
      s["runtime_seconds"] = r.seconds;
      write_csv(dir / ("accuracy" + seed_tag + ".csv"), t);
      write_json(dir / ("accuracy" + seed_tag + ".json"), s);
      out << "accuracy: " << r.points.size() << " amplitudes, " << c.n_trials << " trials each\n";
      break;
    }
    case ExperimentKind::OracleAgreement: {
      require_axes(mb, {PulseAxis::Width}, "oracle_agreement");
      const DecisionBlock& db = cfg.require_decision();
      const SearchGrid& grid = cfg.require_grid();
      if (db.explicit_form()) throw ConfigError("oracle_agreement needs decision.lambda0");
      if (mc.n_trials < 1) throw ConfigError("montecarlo.n_trials must be >= 1");
      OracleConfig c;
      c.amplitude = mb.amplitude;
      c.reference_width = db.reference ? (*db.reference)[0] : mb.width;
      c.axis = grid.axes[0];
      c.support_radius = mb.support_radius;
      c.lambda0 = db.lambda0;
      c.signal_width_lo = mc.signal_width_lo;
      c.signal_width_hi = mc.signal_width_hi;
      c.noise_only_trials = mc.noise_only_trials;
      c.n_trials = mc.n_trials;
      c.quadrature.radial_points = mc.radial_points;
      c.quadrature.angular_points = mc.angular_points;
      const OracleResult r = run_oracle_agreement(c, run);
      s["trials"] = r.trials;
      s["compared"] = r.compared;
      s["agree"] = r.agree;
      s["signal_compared"] = r.signal_compared;
      s["signal_agree"] = r.signal_agree;
      s["boundary"] = r.boundary;
      s["truncated"] = r.truncated;
      s["both_accept"] = r.both_accept;
      s["fraction"] = r.fraction;
      s["ci"] = {r.ci_lo, r.ci_hi};
      s["containment_constant"] = containment_constant(1);
      s["runtime_seconds"] = r.seconds;
      write_json(dir / ("oracle_agreement" + seed_tag + ".json"), s);
      out << "oracle agreement " << format_number(r.fraction) << " over " << r.compared
          << " compared trials\n";
      break;
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_table1(const RunConfig& cfg, const Options& o, std::ostream& out) {
  const ModelBlock& mb = cfg.require_model();
  const DecisionBlock& db = cfg.require_decision();
  const SearchGrid& grid = cfg.require_grid();
  require_axes(mb, {PulseAxis::Width}, "table1");
  if (db.explicit_form()) throw ConfigError("table1 needs a decision.lambda0 list");
  const GaussianPulseModel model = mb.build(max_width(mb, cfg.grid));
  const ParamPoint nominal = mb.nominal();
  const double lo = grid.axes[0].lo;
  const double hi = grid.axes[0].hi;

  std::optional<FaSigmaResult> sim;
  if (cfg.montecarlo && cfg.montecarlo->n_trials > 0) {
    MonteCarloBlock mc = *cfg.montecarlo;
    if (o.seed) mc.seed = *o.seed;
    if (o.workers) mc.workers = *o.workers;
    FaSigmaConfig c;
    c.amplitude = mb.amplitude;
    c.reference_width = db.reference ? (*db.reference)[0] : mb.width;
    c.axis = grid.axes[0];
    c.support_radius = mb.support_radius;
    c.lambda0 = db.lambda0;
    c.n_trials = mc.n_trials;
    c.half_window = mc.half_window;
    c.refine_margin = mc.refine_margin;
    sim = run_fa_sigma(c, RunOptions{mc.seed, std::max<std::size_t>(mc.workers, 1)});
  }

  CsvTable t;
  t.header = {"lambda0", "expected", "homogeneous"};
  if (sim) {
    for (const char* c : {"simulated", "simulated_se", "ratio"}) t.header.push_back(c);
  }
  char line[160];
  std::snprintf(line, sizeof line, "%8s %14s %14s", "lambda0", "expected", "homogeneous");
  out << line << (sim ? "      simulated        +/-   ratio" : "") << '\n';
  for (std::size_t l = 0; l < db.lambda0.size(); ++l) {
    const PriorCostSpec p = db.spec(l, nominal);
    const double gen = integrated_fa(model, p, lo, hi, FaFormula::General);
    const double hom = integrated_fa(model, p, lo, hi, FaFormula::Homogeneous);
    std::vector<double> row{db.lambda0[l], gen, hom};
    std::snprintf(line, sizeof line, "%8g %14.4e %14.4e", db.lambda0[l], gen, hom);
    out << line;
    if (sim) {
      const auto& lev = sim->levels[l];
      row.insert(row.end(), {lev.rate, lev.rate_se, lev.rate / gen});
      std::snprintf(line, sizeof line, " %14.4e %10.2e %7.4f", lev.rate, lev.rate_se, lev.rate / gen);
      out << line;
    }
    out << '\n';
    t.rows.push_back(std::move(row));
  }
  const fs::path dir = output_dir(cfg, o);
  write_csv(dir / "table1.csv", t);
  return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out, std::ostream& err) {
  CompareBlock rule;
  fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
  if (!o.config.empty()) {
    const RunConfig cfg = load_config(o.config);
    if (cfg.compare) rule = *cfg.compare;
    if (o.out.empty()) dir = cfg.output_dir;
  }
  const ComparisonReport rep = compare_files(o.theory, o.sim, rule, o.x_column, err);
  char line[200];
  std::snprintf(line, sizeof line, "%14s %14s %14s %9s %12s %10s  %s", "x", "theory", "simulation",
                "ratio", "poisson_sd", "counts", "check");
  out << line << '\n';
  for (const auto& r : rep.rows) {
    if (!r.evaluated) continue;
    std::snprintf(line, sizeof line, "%14.6g %14.6e %14.6e %9.4f %12.4e %10llu  %s", r.x, r.theory,
                  r.simulation, r.ratio, r.sigma, static_cast<unsigned long long>(r.counts),
                  r.pass ? "ok" : "FAIL");
    out << line << '\n';
  }
  write_csv(dir / "compare.csv", rep.table());
  out << "evaluated " << rep.evaluated << " points, " << rep.failed << " outside tolerance\n";
  out << "verdict: " << to_string(rep.verdict) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint detection and estimation of a parametric signal in Gaussian noise"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool mc) {
    sub->add_option("--out", o.out, "output directory (overrides output.dir)");
    if (mc) {
      sub->add_option("--seed", o.seed, "RNG seed (overrides montecarlo.seed)");
      sub->add_option("--workers", o.workers, "worker threads (overrides montecarlo.workers)");
    }
  };
  auto* predict = app.add_subcommand("predict", "analytic detection and false-alarm curves");
  predict->add_option("--config", o.config, "run config (JSON)")->required();
  common(predict, true);
  auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo experiment");
  simulate->add_option("--config", o.config, "run config (JSON)")->required();
  common(simulate, true);
  auto* table1 = app.add_subcommand("table1", "integrated false-alarm probability over a lambda0 sweep");
  table1->add_option("--config", o.config, "run config (JSON)")->required();
  common(table1, true);
  auto* compare = app.add_subcommand("compare", "theory vs simulation table with a verdict");
  compare->add_option("--theory", o.theory, "theory CSV")->required();
  compare->add_option("--sim", o.sim, "simulation CSV")->required();
  compare->add_option("--config", o.config, "config with a compare block");
  compare->add_option("--x", o.x_column, "abscissa column shared by both files");
  common(compare, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (compare->parsed()) return cmd_compare(o, out, err);
    const RunConfig cfg = load_config(o.config);
    if (predict->parsed()) return cmd_predict(cfg, o, out);
    if (simulate->parsed()) return cmd_simulate(cfg, o, out);
    if (table1->parsed()) return cmd_table1(cfg, o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace jde
