#include "jde/compare.hpp"

#include "jde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jde {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

CsvTable ComparisonReport::table() const {
  CsvTable t;
  t.header = {"x", "theory", "simulation", "ratio", "poisson_sigma", "counts", "evaluated", "pass"};
  for (const auto& r : rows) {
    t.rows.push_back({r.x, r.theory, r.simulation, r.ratio, r.sigma, static_cast<double>(r.counts),
                      r.evaluated ? 1.0 : 0.0, r.pass ? 1.0 : 0.0});
  }
  return t;
}

std::vector<double> regrid(const std::vector<double>& x, const std::vector<double>& y,
                           const std::vector<double>& at) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("regrid needs at least two points");
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw ConfigError("theory abscissae must increase");
  }
  std::vector<double> out;
  out.reserve(at.size());
  for (double v : at) {
    if (v < x.front() || v > x.back()) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    auto it = std::upper_bound(x.begin(), x.end(), v);
    std::size_t i = it == x.end() ? x.size() - 1 : static_cast<std::size_t>(it - x.begin());
    if (i == 0) i = 1;
    const double t = (v - x[i - 1]) / (x[i] - x[i - 1]);
    out.push_back(y[i - 1] + t * (y[i] - y[i - 1]));
  }
  return out;
}

ComparisonReport compare_curves(const std::vector<double>& theory_x, const std::vector<double>& theory_y,
                                const std::vector<double>& sim_x, const std::vector<double>& sim_y,
                                const std::vector<std::uint64_t>& sim_counts,
                                const std::vector<double>& sim_sigma, const CompareBlock& rule) {
  if (sim_x.size() != sim_y.size() || sim_x.size() != sim_counts.size() ||
      sim_x.size() != sim_sigma.size()) {
    throw ConfigError("simulation columns differ in length");
  }
  ComparisonReport rep;
  bool same = theory_x.size() == sim_x.size();
  for (std::size_t i = 0; same && i < sim_x.size(); ++i) {
    same = std::abs(theory_x[i] - sim_x[i]) <= 1e-9 * std::max(1.0, std::abs(sim_x[i]));
  }
  const std::vector<double> th = same ? theory_y : regrid(theory_x, theory_y, sim_x);
  rep.regridded = !same;

  std::uint64_t total = 0;
  for (auto c : sim_counts) total += c;
  for (std::size_t i = 0; i < sim_x.size(); ++i) {
    ComparisonRow r;
    r.x = sim_x[i];
    r.theory = th[i];
    r.simulation = sim_y[i];
    r.ratio = r.theory > 0.0 ? r.simulation / r.theory : std::numeric_limits<double>::quiet_NaN();
    r.sigma = sim_sigma[i];
    r.counts = sim_counts[i];
    r.evaluated = std::isfinite(r.theory) && r.counts >= rule.min_counts && r.counts > 0;
    if (r.evaluated) {
      ++rep.evaluated;
      const double allowed = std::max(rule.rel_tol * std::abs(r.theory), rule.n_sigma * r.sigma);
      r.pass = std::abs(r.simulation - r.theory) <= allowed;
      if (!r.pass) ++rep.failed;
    }
    rep.rows.push_back(r);
  }
  if (total == 0 || rep.evaluated == 0) rep.verdict = Verdict::Inconclusive;
  else rep.verdict = rep.failed == 0 ? Verdict::Pass : Verdict::Fail;
  return rep;
}

ComparisonReport compare_files(const std::filesystem::path& theory, const std::filesystem::path& sim,
                               const CompareBlock& rule, const std::string& x_column,
                               std::ostream& warnings) {
  const CsvTable t = read_csv(theory);
  const CsvTable s = read_csv(sim);
  if (s.header.empty() || t.header.size() < 2) throw ConfigError("comparison tables need columns");
  const std::string x = x_column.empty() ? s.header.front() : x_column;
  const std::size_t tx = t.has(x) ? t.index(x) : 0;
  std::string ty = t.has("v_f") ? "v_f" : t.has("predicted") ? "predicted" : t.header[1];
  const std::string sy = s.has("density") ? "density" : s.header.at(1);
  const std::string sc = s.has("window_count") ? "window_count" : s.has("count") ? "count" : "";
  if (sc.empty()) throw ConfigError("simulation table needs a count or window_count column");

  const auto sx = s.column(x);
  const auto y = s.column(sy);
  const auto cd = s.column(sc);
  std::vector<std::uint64_t> counts;
  for (double c : cd) counts.push_back(c > 0.0 ? static_cast<std::uint64_t>(std::llround(c)) : 0);
  std::vector<double> sigma;
  if (s.has("density_se")) {
    sigma = s.column("density_se");
  } else {
    for (std::size_t i = 0; i < y.size(); ++i) {
      sigma.push_back(counts[i] ? y[i] / std::sqrt(static_cast<double>(counts[i])) : 0.0);
    }
  }
  auto rep = compare_curves(t.column(tx), t.column(ty), sx, y, counts, sigma, rule);
  if (rep.regridded) {
    warnings << "warning: theory and simulation grids differ; theory regridded by linear interpolation\n";
  }
  return rep;
}

}  // namespace jde
