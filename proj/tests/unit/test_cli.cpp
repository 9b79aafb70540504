#include "jde/cli.hpp"
#include "jde/compare.hpp"
#include "jde/config.hpp"
#include "jde/errors.hpp"
#include "jde/io.hpp"

#include <gtest/gtest.h>

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace jde;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  static std::atomic<int> counter{0};
  const fs::path p = fs::temp_directory_path() /
                     ("jde_test_" + name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "jde");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

json width_config() {
  return json::parse(R"({
    "model": {"amplitude": 2, "width": 4, "active": ["width"]},
    "decision": {"lambda0": [10], "reference": [4]},
    "grid": {"axes": [{"lo": 1, "hi": 16, "coarse": 0.2, "fine": 0.002}]},
    "prediction": {"step": 0.002}
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// config

TEST(Config, ParsesAllBlocks) {
  const json j = json::parse(R"({
    "experiment": {"kind": "fa_shift"},
    "model": {"amplitude": 1.5, "width": 3, "active": ["shift"], "support_radius": 40},
    "decision": {"lambda0": [10]},
    "montecarlo": {"n_trials": 2e3, "seed": 9, "snr": [3, 4], "total_samples": 1e6},
    "prediction": {"formula": "homogeneous"},
    "compare": {"rel_tol": 0.2},
    "output": {"dir": "somewhere"}
  })");
  const RunConfig c = parse_config(j);
  EXPECT_EQ(c.require_kind(), ExperimentKind::FaShift);
  EXPECT_EQ(c.require_model().support_radius, 40);
  EXPECT_EQ(c.require_model().active, std::vector<PulseAxis>{PulseAxis::Shift});
  EXPECT_EQ(c.require_montecarlo().n_trials, 2000u);
  EXPECT_EQ(c.require_montecarlo().total_samples, 1000000u);
  EXPECT_EQ(c.prediction.formula, FaFormula::Homogeneous);
  EXPECT_DOUBLE_EQ(c.compare->rel_tol, 0.2);
  EXPECT_EQ(c.output_dir, "somewhere");
}

TEST(Config, FailsClosed) {
  EXPECT_THROW(parse_config(json::parse(R"({"bogus": 1})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"model": {"amplitud": 2}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"model": {"amplitude": "two"}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"montecarlo": {"n_trials": 2.5}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"experiment": {"kind": "nothing"}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"model": {"active": ["depth"]}})")), ConfigError);
  const RunConfig empty = parse_config(json::object());
  try {
    empty.require_model();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("model"), std::string::npos);
  }
}

TEST(Config, DecisionForms) {
  const RunConfig c = parse_config(json::parse(R"({
    "decision": {"a0": 0.5, "cost": 2, "prior_density": 0.1}
  })"));
  EXPECT_TRUE(c.require_decision().explicit_form());
  EXPECT_EQ(c.require_decision().levels(), 1u);
  EXPECT_TRUE(c.require_decision().spec(0, ParamPoint{4.0}).is_explicit());
  EXPECT_THROW(parse_config(json::parse(R"({"decision": {"a0": 0.5, "lambda0": [5]}})"))
                   .require_decision()
                   .spec(0, ParamPoint{4.0}),
               ConfigError);
}

// ---------------------------------------------------------------------------
// io

TEST(Csv, RoundTripAndFormatting) {
  const fs::path d = scratch("csv");
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{1.0, 0.123456789012}, {2.0, -3.5e-12}};
  write_csv(d / "t.csv", t);
  const std::string text = slurp(d / "t.csv");
  EXPECT_EQ(text, "a,b\n1,0.123456789\n2,-3.5e-12\n");
  const CsvTable back = read_csv(d / "t.csv");
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.column("a"), (std::vector<double>{1.0, 2.0}));
  EXPECT_NEAR(back.column("b")[0], 0.123456789, 1e-15);
  EXPECT_THROW(back.index("c"), ConfigError);
  std::ofstream(d / "bad.csv") << "a,b\n1\n";
  EXPECT_THROW(read_csv(d / "bad.csv"), ConfigError);
  EXPECT_THROW(read_csv(d / "missing.csv"), ConfigError);
  EXPECT_EQ(number_tag(5.0), "5");
  EXPECT_EQ(number_tag(7.5), "7.5");
}

// ---------------------------------------------------------------------------
// compare

TEST(Compare, VerdictRules) {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> th{10, 20, 30, 40};
  const CompareBlock rule{0.10, 3.0, 100};
  auto rep = compare_curves(x, th, x, {10.5, 19, 31, 80}, {500, 500, 500, 20}, {0.4, 0.9, 1.4, 18}, rule);
  EXPECT_EQ(rep.verdict, Verdict::Pass);  // last point has too few counts to judge
  EXPECT_EQ(rep.evaluated, 3u);
  EXPECT_FALSE(rep.regridded);
  rep = compare_curves(x, th, x, {10.5, 25, 31, 40}, {500, 500, 500, 500}, {0.4, 0.9, 1.4, 1.8}, rule);
  EXPECT_EQ(rep.verdict, Verdict::Fail);
  EXPECT_EQ(rep.failed, 1u);
  rep = compare_curves(x, th, x, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, rule);
  EXPECT_EQ(rep.verdict, Verdict::Inconclusive);
}

TEST(Compare, RegridsMismatchedGrids) {
  const auto g = regrid({0, 1, 2}, {0, 10, 20}, {0.5, 1.5, 3.0});
  EXPECT_DOUBLE_EQ(g[0], 5.0);
  EXPECT_DOUBLE_EQ(g[1], 15.0);
  EXPECT_TRUE(std::isnan(g[2]));

  const fs::path d = scratch("regrid");
  CsvTable th{{"width", "v_f"}, {{1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}}};
  CsvTable sim{{"width", "density", "window_count", "density_se"},
               {{1.5, 1.5, 400, 0.01}, {2.5, 2.6, 400, 0.01}}};
  write_csv(d / "th.csv", th);
  write_csv(d / "sim.csv", sim);
  std::ostringstream warn;
  const auto rep = compare_files(d / "th.csv", d / "sim.csv", CompareBlock{}, "width", warn);
  EXPECT_TRUE(rep.regridded);
  EXPECT_NE(warn.str().find("regrid"), std::string::npos);
  EXPECT_EQ(rep.verdict, Verdict::Pass);
}

// ---------------------------------------------------------------------------
// command line

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, kExitConfig);
  EXPECT_EQ(cli({"predict"}).code, kExitConfig);
  EXPECT_EQ(cli({"predict", "--config", "/nonexistent/cfg.json"}).code, kExitConfig);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, MissingBlockNamesIt) {
  const fs::path d = scratch("missing");
  json j = width_config();
  j.erase("model");
  const auto r = cli({"predict", "--config", write_config(d, j).string(), "--out", d.string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("model"), std::string::npos);
}

TEST(Cli, ZeroTrialsIsConfigError) {
  const fs::path d = scratch("zero");
  json j = width_config();
  j["experiment"] = {{"kind", "fa_sigma"}};
  j["montecarlo"] = {{"n_trials", 0}};
  const auto r = cli({"simulate", "--config", write_config(d, j).string(), "--out", d.string()});
  EXPECT_EQ(r.code, kExitConfig);
}

TEST(Cli, PredictCurveIntegratesToTotal) {
  const fs::path d = scratch("predict");
  const auto r = cli({"predict", "--config", write_config(d, width_config()).string(), "--out", d.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const CsvTable fa = read_csv(d / "fa_density.csv");
  const auto w = fa.column("width");
  const auto v = fa.column("v_f");
  double s = 0.0;
  for (std::size_t i = 1; i < w.size(); ++i) s += 0.5 * (v[i] + v[i - 1]) * (w[i] - w[i - 1]);
  const json summary = read_json(d / "predict_summary.json");
  const double total = summary["levels"][0]["integrated_fa"];
  EXPECT_NEAR(s / total, 1.0, 0.005);
  EXPECT_TRUE(fs::exists(d / "pd_curve.csv"));
  EXPECT_TRUE(fs::exists(d / "oc.csv"));
  const json cr = read_json(d / "cramer_rao.json");
  EXPECT_NEAR(cr["containment_constant"].get<double>(), 1.92, 0.01);
}

TEST(Cli, Table1Sweep) {
  const fs::path d = scratch("table1");
  json j = width_config();
  j["grid"]["axes"][0]["lo"] = 1.1;
  j["decision"]["lambda0"] = {5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
  const auto r = cli({"table1", "--config", write_config(d, j).string(), "--out", d.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const CsvTable t = read_csv(d / "table1.csv");
  const std::vector<double> expected{7.05e-4, 2.81e-4, 1.08e-4, 4.07e-5, 1.52e-5,
                                     5.63e-6, 2.08e-6, 7.68e-7, 2.83e-7, 1.04e-7};
  const auto got = t.column("expected");
  ASSERT_EQ(got.size(), expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i] / expected[i], 1.0, 0.01) << i;
}

TEST(Cli, SimulateReplaysExactly) {
  const fs::path d = scratch("replay");
  json j = width_config();
  j["experiment"] = {{"kind", "fa_sigma"}};
  j["decision"]["lambda0"] = {3.5};
  j["montecarlo"] = {{"n_trials", 20000}, {"seed", 77}};
  const auto cfg = write_config(d, j).string();
  ASSERT_EQ(cli({"simulate", "--config", cfg, "--out", (d / "a").string()}).code, kExitOk);
  ASSERT_EQ(cli({"simulate", "--config", cfg, "--out", (d / "b").string(), "--workers", "2"}).code, kExitOk);
  const std::string name = "fa_sigma_lambda3.5_seed77.csv";
  EXPECT_EQ(slurp(d / "a" / name), slurp(d / "b" / name));
  const json sa = read_json(d / "a" / "fa_sigma_seed77.json");
  const json sb = read_json(d / "b" / "fa_sigma_seed77.json");
  EXPECT_EQ(sa["levels"], sb["levels"]);
  ASSERT_EQ(cli({"simulate", "--config", cfg, "--out", (d / "c").string(), "--seed", "78"}).code, kExitOk);
  EXPECT_TRUE(fs::exists(d / "c" / "fa_sigma_lambda3.5_seed78.csv"));
}

TEST(Cli, CompareWithEmptySimulationIsInconclusive) {
  const fs::path d = scratch("inconclusive");
  CsvTable th{{"width", "v_f"}, {{1.0, 1e-4}, {2.0, 2e-4}}};
  CsvTable sim{{"width", "density", "window_count", "density_se"}, {{1.0, 0, 0, 0}, {2.0, 0, 0, 0}}};
  write_csv(d / "th.csv", th);
  write_csv(d / "sim.csv", sim);
  const auto r = cli({"compare", "--theory", (d / "th.csv").string(), "--sim", (d / "sim.csv").string(),
                      "--out", d.string()});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("verdict: INCONCLUSIVE"), std::string::npos);
  EXPECT_TRUE(fs::exists(d / "compare.csv"));
}
