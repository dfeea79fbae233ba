#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mcbf/config.hpp"
#include "mcbf/experiment.hpp"

namespace mcbf {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mcbf_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, MinimalIsValid) {
  const auto cfg = parse_config_text(R"({"grid": [{"n": 8, "k": 3, "gamma_db": 5}], "seeds": [4]})");
  ASSERT_EQ(cfg.grid.size(), 1u);
  EXPECT_EQ(cfg.grid[0], (GridPoint{8, 3, 5.0}));
  EXPECT_EQ(cfg.seeds, std::vector<std::uint64_t>{4});
  EXPECT_EQ(cfg.solvers, std::vector<InnerSolver>{InnerSolver::arcd});
  EXPECT_EQ(cfg.mm.mm_max_iters, 20u);
  EXPECT_DOUBLE_EQ(cfg.mm.inner.tol, 1e-7);
}

TEST(Config, LargeSweepGrid) {
  const auto cfg = parse_config_text(R"({
    "sweep": {"n": 200, "k": [50, 100, 200, 500], "gamma_db": 10},
    "seeds": {"first": 0, "count": 100},
    "solvers": ["arcd", "admm"],
    "channel": {"pathloss_db": -90, "noise_dbm": -80},
    "mm": {"max_iters": 20}
  })");
  ASSERT_EQ(cfg.grid.size(), 4u);
  EXPECT_EQ(cfg.grid[3], (GridPoint{200, 500, 10.0}));
  EXPECT_EQ(cfg.seeds.size(), 100u);
  EXPECT_EQ(cfg.seeds.back(), 99u);
  EXPECT_DOUBLE_EQ(cfg.pathloss_db, -90);
  EXPECT_DOUBLE_EQ(cfg.noise_dbm, -80);
}

TEST(Config, OracleNeedsSmallK) {
  const std::string err =
      config_error(R"({"grid": [{"n": 200, "k": 500, "gamma_db": 10}], "solvers": ["oracle"]})");
  EXPECT_NE(err.find("oracle requires K ≤ 14"), std::string::npos) << err;
  EXPECT_EQ(config_error(R"({"grid": [{"n": 8, "k": 14, "gamma_db": 10}], "solvers": ["oracle"]})"), "");
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(config_error(R"({"grid": []})").find("grid"), std::string::npos);
  EXPECT_NE(config_error(R"({"grid": [{"n": 8, "k": 0, "gamma_db": 1}]})").find("grid[0].k"), std::string::npos);
  EXPECT_NE(config_error(R"({"grid": [{"n": 8, "gamma_db": 1}]})").find("grid[0].k"), std::string::npos);
  EXPECT_NE(config_error(R"({"seeds": []})").find("seeds"), std::string::npos);
  EXPECT_NE(config_error(R"({"solvers": ["ipm"]})").find("solvers[0]"), std::string::npos);
  EXPECT_NE(config_error(R"({"inner": {"tol": -1}})").find("inner.tol"), std::string::npos);
  EXPECT_NE(config_error(R"({"inner": {"batch_frac": 1.5}})").find("inner.batch_frac"), std::string::npos);
  EXPECT_NE(config_error(R"({"mm": {"max_iters": 0}})").find("mm.max_iters"), std::string::npos);
  EXPECT_NE(config_error(R"({"mm": {"maxiters": 3}})").find("mm.maxiters"), std::string::npos);
  EXPECT_NE(config_error(R"({"channel": {"noise_dbm": "loud"}})").find("channel.noise_dbm"), std::string::npos);
  EXPECT_NE(config_error(R"({"threads": 0})").find("threads"), std::string::npos);
  EXPECT_NE(config_error(R"({"grid": [], "sweep": {}})").find("grid"), std::string::npos);
  EXPECT_NE(config_error("{not json").find("malformed"), std::string::npos);
  EXPECT_THROW(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, SeedAndSolverLists) {
  EXPECT_EQ(parse_seed_list("0,3,5-7"), (std::vector<std::uint64_t>{0, 3, 5, 6, 7}));
  EXPECT_THROW(parse_seed_list("3-1"), ConfigError);
  EXPECT_THROW(parse_seed_list("a"), ConfigError);
  EXPECT_THROW(parse_seed_list("1,"), ConfigError);
  EXPECT_EQ(parse_solver_list("arcd,admm"),
            (std::vector<InnerSolver>{InnerSolver::arcd, InnerSolver::admm}));
  EXPECT_THROW(parse_solver_list("arcd,,admm"), ConfigError);
}

TEST(Config, OverridesReplaceGridAxes) {
  auto cfg = parse_config_text(R"({"sweep": {"n": [8, 16], "k": 4, "gamma_db": 10}})");
  ConfigOverrides o;
  o.k = std::vector<std::size_t>{2, 3};
  o.mm_iters = 5;
  o.inner_tol = 1e-9;
  apply_overrides(cfg, o);
  validate(cfg);
  ASSERT_EQ(cfg.grid.size(), 4u);
  EXPECT_EQ(cfg.grid[0], (GridPoint{8, 2, 10.0}));
  EXPECT_EQ(cfg.grid[3], (GridPoint{16, 3, 10.0}));
  EXPECT_EQ(cfg.mm.mm_max_iters, 5u);
  EXPECT_DOUBLE_EQ(cfg.mm.inner.tol, 1e-9);
}

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig cfg = default_config();
  cfg.grid = {{8, 3, 10.0}};
  cfg.seeds = {0, 1};
  cfg.solvers = {InnerSolver::arcd, InnerSolver::oracle};
  cfg.mm.mm_max_iters = 5;
  cfg.out_dir = out;
  cfg.timing = false;
  return cfg;
}

TEST(RunExperiments, CardinalityAndFiles) {
  const auto out = scratch("cardinality");
  const auto rows = run_experiments(tiny_config(out));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].solver, "arcd");
  EXPECT_EQ(rows[1].solver, "oracle");
  EXPECT_EQ(rows[2].seed, 1u);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.converged);
    EXPECT_DOUBLE_EQ(r.power_dbm, 10 * std::log10(r.power_mw));
    EXPECT_GE(r.min_margin, -10.0 * 1e-6);
  }
  const std::string rows_csv = slurp(out / "rows.csv");
  EXPECT_EQ(rows_csv.substr(0, rows_csv.find('\n')), kRowsHeader);
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
  EXPECT_TRUE(fs::exists(out / "plotdata.csv"));
  const auto traces = out / trace_dir({8, 3, 10.0});
  EXPECT_TRUE(fs::exists(traces / "trace_arcd_0.csv"));
  EXPECT_TRUE(fs::exists(traces / "power_oracle_1.csv"));
  EXPECT_EQ(slurp(traces / "trace_arcd_1.csv").substr(0, 15), "iter,objective\n");
}

TEST(RunExperiments, ByteIdenticalAcrossRunsAndThreads) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  auto cfg = tiny_config(a);
  cfg.grid.push_back({6, 2, 3.0});
  run_experiments(cfg);
  cfg.out_dir = b;
  cfg.threads = 4;
  run_experiments(cfg);
  for (const char* f : {"rows.csv", "summary.csv", "plotdata.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const auto t = trace_dir({6, 2, 3.0}) / "trace_oracle_1.csv";
  EXPECT_EQ(slurp(a / t), slurp(b / t));
}

TEST(RunExperiments, FailedRunRecordedNotFatal) {
  // -300 dB pathloss underflows every channel to zero.
  const auto out = scratch("failed");
  auto cfg = tiny_config(out);
  cfg.solvers = {InnerSolver::arcd};
  cfg.seeds = {0};
  cfg.pathloss_db = -4000;
  const auto rows = run_experiments(cfg);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].converged);
  EXPECT_TRUE(std::isnan(rows[0].power_mw));
}

ResultRow row(const std::string& solver, double mw, std::uint64_t seed = 0) {
  ResultRow r;
  r.solver = solver;
  r.n = 4;
  r.k = 2;
  r.gamma_db = 10;
  r.seed = seed;
  r.power_mw = mw;
  r.power_dbm = 10 * std::log10(mw);
  r.mm_iters = 3;
  r.inner_iters = 40 + seed;
  r.wall_s = 0.5;
  r.min_margin = 0.01;
  r.converged = true;
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

TEST(Summary, SingleRowReproducesRow) {
  const ResultRow r = row("arcd", 3.7);
  const auto t = emit_summary({r});
  const auto l = lines(t.summary_csv);
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[1], "4,2,10,arcd,1,1," + format_double(3.7) + ",0," + format_double(r.power_dbm) + "," +
                      format_double(r.power_dbm) + "," + format_double(r.power_dbm) + ",0.5,3,40");
  EXPECT_EQ(lines(t.plot_csv)[1], "2,arcd," + format_double(r.power_dbm) + ",0.5");
}

TEST(Summary, AveragesLinearPowerThenConverts) {
  const auto l = lines(emit_summary({row("arcd", 1.0), row("arcd", 100.0, 1)}).summary_csv);
  ASSERT_EQ(l.size(), 2u);
  // mean of 1 mW and 100 mW is 50.5 mW (17.03 dBm), not the 10 dBm mean of dBm values
  EXPECT_NE(l[1].find("," + format_double(50.5) + ","), std::string::npos);
  EXPECT_NE(l[1].find("," + format_double(10 * std::log10(50.5)) + ","), std::string::npos);
}

TEST(Summary, GroupsInFirstAppearanceOrderAndSkipsFailures) {
  ResultRow bad = row("admm", 2.0, 2);
  bad.converged = false;
  const auto l = lines(emit_summary({row("arcd", 1.0), row("admm", 4.0), bad, row("arcd", 3.0, 1)}).summary_csv);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[1].substr(0, 15), "4,2,10,arcd,2,2");
  EXPECT_EQ(l[2].substr(0, 15), "4,2,10,admm,2,1");
  EXPECT_NE(l[2].find("," + format_double(4.0) + ","), std::string::npos);
}

TEST(Summary, EmptyInputRejected) {
  try {
    emit_summary({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
  }
}

TEST(Csv, RoundTripReproducesSummary) {
  std::vector<ResultRow> rows = {row("arcd", 1.0 / 3.0), row("arcd", 2.0 / 7.0, 1), row("rcd", 1e-9)};
  rows[1].wall_s = 0.1 + 0.2;
  rows[2].min_margin = -0.0;
  std::stringstream buf;
  write_rows_csv(buf, rows);
  const auto back = parse_rows_csv(buf);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(back[i], rows[i]);
  EXPECT_EQ(emit_summary(back).summary_csv, emit_summary(rows).summary_csv);
}

TEST(Csv, RejectsMalformedRows) {
  std::stringstream wrong_header("solver,n\n");
  EXPECT_THROW(parse_rows_csv(wrong_header), Error);
  std::stringstream short_row(std::string(kRowsHeader) + "\narcd,1,2\n");
  EXPECT_THROW(parse_rows_csv(short_row), Error);
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(10.0), "10");
  EXPECT_EQ(format_double(NAN), "nan");
}

TEST(Traces, SubsamplingKeepsEndsAndIsLogarithmic) {
  EXPECT_EQ(trace_indices(5).size(), 5u);
  const auto idx = trace_indices(1'000'000, 1000);
  ASSERT_LE(idx.size(), 1001u);
  EXPECT_EQ(idx.front(), 0u);
  EXPECT_EQ(idx.back(), 999'999u);
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
  EXPECT_EQ(idx[1], 1u);  // dense head
  // sparse tail: geometric spacing keeps about m ln2 / ln(L) ~ 50 points in the last half
  const auto half = std::count_if(idx.begin(), idx.end(), [](std::size_t i) { return i >= 500'000; });
  EXPECT_LT(half, 60);
}

TEST(Traces, InnerTraceConcatenatesMmIterations) {
  MmReport r;
  SolveReport a, b;
  a.objective_trace = {0, -1, -2};
  a.iterations = 2;
  b.objective_trace = {-3, -4};
  b.iterations = 1;
  r.inner_reports = {a, b};
  std::stringstream out;
  write_inner_trace(out, r);
  EXPECT_EQ(out.str(), "iter,objective\n0,0\n1,-1\n2,-2\n2,-3\n3,-4\n");
}

// Independent recomputation of the aggregation from the raw rows file.
TEST(Summary, CrossCheckAgainstRawRows) {
  const auto out = scratch("crosscheck");
  auto cfg = tiny_config(out);
  cfg.seeds = {0, 1, 2};
  const auto rows = run_experiments(cfg);
  std::ifstream in(out / "rows.csv");
  const auto parsed = parse_rows_csv(in);
  ASSERT_EQ(parsed.size(), rows.size());
  std::ifstream sin(out / "summary.csv");
  std::string line;
  std::getline(sin, line);
  while (std::getline(sin, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    double sum = 0;
    int count = 0;
    for (const auto& r : parsed) {
      if (r.solver == f[3]) {
        sum += r.power_mw;
        ++count;
      }
    }
    EXPECT_NEAR(std::stod(f[6]), sum / count, 1e-12 * sum);
    EXPECT_NEAR(std::stod(f[8]), 10 * std::log10(sum / count), 1e-12);
  }
}

}  // namespace
}  // namespace mcbf
