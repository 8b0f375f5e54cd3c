#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "spconf/harness.hpp"

using namespace spconf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::size_t count_substr(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("spconf_test_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

const char* kClustered = R"({"scenario": "clustered", "m": 120, "k": 5, "replications": 6, "seed": 3,
                              "estimators": ["ols", "grouped_re", "gls_profile"]})";

}  // namespace

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(parse_config(R"({"scenario": "eigen", "replication": 5})"), ConfigError);
}

TEST(Config, InvalidValuesRejected) {
  EXPECT_THROW(parse_config(R"({"n": 100})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"scenario": "areal"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"scenario": "eigen", "replications": 0})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"scenario": "eigen", "estimators": ["ols", "ols"]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"scenario": "eigen", "estimators": ["lasso"]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"scenario": "eigen", "ci_level": 1.5})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"scenario": "clustered", "n_sweep": [100]})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"scenario": "clustered", "subsample_unit": "sites"})"), ConfigError);
  EXPECT_THROW(parse_config("not json"), ConfigError);
}

TEST(Config, DefaultsAndEcho) {
  const ExperimentConfig c = parse_config(R"({"scenario": "eigen", "n": 500, "replications": 3})");
  EXPECT_EQ(c.scenario, Scenario::Eigen);
  EXPECT_EQ(c.n, 500);
  EXPECT_EQ(c.nugget, 2.0);
  EXPECT_EQ(c.kappa2, 1.0 / 16.0);
  EXPECT_FALSE(c.estimators.empty());
  // the echo parses back to the same configuration
  const ExperimentConfig again = parse_config(c.echo);
  EXPECT_EQ(again.echo, c.echo);
  const ExperimentConfig cl = parse_config(R"({"scenario": "clustered", "m": 30, "k": 4})");
  EXPECT_EQ(cl.sample_size(), 120);
}

TEST(Summary, CoverageIsMeanOfCovered) {
  std::vector<RepRow> rows;
  const bool cov[] = {true, false, true, true};
  for (int r = 0; r < 4; ++r) {
    RepRow row;
    row.rep = r + 1;
    row.estimator = "ols";
    row.bias = 0.1 * (r + 1);
    row.covered = cov[r];
    rows.push_back(row);
  }
  ErrorRow err;
  err.rep = 5;
  err.estimator = "ols";
  const auto s = summarize(rows, {err}, {"ols"});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].coverage, 0.75);
  EXPECT_NEAR(s[0].mean_bias, 0.25, 1e-15);
  EXPECT_NEAR(s[0].sd_bias, std::sqrt(0.05 / 3.0), 1e-15);
  EXPECT_EQ(s[0].fitted, 4);
  EXPECT_EQ(s[0].failed, 1);
}

TEST(Report, EmptyReportGivesHeaderOnlyCsvs) {
  TempDir dir("empty");
  ExperimentReport rep;
  rep.scenario = "fixed_confounder";
  emit_report(rep, dir.path(), {ReportFormat::Csv, ReportFormat::Json});
  EXPECT_EQ(slurp(dir.path() / "per_rep.csv"), "scenario,rep,estimator,beta_hat,bias,ci_lo,ci_hi,covered\n");
  EXPECT_EQ(slurp(dir.path() / "summary.csv"), "estimator,mean_bias,sd_bias,coverage\n");
  EXPECT_EQ(count_lines(slurp(dir.path() / "errors.csv")), 1u);
  EXPECT_TRUE(fs::exists(dir.path() / "report.json"));
}

TEST(Report, Formats) {
  EXPECT_EQ(parse_formats("csv,svg").size(), 2u);
  EXPECT_THROW(parse_formats("csv,pdf"), ConfigError);
  EXPECT_THROW(parse_formats(""), ConfigError);
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(Report, SummaryRecomputedFromPerRepCsv) {
  TempDir dir("recompute");
  const ExperimentReport rep = run_experiment(parse_config(kClustered));
  ASSERT_EQ(rep.rows.size(), 18u);
  emit_report(rep, dir.path(), {ReportFormat::Csv});
  const auto rows = read_rep_rows(dir.path() / "per_rep.csv");
  ASSERT_EQ(rows.size(), rep.rows.size());
  const auto again = summarize(rows, read_error_rows(dir.path() / "errors.csv"), rep.estimators);
  EXPECT_EQ(render_summary_csv(again), slurp(dir.path() / "summary.csv"));
  for (const auto& s : again) {
    int covered = 0;
    int total = 0;
    for (const auto& r : rows) {
      if (r.estimator == s.estimator) {
        covered += r.covered ? 1 : 0;
        ++total;
      }
    }
    EXPECT_EQ(s.coverage, static_cast<double>(covered) / total);
  }
}

TEST(Report, DeterministicBytes) {
  TempDir a("det_a");
  TempDir b("det_b");
  const ExperimentConfig cfg = parse_config(kClustered);
  emit_report(run_experiment(cfg), a.path(), {ReportFormat::Csv, ReportFormat::Svg});
  emit_report(run_experiment(cfg), b.path(), {ReportFormat::Csv, ReportFormat::Svg});
  for (const char* f : {"per_rep.csv", "summary.csv", "errors.csv", "bias_histograms.svg"}) {
    EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
  }
}

TEST(Report, ThreadCountDoesNotChangeOutput) {
  ExperimentConfig cfg = parse_config(kClustered);
  const std::string one = render_rep_csv(run_experiment(cfg).rows);
  cfg.threads = 3;
  EXPECT_EQ(render_rep_csv(run_experiment(cfg).rows), one);
}

TEST(Runner, SubsampleUnitSelectsRowsOrGroups) {
  ExperimentConfig cfg = parse_config(kClustered);
  EXPECT_FALSE(cfg.interval_for(Method::GroupedRe).subsample_groups);
  cfg.estimators = {Method::GroupedRe};
  cfg.replications = 2;
  const auto rows = run_experiment(cfg).rows;
  cfg.subsample_unit = "groups";
  EXPECT_TRUE(cfg.interval_for(Method::GroupedRe).subsample_groups);
  const auto groups = run_experiment(cfg).rows;
  ASSERT_EQ(rows.size(), groups.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].beta_hat, groups[i].beta_hat);
    EXPECT_NE(rows[i].ci_hi - rows[i].ci_lo, groups[i].ci_hi - groups[i].ci_lo);
  }
}

TEST(Report, EigenScatterHasOnePointPerReplication) {
  TempDir dir("eigen");
  const ExperimentConfig cfg =
      parse_config(R"({"scenario": "eigen", "n": 200, "replications": 7, "estimators": ["ols", "gls_known"]})");
  const ExperimentReport rep = run_experiment(cfg);
  ASSERT_EQ(rep.eigen.size(), 7u);
  emit_report(rep, dir.path(), {ReportFormat::Csv, ReportFormat::Svg, ReportFormat::Json});
  EXPECT_EQ(count_substr(slurp(dir.path() / "eigen_scatter.svg"), "<circle"), 7u);
  EXPECT_EQ(count_lines(slurp(dir.path() / "eigen_bias.csv")), 8u);
  const std::string json = slurp(dir.path() / "report.json");
  EXPECT_NE(json.find("\"eigen_agreement\""), std::string::npos);
  EXPECT_NE(json.find("\"provenance\""), std::string::npos);
}

TEST(Report, CoverageMatchesHandCheckedIntervals) {
  const ExperimentReport rep = run_experiment(parse_config(kClustered));
  for (const auto& r : rep.rows) {
    EXPECT_EQ(r.covered, r.ci_lo <= 1.0 && 1.0 <= r.ci_hi);
    EXPECT_NEAR(r.bias, r.beta_hat - 1.0, 1e-15);
  }
}

#ifdef SPCONF_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPCONF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
  TempDir dir("cli");
  const fs::path bad = dir.path() / "bad.json";
  std::ofstream(bad) << R"({"scenario": "clustered", "colour": 1})";
  EXPECT_EQ(run_cli("simulate --config " + bad.string() + " --out " + (dir.path() / "o1").string()), 2);

  const fs::path good = dir.path() / "good.json";
  std::ofstream(good) << R"({"scenario": "clustered", "m": 20, "k": 4, "replications": 2, "estimators": ["ols"]})";
  EXPECT_EQ(run_cli("simulate --config " + good.string() + " --out " + (dir.path() / "o2").string()), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "o2" / "per_rep.csv"));
  EXPECT_EQ(run_cli("report --in " + (dir.path() / "o2").string() + " --summary"), 0);
  EXPECT_EQ(run_cli("diagnose --lemma nonsense --out " + (dir.path() / "o3").string()), 2);
  // every grouped fit fails: 200 rows subsampled at 1/20 are too few
  const fs::path failing = dir.path() / "failing.json";
  std::ofstream(failing) << R"({"scenario": "clustered", "m": 40, "k": 5, "replications": 3, "estimators": ["grouped_re"]})";
  EXPECT_EQ(run_cli("simulate --config " + failing.string() + " --out " + (dir.path() / "o5").string()), 3);
  EXPECT_EQ(run_cli("eigen-bias --config " + good.string() + " --out " + (dir.path() / "o4").string()), 2);
}
#endif
