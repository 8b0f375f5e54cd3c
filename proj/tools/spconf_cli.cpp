// spconf: simulation workbench for spatial confounding estimators.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "spconf/harness.hpp"

namespace fs = std::filesystem;
using namespace spconf;

namespace {

constexpr int kConfigExit = 2;
constexpr int kFailureExit = 3;
constexpr double kFailureLimit = 0.05;

std::vector<Eigen::Index> parse_sweep(const std::string& text) {
  std::vector<Eigen::Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad n-sweep entry: " + item);
    }
    if (used != item.size() || v < 2) throw ConfigError("bad n-sweep entry: " + item);
    out.push_back(static_cast<Eigen::Index>(v));
  }
  if (out.empty()) throw ConfigError("empty n-sweep");
  return out;
}

void print_summary(const ExperimentReport& r) {
  std::printf("scenario=%s n=%lld reps=%d wall=%.1fs failures=%.3f\n", r.scenario.c_str(),
              static_cast<long long>(r.n), r.replications, r.wall_seconds, r.failure_fraction());
  std::printf("  %-14s %12s %12s %10s %6s\n", "estimator", "mean_bias", "sd_bias", "coverage", "failed");
  for (const auto& s : r.summary) {
    std::printf("  %-14s %12.5f %12.5f %10.3f %6d\n", s.estimator.c_str(), s.mean_bias, s.sd_bias, s.coverage,
                s.failed);
  }
}

int failure_status(const std::vector<ExperimentReport>& reports) {
  for (const auto& r : reports) {
    if (r.failure_fraction() > kFailureLimit) {
      std::fprintf(stderr, "error: %.1f%% of replications failed at n=%lld (limit 5%%)\n",
                   100.0 * r.failure_fraction(), static_cast<long long>(r.n));
      return kFailureExit;
    }
  }
  return 0;
}

int cmd_simulate(const std::string& config, const fs::path& out, int threads, const std::string& formats) {
  ExperimentConfig cfg = load_config(config);
  if (threads > 0) cfg.threads = threads;
  const auto fmts = parse_formats(formats);
  const auto reports = run_sweep(cfg);
  emit_sweep(reports, out, fmts);
  for (const auto& r : reports) print_summary(r);
  return failure_status(reports);
}

int cmd_eigen_bias(const std::string& config, const fs::path& out, int threads) {
  ExperimentConfig cfg = load_config(config);
  if (cfg.scenario != Scenario::Eigen) throw ConfigError("eigen-bias requires scenario \"eigen\"");
  if (threads > 0) cfg.threads = threads;
  const auto reports = run_sweep(cfg);
  emit_sweep(reports, out, {ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg});
  for (const auto& r : reports) {
    print_summary(r);
    const EigenAgreement a = eigen_agreement(r);
    std::printf("  exact vs predicted: trials=%zu pearson=%.4f slope=%.4f\n", a.trials, a.pearson, a.slope);
  }
  return failure_status(reports);
}

int cmd_diagnose(const std::string& lemma, const std::string& sweep, int reps, std::uint64_t seed,
                 const std::string& h, const fs::path& out) {
  LemmaConfig cfg;
  cfg.lemma = parse_lemma(lemma);
  cfg.n_sweep = parse_sweep(sweep);
  cfg.reps = reps;
  cfg.seed = seed;
  cfg.h = h;
  const LemmaReport report = run_lemma_diagnostic(cfg);
  emit_lemma_report(report, cfg, out);
  std::printf("%-6s %14s %12s %12s %12s\n", "n", "mean", "sd", "min", "mc_se");
  for (const auto& s : report.summary) {
    std::printf("%-6lld %14.6g %12.6g %12.6g %12.6g\n", static_cast<long long>(s.n), s.mean, s.sd, s.min, s.mc_se);
  }
  return 0;
}

// Re-aggregates per_rep.csv (and errors.csv when present) from a run directory.
void reaggregate(const fs::path& dir, bool write) {
  const auto rows = read_rep_rows(dir / "per_rep.csv");
  std::vector<ErrorRow> errors;
  if (fs::exists(dir / "errors.csv")) errors = read_error_rows(dir / "errors.csv");
  std::vector<std::string> ids;
  auto note = [&](const std::string& id) {
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  };
  for (const auto& r : rows) note(r.estimator);
  for (const auto& e : errors) note(e.estimator);
  const std::string csv = render_summary_csv(summarize(rows, errors, ids));
  std::cout << csv;
  if (write) {
    std::ofstream f(dir / "summary.csv", std::ios::binary);
    f << csv;
    if (!f) throw std::runtime_error("cannot write " + (dir / "summary.csv").string());
  }
}

int cmd_report(const fs::path& in, bool summary) {
  if (fs::exists(in / "per_rep.csv")) {
    reaggregate(in, summary);
    return 0;
  }
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(in)) {
    if (e.is_directory() && fs::exists(e.path() / "per_rep.csv")) dirs.push_back(e.path());
  }
  if (dirs.empty()) throw std::runtime_error("no per_rep.csv under " + in.string());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    std::cout << "# " << d.filename().string() << '\n';
    reaggregate(d, summary);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial confounding simulation workbench"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::string formats = "csv,json,svg";
  int threads = 0;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment");
  simulate->add_option("--config", config, "JSON experiment config")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out, "Output directory")->required();
  simulate->add_option("--threads", threads, "Worker threads (overrides config)")->check(CLI::PositiveNumber);
  simulate->add_option("--formats", formats, "Comma list of csv,json,svg");

  auto* eigen = app.add_subcommand("eigen-bias", "Exact vs predicted GLS bias in the eigen scenario");
  eigen->add_option("--config", config, "JSON experiment config")->required()->check(CLI::ExistingFile);
  eigen->add_option("--out", out, "Output directory")->required();
  eigen->add_option("--threads", threads, "Worker threads (overrides config)")->check(CLI::PositiveNumber);

  std::string lemma;
  std::string sweep = "250,500,1000,2000";
  int reps = 500;
  std::uint64_t seed = 1;
  std::string h = "step";
  auto* diagnose = app.add_subcommand("diagnose", "Monte Carlo checks of the cross-term and quadratic-form limits");
  diagnose->add_option("--lemma", lemma, "cross or quadform")->required()->check(CLI::IsMember({"cross", "quadform"}));
  diagnose->add_option("--n-sweep", sweep, "Comma list of sample sizes");
  diagnose->add_option("--reps", reps, "Replications per n")->check(CLI::Range(2, 1000000));
  diagnose->add_option("--seed", seed, "Base seed");
  diagnose->add_option("--signal", h, "Exposure signal: step or smooth")->check(CLI::IsMember({"step", "smooth"}));
  diagnose->add_option("--out", out, "Output directory")->required();

  std::string in;
  bool summary = false;
  auto* report = app.add_subcommand("report", "Re-aggregate a finished run");
  report->add_option("--in", in, "Run directory")->required()->check(CLI::ExistingDirectory);
  report->add_flag("--summary", summary, "Rewrite summary.csv from per_rep.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (*simulate) return cmd_simulate(config, out, threads, formats);
    if (*eigen) return cmd_eigen_bias(config, out, threads);
    if (*diagnose) return cmd_diagnose(lemma, sweep, reps, seed, h, out);
    if (*report) return cmd_report(in, summary);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigExit;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
