#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "spconf/dgp.hpp"
#include "spconf/error.hpp"
#include "spconf/estimators.hpp"
#include "spconf/inference.hpp"
#include "spconf/kernels.hpp"

namespace spconf {

inline constexpr std::string_view kVersion = "0.1.0";

/// Malformed configuration; the CLI maps it to exit code 2.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::FixedConfounder;
  Eigen::Index n = 2000;
  std::size_t m = 300;
  std::size_t k = 10;
  int replications = 300;
  std::vector<Method> estimators;
  std::uint64_t seed = 1;

  // Scenario parameters.
  int kmax = 5;
  double kappa2 = 1.0 / 16.0;
  double sigma0_2 = 1.0;
  double nugget = 1.0;
  double gamma2 = 1.0;
  double phi = 0.25;
  double ell = 1.0;
  double beta = 1.0;
  Eigen::Index smoother_rank = 200;
  double lambda_grid_lo = 1e-8;
  double lambda_grid_hi = 1e4;
  int lambda_grid_len = 40;

  // Intervals.
  std::map<Method, IntervalMethod> ci_method;
  double ci_level = 0.95;
  int boot_reps = 200;
  double subsample_fraction = 1.0 / 20.0;
  int subsample_reps = 120;
  /// "rows" or "groups": what a subsample draws in grouped data.
  std::string subsample_unit = "rows";

  // Estimation.
  KernelFamily family = KernelFamily::Exponential;
  double tau2 = 1e6;
  int vecchia_m = 15;
  Eigen::Index dense_n_cap = 4000;
  bool intercept = true;
  /// Noise constant in the predicted-bias denominator: "sigma0_2" or "nugget".
  std::string predicted_noise = "sigma0_2";
  int threads = 1;
  std::vector<Eigen::Index> n_sweep;

  /// Canonical JSON echo of the parsed configuration.
  std::string echo;

  [[nodiscard]] IntervalSpec interval_for(Method method) const;
  /// Covariance assumed by gls_known, gp_ridge and gls_vecchia.
  [[nodiscard]] KernelSpec analysis_kernel() const;
  [[nodiscard]] FixedConfounderConfig confounder_config() const;
  [[nodiscard]] EigenScenarioConfig eigen_config() const;
  [[nodiscard]] Eigen::Index sample_size() const;
};

/// Parses a JSON document; unknown keys and invalid values raise ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RepRow {
  std::string scenario;
  Eigen::Index n = 0;
  int rep = 0;
  std::string estimator;
  double beta_hat = 0.0;
  double bias = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool covered = false;
  double se = 0.0;
};

struct ErrorRow {
  std::string scenario;
  Eigen::Index n = 0;
  int rep = 0;
  std::string estimator;
  std::string kind;
  std::string message;
};

struct DiagnosticRow {
  int rep = 0;
  Eigen::Index n = 0;
  std::string statistic;
  double value = 0.0;
};

struct SummaryRow {
  std::string estimator;
  double mean_bias = 0.0;
  double sd_bias = 0.0;
  double coverage = 0.0;
  double mean_abs_bias = 0.0;
  double median_abs_bias = 0.0;
  int fitted = 0;
  int failed = 0;
};

struct EigenBiasRow {
  int rep = 0;
  double exact_bias = 0.0;
  double predicted_bias = 0.0;
};

struct ExperimentReport {
  std::string scenario;
  Eigen::Index n = 0;
  int replications = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> estimators;
  std::vector<RepRow> rows;
  std::vector<ErrorRow> errors;
  std::vector<DiagnosticRow> diagnostics;
  std::vector<EigenBiasRow> eigen;
  std::vector<SummaryRow> summary;
  std::string config_echo;
  double wall_seconds = 0.0;

  /// Share of replications with at least one failed fit.
  [[nodiscard]] double failure_fraction() const;
  [[nodiscard]] const SummaryRow* find(std::string_view estimator) const;
};

/// Aggregates per-rep rows; coverage is the mean of `covered`.
std::vector<SummaryRow> summarize(const std::vector<RepRow>& rows, const std::vector<ErrorRow>& errors,
                                  const std::vector<std::string>& estimators);

/// Runs cfg.replications replications at cfg.n (or m, k).
ExperimentReport run_experiment(const ExperimentConfig& cfg);
/// One report per n in cfg.n_sweep, or a single report when the sweep is empty.
std::vector<ExperimentReport> run_sweep(const ExperimentConfig& cfg);

enum class ReportFormat { Csv, Json, Svg };
std::set<ReportFormat> parse_formats(std::string_view list);

/// Writes per_rep.csv, summary.csv, errors.csv (and diagnostics.csv, eigen_bias.csv
/// for the eigen scenario), report.json, and SVG figures, as requested.
void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir,
                 const std::set<ReportFormat>& formats);
/// Sweep outputs go to out_dir/n_<n>/ plus a sweep_summary.csv.
void emit_sweep(const std::vector<ExperimentReport>& reports, const std::filesystem::path& out_dir,
                const std::set<ReportFormat>& formats);

/// 17-significant-digit rendering used by every CSV.
std::string format_double(double v);

std::vector<RepRow> read_rep_rows(const std::filesystem::path& csv);
std::vector<ErrorRow> read_error_rows(const std::filesystem::path& csv);
std::string render_summary_csv(const std::vector<SummaryRow>& summary);
std::string render_rep_csv(const std::vector<RepRow>& rows);

/// Eigen scenario agreement: Pearson correlation and the least-squares slope of
/// exact bias regressed on predicted bias.
struct EigenAgreement {
  std::size_t trials = 0;
  double pearson = 0.0;
  double slope = 0.0;
};
EigenAgreement eigen_agreement(const ExperimentReport& report);

enum class Lemma { Cross, Quadform };
Lemma parse_lemma(std::string_view id);

struct LemmaConfig {
  Lemma lemma = Lemma::Cross;
  std::vector<Eigen::Index> n_sweep{250, 500, 1000, 2000};
  int reps = 500;
  std::uint64_t seed = 1;
  /// Exposure signal for the cross term: "step" (sign of s) or "smooth" (sin s).
  std::string h = "step";
  double location_sd = 1.0;
  double ell = 1.0;
  double gamma2 = 1.0;
  double nugget = 2.0;
  double noise_var = 1.0;
};

struct LemmaSummary {
  Eigen::Index n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double mc_se = 0.0;
  /// Quadform only: 0.9 * noise_var / (gamma2 + nugget).
  double bound = 0.0;
};

struct LemmaReport {
  std::vector<DiagnosticRow> rows;
  std::vector<LemmaSummary> summary;
};

LemmaReport run_lemma_diagnostic(const LemmaConfig& cfg);
void emit_lemma_report(const LemmaReport& report, const LemmaConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace spconf
