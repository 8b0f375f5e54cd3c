#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <thread>

#include "spconf/harness.hpp"
#include "spconf/oracles.hpp"
#include "spconf/smoothers.hpp"
#include "spconf/stats.hpp"
#include "spconf/vecchia.hpp"

namespace spconf {

namespace {

bool needs_smoother(Method m) {
  return m == Method::Rsr || m == Method::Gam || m == Method::GamFx || m == Method::SpatialPlus;
}

bool needs_known(Method m) { return m == Method::GlsKnown || m == Method::GpRidge; }

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const NotPositiveDefinite*>(&e) != nullptr) return "not_positive_definite";
  if (dynamic_cast<const IdentifiabilityError*>(&e) != nullptr) return "identifiability";
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return "numerical";
  if (dynamic_cast<const InvalidArgument*>(&e) != nullptr) return "invalid_argument";
  return "other";
}

Eigen::MatrixXd exposure_design(const ExperimentConfig& cfg, const Eigen::VectorXd& x) {
  return cfg.intercept ? design_with_intercept(x) : Eigen::MatrixXd(x);
}

std::shared_ptr<const SmootherContext> build_smoother(const ExperimentConfig& cfg, const LocationSet& locations) {
  return std::make_shared<const SmootherContext>(
      thinplate_basis(locations, cfg.smoother_rank),
      lambda_grid(locations.size(), cfg.lambda_grid_lo, cfg.lambda_grid_hi, cfg.lambda_grid_len));
}

// Per-dataset lazily built helpers; shared ones are filled in up front when the
// locations do not change across replications.
struct Helpers {
  std::shared_ptr<const SmootherContext> smoother;
  std::shared_ptr<const CovarianceFactor> known;

  const SmootherContext& smoother_for(const ExperimentConfig& cfg, const SimulatedDataset& d) {
    if (!smoother) smoother = build_smoother(cfg, d.locations);
    return *smoother;
  }
  const CovarianceFactor& known_for(const ExperimentConfig& cfg, const SimulatedDataset& d) {
    if (!known) known = make_covariance_factor(cfg.analysis_kernel(), d.locations);
    return *known;
  }
};

struct Fitted {
  FitResult fit;
  std::shared_ptr<const CovarianceFactor> factor;  // covariance used, for GLS-type fits
};

Fitted fit_method(Method m, const SimulatedDataset& d, const ExperimentConfig& cfg, Helpers& helpers) {
  const Eigen::MatrixXd design = exposure_design(cfg, d.x);
  const Eigen::MatrixXd exposure = d.x;
  Fitted out;
  switch (m) {
    case Method::Ols:
      out.fit = fit_ols(design, d.y);
      break;
    case Method::Rsr:
      out.fit = fit_rsr(design, d.y, helpers.smoother_for(cfg, d).basis);
      break;
    case Method::GlsKnown:
      out.fit = fit_gls_known(design, d.y, helpers.known_for(cfg, d));
      out.fit.cov_params = cfg.analysis_kernel();
      out.factor = helpers.known;
      break;
    case Method::GpRidge:
      out.fit = fit_gp_ridge(design, d.y, helpers.known_for(cfg, d), cfg.tau2);
      out.fit.cov_params = cfg.analysis_kernel();
      out.factor = helpers.known;
      break;
    case Method::GlsProfile:
      out.fit = fit_gls_profile(design, d.y, d.locations, cfg.family);
      out.factor = make_covariance_factor(*out.fit.cov_params, d.locations);
      break;
    case Method::GlsVecchia: {
      auto factor = std::make_shared<const VecchiaFactor>(cfg.analysis_kernel(), d.locations, cfg.vecchia_m);
      out.fit = fit_gls_known(design, d.y, *factor);
      out.fit.method = Method::GlsVecchia;
      out.fit.cov_params = cfg.analysis_kernel();
      out.fit.diagnostics["neighbors"] = cfg.vecchia_m;
      out.factor = std::move(factor);
      break;
    }
    case Method::Gam:
      out.fit = fit_spline_plm(exposure, d.y, helpers.smoother_for(cfg, d), PenaltyMode::Gcv);
      break;
    case Method::GamFx:
      out.fit = fit_spline_plm(exposure, d.y, helpers.smoother_for(cfg, d), PenaltyMode::None);
      break;
    case Method::SpatialPlus:
      out.fit = fit_spatial_plus(exposure, d.y, helpers.smoother_for(cfg, d));
      break;
    case Method::GroupedRe:
      if (!d.groups) throw InvalidArgument("grouped_re: dataset has no group ids");
      out.fit = fit_grouped_re(design, d.y, *d.groups);
      break;
  }
  return out;
}

SimulatedDataset subset_dataset(const SimulatedDataset& d, const std::vector<Eigen::Index>& rows) {
  const auto k = static_cast<Eigen::Index>(rows.size());
  SimulatedDataset s{.locations = d.locations.subset(rows)};
  s.x.resize(k);
  s.y.resize(k);
  s.g_true.resize(k);
  s.exposure_noise.resize(k);
  s.outcome_noise.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index r = rows[static_cast<std::size_t>(i)];
    s.x(i) = d.x(r);
    s.y(i) = d.y(r);
    s.g_true(i) = d.g_true(r);
    s.exposure_noise(i) = d.exposure_noise(r);
    s.outcome_noise(i) = d.outcome_noise(r);
  }
  if (d.groups) {
    std::vector<std::int64_t> g;
    g.reserve(rows.size());
    for (Eigen::Index r : rows) g.push_back((*d.groups)[static_cast<std::size_t>(r)]);
    s.groups = std::move(g);
  }
  s.beta_true = d.beta_true;
  s.scenario = d.scenario;
  return s;
}

std::pair<double, double> interval(Method m, const Fitted& f, const SimulatedDataset& d, const ExperimentConfig& cfg,
                                   const RngStream& rep_rng) {
  const IntervalSpec spec = cfg.interval_for(m);
  const std::string tag(to_string(m));
  switch (spec.method) {
    case IntervalMethod::Analytic:
      return analytic_ci(f.fit, spec.level);
    case IntervalMethod::ParametricBootstrap: {
      if (!f.factor) throw InvalidArgument("bootstrap: estimator has no fitted covariance");
      const ResampleResult res = parametric_spatial_bootstrap(exposure_design(cfg, d.x), d.y, f.fit.coefficients,
                                                              *f.factor, spec.replicates,
                                                              rep_rng.substream("bootstrap/" + tag), spec.level);
      return res.ci;
    }
    case IntervalMethod::Subsample: {
      auto estimator = [&](const std::vector<Eigen::Index>& rows) {
        const SimulatedDataset sub = subset_dataset(d, rows);
        Helpers fresh;
        return fit_method(m, sub, cfg, fresh).fit.beta_hat;
      };
      const ResampleResult res =
          subsample_se(estimator, d.x.size(), spec.subsample_groups ? d.groups : std::nullopt, f.fit.beta_hat, spec.subsample_fraction, spec.replicates,
                       rep_rng.substream("subsample/" + tag), spec.level);
      return res.ci;
    }
  }
  throw InvalidArgument("unknown interval method");
}

struct Shared {
  const ExperimentConfig& cfg;
  std::optional<ConfounderModel> confounder;
  Eigen::VectorXd frozen_g;
  Helpers fixed_helpers;  // populated when locations are fixed across replications
  bool fixed_locations = false;
};

struct RepOutput {
  std::vector<RepRow> rows;
  std::vector<ErrorRow> errors;
  std::vector<DiagnosticRow> diagnostics;
  std::optional<EigenBiasRow> eigen;
};

RepOutput run_rep(const Shared& shared, int rep) {
  const ExperimentConfig& cfg = shared.cfg;
  const std::string scenario(to_string(cfg.scenario));
  const Eigen::Index n = cfg.sample_size();
  const RngStream rng(cfg.seed, static_cast<std::uint64_t>(rep));
  RepOutput out;

  std::optional<SimulatedDataset> data;
  std::optional<EigenScenarioDraw> draw;
  try {
    switch (cfg.scenario) {
      case Scenario::FixedConfounder:
        data = shared.confounder->dataset(shared.frozen_g, rng.substream("noise"), cfg.scenario);
        break;
      case Scenario::RandomConfounder:
        data = shared.confounder->dataset(shared.confounder->surface(rng.substream("confounder")),
                                          rng.substream("noise"), cfg.scenario);
        break;
      case Scenario::Clustered:
        data = gen_clustered_linear(cfg.m, cfg.k, rng, cfg.beta);
        break;
      case Scenario::Eigen:
        draw = gen_eigen_scenario(cfg.eigen_config(), rng);
        data = draw->data;
        break;
    }
  } catch (const std::exception& e) {
    out.errors.push_back({scenario, n, rep, "dgp", error_kind(e), e.what()});
    return out;
  }
  const SimulatedDataset& d = *data;
  Helpers helpers = shared.fixed_locations ? shared.fixed_helpers : Helpers{};

  out.diagnostics.push_back({rep, n, "ols_plugin", ols_asymptotic_bias(d.x, d.g_true)});
  if (draw) {
    try {
      const CovarianceFactor& factor = helpers.known_for(cfg, d);
      const Eigen::MatrixXd design = exposure_design(cfg, d.x);
      const double exact = exact_gls_bias(design, factor, d.g_true);
      const double denom = quad_form(factor, d.x, d.x) / static_cast<double>(n);
      const double noise = cfg.predicted_noise == "nugget" ? cfg.nugget : cfg.sigma0_2;
      const double predicted = predicted_gls_bias(draw->c_g, draw->c_h, draw->system, noise, denom, n);
      out.eigen = EigenBiasRow{rep, exact, predicted};
      out.diagnostics.push_back({rep, n, "exact_bias", exact});
      out.diagnostics.push_back({rep, n, "predicted_bias", predicted});
    } catch (const std::exception& e) {
      out.errors.push_back({scenario, n, rep, "oracle", error_kind(e), e.what()});
    }
  }

  for (Method m : cfg.estimators) {
    const std::string id(to_string(m));
    try {
      const Fitted f = fit_method(m, d, cfg, helpers);
      const auto ci = interval(m, f, d, cfg, rng);
      RepRow row;
      row.scenario = scenario;
      row.n = n;
      row.rep = rep;
      row.estimator = id;
      row.beta_hat = f.fit.beta_hat;
      row.bias = f.fit.beta_hat - d.beta_true;
      row.ci_lo = ci.first;
      row.ci_hi = ci.second;
      row.covered = ci.first <= d.beta_true && d.beta_true <= ci.second;
      row.se = f.fit.se.value_or(std::numeric_limits<double>::quiet_NaN());
      out.rows.push_back(std::move(row));
      for (const auto& [key, value] : f.fit.diagnostics) out.diagnostics.push_back({rep, n, id + "." + key, value});
    } catch (const std::exception& e) {
      out.errors.push_back({scenario, n, rep, id, error_kind(e), e.what()});
    }
  }
  return out;
}

}  // namespace

double ExperimentReport::failure_fraction() const {
  if (replications <= 0) return 0.0;
  std::set<int> failed;
  for (const auto& e : errors) failed.insert(e.rep);
  return static_cast<double>(failed.size()) / replications;
}

const SummaryRow* ExperimentReport::find(std::string_view estimator) const {
  for (const auto& s : summary) {
    if (s.estimator == estimator) return &s;
  }
  return nullptr;
}

std::vector<SummaryRow> summarize(const std::vector<RepRow>& rows, const std::vector<ErrorRow>& errors,
                                  const std::vector<std::string>& estimators) {
  std::vector<SummaryRow> out;
  for (const auto& id : estimators) {
    SummaryRow s;
    s.estimator = id;
    std::vector<double> bias;
    std::vector<double> abs_bias;
    double covered = 0.0;
    for (const auto& r : rows) {
      if (r.estimator != id) continue;
      bias.push_back(r.bias);
      abs_bias.push_back(std::abs(r.bias));
      covered += r.covered ? 1.0 : 0.0;
    }
    for (const auto& e : errors) s.failed += e.estimator == id ? 1 : 0;
    s.fitted = static_cast<int>(bias.size());
    if (!bias.empty()) {
      s.mean_bias = mean(bias);
      s.sd_bias = sd(bias);
      s.coverage = covered / static_cast<double>(bias.size());
      s.mean_abs_bias = mean(abs_bias);
      s.median_abs_bias = median(abs_bias);
    } else {
      s.mean_bias = s.sd_bias = s.coverage = s.mean_abs_bias = s.median_abs_bias =
          std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(s));
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  Shared shared{cfg, std::nullopt, {}, {}, false};
  const bool any_smoother = std::any_of(cfg.estimators.begin(), cfg.estimators.end(), needs_smoother);
  const bool any_known = std::any_of(cfg.estimators.begin(), cfg.estimators.end(), needs_known);

  switch (cfg.scenario) {
    case Scenario::FixedConfounder:
    case Scenario::RandomConfounder: {
      shared.confounder.emplace(cfg.confounder_config(), cfg.seed);
      if (cfg.scenario == Scenario::FixedConfounder) {
        shared.frozen_g = shared.confounder->surface(RngStream(cfg.seed, 0).substream("confounder"));
      }
      shared.fixed_locations = true;
      if (any_smoother && cfg.smoother_rank == shared.confounder->config().smoother_rank) {
        shared.fixed_helpers.smoother = shared.confounder->shared_smoother();
      }
      if (any_known) {
        shared.fixed_helpers.known = make_covariance_factor(cfg.analysis_kernel(), shared.confounder->locations());
      }
      break;
    }
    case Scenario::Clustered: {
      const LocationSet locations = fixed_grid_locations(cfg.m, cfg.k);
      shared.fixed_locations = true;
      if (any_smoother) shared.fixed_helpers.smoother = build_smoother(cfg, locations);
      if (any_known) shared.fixed_helpers.known = make_covariance_factor(cfg.analysis_kernel(), locations);
      break;
    }
    case Scenario::Eigen:
      break;
  }

  const int reps = cfg.replications;
  std::vector<RepOutput> outputs(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= reps) break;
      outputs[static_cast<std::size_t>(i)] = run_rep(shared, i + 1);
    }
  };
  const int extra = std::min(cfg.threads, reps) - 1;
  std::vector<std::thread> pool;
  for (int t = 0; t < extra; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ExperimentReport report;
  report.scenario = std::string(to_string(cfg.scenario));
  report.n = cfg.sample_size();
  report.replications = reps;
  report.seed = cfg.seed;
  for (Method m : cfg.estimators) report.estimators.emplace_back(to_string(m));
  for (auto& o : outputs) {
    std::move(o.rows.begin(), o.rows.end(), std::back_inserter(report.rows));
    std::move(o.errors.begin(), o.errors.end(), std::back_inserter(report.errors));
    std::move(o.diagnostics.begin(), o.diagnostics.end(), std::back_inserter(report.diagnostics));
    if (o.eigen) report.eigen.push_back(*o.eigen);
  }
  report.summary = summarize(report.rows, report.errors, report.estimators);
  report.config_echo = cfg.echo;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<ExperimentReport> run_sweep(const ExperimentConfig& cfg) {
  std::vector<ExperimentReport> out;
  if (cfg.n_sweep.empty()) {
    out.push_back(run_experiment(cfg));
    return out;
  }
  for (Eigen::Index n : cfg.n_sweep) {
    ExperimentConfig c = cfg;
    c.n = n;
    out.push_back(run_experiment(c));
  }
  return out;
}

EigenAgreement eigen_agreement(const ExperimentReport& report) {
  EigenAgreement a;
  std::vector<double> exact;
  std::vector<double> predicted;
  for (const auto& e : report.eigen) {
    exact.push_back(e.exact_bias);
    predicted.push_back(e.predicted_bias);
  }
  a.trials = exact.size();
  if (a.trials >= 2) {
    a.pearson = pearson(exact, predicted);
    a.slope = slope(predicted, exact);
  }
  return a;
}

}  // namespace spconf
