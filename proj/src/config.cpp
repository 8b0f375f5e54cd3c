#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spconf/harness.hpp"

namespace spconf {

namespace {

using nlohmann::json;

const std::set<std::string, std::less<>> kKnownKeys = {
    "scenario",       "n",           "m",          "k",
    "kmax",           "kappa2",      "sigma0_2",   "nugget",
    "gamma2",         "phi",         "ell",        "beta",
    "smoother_rank",  "seed",        "replications", "estimators",
    "ci_method",      "ci_level",    "boot_reps",  "subsample_fraction",
    "subsample_reps", "lambda_grid_lo", "lambda_grid_hi", "lambda_grid_len",
    "n_sweep",        "family",      "tau2",       "vecchia_m",
    "dense_n_cap",    "intercept",   "predicted_noise", "threads",
    "subsample_unit",
};

bool is_gls_like(Method m) {
  return m == Method::GlsKnown || m == Method::GlsProfile || m == Method::GlsVecchia;
}

bool is_dense(Method m) {
  return m == Method::GlsKnown || m == Method::GlsProfile || m == Method::GpRidge;
}

class Reader {
 public:
  explicit Reader(const json& doc) : doc_(doc) {}

  [[nodiscard]] bool has(const char* key) const { return doc_.contains(key); }

  double real(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = doc_.at(key);
    if (!v.is_number()) throw ConfigError(std::string(key) + ": expected a number");
    return v.get<double>();
  }

  std::int64_t integer(const char* key, std::int64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = doc_.at(key);
    if (!v.is_number_integer()) throw ConfigError(std::string(key) + ": expected an integer");
    return v.get<std::int64_t>();
  }

  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = doc_.at(key);
    if (!v.is_string()) throw ConfigError(std::string(key) + ": expected a string");
    return v.get<std::string>();
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = doc_.at(key);
    if (!v.is_boolean()) throw ConfigError(std::string(key) + ": expected a boolean");
    return v.get<bool>();
  }

  const json& raw(const char* key) const { return doc_.at(key); }

 private:
  const json& doc_;
};

template <class F>
auto rethrow_as_config(const char* key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

std::vector<Method> default_estimators(Scenario s) {
  switch (s) {
    case Scenario::FixedConfounder:
    case Scenario::RandomConfounder:
      return {Method::Ols, Method::GlsProfile, Method::Gam, Method::GamFx, Method::SpatialPlus};
    case Scenario::Clustered:
      return {Method::Ols, Method::GroupedRe, Method::GlsProfile};
    case Scenario::Eigen:
      return {Method::Ols, Method::GlsKnown};
  }
  return {};
}

IntervalMethod default_interval(Method m) {
  if (m == Method::GlsProfile || m == Method::GlsVecchia) return IntervalMethod::ParametricBootstrap;
  if (m == Method::GroupedRe) return IntervalMethod::Subsample;
  return IntervalMethod::Analytic;
}

json echo_of(const ExperimentConfig& c) {
  json j;
  j["scenario"] = std::string(to_string(c.scenario));
  j["n"] = c.n;
  j["m"] = c.m;
  j["k"] = c.k;
  j["replications"] = c.replications;
  json est = json::array();
  for (Method m : c.estimators) est.push_back(std::string(to_string(m)));
  j["estimators"] = est;
  j["seed"] = c.seed;
  j["kmax"] = c.kmax;
  j["kappa2"] = c.kappa2;
  j["sigma0_2"] = c.sigma0_2;
  j["nugget"] = c.nugget;
  j["gamma2"] = c.gamma2;
  j["phi"] = c.phi;
  j["ell"] = c.ell;
  j["beta"] = c.beta;
  j["smoother_rank"] = c.smoother_rank;
  j["lambda_grid_lo"] = c.lambda_grid_lo;
  j["lambda_grid_hi"] = c.lambda_grid_hi;
  j["lambda_grid_len"] = c.lambda_grid_len;
  json ci = json::object();
  for (const auto& [m, im] : c.ci_method) ci[std::string(to_string(m))] = std::string(to_string(im));
  j["ci_method"] = ci;
  j["ci_level"] = c.ci_level;
  j["boot_reps"] = c.boot_reps;
  j["subsample_fraction"] = c.subsample_fraction;
  j["subsample_reps"] = c.subsample_reps;
  j["subsample_unit"] = c.subsample_unit;
  j["family"] = std::string(to_string(c.family));
  j["tau2"] = c.tau2;
  j["vecchia_m"] = c.vecchia_m;
  j["dense_n_cap"] = c.dense_n_cap;
  j["intercept"] = c.intercept;
  j["predicted_noise"] = c.predicted_noise;
  j["n_sweep"] = c.n_sweep;
  return j;
}

}  // namespace

IntervalSpec ExperimentConfig::interval_for(Method method) const {
  IntervalSpec spec;
  spec.level = ci_level;
  const auto it = ci_method.find(method);
  spec.method = it == ci_method.end() ? default_interval(method) : it->second;
  spec.replicates = spec.method == IntervalMethod::Subsample ? subsample_reps : boot_reps;
  spec.subsample_fraction = subsample_fraction;
  spec.subsample_groups = subsample_unit == "groups";
  return spec;
}

KernelSpec ExperimentConfig::analysis_kernel() const {
  const double scale = family == KernelFamily::SquaredExponential ? ell : phi;
  return KernelSpec{family, gamma2, scale, nugget};
}

FixedConfounderConfig ExperimentConfig::confounder_config() const {
  FixedConfounderConfig c;
  c.n = n;
  c.kernel = KernelSpec{KernelFamily::Spherical, gamma2, phi, 0.0};
  c.smoother_rank = smoother_rank;
  c.beta = beta;
  c.lambda_grid_lo = lambda_grid_lo;
  c.lambda_grid_hi = lambda_grid_hi;
  c.lambda_grid_len = lambda_grid_len;
  return c;
}

EigenScenarioConfig ExperimentConfig::eigen_config() const {
  EigenScenarioConfig c;
  c.n = n;
  c.ell = ell;
  c.kmax = kmax;
  c.kappa2 = kappa2;
  c.sigma0_2 = sigma0_2;
  c.nugget = nugget;
  c.gamma2 = gamma2;
  c.beta = beta;
  return c;
}

Eigen::Index ExperimentConfig::sample_size() const {
  return scenario == Scenario::Clustered ? static_cast<Eigen::Index>(m * k) : n;
}

ExperimentConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : doc.items()) {
    if (!kKnownKeys.contains(item.key())) throw ConfigError("unknown config key: " + item.key());
  }
  const Reader r(doc);
  ExperimentConfig c;
  if (!r.has("scenario")) throw ConfigError("scenario is required");
  c.scenario = rethrow_as_config("scenario", [&] { return parse_scenario(r.text("scenario", "")); });

  const bool eigen = c.scenario == Scenario::Eigen;
  const bool clustered = c.scenario == Scenario::Clustered;
  c.m = static_cast<std::size_t>(std::max<std::int64_t>(0, r.integer("m", 300)));
  c.k = static_cast<std::size_t>(std::max<std::int64_t>(0, r.integer("k", 10)));
  if (r.integer("m", 300) < 1 || r.integer("k", 10) < 1) throw ConfigError("m and k must be >= 1");
  c.n = r.integer("n", eigen ? 3000 : clustered ? static_cast<std::int64_t>(c.m * c.k) : 2000);
  if (clustered && r.has("n") && c.n != static_cast<Eigen::Index>(c.m * c.k)) {
    throw ConfigError("clustered scenario: n must equal m * k");
  }
  c.replications = static_cast<int>(r.integer("replications", 300));
  if (r.has("seed")) {
    const json& v = r.raw("seed");
    const bool ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    if (!ok) throw ConfigError("seed: expected a non-negative integer");
    c.seed = v.get<std::uint64_t>();
  }

  c.kmax = static_cast<int>(r.integer("kmax", 5));
  c.kappa2 = r.real("kappa2", 1.0 / 16.0);
  c.sigma0_2 = r.real("sigma0_2", 1.0);
  c.nugget = r.real("nugget", eigen ? 2.0 : 1.0);
  c.gamma2 = r.real("gamma2", 1.0);
  c.phi = r.real("phi", 0.25);
  c.ell = r.real("ell", 1.0);
  c.beta = r.real("beta", 1.0);
  c.smoother_rank = r.integer("smoother_rank", 200);
  c.lambda_grid_lo = r.real("lambda_grid_lo", 1e-8);
  c.lambda_grid_hi = r.real("lambda_grid_hi", 1e4);
  c.lambda_grid_len = static_cast<int>(r.integer("lambda_grid_len", 40));

  if (r.has("estimators")) {
    const json& v = r.raw("estimators");
    if (!v.is_array() || v.empty()) throw ConfigError("estimators: expected a non-empty array of ids");
    for (const auto& e : v) {
      if (!e.is_string()) throw ConfigError("estimators: ids must be strings");
      const Method m = rethrow_as_config("estimators", [&] { return parse_method(e.get<std::string>()); });
      if (std::find(c.estimators.begin(), c.estimators.end(), m) != c.estimators.end()) {
        throw ConfigError("estimators: duplicate id " + e.get<std::string>());
      }
      c.estimators.push_back(m);
    }
  } else {
    c.estimators = default_estimators(c.scenario);
  }

  if (r.has("ci_method")) {
    const json& v = r.raw("ci_method");
    if (v.is_string()) {
      const IntervalMethod im = rethrow_as_config("ci_method", [&] { return parse_interval_method(v.get<std::string>()); });
      for (Method m : c.estimators) c.ci_method[m] = im;
    } else if (v.is_object()) {
      for (const auto& item : v.items()) {
        const Method m = rethrow_as_config("ci_method", [&] { return parse_method(item.key()); });
        if (!item.value().is_string()) throw ConfigError("ci_method: values must be strings");
        c.ci_method[m] =
            rethrow_as_config("ci_method", [&] { return parse_interval_method(item.value().get<std::string>()); });
      }
    } else {
      throw ConfigError("ci_method: expected a string or an object");
    }
  }
  c.ci_level = r.real("ci_level", 0.95);
  c.boot_reps = static_cast<int>(r.integer("boot_reps", 200));
  c.subsample_fraction = r.real("subsample_fraction", 1.0 / 20.0);
  c.subsample_reps = static_cast<int>(r.integer("subsample_reps", 120));
  c.subsample_unit = r.text("subsample_unit", "rows");

  c.family = rethrow_as_config("family", [&] {
    return parse_kernel_family(r.text("family", eigen ? "squared_exponential" : "exponential"));
  });
  c.tau2 = r.real("tau2", 1e6);
  c.vecchia_m = static_cast<int>(r.integer("vecchia_m", 15));
  c.dense_n_cap = r.integer("dense_n_cap", 4000);
  c.intercept = r.boolean("intercept", !eigen);
  c.predicted_noise = r.text("predicted_noise", "sigma0_2");
  c.threads = static_cast<int>(r.integer("threads", 1));
  if (r.has("n_sweep")) {
    const json& v = r.raw("n_sweep");
    if (!v.is_array()) throw ConfigError("n_sweep: expected an array of integers");
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 1) throw ConfigError("n_sweep: entries must be positive integers");
      c.n_sweep.push_back(e.get<Eigen::Index>());
    }
  }

  // Validation.
  if (c.replications < 1) throw ConfigError("replications must be >= 1");
  if (c.n < 1) throw ConfigError("n must be >= 1");
  if (clustered && !c.n_sweep.empty()) throw ConfigError("n_sweep is not available for the clustered scenario");
  if (!(c.ci_level > 0.0 && c.ci_level < 1.0)) throw ConfigError("ci_level must lie in (0, 1)");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  if (!(c.tau2 > 0.0)) throw ConfigError("tau2 must be positive");
  if (c.vecchia_m < 1) throw ConfigError("vecchia_m must be >= 1");
  if (c.subsample_unit != "rows" && c.subsample_unit != "groups") {
    throw ConfigError("subsample_unit must be \"rows\" or \"groups\"");
  }
  if (c.predicted_noise != "sigma0_2" && c.predicted_noise != "nugget") {
    throw ConfigError("predicted_noise must be \"sigma0_2\" or \"nugget\"");
  }
  for (const auto& [m, im] : c.ci_method) {
    if (std::find(c.estimators.begin(), c.estimators.end(), m) == c.estimators.end()) {
      throw ConfigError("ci_method names an estimator that is not run: " + std::string(to_string(m)));
    }
  }
  for (Method m : c.estimators) {
    const IntervalSpec spec = c.interval_for(m);
    rethrow_as_config("ci_method", [&] {
      spec.validate();
      return 0;
    });
    if (spec.method == IntervalMethod::ParametricBootstrap && !is_gls_like(m)) {
      throw ConfigError("parametric_bootstrap is only available for GLS estimators, not " + std::string(to_string(m)));
    }
    if (m == Method::GroupedRe && c.scenario != Scenario::Clustered) {
      throw ConfigError("grouped_re needs the group ids of the clustered scenario");
    }
  }
  rethrow_as_config("scenario parameters", [&] {
    if (eigen) {
      EigenScenarioConfig e = c.eigen_config();
      e.validate();
      for (Eigen::Index n : c.n_sweep) {
        e.n = n;
        e.validate();
      }
    } else if (!clustered) {
      FixedConfounderConfig f = c.confounder_config();
      f.validate();
      for (Eigen::Index n : c.n_sweep) {
        f.n = n;
        f.validate();
      }
    }
    c.analysis_kernel().validate();
    lambda_grid(1, c.lambda_grid_lo, c.lambda_grid_hi, c.lambda_grid_len);
    return 0;
  });

  Eigen::Index largest = c.sample_size();
  for (Eigen::Index n : c.n_sweep) largest = std::max(largest, n);
  const Eigen::Index dense_size = clustered ? static_cast<Eigen::Index>(c.m) : largest;
  for (Method m : c.estimators) {
    if (is_dense(m) && dense_size > c.dense_n_cap) {
      throw ConfigError(std::string(to_string(m)) + " needs a dense factorization above dense_n_cap; use gls_vecchia");
    }
  }
  if (eigen && largest > c.dense_n_cap) throw ConfigError("eigen scenario oracles need n <= dense_n_cap");

  c.echo = echo_of(c).dump(2);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace spconf
