#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "spconf/dgp.hpp"
#include "spconf/error.hpp"
#include "spconf/estimators.hpp"
#include "spconf/geometry.hpp"
#include "spconf/harness.hpp"
#include "spconf/inference.hpp"
#include "spconf/kernels.hpp"
#include "spconf/linalg.hpp"
#include "spconf/mercer.hpp"
#include "spconf/oracles.hpp"
#include "spconf/smoothers.hpp"

namespace py = pybind11;
using namespace spconf;

namespace {

// 1-D coordinates are tagged as a Gaussian line, 2-D ones as the bounding square.
LocationSet locations_from(const Eigen::MatrixXd& coords, double line_sd) {
  if (coords.cols() == 1) return LocationSet(coords, GaussianLine{line_sd});
  return LocationSet(coords, UniformSquare{coords.minCoeff(), coords.maxCoeff()});
}

Eigen::MatrixXd exposure_design(const Eigen::MatrixXd& x, bool intercept) {
  if (!intercept) return x;
  Eigen::MatrixXd d(x.rows(), x.cols() + 1);
  d << x, Eigen::VectorXd::Ones(x.rows());
  return d;
}

KernelSpec kernel_from(const std::string& family, double variance, double scale, double nugget) {
  return KernelSpec{parse_kernel_family(family), variance, scale, nugget};
}

py::dict dataset_dict(const SimulatedDataset& d) {
  py::dict out;
  out["coords"] = d.locations.coords();
  out["x"] = d.x;
  out["y"] = d.y;
  out["beta_true"] = d.beta_true;
  out["g_true"] = d.g_true;
  out["h_true"] = d.h_true ? py::cast(*d.h_true) : py::none();
  out["groups"] = d.groups ? py::cast(*d.groups) : py::none();
  out["scenario"] = std::string(to_string(d.scenario));
  return out;
}

FitResult fit_dispatch(const std::string& method, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const std::optional<Eigen::MatrixXd>& coords, const std::optional<std::vector<std::int64_t>>& groups,
                       bool intercept, const std::string& family, double variance, double scale, double nugget,
                       double tau2, Eigen::Index rank, Eigen::Index neighbors) {
  const Method m = parse_method(method);
  const Eigen::MatrixXd design = exposure_design(x, intercept);
  auto need_coords = [&]() -> LocationSet {
    if (!coords) throw InvalidArgument(method + " needs coords");
    return locations_from(*coords, 1.0);
  };
  switch (m) {
    case Method::Ols:
      return fit_ols(design, y);
    case Method::Rsr:
      return fit_rsr(design, y, thinplate_basis(need_coords(), rank));
    case Method::GlsKnown:
      return fit_gls_known(design, y, *make_covariance_factor(kernel_from(family, variance, scale, nugget), need_coords()));
    case Method::GpRidge:
      return fit_gp_ridge(design, y, *make_covariance_factor(kernel_from(family, variance, scale, nugget), need_coords()),
                          tau2);
    case Method::GlsVecchia:
      return fit_gls_vecchia(design, y, need_coords(), kernel_from(family, variance, scale, nugget), neighbors);
    case Method::GlsProfile:
      return fit_gls_profile(design, y, need_coords(), parse_kernel_family(family));
    case Method::Gam:
      return fit_spline_plm(x, y, thinplate_basis(need_coords(), rank), PenaltyMode::Gcv);
    case Method::GamFx:
      return fit_spline_plm(x, y, thinplate_basis(need_coords(), rank), PenaltyMode::None);
    case Method::SpatialPlus:
      return fit_spatial_plus(x, y, thinplate_basis(need_coords(), rank));
    case Method::GroupedRe:
      if (!groups) throw InvalidArgument("grouped_re needs groups");
      return fit_grouped_re(design, y, *groups);
  }
  throw InvalidArgument("unknown method " + method);
}

py::dict report_dict(const ExperimentReport& rep) {
  py::dict out;
  out["scenario"] = rep.scenario;
  out["n"] = rep.n;
  out["replications"] = rep.replications;
  out["failure_fraction"] = rep.failure_fraction();
  py::list summary;
  for (const auto& s : rep.summary) {
    py::dict d;
    d["estimator"] = s.estimator;
    d["mean_bias"] = s.mean_bias;
    d["sd_bias"] = s.sd_bias;
    d["coverage"] = s.coverage;
    d["mean_abs_bias"] = s.mean_abs_bias;
    d["median_abs_bias"] = s.median_abs_bias;
    d["fitted"] = s.fitted;
    d["failed"] = s.failed;
    summary.append(d);
  }
  out["summary"] = summary;
  py::list rows;
  for (const auto& r : rep.rows) {
    py::dict d;
    d["rep"] = r.rep;
    d["estimator"] = r.estimator;
    d["beta_hat"] = r.beta_hat;
    d["bias"] = r.bias;
    d["ci"] = py::make_tuple(r.ci_lo, r.ci_hi);
    d["covered"] = r.covered;
    rows.append(d);
  }
  out["rows"] = rows;
  py::list eigen;
  for (const auto& e : rep.eigen) eigen.append(py::make_tuple(e.rep, e.exact_bias, e.predicted_bias));
  out["eigen"] = eigen;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spatial confounding estimators, simulation scenarios and bias oracles";
  m.attr("__version__") = std::string(kVersion);

  // translators run newest first, so bases go in before the classes derived from them
  auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", invalid.ptr());
  py::register_exception<IdentifiabilityError>(m, "IdentifiabilityError", numerical.ptr());

  py::class_<FitResult>(m, "FitResult")
      .def_property_readonly("method", [](const FitResult& f) { return std::string(to_string(f.method)); })
      .def_readonly("beta_hat", &FitResult::beta_hat)
      .def_readonly("se", &FitResult::se)
      .def_readonly("ci", &FitResult::ci)
      .def_readonly("coefficients", &FitResult::coefficients)
      .def_readonly("diagnostics", &FitResult::diagnostics)
      .def_property_readonly("cov_params",
                             [](const FitResult& f) -> py::object {
                               if (!f.cov_params) return py::none();
                               py::dict d;
                               d["family"] = std::string(to_string(f.cov_params->family));
                               d["variance"] = f.cov_params->variance;
                               d["scale"] = f.cov_params->scale;
                               d["nugget"] = f.cov_params->nugget;
                               return d;
                             })
      .def("__repr__", [](const FitResult& f) {
        return "<FitResult " + std::string(to_string(f.method)) + " beta_hat=" + std::to_string(f.beta_hat) + ">";
      });

  m.def("fit", &fit_dispatch, py::arg("method"), py::arg("x"), py::arg("y"), py::arg("coords") = py::none(),
        py::arg("groups") = py::none(), py::arg("intercept") = true, py::arg("family") = "exponential",
        py::arg("variance") = 1.0, py::arg("scale") = 1.0, py::arg("nugget") = 1.0, py::arg("tau2") = 1e6,
        py::arg("rank") = 200, py::arg("neighbors") = 15,
        "Fit one estimator of the exposure effect. x is n x p with the exposure in column 0.");

  m.def(
      "covariance_matrix",
      [](const Eigen::MatrixXd& coords, const std::string& family, double variance, double scale, double nugget) {
        return covariance_matrix(kernel_from(family, variance, scale, nugget), locations_from(coords, 1.0));
      },
      py::arg("coords"), py::arg("family") = "exponential", py::arg("variance") = 1.0, py::arg("scale") = 1.0,
      py::arg("nugget") = 0.0);

  m.def(
      "thinplate_basis",
      [](const Eigen::MatrixXd& coords, Eigen::Index rank) {
        const SplineBasis b = thinplate_basis(locations_from(coords, 1.0), rank);
        return py::make_tuple(b.design, b.penalty);
      },
      py::arg("coords"), py::arg("rank"), "Design matrix and penalty of a thin-plate basis.");

  m.def(
      "hermite_constants",
      [](double sigma, double ell, int kmax) {
        const EigenSystem e = hermite_constants(sigma, ell, kmax);
        py::dict d;
        d["a"] = e.a;
        d["b"] = e.b;
        d["c"] = e.c;
        d["A"] = e.big_a;
        d["B"] = e.big_b;
        d["eigenvalues"] = e.eigenvalues;
        return d;
      },
      py::arg("sigma") = 1.0, py::arg("ell") = 1.0, py::arg("kmax") = 5);

  m.def(
      "exact_gls_bias",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& g, const Eigen::MatrixXd& coords, const std::string& family,
         double variance, double scale, double nugget) {
        const auto f = make_covariance_factor(kernel_from(family, variance, scale, nugget), locations_from(coords, 1.0));
        return exact_gls_bias(x, *f, g);
      },
      py::arg("x"), py::arg("g"), py::arg("coords"), py::arg("family") = "exponential", py::arg("variance") = 1.0,
      py::arg("scale") = 1.0, py::arg("nugget") = 1.0);

  m.def("ols_asymptotic_bias", &ols_asymptotic_bias, py::arg("x"), py::arg("g"));

  m.def(
      "analytic_ci",
      [](double beta_hat, double se, double level) {
        FitResult f;
        f.beta_hat = beta_hat;
        f.se = se;
        return analytic_ci(f, level);
      },
      py::arg("beta_hat"), py::arg("se"), py::arg("level") = 0.95);

  m.def(
      "simulate_clustered",
      [](std::size_t groups, std::size_t size, std::uint64_t seed, std::uint64_t stream) {
        return dataset_dict(gen_clustered_linear(groups, size, RngStream(seed, stream)));
      },
      py::arg("m"), py::arg("k"), py::arg("seed") = 1, py::arg("stream") = 1);

  m.def(
      "simulate_eigen",
      [](Eigen::Index n, int kmax, double kappa2, double sigma0_2, std::uint64_t seed, std::uint64_t stream) {
        EigenScenarioConfig cfg;
        cfg.n = n;
        cfg.kmax = kmax;
        cfg.kappa2 = kappa2;
        cfg.sigma0_2 = sigma0_2;
        const EigenScenarioDraw draw = gen_eigen_scenario(cfg, RngStream(seed, stream));
        py::dict d = dataset_dict(draw.data);
        d["c_g"] = draw.c_g;
        d["c_h"] = draw.c_h;
        d["phi"] = draw.system.phi;
        return d;
      },
      py::arg("n") = 3000, py::arg("kmax") = 5, py::arg("kappa2") = 1.0 / 16.0, py::arg("sigma0_2") = 1.0,
      py::arg("seed") = 1, py::arg("stream") = 1);

  m.def(
      "simulate_confounder",
      [](Eigen::Index n, Eigen::Index smoother_rank, bool random, std::uint64_t seed, std::uint64_t stream) {
        FixedConfounderConfig cfg;
        cfg.n = n;
        cfg.smoother_rank = smoother_rank;
        const RngStream rng(seed, stream);
        return dataset_dict(random ? gen_random_confounder(cfg, rng) : gen_fixed_confounder(cfg, std::nullopt, rng));
      },
      py::arg("n") = 2000, py::arg("smoother_rank") = 200, py::arg("random") = false, py::arg("seed") = 1,
      py::arg("stream") = 1);

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = parse_config(config_json);
        ExperimentReport rep;
        {
          py::gil_scoped_release release;
          rep = run_experiment(cfg);
        }
        return report_dict(rep);
      },
      py::arg("config_json"), "Run a JSON-configured experiment and return its summary and per-rep rows.");
}
