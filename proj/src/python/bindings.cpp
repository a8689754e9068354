#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "kivafair/causal.hpp"
#include "kivafair/fair_spike_slab.hpp"
#include "kivafair/linear_models.hpp"
#include "kivafair/pipeline.hpp"
#include "kivafair/serialization.hpp"
#include "kivafair/spike_slab.hpp"
#include "kivafair/synthetic.hpp"

namespace py = pybind11;
using namespace kivafair;
using nlohmann::json;

namespace {

std::vector<std::string> default_names(Index p, std::optional<std::vector<std::string>> names) {
  if (names) return *names;
  std::vector<std::string> out;
  for (Index j = 0; j < p; ++j) out.push_back("x" + std::to_string(j));
  return out;
}

// Numeric design matrix with identity scaling, so no dummy-column check applies.
DesignMatrix numeric_design(const MatrixXd& x, std::optional<Index> intercept,
                            std::optional<std::vector<std::string>> names) {
  DesignMatrix d;
  d.values = x;
  d.column_names = default_names(x.cols(), std::move(names));
  d.scaling.assign(static_cast<std::size_t>(x.cols()), ColumnScaling{0.0, 1.0});
  if (intercept) d.scaling[static_cast<std::size_t>(*intercept)] = std::nullopt;
  d.intercept_index = intercept;
  return d;
}

py::dict ate_dict(const AteResult& r) { return py::module_::import("json").attr("loads")(to_json(r).dump()); }

py::object to_python(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

RunConfig config_of(const std::string& config_json, const std::string& base_dir) {
  RunConfig c = config_from_json(json::parse(config_json), base_dir);
  validate(c);
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Spike-and-slab regression, doubly robust ATE and fairness-penalized sampling";

  static py::exception<Error> exc(m, "KivafairError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object instance = py::reinterpret_borrow<py::object>(exc.ptr())(e.what());
      instance.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(exc.ptr(), instance.ptr());
    }
  });

  m.def("sectors", [] {
    std::vector<std::string> out;
    for (Sector s : all_sectors()) out.emplace_back(sector_name(s));
    return out;
  });

  py::class_<SpikeSlabHyper>(m, "SpikeSlabHyper")
      .def(py::init<>())
      .def_readwrite("a", &SpikeSlabHyper::a)
      .def_readwrite("b", &SpikeSlabHyper::b)
      .def_readwrite("alpha1", &SpikeSlabHyper::alpha1)
      .def_readwrite("alpha2", &SpikeSlabHyper::alpha2)
      .def_readwrite("s2", &SpikeSlabHyper::s2)
      .def_readwrite("theta_init", &SpikeSlabHyper::theta_init)
      .def_readwrite("burn_in", &SpikeSlabHyper::burn_in)
      .def_readwrite("draws", &SpikeSlabHyper::draws)
      .def_readwrite("seed", &SpikeSlabHyper::seed)
      .def("__repr__", [](const SpikeSlabHyper& h) { return "SpikeSlabHyper(" + to_json(h).dump() + ")"; });

  py::class_<PosteriorDraws>(m, "PosteriorDraws")
      .def_readonly("beta", &PosteriorDraws::beta)
      .def_property_readonly("pi", [](const PosteriorDraws& d) { return MatrixXd(d.pi.cast<double>()); })
      .def_readonly("theta", &PosteriorDraws::theta)
      .def_readonly("tau2", &PosteriorDraws::tau2)
      .def_readonly("sigma2", &PosteriorDraws::sigma2)
      .def_readonly("column_names", &PosteriorDraws::column_names)
      .def("posterior_mean", &posterior_mean_coefficients)
      .def("inclusion_probabilities", &inclusion_probabilities)
      .def("summary", [](const PosteriorDraws& d) { return to_python(posterior_summary(d)); })
      .def("write_csv", &write_draws_csv, py::arg("path"));
  m.def("read_draws_csv", &read_draws_csv, py::arg("path"));

  m.def(
      "run_gibbs",
      [](const MatrixXd& x, const VectorXd& y, const SpikeSlabHyper& hyper, std::optional<Index> intercept,
         std::optional<std::vector<std::string>> names) {
        py::gil_scoped_release release;
        return run_gibbs(numeric_design(x, intercept, std::move(names)), y, hyper);
      },
      py::arg("x"), py::arg("y"), py::arg("hyper") = SpikeSlabHyper{}, py::arg("intercept") = py::none(),
      py::arg("names") = py::none());

  m.def(
      "run_fair_gibbs",
      [](const MatrixXd& x, const VectorXd& y, const VectorXd& w, double lam, const SpikeSlabHyper& hyper,
         const std::string& mode, std::optional<Index> intercept) {
        const DesignMatrix d = numeric_design(x, intercept, std::nullopt);
        const FairnessConstraint c = build_constraint(d, w, lam);
        py::gil_scoped_release release;
        return run_fair_gibbs(d, y, c, hyper, parse_fair_mode(mode));
      },
      py::arg("x"), py::arg("y"), py::arg("w"), py::arg("lam") = kDefaultFairLambda,
      py::arg("hyper") = SpikeSlabHyper{}, py::arg("mode") = "balanced-gap", py::arg("intercept") = py::none());

  m.def("group_gap", py::overload_cast<const MatrixXd&, const VectorXd&, const VectorXd&>(&group_gap), py::arg("x"),
        py::arg("w"), py::arg("coefficients"));

  m.def(
      "fit_ols",
      [](const MatrixXd& x, const VectorXd& y, std::optional<std::vector<std::string>> names) {
        const OlsFit f = fit_ols(x, y, default_names(x.cols(), std::move(names)));
        return py::make_tuple(f.coefficients, f.residual_variance);
      },
      py::arg("x"), py::arg("y"), py::arg("names") = py::none());

  m.def(
      "fit_logistic",
      [](const MatrixXd& x, const VectorXd& w, int max_iter, double tol) {
        const LogisticFit f = fit_logistic(x, w, default_names(x.cols(), std::nullopt), LogisticOptions{max_iter, tol});
        return py::make_tuple(f.coefficients, f.converged, f.iterations);
      },
      py::arg("x"), py::arg("w"), py::arg("max_iter") = 100, py::arg("tol") = 1e-8);

  m.def(
      "ate_naive", [](const VectorXd& y, const VectorXd& w) { return ate_dict(ate_naive(y, w)); }, py::arg("y"),
      py::arg("w"));

  m.def(
      "ate_dre",
      [](const VectorXd& y, const VectorXd& w, const VectorXd& mu1, const VectorXd& mu0, const VectorXd& e,
         double clip) {
        const DreResult r = ate_dre(y, w, mu1, mu0, e, std::nullopt, clip);
        return py::make_tuple(ate_dict(r.ate), r.influence);
      },
      py::arg("y"), py::arg("w"), py::arg("mu1"), py::arg("mu0"), py::arg("propensity"),
      py::arg("clip") = kPropensityClip);

  m.def(
      "generate_regression",
      [](Index n, const VectorXd& beta, double noise_sd, double intercept, std::uint64_t seed) {
        SyntheticSpec s;
        s.n = n;
        s.p = beta.size();
        s.true_beta = beta;
        s.noise_sd = noise_sd;
        s.intercept = intercept;
        s.seed = seed;
        const RegressionSample r = generate_regression(s);
        return py::make_tuple(r.x, r.y);
      },
      py::arg("n"), py::arg("beta"), py::arg("noise_sd") = 1.0, py::arg("intercept") = 0.0, py::arg("seed") = 1);

  m.def(
      "generate_causal",
      [](Index n, const VectorXd& beta, double effect, const VectorXd& propensity_coefs, double propensity_intercept,
         const std::string& misspecification, std::uint64_t seed) {
        SyntheticSpec s;
        s.n = n;
        s.p = beta.size();
        s.true_beta = beta;
        s.treatment_effect = effect;
        s.propensity_coefs = propensity_coefs;
        s.propensity_intercept = propensity_intercept;
        s.misspecification = parse_misspecification(misspecification);
        s.seed = seed;
        const CausalSample c = generate_causal(s);
        py::dict out;
        out["x"] = c.data.x.values;
        out["y"] = c.data.y;
        out["w"] = c.data.w;
        out["propensity"] = c.propensity;
        return out;
      },
      py::arg("n"), py::arg("beta"), py::arg("effect") = 0.0, py::arg("propensity_coefs") = VectorXd(),
      py::arg("propensity_intercept") = 0.0, py::arg("misspecification") = "none", py::arg("seed") = 1);

  // Pipeline entry points take the same JSON configuration as the CLI.
  m.def(
      "synth",
      [](const std::filesystem::path& dir, const std::string& kind, Index loans, std::uint64_t seed) {
        if (kind != "null" && kind != "biased") throw Error(ErrorCode::kInvalidArgument, "kind must be null or biased");
        BundleSpec spec = kind == "biased" ? biased_bundle_spec(seed) : BundleSpec{};
        spec.loans = loans;
        spec.seed = seed;
        run_synth(spec, dir);
        return dir / "config.json";
      },
      py::arg("dir"), py::arg("kind") = "biased", py::arg("loans") = 1500, py::arg("seed") = 1);

  m.def(
      "ingest",
      [](const std::string& config_json, const std::string& base_dir) {
        const RunConfig c = config_of(config_json, base_dir);
        IngestOutput out;
        {
          py::gil_scoped_release release;
          out = run_ingest(c);
          write_resolved_config(c);
          write_ingest_outputs(c, out);
        }
        return to_python(to_json(out.report));
      },
      py::arg("config_json"), py::arg("base_dir") = "");

  m.def(
      "ols",
      [](const std::string& config_json, const std::string& base_dir, const std::string& model) {
        const RunConfig c = config_of(config_json, base_dir);
        const OlsFit fit = run_ols(read_bundle(c.bundle_path()), parse_model(model));
        write_resolved_config(c);
        write_ols_outputs(c, model, fit);
        return to_python(to_json(fit));
      },
      py::arg("config_json"), py::arg("base_dir") = "", py::arg("model") = "M1");

  m.def(
      "ate",
      [](const std::string& config_json, const std::string& base_dir) {
        const RunConfig c = config_of(config_json, base_dir);
        std::vector<SectorStudyResult> rows;
        {
          py::gil_scoped_release release;
          rows = run_ate(read_bundle(c.bundle_path()), c);
          write_resolved_config(c);
          write_ate_outputs(c, rows);
        }
        json out = json::array();
        for (const auto& r : rows) out.push_back(to_json(r));
        return to_python(out);
      },
      py::arg("config_json"), py::arg("base_dir") = "");

  m.def(
      "fair",
      [](const std::string& config_json, const std::string& base_dir) {
        const RunConfig c = config_of(config_json, base_dir);
        std::vector<FairSectorResult> rows;
        {
          py::gil_scoped_release release;
          rows = run_fair(read_bundle(c.bundle_path()), c);
          write_resolved_config(c);
          write_fair_outputs(c, rows);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["sector"] = std::string(sector_name(r.sector));
          d["rmse_lr"] = r.rmse_lr;
          d["rmse_lr_loan_attributes"] = r.rmse_lr_loan_attributes;
          d["rmse_ssr"] = r.rmse_ssr;
          d["rmse_ssr_regularized"] = r.rmse_ssr_regularized;
          d["gap_ssr"] = r.gap_ssr;
          d["gap_ssr_regularized"] = r.gap_ssr_regularized;
          d["error"] = r.error ? py::object(py::str(*r.error)) : py::object(py::none());
          out.append(d);
        }
        return out;
      },
      py::arg("config_json"), py::arg("base_dir") = "");
}
