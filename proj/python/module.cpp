#include "postpi/estimators.hpp"
#include "postpi/report.hpp"
#include "postpi/simulation.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace postpi;

namespace {

Method method_from(const std::string& name) {
  const auto m = parse_method(name);
  if (!m) throw py::value_error("unknown method '" + name + "'");
  return *m;
}

py::dict fit_to_dict(const FitResult& r) {
  py::dict d;
  d["method"] = std::string(method_name(r.method));
  d["names"] = r.names;
  d["estimate"] = r.beta;
  d["se"] = r.se;
  d["ci_low"] = r.ci_low;
  d["ci_high"] = r.ci_high;
  d["p_value"] = r.p_value;
  d["covariance"] = r.covariance;
  d["alpha"] = r.alpha;
  d["df"] = r.df;
  d["n"] = r.n;
  d["N"] = r.N;
  return d;
}

py::dict estimate_py(const std::string& method, const RealVector& labeled_y,
                     const RealMatrix& labeled_x, const RealVector& labeled_f,
                     const RealMatrix& unlabeled_x, const RealVector& unlabeled_f,
                     double alpha, bool t_approx, bool intercept,
                     std::vector<std::string> names,
                     std::optional<RealVector> unlabeled_y) {
  const Dataset d = make_dataset(labeled_y, labeled_x, labeled_f, unlabeled_x, unlabeled_f,
                                 intercept, std::move(names), std::move(unlabeled_y));
  return fit_to_dict(estimate(method_from(method), d, {alpha, t_approx}));
}

py::dict simulate_py(int setting_id, double beta1, std::size_t reps, std::uint64_t seed,
                     std::vector<std::string> methods, std::optional<std::size_t> n_t,
                     std::optional<std::size_t> n, std::optional<std::size_t> N,
                     const std::string& predictor, double alpha, std::size_t threads) {
  SimSetting s = SimSetting::defaults(setting_id, beta1);
  if (n_t) s.counts.n_t = *n_t;
  if (n) s.counts.n = *n;
  if (N) s.counts.N = *N;
  const auto source = parse_predictor_source(predictor);
  if (!source) throw py::value_error("unknown predictor '" + predictor + "'");
  s.predictor = *source;
  std::vector<Method> ms;
  if (methods.empty()) ms.assign(kAllMethods.begin(), kAllMethods.end());
  for (const auto& name : methods) ms.push_back(method_from(name));

  MonteCarloResult r;
  {
    py::gil_scoped_release release;
    r = run_monte_carlo(s, reps, seed, ms, {alpha, false}, threads);
  }
  py::list rows;
  for (const MetricsRow& m : r.rows) {
    py::dict row;
    row["method"] = std::string(method_name(m.method));
    row["bias"] = m.bias;
    row["mse"] = m.mse;
    row["mean_ci_width"] = m.mean_ci_width;
    row["coverage"] = m.coverage;
    row["rejection_rate"] = m.rejection_rate;
    row["n_reps"] = m.n_reps;
    row["n_failed"] = m.n_failed;
    rows.append(row);
  }
  py::dict out;
  out["rows"] = rows;
  out["table"] = render_table({{s.setting_id, s.counts, s.beta1, r.rows}});
  return out;
}

py::dict replicate_py(int setting_id, double beta1, std::uint64_t seed, std::size_t rep) {
  const ReplicateData r =
      prepare_replicate(SimSetting::defaults(setting_id, beta1), {seed, rep});
  const Dataset& d = r.dataset;
  py::dict out;
  out["labeled_y"] = d.labeled.y;
  out["labeled_x"] = d.labeled.x;
  out["labeled_f"] = d.labeled.f;
  out["unlabeled_x"] = d.unlabeled.x;
  out["unlabeled_f"] = d.unlabeled.f;
  out["unlabeled_y"] = *d.unlabeled.y_true;
  out["names"] = d.covariate_names;
  return out;
}

}  // namespace

PYBIND11_MODULE(_postpi, m) {
  m.doc() = "Inference on regression coefficients when outcomes are model predictions";

  py::register_exception<RankDeficientError>(m, "RankDeficientError", PyExc_RuntimeError);

  m.def("estimate", &estimate_py, py::arg("method"), py::arg("labeled_y"),
        py::arg("labeled_x"), py::arg("labeled_f"), py::arg("unlabeled_x"),
        py::arg("unlabeled_f"), py::arg("alpha") = 0.05, py::arg("t_approx") = false,
        py::arg("intercept") = true, py::arg("names") = std::vector<std::string>{},
        py::arg("unlabeled_y") = py::none(),
        "Fit one method. Covariate matrices exclude the intercept column.");

  m.def(
      "fit_relationship",
      [](const RealVector& y, const RealVector& f) {
        const RelationshipFit r = fit_relationship(y, f);
        return py::make_tuple(r.gamma0, r.gamma1, r.residuals, r.sigma_r_sq);
      },
      py::arg("labeled_y"), py::arg("labeled_f"),
      "Returns (gamma0, gamma1, residuals, sigma_r_sq).");

  m.def("simulate", &simulate_py, py::arg("setting"), py::arg("beta1") = 0.0,
        py::arg("reps") = 1000, py::arg("seed") = 0,
        py::arg("methods") = std::vector<std::string>{}, py::arg("n_t") = py::none(),
        py::arg("n") = py::none(), py::arg("N") = py::none(),
        py::arg("predictor") = "trained", py::arg("alpha") = 0.05, py::arg("threads") = 1);

  m.def("replicate_data", &replicate_py, py::arg("setting"), py::arg("beta1"),
        py::arg("seed"), py::arg("rep") = 0,
        "Arrays for one simulated replicate; covariate matrices include the intercept.");

  m.def("critical_value", [](double alpha, std::optional<double> df) {
    return critical_value(alpha, df);
  }, py::arg("alpha"), py::arg("df") = py::none());

  m.attr("methods") = std::vector<std::string>{"oracle", "classical", "naive", "postpi",
                                               "proposed"};
}
