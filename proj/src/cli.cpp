#include "postpi/cli.hpp"

#include "postpi/io.hpp"
#include "postpi/predictors.hpp"
#include "postpi/report.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace postpi {

namespace {

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  if (names.empty()) return {kAllMethods.begin(), kAllMethods.end()};
  std::vector<Method> out;
  for (const auto& name : names) {
    const auto m = parse_method(name);
    if (!m) throw std::invalid_argument("unknown method '" + name + "'");
    if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
  }
  std::sort(out.begin(), out.end(), [](Method a, Method b) {
    return std::find(kAllMethods.begin(), kAllMethods.end(), a) <
           std::find(kAllMethods.begin(), kAllMethods.end(), b);
  });
  return out;
}

PredictorSource parse_predictor(const std::string& name) {
  const auto p = parse_predictor_source(name);
  if (!p) throw std::invalid_argument("unknown predictor '" + name + "'");
  return *p;
}

SimSetting make_setting(int setting_id, double beta1,
                        const std::optional<std::size_t>& n_t,
                        const std::optional<std::size_t>& n,
                        const std::optional<std::size_t>& N,
                        const std::string& predictor) {
  SimSetting s = SimSetting::defaults(setting_id, beta1);
  if (n_t) s.counts.n_t = *n_t;
  if (n) s.counts.n = *n;
  if (N) s.counts.N = *N;
  s.predictor = parse_predictor(predictor);
  s.validate();
  return s;
}

std::string dump_json(const nlohmann::ordered_json& doc) { return doc.dump(2) + '\n'; }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + std::size_t(std::count(text.begin(), text.begin() + std::ptrdiff_t(offset), '\n'));
}

RealMatrix select_columns(const CsvTable& table, const std::vector<std::size_t>& cols) {
  RealMatrix out(table.values.rows(), Eigen::Index(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    out.col(Eigen::Index(j)) = table.values.col(Eigen::Index(cols[j]));
  return out;
}

/// Prediction column followed by the covariates, as seen by an ExternalModel.
RealVector external_predictions(const CsvTable& table, std::size_t prediction_col,
                                const std::vector<std::size_t>& covariate_cols) {
  std::vector<std::size_t> cols{prediction_col};
  cols.insert(cols.end(), covariate_cols.begin(), covariate_cols.end());
  const PredictionModel model(ExternalModel{cols.size(), 0});
  return predict(model, select_columns(table, cols));
}

void write_split_csv(const std::filesystem::path& path, const RealVector* y,
                     const RealVector& f, const RealMatrix& x,
                     const std::vector<std::string>& names) {
  std::string text = y ? "y,f" : "f";
  for (const auto& n : names) text += ',' + n;
  text += '\n';
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (y) text += format_double((*y)(i)) + ',';
    text += format_double(f(i));
    for (Eigen::Index j = 0; j < x.cols(); ++j) text += ',' + format_double(x(i, j));
    text += '\n';
  }
  write_atomic(path, text);
}

/// Maps exceptions to exit codes with a one-line diagnostic.
int guarded(const char* command, std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const SchemaError& e) {
    err << command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const RankDeficientError& e) {
    err << command << ": singular design: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

SimSetting simulation_setting(const SimulateConfig& c) {
  return make_setting(c.setting_id, c.beta1, c.n_t, c.n, c.N, c.predictor);
}

int cmd_simulate(const SimulateConfig& config, std::ostream& out, std::ostream& err) {
  return guarded("simulate", err, [&] {
    const SimSetting setting = simulation_setting(config);
    const auto methods = parse_methods(config.methods);
    const InferenceOptions options{config.alpha, config.t_approx};
    if (!(config.alpha > 0.0 && config.alpha < 1.0))
      throw std::invalid_argument("alpha must lie in (0, 1)");
    if (config.reps < 1) throw std::invalid_argument("--reps must be at least 1");

    const MonteCarloResult result = run_monte_carlo(
        setting, config.reps, config.seed, methods, options, std::max<std::size_t>(1, config.threads));

    ReportGroup group{setting.setting_id, setting.counts, setting.beta1, result.rows};
    const std::string table = render_table({group});
    if (!config.out.empty()) {
      std::filesystem::create_directories(config.out);
      write_atomic(config.out / "metrics.json", dump_json(metrics_json(result)));
      write_atomic(config.out / "metrics.csv", metrics_csv(result));
      write_atomic(config.out / "replicates.csv", replicates_csv(result));
      write_atomic(config.out / "table.txt", table);
    }
    out << table;
    for (const MetricsRow& row : result.rows)
      if (row.n_failed > 0)
        err << "simulate: warning: " << row.n_failed << " failed replicate(s) for "
            << method_name(row.method) << '\n';
    return int(kExitOk);
  });
}

Dataset load_dataset(const EstimateConfig& c) {
  const CsvTable labeled = read_csv(c.labeled_path);
  const CsvTable unlabeled = read_csv(c.unlabeled_path);

  const std::size_t y_col = labeled.column(c.outcome_col);
  const std::size_t fl_col = labeled.column(c.prediction_col);
  const std::size_t fu_col = unlabeled.column(c.prediction_col);

  std::vector<std::string> names = c.covariate_cols;
  if (names.empty())
    for (const auto& h : labeled.header)
      if (h != c.outcome_col && h != c.prediction_col) names.push_back(h);
  if (names.empty() && !c.intercept)
    throw SchemaError(labeled.source + ": no covariate columns");

  std::vector<std::size_t> l_cols, u_cols;
  for (const auto& name : names) {
    if (name == c.outcome_col || name == c.prediction_col)
      throw std::invalid_argument("column '" + name +
                                  "' cannot be both a covariate and the outcome or prediction");
    l_cols.push_back(labeled.column(name));
    u_cols.push_back(unlabeled.column(name));
  }

  std::optional<RealVector> y_true;
  if (unlabeled.has_column(c.outcome_col))
    y_true = unlabeled.values.col(Eigen::Index(unlabeled.column(c.outcome_col)));

  return make_dataset(labeled.values.col(Eigen::Index(y_col)),
                      select_columns(labeled, l_cols),
                      external_predictions(labeled, fl_col, l_cols),
                      select_columns(unlabeled, u_cols),
                      external_predictions(unlabeled, fu_col, u_cols), c.intercept, names,
                      std::move(y_true));
}

int cmd_estimate(const EstimateConfig& config, std::ostream& out, std::ostream& err) {
  return guarded("estimate", err, [&] {
    const auto method = parse_method(config.method);
    if (!method) throw std::invalid_argument("unknown method '" + config.method + "'");
    if (!(config.alpha > 0.0 && config.alpha < 1.0))
      throw std::invalid_argument("alpha must lie in (0, 1)");
    const Dataset data = load_dataset(config);
    if (*method == Method::oracle && !data.unlabeled.y_true)
      throw std::invalid_argument("oracle needs the outcome column '" + config.outcome_col +
                                  "' in the unlabeled file");
    const FitResult fit =
        estimate(*method, data, InferenceOptions{config.alpha, config.t_approx});
    const std::string text = dump_json(fit_result_json(fit));
    if (config.out.empty()) {
      out << text;
    } else {
      write_atomic(config.out, text);
    }
    return int(kExitOk);
  });
}

int cmd_report(const ReportConfig& config, std::ostream& out, std::ostream& err) {
  return guarded("report", err, [&] {
    if (config.paths.empty()) throw std::invalid_argument("no input files");
    std::vector<ReportGroup> groups;
    for (const auto& path : config.paths) {
      const std::string text = read_text(path);
      const auto first = text.find_first_not_of(" \t\r\n");
      if (first != std::string::npos && text[first] == '{') {
        nlohmann::json doc;
        try {
          doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
          const std::size_t line = line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1);
          throw ParseError(path.string() + ":" + std::to_string(line) + ": " + e.what(),
                           line);
        }
        const auto g = groups_from_metrics_json(doc, path.string());
        groups.insert(groups.end(), g.begin(), g.end());
      } else {
        try {
          const auto g = parse_table(text);
          if (g.empty()) throw ParseError("line 1: no table found", 1);
          groups.insert(groups.end(), g.begin(), g.end());
        } catch (const ParseError& e) {
          throw ParseError(path.string() + ": " + e.what(), e.line());
        }
      }
    }
    const std::string table = render_table(merge_groups(groups));
    if (config.out.empty()) {
      out << table;
    } else {
      write_atomic(config.out, table);
    }
    return int(kExitOk);
  });
}

int cmd_generate(const GenerateConfig& config, std::ostream& out, std::ostream& err) {
  return guarded("generate", err, [&] {
    if (config.out.empty()) throw std::invalid_argument("--out directory is required");
    const SimSetting setting = make_setting(config.setting_id, config.beta1, config.n_t,
                                            config.n, config.N, config.predictor);
    const ReplicateData rep =
        prepare_replicate(setting, RngSeed{config.seed, config.rep});
    const auto& names = rep.dataset.covariate_names;
    const std::vector<std::string> covariates(names.begin() + 1, names.end());
    const Dataset& d = rep.dataset;
    std::filesystem::create_directories(config.out);
    write_split_csv(config.out / "labeled.csv", &d.labeled.y, d.labeled.f,
                    d.labeled.x.rightCols(d.labeled.x.cols() - 1), covariates);
    write_split_csv(config.out / "unlabeled.csv", nullptr, d.unlabeled.f,
                    d.unlabeled.x.rightCols(d.unlabeled.x.cols() - 1), covariates);
    out << "wrote " << (config.out / "labeled.csv").string() << " (" << d.n()
        << " rows) and " << (config.out / "unlabeled.csv").string() << " (" << d.N()
        << " rows)\n";
    return int(kExitOk);
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inference with machine-learning predicted outcomes"};
  app.require_subcommand(1);

  SimulateConfig sim;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study");
  simulate->add_option("--setting", sim.setting_id, "Simulation setting (1, 2 or 3)")
      ->check(CLI::Range(1, 3));
  simulate->add_option("--n-t", sim.n_t, "Training split size");
  simulate->add_option("--n", sim.n, "Labeled split size");
  simulate->add_option("--big-n", sim.N, "Unlabeled split size");
  simulate->add_option("--beta1", sim.beta1, "True coefficient of Z1");
  simulate->add_option("--reps", sim.reps, "Number of replicates");
  simulate->add_option("--seed", sim.seed, "Base seed");
  simulate->add_option("--methods", sim.methods, "Comma-separated methods")
      ->delimiter(',');
  simulate->add_option("--alpha", sim.alpha, "Significance level");
  simulate->add_flag("--t-approx", sim.t_approx, "Student-t reference distribution");
  simulate->add_option("--predictor", sim.predictor,
                       "trained, feature_mean or full_mean");
  simulate->add_option("--threads", sim.threads, "Worker threads");
  simulate->add_option("--out", sim.out, "Output directory for artifacts");

  EstimateConfig est;
  auto* estimate_cmd = app.add_subcommand("estimate", "Fit one method to CSV data");
  estimate_cmd->add_option("--labeled", est.labeled_path, "Labeled CSV")->required();
  estimate_cmd->add_option("--unlabeled", est.unlabeled_path, "Unlabeled CSV")->required();
  estimate_cmd->add_option("--outcome-col", est.outcome_col, "Outcome column");
  estimate_cmd->add_option("--prediction-col", est.prediction_col, "Prediction column");
  estimate_cmd->add_option("--covariates", est.covariate_cols,
                           "Comma-separated covariate columns")
      ->delimiter(',');
  estimate_cmd->add_option("--method", est.method, "Estimation method");
  estimate_cmd->add_option("--alpha", est.alpha, "Significance level");
  estimate_cmd->add_flag("--t-approx", est.t_approx, "Student-t reference distribution");
  bool no_intercept = false;
  estimate_cmd->add_flag("--no-intercept", no_intercept, "Omit the intercept column");
  estimate_cmd->add_option("--out", est.out, "Output JSON file");

  ReportConfig rep;
  auto* report = app.add_subcommand("report", "Merge metrics files into one table");
  report->add_option("paths", rep.paths, "Metrics JSON or table files")->required();
  report->add_option("--out", rep.out, "Output file");

  GenerateConfig gen;
  auto* generate = app.add_subcommand(
      "generate", "Write one simulated replicate as labeled and unlabeled CSV files");
  generate->add_option("--setting", gen.setting_id, "Simulation setting (1, 2 or 3)")
      ->check(CLI::Range(1, 3));
  generate->add_option("--n-t", gen.n_t, "Training split size");
  generate->add_option("--n", gen.n, "Labeled split size");
  generate->add_option("--big-n", gen.N, "Unlabeled split size");
  generate->add_option("--beta1", gen.beta1, "True coefficient of Z1");
  generate->add_option("--seed", gen.seed, "Base seed");
  generate->add_option("--rep", gen.rep, "Replicate index");
  generate->add_option("--predictor", gen.predictor,
                       "trained, feature_mean or full_mean");
  generate->add_option("--out", gen.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? int(kExitOk) : int(kExitUsage);
  }

  if (simulate->parsed()) return cmd_simulate(sim, out, err);
  if (estimate_cmd->parsed()) {
    est.intercept = !no_intercept;
    return cmd_estimate(est, out, err);
  }
  if (report->parsed()) return cmd_report(rep, out, err);
  return cmd_generate(gen, out, err);
}

}  // namespace postpi
