#include "postpi/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace postpi {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"')
    out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

nlohmann::ordered_json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double number_from(const nlohmann::json& v) {
  if (v.is_null()) return std::nan("");
  return v.get<double>();
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  throw SchemaError(source + ": missing column '" + std::string(name) + "'");
}

bool CsvTable::has_column(std::string_view name) const {
  for (const auto& h : header)
    if (h == name) return true;
  return false;
}

CsvTable parse_csv(std::string_view text, const std::string& source) {
  CsvTable table;
  table.source = source;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_commas(line);
    if (table.header.empty()) {
      for (const auto& c : cells)
        if (c.empty()) throw SchemaError(source + ":1: empty column name");
      table.header = std::move(cells);
      continue;
    }
    const auto where = source + ":" + std::to_string(line_no) + ": ";
    if (cells.size() != table.header.size())
      throw SchemaError(where + "expected " + std::to_string(table.header.size()) +
                        " fields, got " + std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string& c = cells[j];
      double v = 0.0;
      const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || res.ec != std::errc() || res.ptr != c.data() + c.size() ||
          !std::isfinite(v))
        throw SchemaError(where + "missing or non-numeric value '" + c +
                          "' in column '" + table.header[j] + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw SchemaError(source + ": empty file");
  table.values.resize(Eigen::Index(rows.size()), Eigen::Index(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      table.values(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

nlohmann::ordered_json fit_result_json(const FitResult& r) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["method"] = std::string(method_name(r.method));
  doc["alpha"] = r.alpha;
  doc["n"] = r.n;
  doc["N"] = r.N;
  auto& coefs = doc["coefficients"] = nlohmann::ordered_json::array();
  for (Eigen::Index k = 0; k < r.beta.size(); ++k) {
    nlohmann::ordered_json c;
    c["name"] = std::size_t(k) < r.names.size() ? r.names[std::size_t(k)]
                                                : "b" + std::to_string(k);
    c["estimate"] = number_or_null(r.beta(k));
    c["se"] = number_or_null(r.se(k));
    c["ci_low"] = number_or_null(r.ci_low(k));
    c["ci_high"] = number_or_null(r.ci_high(k));
    c["p_value"] = number_or_null(r.p_value(k));
    coefs.push_back(std::move(c));
  }
  return doc;
}

nlohmann::ordered_json metrics_json(const MonteCarloResult& r) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "metrics";
  const SimSetting& s = r.setting;
  doc["setting"] = {{"id", s.setting_id},
                    {"n_t", s.counts.n_t},
                    {"n", s.counts.n},
                    {"N", s.counts.N},
                    {"beta1", s.beta1},
                    {"noise_sd", s.noise_sd},
                    {"rho", s.rho},
                    {"predictor", std::string(predictor_source_name(s.predictor))}};
  doc["n_reps"] = r.n_reps;
  doc["base_seed"] = r.base_seed;
  doc["alpha"] = r.options.alpha;
  doc["t_approx"] = r.options.t_approx;
  auto& rows = doc["rows"] = nlohmann::ordered_json::array();
  for (const MetricsRow& m : r.rows) {
    rows.push_back({{"method", std::string(method_name(m.method))},
                    {"bias", number_or_null(m.bias)},
                    {"mse", number_or_null(m.mse)},
                    {"mean_ci_width", number_or_null(m.mean_ci_width)},
                    {"coverage", number_or_null(m.coverage)},
                    {"rejection_rate", number_or_null(m.rejection_rate)},
                    {"n_reps", m.n_reps},
                    {"n_failed", m.n_failed}});
  }
  return doc;
}

std::string metrics_csv(const MonteCarloResult& r) {
  std::string out =
      "setting,n_t,n,N,beta1,method,bias,mse,mean_ci_width,coverage,rejection_rate,"
      "n_reps,n_failed\n";
  const SimSetting& s = r.setting;
  for (const MetricsRow& m : r.rows) {
    out += std::to_string(s.setting_id) + ',' + std::to_string(s.counts.n_t) + ',' +
           std::to_string(s.counts.n) + ',' + std::to_string(s.counts.N) + ',' +
           format_double(s.beta1) + ',' + std::string(method_name(m.method)) + ',' +
           format_double(m.bias) + ',' + format_double(m.mse) + ',' +
           format_double(m.mean_ci_width) + ',' + format_double(m.coverage) + ',' +
           format_double(m.rejection_rate) + ',' + std::to_string(m.n_reps) + ',' +
           std::to_string(m.n_failed) + '\n';
  }
  return out;
}

std::string replicates_csv(const MonteCarloResult& r) {
  std::string out =
      "rep_index,base_seed,stream_index,method,ok,estimate,se,ci_low,ci_high,p_value\n";
  for (const ReplicateRecord& rec : r.records) {
    for (const MethodOutcome& o : rec.outcomes) {
      out += std::to_string(rec.rep_index) + ',' + std::to_string(rec.seed.base_seed) +
             ',' + std::to_string(rec.seed.stream_index) + ',' +
             std::string(method_name(o.method)) + ',' + (o.ok ? "1" : "0") + ',' +
             format_double(o.estimate) + ',' + format_double(o.se) + ',' +
             format_double(o.ci_low) + ',' + format_double(o.ci_high) + ',' +
             format_double(o.p_value) + '\n';
    }
  }
  return out;
}

std::vector<ReportGroup> groups_from_metrics_json(const nlohmann::json& doc,
                                                  const std::string& source) {
  if (!doc.is_object() || !doc.contains("schema_version"))
    throw SchemaError(source + ": not a metrics document (no schema_version)");
  const auto version = doc.at("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion)
    throw SchemaError(source + ": schema_version " + version.dump() +
                      " is not supported (expected " + std::to_string(kSchemaVersion) +
                      ")");
  try {
    if (doc.value("kind", std::string()) != "metrics")
      throw SchemaError(source + ": document kind is not 'metrics'");
    const auto& s = doc.at("setting");
    ReportGroup g;
    g.setting_id = s.at("id").get<int>();
    g.counts = {s.at("n_t").get<std::size_t>(), s.at("n").get<std::size_t>(),
                s.at("N").get<std::size_t>()};
    g.beta1 = s.at("beta1").get<double>();
    for (const auto& row : doc.at("rows")) {
      MetricsRow m;
      const auto name = row.at("method").get<std::string>();
      const auto method = parse_method(name);
      if (!method) throw SchemaError(source + ": unknown method '" + name + "'");
      m.method = *method;
      m.bias = number_from(row.at("bias"));
      m.mse = number_from(row.at("mse"));
      m.mean_ci_width = number_from(row.at("mean_ci_width"));
      m.coverage = number_from(row.at("coverage"));
      m.rejection_rate = number_from(row.at("rejection_rate"));
      m.n_reps = row.at("n_reps").get<std::size_t>();
      m.n_failed = row.at("n_failed").get<std::size_t>();
      g.rows.push_back(m);
    }
    return {g};
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(source + ": malformed metrics document: " + e.what());
  }
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  const auto parent = path.parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), std::streamsize(content.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("failed while writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace postpi
