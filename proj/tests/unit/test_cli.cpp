#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "postpi/cli.hpp"
#include "postpi/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace postpi;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "postpi");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

/// Fresh scratch directory under the system temp dir.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("postpi_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Bare-bones CSV reader used to recompute results from dumped files.
std::pair<std::vector<std::string>, oracle::Mat> read_plain_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) header.push_back(cell);
  oracle::Mat rows;
  while (std::getline(in, line)) {
    std::stringstream ls(line);
    oracle::Vec row;
    for (std::string cell; std::getline(ls, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return {header, rows};
}

const fs::path kDataDir = POSTPI_TEST_DATA_DIR;

}  // namespace

TEST_CASE("noiseless fixture y = f = 2x") {
  const fs::path dir = scratch("noiseless");
  spit(dir / "fixture.csv", "y,f,x\n-2,-2,-1\n0,0,0\n2,2,1\n4,4,2\n6,6,3\n10,10,5\n");
  const Run proposed = cli({"estimate", "--labeled", (dir / "fixture.csv").string(),
                            "--unlabeled", (dir / "fixture.csv").string()});
  REQUIRE(proposed.code == 0);
  const auto doc = nlohmann::json::parse(proposed.out);
  CHECK(doc["method"] == "proposed");
  CHECK(doc["coefficients"][1]["name"] == "x");
  CHECK(doc["coefficients"][1]["estimate"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));

  // Only the centered S1 term is left; see the estimator tests for its value.
  EstimateConfig config;
  config.labeled_path = config.unlabeled_path = dir / "fixture.csv";
  const Dataset d = load_dataset(config);
  const FitResult lib = estimate(Method::proposed, d);
  CHECK(doc["coefficients"][1]["se"].get<double>() == lib.se(1));

  const Run postpi = cli({"estimate", "--labeled", (dir / "fixture.csv").string(),
                          "--unlabeled", (dir / "fixture.csv").string(), "--method",
                          "postpi"});
  REQUIRE(postpi.code == 0);
  const auto pdoc = nlohmann::json::parse(postpi.out);
  CHECK(pdoc["coefficients"][1]["estimate"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(pdoc["coefficients"][1]["se"].get<double>() < 1e-7);
}

TEST_CASE("estimate on a simulated replicate matches the library") {
  const fs::path dir = scratch("equivalence");
  const Run gen = cli({"generate", "--setting", "3", "--seed", "7", "--out", dir.string()});
  REQUIRE(gen.code == 0);

  const SimSetting setting = SimSetting::defaults(3, 0.0);
  const ReplicateData rep = prepare_replicate(setting, {7, 0});
  const RelationshipFit rel = fit_relationship(rep.dataset.labeled.y, rep.dataset.labeled.f);

  for (const char* method : {"proposed", "postpi"}) {
    CAPTURE(method);
    const fs::path out = dir / (std::string(method) + ".json");
    const Run r = cli({"estimate", "--labeled", (dir / "labeled.csv").string(), "--unlabeled",
                       (dir / "unlabeled.csv").string(), "--method", method, "--out",
                       out.string()});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(slurp(out));
    const FitResult lib = std::string(method) == "proposed"
                              ? estimate_proposed(rep.dataset, rel)
                              : estimate_postpi(rep.dataset, rel);
    REQUIRE(doc["coefficients"].size() == 3);
    CHECK(doc["n"] == 500);
    CHECK(doc["N"] == 1000);
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& c = doc["coefficients"][k];
      CHECK(c["name"] == lib.names[k]);
      CHECK(std::abs(c["estimate"].get<double>() - lib.beta(Eigen::Index(k))) < 1e-12);
      CHECK(std::abs(c["se"].get<double>() - lib.se(Eigen::Index(k))) < 1e-12);
      CHECK(std::abs(c["ci_low"].get<double>() - lib.ci_low(Eigen::Index(k))) < 1e-12);
      CHECK(std::abs(c["p_value"].get<double>() - lib.p_value(Eigen::Index(k))) < 1e-12);
    }
  }
}

TEST_CASE("proposed estimate recomputed from dumped CSV files") {
  const fs::path dir = scratch("recompute");
  REQUIRE(cli({"generate", "--setting", "3", "--seed", "7", "--rep", "3", "--out",
               dir.string()}).code == 0);
  const auto [lh, lab] = read_plain_csv(dir / "labeled.csv");
  const auto [uh, unl] = read_plain_csv(dir / "unlabeled.csv");
  REQUIRE(lh == std::vector<std::string>{"y", "f", "Z1", "Z2"});
  REQUIRE(uh == std::vector<std::string>{"f", "Z1", "Z2"});

  oracle::Vec yl, fl, fu;
  oracle::Mat xl, xu;
  for (const auto& r : lab) {
    yl.push_back(r[0]);
    fl.push_back(r[1]);
    xl.push_back({1.0, r[2], r[3]});
  }
  for (const auto& r : unl) {
    fu.push_back(r[0]);
    xu.push_back({1.0, r[1], r[2]});
  }
  const auto [g0, g1] = oracle::simple_regression(yl, fl);
  oracle::Vec eta;
  for (std::size_t j = 0; j < yl.size(); ++j) eta.push_back(yl[j] - g0 - g1 * fl[j]);
  const auto c_xf = oracle::cross_moment(xu, fu);
  const auto c_xeta = oracle::cross_moment(xl, eta);
  oracle::Vec rhs(3);
  for (std::size_t k = 0; k < 3; ++k) rhs[k] = g1 * c_xf[k] + c_xeta[k];
  const auto beta = oracle::mat_vec(oracle::inverse(oracle::gram(xu)), rhs);

  const Run r = cli({"estimate", "--labeled", (dir / "labeled.csv").string(), "--unlabeled",
                     (dir / "unlabeled.csv").string()});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(std::abs(doc["coefficients"][1]["estimate"].get<double>() - beta[1]) < 1e-10);
  CHECK(std::abs(doc["coefficients"][2]["estimate"].get<double>() - beta[2]) < 1e-10);
  CHECK(std::abs(doc["coefficients"][0]["estimate"].get<double>() - (beta[0] + g0)) < 1e-10);
}

TEST_CASE("simulate output is byte-identical across runs and matches the golden file") {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  const std::vector<std::string> flags = {"simulate", "--setting", "3", "--beta1", "1",
                                          "--n-t", "100", "--n", "80", "--big-n", "200",
                                          "--reps", "4", "--seed", "7"};
  auto with_out = [&](const fs::path& dir, const std::string& threads) {
    auto args = flags;
    args.insert(args.end(), {"--out", dir.string(), "--threads", threads});
    return cli(args);
  };
  const Run ra = with_out(a, "1");
  const Run rb = with_out(b, "3");
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(ra.out == rb.out);
  for (const char* f : {"metrics.json", "metrics.csv", "replicates.csv", "table.txt"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(slurp(a / "table.txt") == ra.out);
  CHECK(slurp(a / "metrics.json") == slurp(kDataDir / "golden_metrics.json"));
}

TEST_CASE("estimate JSON matches the golden file") {
  const Run r = cli({"estimate", "--labeled", (kDataDir / "labeled_small.csv").string(),
                     "--unlabeled", (kDataDir / "unlabeled_small.csv").string(),
                     "--covariates", "x1,x2", "--alpha", "0.1"});
  REQUIRE(r.code == 0);
  CHECK(r.out == slurp(kDataDir / "golden_estimate.json"));
}

TEST_CASE("single replicate simulate") {
  const fs::path dir = scratch("single");
  const Run r = cli({"simulate", "--setting", "2", "--reps", "1", "--seed", "3", "--out",
                     dir.string()});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "metrics.json"));
  CHECK(doc["n_reps"] == 1);
  for (const auto& row : doc["rows"]) {
    const double cov = row["coverage"].get<double>();
    CHECK((cov == 0.0 || cov == 1.0));
  }
}

TEST_CASE("report merges files in canonical method order") {
  const fs::path a = scratch("rep_a"), b = scratch("rep_b");
  const std::vector<std::string> base = {"simulate", "--setting", "3", "--n-t", "100",
                                         "--n", "80", "--big-n", "200", "--reps", "3",
                                         "--seed", "1", "--predictor", "feature_mean"};
  auto run = [&](const fs::path& dir, const std::string& methods) {
    auto args = base;
    args.insert(args.end(), {"--methods", methods, "--out", dir.string()});
    return cli(args);
  };
  REQUIRE(run(a, "proposed,naive").code == 0);
  REQUIRE(run(b, "postpi,oracle").code == 0);

  const Run single = cli({"report", (a / "metrics.json").string()});
  REQUIRE(single.code == 0);
  CHECK(single.out == slurp(a / "table.txt"));

  const Run merged = cli({"report", (a / "metrics.json").string(), (b / "metrics.json").string()});
  REQUIRE(merged.code == 0);
  const auto groups = parse_table(merged.out);
  REQUIRE(groups.size() == 1);
  REQUIRE(groups[0].rows.size() == 4);
  CHECK(groups[0].rows[0].method == Method::oracle);
  CHECK(groups[0].rows[1].method == Method::naive);
  CHECK(groups[0].rows[2].method == Method::postpi);
  CHECK(groups[0].rows[3].method == Method::proposed);

  const Run from_tables = cli({"report", (b / "table.txt").string(), (a / "metrics.json").string(),
                               "--out", (a / "merged.txt").string()});
  REQUIRE(from_tables.code == 0);
  CHECK(slurp(a / "merged.txt") == merged.out);
}

TEST_CASE("report rejects malformed and mismatched files") {
  const fs::path dir = scratch("report_bad");
  spit(dir / "broken.json", "{\n  \"schema_version\": 1,\n  \"kind\": metrics\n}\n");
  const Run broken = cli({"report", (dir / "broken.json").string()});
  CHECK(broken.code == 2);
  CHECK(broken.err.find("broken.json:3") != std::string::npos);

  spit(dir / "v2.json", "{\"schema_version\": 2, \"kind\": \"metrics\"}");
  const Run v2 = cli({"report", (dir / "v2.json").string()});
  CHECK(v2.code == 2);
  CHECK(v2.err.find("schema_version") != std::string::npos);

  spit(dir / "table.txt", "Setting 1, beta1 = 0\n  n_t n N\n   500 500 500 naive x 1 1 1 1 1 0\n");
  const Run table = cli({"report", (dir / "table.txt").string(), "--out",
                         (dir / "out.txt").string()});
  CHECK(table.code == 2);
  CHECK(table.err.find("line 3") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out.txt"));
}

TEST_CASE("estimate schema errors name the column and leave no output") {
  const fs::path dir = scratch("schema");
  spit(dir / "lab.csv", "y,f,a,b\n1,1,0,1\n2,2,1,0\n3,2,2,1\n4,5,3,0\n5,4,4,1\n");
  spit(dir / "unl.csv", "f,a\n1,0\n2,1\n3,2\n4,3\n5,4\n6,5\n");
  const fs::path out = dir / "fit.json";
  const Run r = cli({"estimate", "--labeled", (dir / "lab.csv").string(), "--unlabeled",
                     (dir / "unl.csv").string(), "--out", out.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("'b'") != std::string::npos);
  CHECK_FALSE(fs::exists(out));

  const Run pred = cli({"estimate", "--labeled", (dir / "lab.csv").string(), "--unlabeled",
                        (dir / "unl.csv").string(), "--prediction-col", "yhat"});
  CHECK(pred.code == 2);
  CHECK(pred.err.find("'yhat'") != std::string::npos);

  spit(dir / "missing.csv", "y,f,a\n1,1,0\n2,,1\n");
  const Run missing = cli({"estimate", "--labeled", (dir / "missing.csv").string(),
                           "--unlabeled", (dir / "unl.csv").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("missing.csv:3") != std::string::npos);

  const Run oracle_run = cli({"estimate", "--labeled", (dir / "lab.csv").string(),
                              "--unlabeled", (dir / "unl.csv").string(), "--covariates", "a",
                              "--method", "oracle"});
  CHECK(oracle_run.code == 2);
}

TEST_CASE("singular design exits with a runtime error") {
  const fs::path dir = scratch("singular");
  spit(dir / "lab.csv", "y,f,a,b\n1,1,0,0\n2,2,1,2\n3,2,2,4\n4,5,3,6\n5,4,4,8\n");
  spit(dir / "unl.csv", "f,a,b\n1,0,0\n2,1,2\n3,2,4\n4,3,6\n5,4,8\n6,5,10\n");
  const Run r = cli({"estimate", "--labeled", (dir / "lab.csv").string(), "--unlabeled",
                     (dir / "unl.csv").string()});
  CHECK(r.code == 3);
  CHECK(r.err.find("singular") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"simulate", "--bogus"}).code == 2);
  CHECK(cli({"simulate", "--setting", "4"}).code == 2);
  CHECK(cli({"simulate", "--methods", "ppi", "--reps", "2"}).code == 2);
  CHECK(cli({"simulate", "--alpha", "1.5", "--reps", "2"}).code == 2);
  CHECK(cli({"simulate", "--reps", "0"}).code == 2);
  CHECK(cli({"simulate", "--predictor", "psychic", "--reps", "2"}).code == 2);
  CHECK(cli({"estimate", "--labeled", "/nonexistent.csv", "--unlabeled", "/x.csv"}).code == 2);
  CHECK(cli({"report"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("csv parsing") {
  const CsvTable t = parse_csv("a, b\n1,2.5\n\n-3,4e2\n", "mem");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.values.rows() == 2);
  CHECK(t.values(1, 1) == 400.0);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n", "mem"), SchemaError);
  CHECK_THROWS_AS(parse_csv("a,b\n1,NA\n", "mem"), SchemaError);
  CHECK_THROWS_AS(parse_csv("a,b\n1,nan\n", "mem"), SchemaError);
  CHECK_THROWS_AS(parse_csv("", "mem"), SchemaError);
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::nan("")) == "NA");
}
