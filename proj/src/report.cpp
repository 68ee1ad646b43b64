#include "postpi/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace postpi {

namespace {

constexpr std::string_view kGroupPrefix = "Setting ";
constexpr std::string_view kMissing = "NA";

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed3(double v) {
  if (std::isnan(v)) return std::string(kMissing);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double parse_number(const std::string& tok, std::size_t line) {
  if (tok == kMissing) return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError("line " + std::to_string(line) + ": expected a number, got '" +
                         tok + "'",
                     line);
  return v;
}

std::size_t parse_count(const std::string& tok, std::size_t line) {
  std::size_t v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError("line " + std::to_string(line) + ": expected a count, got '" +
                         tok + "'",
                     line);
  return v;
}

bool same_key(const ReportGroup& a, const ReportGroup& b) {
  return a.setting_id == b.setting_id && a.counts.n_t == b.counts.n_t &&
         a.counts.n == b.counts.n && a.counts.N == b.counts.N && a.beta1 == b.beta1;
}

std::size_t method_rank(Method m) {
  return std::size_t(std::find(kAllMethods.begin(), kAllMethods.end(), m) -
                     kAllMethods.begin());
}

}  // namespace

std::string_view rejection_label(double beta1) noexcept {
  return beta1 == 0.0 ? "T1 Err" : "Power";
}

std::vector<ReportGroup> merge_groups(const std::vector<ReportGroup>& groups) {
  std::vector<ReportGroup> out;
  for (const auto& g : groups) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const ReportGroup& o) { return same_key(o, g); });
    if (it == out.end()) {
      out.push_back(g);
    } else {
      it->rows.insert(it->rows.end(), g.rows.begin(), g.rows.end());
    }
  }
  for (auto& g : out)
    std::stable_sort(g.rows.begin(), g.rows.end(), [](const auto& a, const auto& b) {
      return method_rank(a.method) < method_rank(b.method);
    });
  return out;
}

std::string render_table(const std::vector<ReportGroup>& groups) {
  std::string out;
  char line[256];
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const ReportGroup& g = groups[gi];
    if (gi > 0) out += '\n';
    out += std::string(kGroupPrefix) + std::to_string(g.setting_id) +
           ", beta1 = " + shortest(g.beta1) + '\n';
    std::snprintf(line, sizeof line, "%6s %6s %6s  %-10s %8s %8s %8s %8s %8s %6s %6s\n",
                  "n_t", "n", "N", "Method", "Bias", "MSE", "CI W", "Cov",
                  std::string(rejection_label(g.beta1)).c_str(), "Reps", "Failed");
    out += line;
    for (const MetricsRow& r : g.rows) {
      std::snprintf(line, sizeof line,
                    "%6zu %6zu %6zu  %-10s %8s %8s %8s %8s %8s %6zu %6zu\n", g.counts.n_t,
                    g.counts.n, g.counts.N, std::string(method_name(r.method)).c_str(),
                    fixed3(r.bias).c_str(), fixed3(r.mse).c_str(),
                    fixed3(r.mean_ci_width).c_str(), fixed3(r.coverage).c_str(),
                    fixed3(r.rejection_rate).c_str(), r.n_reps, r.n_failed);
      out += line;
    }
  }
  return out;
}

std::vector<ReportGroup> parse_table(std::string_view text) {
  std::vector<ReportGroup> groups;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  bool expect_header = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto toks = split_ws(raw);
    if (toks.empty()) continue;
    const auto fail = [&](const std::string& why) {
      throw ParseError("line " + std::to_string(line_no) + ": " + why, line_no);
    };

    if (raw.rfind(kGroupPrefix, 0) == 0) {
      // "Setting <id>, beta1 = <value>"
      if (toks.size() != 5 || toks[2] != "beta1" || toks[3] != "=" ||
          toks[1].empty() || toks[1].back() != ',')
        fail("malformed group header");
      ReportGroup g;
      g.setting_id = int(parse_count(toks[1].substr(0, toks[1].size() - 1), line_no));
      g.beta1 = parse_number(toks[4], line_no);
      groups.push_back(g);
      expect_header = true;
      continue;
    }
    if (groups.empty()) fail("data before the first group header");
    if (expect_header) {
      if (toks.empty() || toks[0] != "n_t") fail("missing column header");
      expect_header = false;
      continue;
    }
    if (toks.size() != 11) fail("expected 11 fields, got " + std::to_string(toks.size()));
    const auto method = parse_method(toks[3]);
    if (!method) fail("unknown method '" + toks[3] + "'");
    ReportGroup& g = groups.back();
    const SplitCounts counts{parse_count(toks[0], line_no), parse_count(toks[1], line_no),
                             parse_count(toks[2], line_no)};
    if (g.rows.empty()) {
      g.counts = counts;
    } else if (counts.n_t != g.counts.n_t || counts.n != g.counts.n ||
               counts.N != g.counts.N) {
      fail("sample sizes differ within one group");
    }
    MetricsRow r;
    r.method = *method;
    r.bias = parse_number(toks[4], line_no);
    r.mse = parse_number(toks[5], line_no);
    r.mean_ci_width = parse_number(toks[6], line_no);
    r.coverage = parse_number(toks[7], line_no);
    r.rejection_rate = parse_number(toks[8], line_no);
    r.n_reps = parse_count(toks[9], line_no);
    r.n_failed = parse_count(toks[10], line_no);
    g.rows.push_back(r);
  }
  if (expect_header) throw ParseError("truncated table: missing column header", line_no);
  return groups;
}

}  // namespace postpi
