#pragma once

#include "postpi/simulation.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace postpi {

/// Error while reading a text artifact; `line()` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Metrics for one (setting, sample sizes, beta1) cell of the results table.
struct ReportGroup {
  int setting_id = 1;
  SplitCounts counts;
  double beta1 = 0.0;
  std::vector<MetricsRow> rows;
};

/// "T1 Err" for a null effect, "Power" otherwise.
std::string_view rejection_label(double beta1) noexcept;

/// Merges groups with the same (setting, counts, beta1) key, keeping the
/// first occurrence's position, and orders rows oracle, classical, naive,
/// postpi, proposed (stable for duplicates).
std::vector<ReportGroup> merge_groups(const std::vector<ReportGroup>& groups);

/// Fixed-width table, one block per group and one line per method, metrics
/// to three decimals.
std::string render_table(const std::vector<ReportGroup>& groups);

/// Inverse of render_table up to the printed precision.
std::vector<ReportGroup> parse_table(std::string_view text);

}  // namespace postpi
