#pragma once

#include "postpi/estimators.hpp"
#include "postpi/report.hpp"
#include "postpi/simulation.hpp"

#include "json.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace postpi {

/// Version stamped into every JSON artifact; report merging refuses others.
inline constexpr int kSchemaVersion = 1;

/// Input file does not have the expected columns or values.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric CSV with a header row. Empty or non-numeric cells are rejected.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  RealMatrix values;

  /// Index of `name` in the header; throws SchemaError naming the column.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text, const std::string& source);
CsvTable read_csv(const std::filesystem::path& path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

nlohmann::ordered_json fit_result_json(const FitResult& result);
nlohmann::ordered_json metrics_json(const MonteCarloResult& result);
std::string metrics_csv(const MonteCarloResult& result);
std::string replicates_csv(const MonteCarloResult& result);

/// Table groups stored in a metrics JSON document. Throws SchemaError on a
/// schema_version mismatch or missing fields.
std::vector<ReportGroup> groups_from_metrics_json(const nlohmann::json& doc,
                                                  const std::string& source);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partial file.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace postpi
