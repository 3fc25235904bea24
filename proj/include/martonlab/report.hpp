#pragma once

// Output assembly for the command-line tool: a config header, a JSON result
// body and an optional CSV table, all printed with 9 significant digits.

#include <json.hpp>

#include <string>
#include <variant>
#include <vector>

namespace martonlab {

using ojson = nlohmann::ordered_json;

enum class OutputFormat { json, csv };

using CsvCell = std::variant<double, long long, std::string>;

struct Report {
  ojson config;
  ojson result;
  /// Table for --format csv; when empty, scalar fields of `result` are
  /// flattened into key,value rows.
  std::vector<std::string> csv_header;
  std::vector<std::vector<CsvCell>> csv_rows;
};

/// x rounded to 9 significant digits (non-finite values pass through).
double round9(double x);

/// Copy of j with every floating-point number rounded to 9 significant digits.
ojson rounded(const ojson& j);

/// JSON: {"config": ..., "result": ...} indented by two, trailing newline.
/// CSV: "# config: <compact json>" then the table.
std::string emit(const Report& report, OutputFormat format);

/// One compact JSON document per line.
std::string emit_json_lines(const std::vector<ojson>& records);

std::string format_number(double x);

}  // namespace martonlab
