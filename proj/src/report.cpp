#include "martonlab/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace martonlab {
namespace {

void flatten(const ojson& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_number_float()) {
    out.emplace_back(prefix, format_number(j.get<double>()));
  } else if (j.is_primitive()) {
    out.emplace_back(prefix, j.is_string() ? j.get<std::string>() : j.dump());
  }
  // Arrays are left to the JSON form.
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

double round9(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

ojson rounded(const ojson& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    // JSON has no non-finite numbers; keep them visible as strings.
    if (!std::isfinite(v)) return format_number(v);
    return round9(v);
  }
  if (j.is_array()) {
    ojson out = ojson::array();
    for (const auto& e : j) out.push_back(rounded(e));
    return out;
  }
  if (j.is_object()) {
    ojson out = ojson::object();
    for (const auto& [k, v] : j.items()) out[k] = rounded(v);
    return out;
  }
  return j;
}

std::string emit(const Report& report, OutputFormat format) {
  if (format == OutputFormat::json) {
    ojson doc;
    doc["config"] = rounded(report.config);
    doc["result"] = rounded(report.result);
    return doc.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "# config: " << rounded(report.config).dump() << "\n";
  if (!report.csv_header.empty()) {
    for (std::size_t i = 0; i < report.csv_header.size(); ++i) out << (i ? "," : "") << csv_escape(report.csv_header[i]);
    out << "\n";
    for (const auto& row : report.csv_rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ",";
        std::visit(
            [&out](const auto& cell) {
              using T = std::decay_t<decltype(cell)>;
              if constexpr (std::is_same_v<T, double>) out << format_number(cell);
              else if constexpr (std::is_same_v<T, long long>) out << cell;
              else out << csv_escape(cell);
            },
            row[i]);
      }
      out << "\n";
    }
    return out.str();
  }
  std::vector<std::pair<std::string, std::string>> rows;
  flatten(report.result, "", rows);
  out << "key,value\n";
  for (const auto& [k, v] : rows) out << csv_escape(k) << "," << csv_escape(v) << "\n";
  return out.str();
}

std::string emit_json_lines(const std::vector<ojson>& records) {
  std::string out;
  for (const auto& r : records) out += rounded(r).dump() + "\n";
  return out;
}

}  // namespace martonlab
