#include "martonlab/channel_io.hpp"

#include "martonlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

namespace martonlab {
namespace {

using json = nlohmann::json;

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

// Line of the first occurrence of "key", or 1 when absent.
std::size_t line_of_key(std::string_view text, std::string_view key) {
  const std::string quoted = "\"" + std::string(key) + "\"";
  const auto pos = text.find(quoted);
  return pos == std::string_view::npos ? 1 : line_of(text, pos);
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& what) {
  throw InputError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

json parse_document(std::string_view text, std::string_view source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    fail(source, line_of(text, e.byte == 0 ? 0 : e.byte - 1), std::string("malformed JSON: ") + e.what());
  }
}

std::vector<std::vector<double>> real_matrix(const json& node, std::string_view text, std::string_view source,
                                             std::string_view key) {
  const std::size_t line = line_of_key(text, key);
  if (!node.is_array() || node.empty()) fail(source, line, std::string(key) + " must be a non-empty array of rows");
  std::vector<std::vector<double>> rows;
  for (const auto& row : node) {
    if (!row.is_array() || row.empty()) fail(source, line, std::string(key) + " rows must be non-empty arrays");
    std::vector<double> r;
    for (const auto& v : row) {
      if (!v.is_number()) fail(source, line, std::string(key) + " entries must be numbers");
      r.push_back(v.get<double>());
    }
    if (!rows.empty() && r.size() != rows.front().size())
      fail(source, line, std::string(key) + " rows must all have the same length");
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

StochasticMatrix checked_channel(const json& node, std::string_view text, std::string_view source,
                                 std::string_view key, std::size_t x_size) {
  const auto rows = real_matrix(node, text, source, key);
  const std::size_t line = line_of_key(text, key);
  if (rows.size() != x_size) fail(source, line, std::string(key) + " needs one row per input symbol");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double total = 0.0;
    for (double v : rows[i]) {
      if (!(v >= 0.0) || !std::isfinite(v)) fail(source, line, std::string(key) + " has a negative or non-finite entry");
      total += v;
    }
    if (std::abs(total - 1.0) > kRenormalizeTolerance)
      fail(source, line, std::string(key) + " row " + std::to_string(i) + " sums to " + std::to_string(total));
  }
  try {
    return StochasticMatrix::from_rows(rows);
  } catch (const std::exception& e) {
    fail(source, line, e.what());
  }
}

struct Rational {
  std::int64_t num;
  std::int64_t den;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(',', start);
    out.push_back(trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Decimal or integer literal as an exact rational, when it fits.
std::optional<Rational> exact_decimal(const std::string& s) {
  if (s.empty() || s.find_first_of("eE") != std::string::npos) return std::nullopt;
  std::int64_t num = 0, den = 1;
  bool seen_point = false, seen_digit = false;
  for (char c : s) {
    if (c == '.') {
      if (seen_point) return std::nullopt;
      seen_point = true;
      continue;
    }
    if (c < '0' || c > '9') return std::nullopt;
    seen_digit = true;
    if (num > (INT64_MAX - 9) / 10 || (seen_point && den > INT64_MAX / 10)) return std::nullopt;
    num = num * 10 + (c - '0');
    if (seen_point) den *= 10;
  }
  if (!seen_digit) return std::nullopt;
  return Rational{num, den};
}

double parse_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InputError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw InputError("not a number: '" + s + "'");
  return v;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ChannelFixture parse_channel_json(std::string_view text, std::string_view source) {
  const json doc = parse_document(text, source);
  if (!doc.is_object()) fail(source, 1, "channel document must be an object");
  for (const char* key : {"x_size", "y_given_x", "z_given_x"})
    if (!doc.contains(key)) fail(source, 1, std::string("missing key \"") + key + "\"");
  if (!doc["x_size"].is_number_unsigned() || doc["x_size"].get<std::size_t>() == 0)
    fail(source, line_of_key(text, "x_size"), "x_size must be a positive integer");
  const auto x_size = doc["x_size"].get<std::size_t>();
  StochasticMatrix y = checked_channel(doc["y_given_x"], text, source, "y_given_x", x_size);
  StochasticMatrix z = checked_channel(doc["z_given_x"], text, source, "z_given_x", x_size);
  std::optional<SimplexVector> px;
  if (doc.contains("px")) {
    const std::size_t line = line_of_key(text, "px");
    const auto& node = doc["px"];
    if (!node.is_array() || node.size() != x_size) fail(source, line, "px needs x_size entries");
    std::vector<double> v;
    for (const auto& e : node) {
      if (!e.is_number()) fail(source, line, "px entries must be numbers");
      v.push_back(e.get<double>());
    }
    try {
      px = SimplexVector(v);
    } catch (const std::exception& e) {
      fail(source, line, e.what());
    }
  }
  std::string name = doc.contains("name") && doc["name"].is_string() ? doc["name"].get<std::string>()
                                                                        : std::string(source);
  return {std::move(name), BroadcastChannel(std::move(y), std::move(z)), std::move(px)};
}

ChannelFixture load_channel_file(const std::string& path) { return parse_channel_json(read_text_file(path), path); }

nlohmann::ordered_json channel_to_json(const BroadcastChannel& ch, const std::optional<SimplexVector>& px) {
  nlohmann::ordered_json j;
  j["x_size"] = ch.x_size();
  j["y_given_x"] = ch.y_chan().to_rows();
  j["z_given_x"] = ch.z_chan().to_rows();
  if (px) j["px"] = px->to_vector();
  return j;
}

CouplingWithMap parse_coupling_json(std::string_view text, std::string_view source) {
  const json doc = parse_document(text, source);
  if (!doc.is_object() || !doc.contains("p_uv") || !doc.contains("f"))
    fail(source, 1, "coupling document needs \"p_uv\" and \"f\"");
  const Eigen::MatrixXd p = to_matrix(real_matrix(doc["p_uv"], text, source, "p_uv"));
  const std::size_t f_line = line_of_key(text, "f");
  const auto& fnode = doc["f"];
  if (!fnode.is_array() || fnode.size() != static_cast<std::size_t>(p.rows()))
    fail(source, f_line, "f needs one row per row of p_uv");
  std::vector<std::vector<int>> rows;
  int max_symbol = -1;
  for (const auto& row : fnode) {
    if (!row.is_array() || row.size() != static_cast<std::size_t>(p.cols()))
      fail(source, f_line, "f rows must match the columns of p_uv");
    std::vector<int> r;
    for (const auto& v : row) {
      if (!v.is_number_integer() || v.get<int>() < 0) fail(source, f_line, "f entries must be non-negative integers");
      r.push_back(v.get<int>());
      max_symbol = std::max(max_symbol, r.back());
    }
    rows.push_back(std::move(r));
  }
  std::size_t x_size = static_cast<std::size_t>(max_symbol + 1);
  if (doc.contains("x_size")) {
    if (!doc["x_size"].is_number_unsigned()) fail(source, line_of_key(text, "x_size"), "x_size must be a positive integer");
    x_size = doc["x_size"].get<std::size_t>();
  }
  try {
    return CouplingWithMap(p, DeterministicMap::from_rows(rows, x_size));
  } catch (const std::exception& e) {
    fail(source, line_of_key(text, "p_uv"), e.what());
  }
}

nlohmann::ordered_json coupling_to_json(const CouplingWithMap& c) {
  nlohmann::ordered_json j;
  std::vector<std::vector<double>> p(c.u_size(), std::vector<double>(c.v_size()));
  for (std::size_t u = 0; u < c.u_size(); ++u)
    for (std::size_t v = 0; v < c.v_size(); ++v) p[u][v] = c.p_uv()(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
  j["p_uv"] = p;
  j["f"] = c.f().rows();
  j["x_size"] = c.x_size();
  j["map_id"] = c.f().id();
  return j;
}

Eigen::MatrixXd parse_joint_json(std::string_view text, std::string_view source) {
  const json doc = parse_document(text, source);
  if (doc.is_object()) {
    if (!doc.contains("joint")) fail(source, 1, "joint document needs a \"joint\" array");
    return to_matrix(real_matrix(doc["joint"], text, source, "joint"));
  }
  return to_matrix(real_matrix(doc, text, source, "joint"));
}

std::vector<double> parse_fraction_list(std::string_view text) {
  const auto items = split_commas(text);
  std::vector<Rational> exact;
  bool all_exact = true;
  std::vector<double> approx;
  for (const auto& item : items) {
    if (item.empty()) throw InputError("empty entry in list '" + std::string(text) + "'");
    const auto slash = item.find('/');
    std::optional<Rational> r;
    double value;
    if (slash != std::string::npos) {
      const std::string a = trim(item.substr(0, slash)), b = trim(item.substr(slash + 1));
      const auto ra = exact_decimal(a), rb = exact_decimal(b);
      const double da = parse_real(a), db = parse_real(b);
      if (db == 0.0) throw InputError("zero denominator in '" + item + "'");
      value = da / db;
      if (ra && rb && ra->num <= INT32_MAX && rb->num <= INT32_MAX && ra->den <= INT32_MAX && rb->den <= INT32_MAX)
        r = Rational{ra->num * rb->den, ra->den * rb->num};
    } else {
      value = parse_real(item);
      r = exact_decimal(item);
    }
    if (!(value >= 0.0) || !std::isfinite(value)) throw InputError("entries must be non-negative: '" + item + "'");
    approx.push_back(value);
    if (r) {
      const std::int64_t g = std::gcd(r->num, r->den);
      exact.push_back({r->num / g, r->den / g});
    } else {
      all_exact = false;
    }
  }
  std::vector<double> out;
  if (all_exact) {
    // Common denominator, then one division per entry.
    std::int64_t lcm = 1;
    for (const auto& r : exact)
      if (__builtin_mul_overflow(lcm / std::gcd(lcm, r.den), r.den, &lcm)) all_exact = false;
    std::int64_t total = 0;
    std::vector<std::int64_t> scaled;
    for (const auto& r : exact) {
      std::int64_t s = 0;
      if (!all_exact || __builtin_mul_overflow(r.num, lcm / r.den, &s) || __builtin_add_overflow(total, s, &total)) {
        all_exact = false;
        break;
      }
      scaled.push_back(s);
    }
    if (all_exact) {
      if (total <= 0) throw InputError("list must have positive total mass");
      for (auto v : scaled) out.push_back(static_cast<double>(v) / static_cast<double>(total));
      return out;
    }
  }
  const double total = std::accumulate(approx.begin(), approx.end(), 0.0);
  if (!(total > 0.0)) throw InputError("list must have positive total mass");
  for (double v : approx) out.push_back(v / total);
  return out;
}

std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split_commas(text)) {
    if (item.empty()) throw InputError("empty entry in list '" + std::string(text) + "'");
    out.push_back(parse_real(item));
  }
  return out;
}

}  // namespace martonlab
