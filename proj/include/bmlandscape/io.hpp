#ifndef BMLANDSCAPE_IO_HPP
#define BMLANDSCAPE_IO_HPP

// JSON helpers. Matrices are arrays of rows; every floating value is written
// with 17 significant digits so reports diff cleanly and round-trip exactly.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "bmlandscape/matkernel.hpp"

namespace bml::io {

using Json = nlohmann::json;

/// Raised for malformed input files; `where` names the offending location.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

inline std::string format_double(double x) {
  if (!std::isfinite(x)) {
    if (std::isnan(x)) return "NaN";
    return x > 0 ? "Infinity" : "-Infinity";
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void write(std::string& out, const Json& j, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        write(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) {
        return !e.is_array() && !e.is_object();
      });
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ',';
        if (!first && flat && indent >= 0) out += ' ';
        first = false;
        if (!flat) newline(depth + 1);
        write(out, e, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float:
      if (!std::isfinite(j.get<double>())) {
        throw std::invalid_argument("JSON output: non-finite number");
      }
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace detail

/// Serialize with 17-significant-digit floats. indent < 0 gives compact output.
inline std::string dump(const Json& j, int indent = 2) {
  std::string out;
  detail::write(out, j, indent, 0);
  if (indent >= 0) out += '\n';
  return out;
}

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json vector_to_json(const Vector& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline double number_at(const Json& j, const std::string& where) {
  if (!j.is_number()) throw FormatError(where, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw FormatError(where, "non-finite number");
  return x;
}

inline Matrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where, "expected an array of rows");
  const auto rows = static_cast<Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  if (!j[0].is_array()) throw FormatError(where + "[0]", "expected a row array");
  const auto cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    const std::string rw = where + "[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw FormatError(rw, "expected a row of length " + std::to_string(cols));
    }
    for (Index k = 0; k < cols; ++k) {
      m(i, k) = number_at(row[static_cast<std::size_t>(k)], rw + "[" + std::to_string(k) + "]");
    }
  }
  return m;
}

inline Vector vector_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where, "expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Index>(i)) = number_at(j[i], where + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline const Json& field(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw FormatError(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(where, "missing field \"" + key + "\"");
  return *it;
}

inline long long int_field(const Json& j, const std::string& key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_number_integer()) throw FormatError(where + "." + key, "expected an integer");
  return v.get<long long>();
}

inline Json parse(const std::string& text, const std::string& where) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(where, std::string("JSON parse error at byte ") +
                                 std::to_string(e.byte) + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path, "cannot open file for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out << content;
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace bml::io

#endif  // BMLANDSCAPE_IO_HPP
