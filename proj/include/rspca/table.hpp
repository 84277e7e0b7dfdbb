#pragma once

// Result tables and their on-disk formats.
//
// CSV layout: metadata lines "# key=value", then one header row whose
// cells are "name" or "name[unit]", then data rows. The reserved metadata
// keys "table" and "types" carry the table name and column types so a file
// can be read back exactly. Reals are written with 17 significant digits.

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rspca/errors.hpp"

namespace rspca {

enum class ColumnType { real, integer, text, boolean };

[[nodiscard]] inline std::string_view to_string(ColumnType t) noexcept {
  switch (t) {
    case ColumnType::real: return "real";
    case ColumnType::integer: return "integer";
    case ColumnType::text: return "text";
    case ColumnType::boolean: return "boolean";
  }
  return "text";
}

[[nodiscard]] inline ColumnType parse_column_type(std::string_view s) {
  if (s == "real") return ColumnType::real;
  if (s == "integer") return ColumnType::integer;
  if (s == "text") return ColumnType::text;
  if (s == "boolean") return ColumnType::boolean;
  throw SchemaError("unknown column type '" + std::string(s) + "'");
}

struct Column {
  std::string name;
  std::string unit;  // empty when dimensionless
  ColumnType type = ColumnType::real;
};

using Value = std::variant<double, std::int64_t, std::string, bool>;

struct ResultTable {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::vector<Value>> rows;
  std::vector<std::pair<std::string, std::string>> meta;  // insertion order is kept

  ResultTable() = default;
  ResultTable(std::string table_name, std::vector<Column> cols)
      : name(std::move(table_name)), columns(std::move(cols)) {}

  void add_meta(std::string key, std::string value) {
    if (key == "table" || key == "types") throw SchemaError("metadata key '" + key + "' is reserved");
    for (char& c : value)
      if (c == '\n' || c == '\r') c = ' ';
    meta.emplace_back(std::move(key), std::move(value));
  }

  void add_row(std::vector<Value> row) {
    if (row.size() != columns.size()) {
      throw SchemaError("table '" + name + "': row has " + std::to_string(row.size()) + " cells, expected " +
                        std::to_string(columns.size()));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (static_cast<std::size_t>(columns[c].type) != row[c].index())
        throw SchemaError("table '" + name + "': column '" + columns[c].name + "' expects " +
                          std::string(to_string(columns[c].type)));
    }
    rows.push_back(std::move(row));
  }

  [[nodiscard]] std::size_t column_index(std::string_view column) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c].name == column) return c;
    throw SchemaError("table '" + name + "' has no column '" + std::string(column) + "'");
  }

  [[nodiscard]] bool has_column(std::string_view column) const {
    for (const auto& c : columns)
      if (c.name == column) return true;
    return false;
  }

  [[nodiscard]] const std::string* find_meta(std::string_view key) const {
    for (const auto& [k, v] : meta)
      if (k == key) return &v;
    return nullptr;
  }

  /// Numeric view of a real or integer column.
  [[nodiscard]] std::vector<double> numeric_column(std::string_view column) const {
    const std::size_t c = column_index(column);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
      if (const auto* d = std::get_if<double>(&row[c])) out.push_back(*d);
      else if (const auto* i = std::get_if<std::int64_t>(&row[c])) out.push_back(static_cast<double>(*i));
      else throw SchemaError("column '" + std::string(column) + "' is not numeric");
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Formatting helpers.

/// 17 significant digits, enough for an exact round trip.
[[nodiscard]] inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

[[nodiscard]] inline double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw SchemaError("not a number: '" + std::string(s) + "'");
  return v;
}

[[nodiscard]] inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[nodiscard]] inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace detail {

inline std::string csv_quote(std::string_view s) {
  const bool needs = s.find_first_of(",\"\n\r") != std::string_view::npos || (!s.empty() && (s.front() == ' ' || s.back() == ' '));
  if (!needs) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string format_value(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, double>) return format_double(x);
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(x);
        else if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
        else return x;
      },
      v);
}

// Splits one RFC-4180 record starting at `pos`; advances `pos` past it.
inline std::vector<std::string> read_record(std::string_view text, std::size_t& pos) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  bool was_quoted = false;
  while (pos < text.size()) {
    const char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          cell += '"';
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      ++pos;
      continue;
    }
    if (c == '"' && cell.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
      was_quoted = false;
    } else if (c == '\n') {
      ++pos;
      break;
    } else if (c != '\r') {
      cell += c;
    }
    ++pos;
  }
  if (quoted) throw SchemaError("unterminated quoted CSV cell");
  cells.push_back(std::move(cell));
  return cells;
}

inline std::string header_cell(const Column& c) { return c.unit.empty() ? c.name : c.name + "[" + c.unit + "]"; }

inline Column parse_header_cell(std::string_view s) {
  Column col;
  const auto open = s.find('[');
  if (open != std::string_view::npos && !s.empty() && s.back() == ']') {
    col.name = std::string(s.substr(0, open));
    col.unit = std::string(s.substr(open + 1, s.size() - open - 2));
  } else {
    col.name = std::string(s);
  }
  return col;
}

inline Value parse_value(std::string_view s, ColumnType t) {
  switch (t) {
    case ColumnType::real: return parse_double(s);
    case ColumnType::integer: {
      std::int64_t v = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size())
        throw SchemaError("not an integer: '" + std::string(s) + "'");
      return v;
    }
    case ColumnType::boolean:
      if (s == "true") return true;
      if (s == "false") return false;
      throw SchemaError("not a boolean: '" + std::string(s) + "'");
    case ColumnType::text: return std::string(s);
  }
  return std::string(s);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Serialization.

[[nodiscard]] inline std::string to_csv(const ResultTable& t) {
  std::string out = "# table=" + t.name + "\n# types=";
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c) out += ',';
    out += to_string(t.columns[c].type);
  }
  out += '\n';
  for (const auto& [k, v] : t.meta) out += "# " + k + "=" + v + "\n";
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c) out += ',';
    out += detail::csv_quote(detail::header_cell(t.columns[c]));
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += detail::csv_quote(detail::format_value(row[c]));
    }
    out += '\n';
  }
  return out;
}

[[nodiscard]] inline ResultTable from_csv(std::string_view text) {
  ResultTable t;
  std::vector<ColumnType> types;
  bool have_types = false;
  std::size_t pos = 0;
  while (pos < text.size() && text[pos] == '#') {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    if (line.size() < 2 || line[1] != ' ') throw SchemaError("malformed metadata line");
    line.remove_prefix(2);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw SchemaError("metadata line without '='");
    const std::string key(line.substr(0, eq));
    const std::string value(line.substr(eq + 1));
    if (key == "table") {
      t.name = value;
    } else if (key == "types") {
      have_types = true;
      std::size_t p = 0;
      if (!value.empty())
        for (const auto& cell : detail::read_record(value, p)) types.push_back(parse_column_type(cell));
    } else {
      t.meta.emplace_back(key, value);
    }
  }
  if (!have_types) throw SchemaError("CSV lacks the '# types=' line");
  if (pos >= text.size()) throw SchemaError("CSV lacks a header row");
  const auto header = detail::read_record(text, pos);
  if (!(header.size() == 1 && header[0].empty() && types.empty())) {
    if (header.size() != types.size()) throw SchemaError("header and type line disagree in width");
    for (std::size_t c = 0; c < header.size(); ++c) {
      Column col = detail::parse_header_cell(header[c]);
      col.type = types[c];
      t.columns.push_back(std::move(col));
    }
  }
  while (pos < text.size()) {
    const auto cells = detail::read_record(text, pos);
    if (cells.size() != t.columns.size()) throw SchemaError("row width differs from header");
    std::vector<Value> row;
    for (std::size_t c = 0; c < cells.size(); ++c) row.push_back(detail::parse_value(cells[c], t.columns[c].type));
    t.rows.push_back(std::move(row));
  }
  return t;
}

[[nodiscard]] inline nlohmann::ordered_json to_json_value(const ResultTable& t) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["table"] = t.name;
  ordered_json meta = ordered_json::object();
  for (const auto& [k, v] : t.meta) meta[k] = v;
  doc["meta"] = std::move(meta);
  ordered_json cols = ordered_json::array();
  for (const auto& c : t.columns)
    cols.push_back({{"name", c.name}, {"unit", c.unit}, {"type", std::string(to_string(c.type))}});
  doc["columns"] = std::move(cols);
  ordered_json rows = ordered_json::array();
  for (const auto& row : t.rows) {
    ordered_json obj = ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, double>) {
              // Non-finite reals are written as strings to stay valid JSON.
              if (std::isfinite(x)) obj[t.columns[c].name] = x;
              else obj[t.columns[c].name] = format_double(x);
            } else {
              obj[t.columns[c].name] = x;
            }
          },
          row[c]);
    }
    rows.push_back(std::move(obj));
  }
  doc["rows"] = std::move(rows);
  return doc;
}

[[nodiscard]] inline std::string to_json(const ResultTable& t) { return to_json_value(t).dump(2) + "\n"; }

[[nodiscard]] inline ResultTable from_json(std::string_view text) {
  const auto doc = nlohmann::ordered_json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw SchemaError("invalid JSON table");
  try {
    ResultTable t;
    t.name = doc.at("table").get<std::string>();
    for (const auto& [k, v] : doc.at("meta").items()) t.meta.emplace_back(k, v.get<std::string>());
    for (const auto& c : doc.at("columns"))
      t.columns.push_back(
          {c.at("name").get<std::string>(), c.at("unit").get<std::string>(), parse_column_type(c.at("type").get<std::string>())});
    for (const auto& r : doc.at("rows")) {
      std::vector<Value> row;
      for (const auto& col : t.columns) {
        const auto& v = r.at(col.name);
        switch (col.type) {
          case ColumnType::real: row.emplace_back(v.is_string() ? parse_double(v.get<std::string>()) : v.get<double>()); break;
          case ColumnType::integer: row.emplace_back(v.get<std::int64_t>()); break;
          case ColumnType::text: row.emplace_back(v.get<std::string>()); break;
          case ColumnType::boolean: row.emplace_back(v.get<bool>()); break;
        }
      }
      t.rows.push_back(std::move(row));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed JSON table: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Files.

enum class TableFormat { csv, json };

/// Writes `bytes` to `path` through "<path>.partial" and an atomic rename.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  const std::filesystem::path partial = path.string() + ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + partial.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + partial.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(partial, path, ec);
  if (ec) throw IoError("cannot rename '" + partial.string() + "' to '" + path.string() + "': " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Writes the table and returns the FNV-1a 64-bit checksum of the bytes.
inline std::uint64_t write_table(const ResultTable& t, const std::filesystem::path& path, TableFormat format) {
  const std::string bytes = format == TableFormat::csv ? to_csv(t) : to_json(t);
  write_file_atomic(path, bytes);
  return fnv1a64(bytes);
}

inline ResultTable read_table(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const std::string ext = path.extension().string();
  return ext == ".json" ? from_json(bytes) : from_csv(bytes);
}

}  // namespace rspca
