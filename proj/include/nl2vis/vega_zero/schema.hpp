#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2vis/error.hpp"
#include "nl2vis/vega_zero/lexer.hpp"

namespace nl2vis::vega_zero {

enum class ColumnKind { categorical, numeric, temporal };

inline std::string_view to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::temporal: return "temporal";
  }
  return {};
}

inline std::optional<ColumnKind> column_kind_from(std::string_view s) {
  if (s == "categorical") return ColumnKind::categorical;
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "temporal") return ColumnKind::temporal;
  return std::nullopt;
}

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;

  bool operator==(const ColumnSchema&) const = default;
};

struct TableSchema {
  std::string name;
  std::vector<ColumnSchema> columns;
  std::vector<std::string> sample_values;

  const ColumnSchema* find_column(std::string_view column) const {
    const std::string key = to_lower(column);
    for (const auto& c : columns)
      if (to_lower(c.name) == key) return &c;
    return nullptr;
  }

  bool operator==(const TableSchema&) const = default;
};

struct DatabaseSchema {
  std::vector<TableSchema> tables;

  const TableSchema* find_table(std::string_view table) const {
    const std::string key = to_lower(table);
    for (const auto& t : tables)
      if (to_lower(t.name) == key) return &t;
    return nullptr;
  }

  /// Throws when a table or column name repeats (case-insensitively).
  void check_unique() const {
    std::set<std::string> seen_tables;
    for (const auto& t : tables) {
      if (!seen_tables.insert(to_lower(t.name)).second)
        throw Error("duplicate table name '" + t.name + "'");
      std::set<std::string> seen_columns;
      for (const auto& c : t.columns)
        if (!seen_columns.insert(to_lower(c.name)).second)
          throw Error("duplicate column '" + c.name + "' in table '" + t.name + "'");
    }
  }

  bool operator==(const DatabaseSchema&) const = default;
};

// JSON shape:
//   {"tables": [{"name": "employees",
//                "columns": [{"name": "hire_date", "kind": "temporal"}, ...],
//                "values": ["Bull", ...]}]}

inline nlohmann::json to_json(const TableSchema& t) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"kind", to_string(c.kind)}});
  return {{"name", t.name}, {"columns", cols}, {"values", t.sample_values}};
}

/// Column names are lowercased on the way in; sample values keep their case.
inline TableSchema table_schema_from_json(const nlohmann::json& j) {
  TableSchema t;
  t.name = to_lower(j.at("name").get<std::string>());
  for (const auto& c : j.at("columns")) {
    ColumnSchema col;
    if (c.is_string()) {
      col.name = to_lower(c.get<std::string>());
    } else {
      col.name = to_lower(c.at("name").get<std::string>());
      const auto kind = column_kind_from(c.value("kind", std::string("categorical")));
      if (!kind) throw Error("unknown column kind for '" + col.name + "'");
      col.kind = *kind;
    }
    t.columns.push_back(std::move(col));
  }
  if (j.contains("values"))
    for (const auto& v : j.at("values"))
      t.sample_values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
  return t;
}

inline nlohmann::json to_json(const DatabaseSchema& s) {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : s.tables) tables.push_back(to_json(t));
  return {{"tables", tables}};
}

inline DatabaseSchema database_schema_from_json(const nlohmann::json& j) {
  DatabaseSchema s;
  for (const auto& t : j.at("tables")) s.tables.push_back(table_schema_from_json(t));
  s.check_unique();
  return s;
}

}  // namespace nl2vis::vega_zero
