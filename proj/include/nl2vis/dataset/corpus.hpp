#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2vis/dataset/csv.hpp"
#include "nl2vis/error.hpp"
#include "nl2vis/vega_zero.hpp"

namespace nl2vis::dataset {

enum class Hardness { easy, medium, hard, extra_hard };
enum class Split { train, validation, test };

inline std::string_view to_string(Hardness h) {
  switch (h) {
    case Hardness::easy: return "Easy";
    case Hardness::medium: return "Medium";
    case Hardness::hard: return "Hard";
    case Hardness::extra_hard: return "Extra Hard";
  }
  return {};
}

inline std::optional<Hardness> hardness_from(std::string_view s) {
  const std::string k = vega_zero::to_lower(s);
  if (k == "easy") return Hardness::easy;
  if (k == "medium") return Hardness::medium;
  if (k == "hard") return Hardness::hard;
  if (k == "extra hard" || k == "extra_hard" || k == "extra") return Hardness::extra_hard;
  return std::nullopt;
}

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return {};
}

inline std::optional<Split> split_from(std::string_view s) {
  const std::string k = vega_zero::to_lower(s);
  if (k == "train") return Split::train;
  if (k == "validation" || k == "dev" || k == "valid" || k == "val") return Split::validation;
  if (k == "test") return Split::test;
  return std::nullopt;
}

/// One natural-language request paired with its vega-zero label.
struct NvPair {
  std::string id;
  std::string nl;
  vega_zero::VegaZeroAST label;
  std::string table;
  vega_zero::DatabaseSchema schema;
  std::optional<Hardness> hardness;
  Split split = Split::train;

  const vega_zero::TableSchema& table_schema() const {
    const auto* t = schema.find_table(table);
    if (!t) throw CorpusError("pair " + id + ": table '" + table + "' missing from schema");
    return *t;
  }
};

struct Reject {
  std::size_t line = 0;  // 1-based record number
  std::string reason;
};

struct CorpusLoad {
  std::vector<NvPair> pairs;
  std::vector<Reject> rejects;
  std::size_t records = 0;
};

enum class CorpusFormat { jsonl, csv };

inline constexpr double kMaxRejectFraction = 0.10;

namespace detail {

/// Builds a validated pair from already-extracted fields; throws a message
/// that becomes the reject reason.
inline NvPair make_pair(std::string id, std::string nl, const std::string& label_text,
                        std::string table, vega_zero::DatabaseSchema schema,
                        const std::string& hardness, const std::string& split) {
  NvPair pair;
  pair.id = std::move(id);
  pair.nl = std::move(nl);
  pair.table = vega_zero::to_lower(table);
  pair.schema = std::move(schema);
  pair.schema.check_unique();
  if (pair.nl.empty()) throw Error("empty nl");
  if (!hardness.empty()) {
    pair.hardness = hardness_from(hardness);
    if (!pair.hardness) throw Error("unknown hardness '" + hardness + "'");
  }
  if (!split.empty()) {
    const auto s = split_from(split);
    if (!s) throw Error("unknown split '" + split + "'");
    pair.split = *s;
  }
  pair.label = vega_zero::parse(label_text);
  if (!pair.label.mark) throw Error("label chart type is a placeholder");
  if (vega_zero::to_lower(pair.label.data) != pair.table)
    throw Error("multi-table or mismatched label: data '" + pair.label.data + "' vs table '" +
                pair.table + "'");
  if (!pair.schema.find_table(pair.table))
    throw Error("table '" + pair.table + "' missing from schema");
  const auto report = vega_zero::validate(pair.label, pair.schema);
  if (!report.ok) {
    for (const auto& issue : report.issues)
      if (issue.severity == vega_zero::Severity::error)
        throw Error("label does not validate: " + issue.message);
  }
  return pair;
}

inline vega_zero::DatabaseSchema schema_from_record(const nlohmann::json& rec,
                                                    const std::string& table) {
  const auto& s = rec.at("schema");
  if (s.is_object() && s.contains("tables")) return vega_zero::database_schema_from_json(s);
  nlohmann::json t = {{"name", table}};
  t["columns"] = s.is_object() ? s.at("columns") : s;
  t["values"] = rec.contains("values") ? rec.at("values") : nlohmann::json::array();
  return vega_zero::DatabaseSchema{{vega_zero::table_schema_from_json(t)}};
}

inline NvPair pair_from_json(const nlohmann::json& rec, std::size_t line) {
  const std::string table = rec.at("table").get<std::string>();
  return make_pair(rec.contains("id") ? rec.at("id").get<std::string>() : std::to_string(line),
                   rec.at("nl").get<std::string>(), rec.at("label").get<std::string>(), table,
                   schema_from_record(rec, table), rec.value("hardness", std::string()),
                   rec.value("split", std::string()));
}

// CSV cells: schema "name:kind;name:kind", values "v1|v2".
inline NvPair pair_from_csv(const CsvRow& row, std::size_t line) {
  const std::string table = row.at("table");
  vega_zero::TableSchema t;
  t.name = vega_zero::to_lower(table);
  for (const auto& entry : split_cell(row.at("schema"), ';')) {
    const auto colon = entry.find(':');
    vega_zero::ColumnSchema c;
    c.name = vega_zero::to_lower(entry.substr(0, colon));
    if (colon != std::string::npos) {
      const auto kind = vega_zero::column_kind_from(entry.substr(colon + 1));
      if (!kind) throw Error("unknown column kind in '" + entry + "'");
      c.kind = *kind;
    }
    t.columns.push_back(std::move(c));
  }
  if (row.has("values")) t.sample_values = split_cell(row.at("values"), '|');
  return make_pair(row.has("id") ? row.at("id") : std::to_string(line), row.at("nl"),
                   row.at("label"), table, vega_zero::DatabaseSchema{{t}},
                   row.has("hardness") ? row.at("hardness") : std::string(),
                   row.has("split") ? row.at("split") : std::string());
}

}  // namespace detail

/// Loads a corpus. Malformed records go to `rejects` with a reason; the load
/// fails when the file is empty or more than 10% of records are rejected.
inline CorpusLoad load_corpus(const std::filesystem::path& path,
                              CorpusFormat format = CorpusFormat::jsonl) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read corpus '" + path.string() + "'");
  CorpusLoad load;
  auto accept = [&](auto&& build) {
    ++load.records;
    try {
      load.pairs.push_back(build());
    } catch (const std::exception& e) {
      load.rejects.push_back({load.records, e.what()});
    }
  };

  if (format == CorpusFormat::jsonl) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      accept([&] { return detail::pair_from_json(nlohmann::json::parse(line), load.records); });
    }
  } else {
    const CsvTable csv = read_csv(in);
    for (const auto& row : csv.rows)
      accept([&] { return detail::pair_from_csv(row, load.records); });
  }

  if (load.records == 0) throw CorpusError("corpus '" + path.string() + "' is empty");
  if (static_cast<double>(load.rejects.size()) >
      kMaxRejectFraction * static_cast<double>(load.records))
    throw CorpusError("corpus '" + path.string() + "': " + std::to_string(load.rejects.size()) +
                      " of " + std::to_string(load.records) + " records rejected (first: " +
                      load.rejects.front().reason + ")");
  return load;
}

inline CorpusFormat corpus_format_for(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? CorpusFormat::csv : CorpusFormat::jsonl;
}

inline nlohmann::json to_json(const NvPair& pair) {
  const auto& t = pair.table_schema();
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : t.columns)
    cols.push_back({{"name", c.name}, {"kind", vega_zero::to_string(c.kind)}});
  nlohmann::json j = {{"id", pair.id},
                      {"nl", pair.nl},
                      {"label", vega_zero::serialize(pair.label)},
                      {"table", pair.table},
                      {"schema", cols},
                      {"values", t.sample_values},
                      {"split", to_string(pair.split)}};
  if (pair.hardness) j["hardness"] = to_string(*pair.hardness);
  return j;
}

inline void write_corpus(const std::vector<NvPair>& pairs, std::ostream& out) {
  for (const auto& p : pairs) out << to_json(p).dump() << '\n';
}

inline void write_rejects(const std::vector<Reject>& rejects, std::ostream& out) {
  for (const auto& r : rejects)
    out << nlohmann::json{{"record", r.line}, {"reason", r.reason}}.dump() << '\n';
}

inline std::vector<NvPair> select_split(const std::vector<NvPair>& pairs, Split split) {
  std::vector<NvPair> out;
  for (const auto& p : pairs)
    if (p.split == split) out.push_back(p);
  return out;
}

/// Union of the per-pair schemas, first definition of each table wins.
inline vega_zero::DatabaseSchema merged_schema(const std::vector<NvPair>& pairs) {
  vega_zero::DatabaseSchema merged;
  for (const auto& p : pairs)
    for (const auto& t : p.schema.tables)
      if (!merged.find_table(t.name)) merged.tables.push_back(t);
  return merged;
}

}  // namespace nl2vis::dataset
