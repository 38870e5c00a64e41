#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "nl2vis/dataset/corpus.hpp"
#include "nl2vis/dataset/csv.hpp"
#include "nl2vis/error.hpp"
#include "nl2vis/vega_zero.hpp"

namespace nl2vis::dataset {

/// Per-split counts of one nvBench import.
struct NvBenchSplitStats {
  Split split = Split::train;
  std::size_t rows = 0;         // CSV records read
  std::size_t vis_queries = 0;  // distinct visualization ids among kept pairs
  std::size_t pairs = 0;        // distinct (visualization, question) pairs kept
  std::size_t rejects = 0;

  std::size_t items() const { return 2 * pairs; }
};

struct NvBenchImport {
  std::vector<NvPair> pairs;
  std::vector<Reject> rejects;
  std::vector<NvBenchSplitStats> splits;
};

namespace detail {

struct RawRow {
  std::string id;
  std::string vis_id;
  std::string db;
  std::string nl;
  std::string label;
  std::string hardness;
  Split split = Split::train;
  std::string table;
  std::vector<std::string> columns;
  std::vector<std::string> values;
  std::size_t record = 0;
};

inline std::vector<std::string> source_section(const std::vector<std::string>& toks,
                                               std::string_view open, std::string_view close) {
  std::vector<std::string> out;
  auto it = std::find(toks.begin(), toks.end(), open);
  if (it == toks.end()) return out;
  for (++it; it != toks.end() && *it != close; ++it) out.push_back(*it);
  return out;
}

inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && vega_zero::is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !vega_zero::is_space(text[i])) ++i;
    if (start < i) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

inline bool has_word(std::string_view text, std::string_view word) {
  const std::string lower = vega_zero::to_lower(text);
  std::size_t pos = 0;
  while ((pos = lower.find(word, pos)) != std::string::npos) {
    const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(lower[pos - 1]));
    const std::size_t end = pos + word.size();
    const bool right = end >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[end]));
    if (left && right) return true;
    pos = end;
  }
  return false;
}

// Unquoted numbers only.
inline bool numeric_literal(std::string_view v) {
  if (v.empty()) return false;
  char* end = nullptr;
  const std::string s(v);
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

// Column kinds are not part of the published layout, so they are inferred:
// binned or date/time-named columns are temporal; columns that are summed,
// averaged, min/maxed or compared numerically are numeric.
class KindEvidence {
 public:
  void observe(const std::string& scope, const vega_zero::VegaZeroAST& ast) {
    using vega_zero::AggFunction;
    if (ast.bin) temporal_.insert(scope + "/" + ast.x);
    if (ast.y_agg == AggFunction::sum || ast.y_agg == AggFunction::avg ||
        ast.y_agg == AggFunction::max || ast.y_agg == AggFunction::min)
      numeric_.insert(scope + "/" + ast.y);
    if (ast.filter)
      for (const auto& p : ast.filter->predicates) {
        using vega_zero::CompareOp;
        const bool ordered = p.op == CompareOp::lt || p.op == CompareOp::gt || p.op == CompareOp::le ||
                             p.op == CompareOp::ge || p.op == CompareOp::between;
        if ((ordered || p.op == CompareOp::eq || p.op == CompareOp::ne) && numeric_literal(p.value))
          numeric_.insert(scope + "/" + p.column);
      }
  }

  vega_zero::ColumnKind kind(const std::string& scope, const std::string& column) const {
    const std::string key = scope + "/" + column;
    if (temporal_.contains(key)) return vega_zero::ColumnKind::temporal;
    for (const auto& part : split_cell(column, '_'))
      if (part == "date" || part == "time" || part == "datetime" || part == "timestamp")
        return vega_zero::ColumnKind::temporal;
    if (numeric_.contains(key)) return vega_zero::ColumnKind::numeric;
    return vega_zero::ColumnKind::categorical;
  }

 private:
  std::set<std::string> temporal_, numeric_;
};

inline std::filesystem::path find_split_file(const std::filesystem::path& dir, Split split) {
  static const std::map<Split, std::vector<std::string>> names = {
      {Split::train, {"train.csv"}},
      {Split::validation, {"dev.csv", "valid.csv", "validation.csv"}},
      {Split::test, {"test.csv"}}};
  for (const auto& base : {dir, dir / "dataset_final"})
    for (const auto& n : names.at(split))
      if (std::filesystem::is_regular_file(base / n)) return base / n;
  return {};
}

}  // namespace detail

/// Converts the published nvBench/ncNet CSV release (train/dev/test files with
/// tvBench_id, db_id, hardness, query, question, labels, source columns) into
/// pairs. Rows that differ only in whether the chart type is filled in
/// collapse into one pair; multi-table queries are rejected with a reason.
inline NvBenchImport import_nvbench(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<std::pair<Split, std::filesystem::path>> files;
  for (auto s : {Split::train, Split::validation, Split::test}) {
    auto f = detail::find_split_file(dir, s);
    if (f.empty())
      throw IoError("nvBench directory '" + dir.string() + "' lacks a " + std::string(to_string(s)) +
                    " CSV file");
    files.emplace_back(s, f);
  }

  NvBenchImport out;
  std::vector<detail::RawRow> rows;
  std::map<Split, NvBenchSplitStats> stats;
  std::set<std::string> seen;
  std::size_t record = 0;
  auto reject = [&](Split s, std::size_t rec, std::string reason) {
    out.rejects.push_back({rec, std::move(reason)});
    ++stats[s].rejects;
  };

  detail::KindEvidence evidence;
  for (const auto& [split, path] : files) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    const CsvTable csv = read_csv(in);
    for (const char* col : {"tvBench_id", "question", "labels", "source"})
      if (std::find(csv.header.begin(), csv.header.end(), col) == csv.header.end())
        throw IoError("'" + path.string() + "' has no '" + col + "' column");
    stats[split].split = split;
    for (const auto& row : csv.rows) {
      ++record;
      ++stats[split].rows;
      detail::RawRow r;
      r.record = record;
      r.split = split;
      r.vis_id = row.at("tvBench_id");
      r.db = row.has("db_id") ? row.at("db_id") : std::string();
      r.nl = row.at("question");
      r.label = row.at("labels");
      r.hardness = row.has("hardness") ? row.at("hardness") : std::string();
      const std::string key = std::string(to_string(split)) + "\x1f" + r.vis_id + "\x1f" + r.nl;
      if (!seen.insert(key).second) continue;  // the other chart variant of a kept question
      if (row.has("query") && detail::has_word(row.at("query"), "join")) {
        reject(split, record, "multi-table query");
        continue;
      }
      const auto src = detail::split_words(row.at("source"));
      r.columns = detail::source_section(src, "<COL>", "</COL>");
      r.values = detail::source_section(src, "<VAL>", "</VAL>");
      const auto data = detail::source_section(src, "<D>", "<COL>");
      if (r.columns.empty() || data.empty()) {
        reject(split, record, "source lacks a table or column section");
        continue;
      }
      r.table = data.front();
      try {
        evidence.observe(r.db + "/" + r.table, vega_zero::parse(r.label));
      } catch (const std::exception& e) {
        reject(split, record, std::string("label does not parse: ") + e.what());
        continue;
      }
      r.id = "nvb-" + r.vis_id + "-" + std::to_string(record);
      rows.push_back(std::move(r));
    }
  }

  std::map<Split, std::set<std::string>> vis;
  for (const auto& r : rows) {
    vega_zero::TableSchema t;
    t.name = vega_zero::to_lower(r.table);
    for (const auto& c : r.columns) {
      if (t.find_column(c)) continue;
      t.columns.push_back({vega_zero::to_lower(c), evidence.kind(r.db + "/" + r.table, c)});
    }
    t.sample_values = r.values;
    try {
      out.pairs.push_back(detail::make_pair(r.id, r.nl, r.label, r.table, vega_zero::DatabaseSchema{{t}},
                                            r.hardness, std::string(to_string(r.split))));
      ++stats[r.split].pairs;
      vis[r.split].insert(r.vis_id);
    } catch (const std::exception& e) {
      reject(r.split, r.record, e.what());
    }
  }
  for (auto s : {Split::train, Split::validation, Split::test}) {
    stats[s].vis_queries = vis[s].size();
    out.splits.push_back(stats[s]);
  }
  return out;
}

}  // namespace nl2vis::dataset
