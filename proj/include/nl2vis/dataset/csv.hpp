#pragma once

#include <istream>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "nl2vis/error.hpp"

namespace nl2vis::dataset {

/// A CSV record addressed by header name.
class CsvRow {
 public:
  CsvRow(std::shared_ptr<const std::unordered_map<std::string, std::size_t>> index,
         std::vector<std::string> cells)
      : index_(std::move(index)), cells_(std::move(cells)) {}

  bool has(const std::string& column) const {
    const auto it = index_->find(column);
    return it != index_->end() && it->second < cells_.size();
  }

  const std::string& at(const std::string& column) const {
    const auto it = index_->find(column);
    if (it == index_->end()) throw Error("missing CSV column '" + column + "'");
    if (it->second >= cells_.size()) throw Error("short CSV row, no '" + column + "'");
    return cells_[it->second];
  }

  const std::vector<std::string>& cells() const { return cells_; }

 private:
  std::shared_ptr<const std::unordered_map<std::string, std::size_t>> index_;
  std::vector<std::string> cells_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
};

namespace detail {

// RFC 4180: quoted fields may contain separators, doubled quotes and newlines.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& cells) {
  cells.clear();
  std::string cell;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          cell += '"';
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n') {
      cells.push_back(std::move(cell));
      return true;
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (in_quotes) throw Error("unterminated quoted CSV field");
  if (!any) return false;
  cells.push_back(std::move(cell));
  return true;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::string> cells;
  if (!detail::read_csv_record(in, cells)) return table;
  auto index = std::make_shared<std::unordered_map<std::string, std::size_t>>();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::string name = cells[i];
    if (i == 0 && name.rfind("\xEF\xBB\xBF", 0) == 0) name.erase(0, 3);
    (*index)[name] = i;
    table.header.push_back(name);
  }
  while (detail::read_csv_record(in, cells)) {
    if (cells.size() == 1 && cells[0].empty()) continue;
    table.rows.emplace_back(index, cells);
  }
  return table;
}

/// Splits a cell on `sep`, trimming blanks and dropping empty pieces.
inline std::vector<std::string> split_cell(const std::string& cell, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= cell.size()) {
    std::size_t end = cell.find(sep, start);
    if (end == std::string::npos) end = cell.size();
    std::string piece = cell.substr(start, end - start);
    const auto b = piece.find_first_not_of(" \t");
    const auto e = piece.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(piece.substr(b, e - b + 1));
    start = end + 1;
  }
  return out;
}

}  // namespace nl2vis::dataset
