#pragma once

#include <string>
#include <vector>

#include "nl2vis/vega_zero/ast.hpp"
#include "nl2vis/vega_zero/schema.hpp"

namespace nl2vis::vega_zero {

enum class Severity { warning, error };

struct ValidationIssue {
  Severity severity = Severity::error;
  std::string clause;
  std::string message;

  bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;

  std::size_t error_count() const {
    std::size_t n = 0;
    for (const auto& i : issues) n += i.severity == Severity::error;
    return n;
  }

  bool operator==(const ValidationReport&) const = default;
};

/// Checks an AST against a schema. Issues are reported in clause order, so the
/// report is a pure function of its inputs.
inline ValidationReport validate(const VegaZeroAST& ast, const DatabaseSchema& schema) {
  ValidationReport report;
  auto add = [&](Severity severity, std::string clause, std::string message) {
    report.issues.push_back({severity, std::move(clause), std::move(message)});
  };

  const TableSchema* table = schema.find_table(ast.data);
  if (!table) {
    add(Severity::error, "data", "unknown table '" + ast.data + "'");
  } else {
    auto check_column = [&](const std::string& column, const char* clause) {
      if (!table->find_column(column))
        add(Severity::error, clause,
            "unknown column '" + column + "' in table '" + table->name + "'");
    };
    check_column(ast.x, "x");
    check_column(ast.y, "y");
    if (ast.color) check_column(*ast.color, "color");
    if (ast.group && *ast.group != "x" && *ast.group != "y") check_column(*ast.group, "group");
    if (ast.filter)
      for (const auto& p : ast.filter->predicates) check_column(p.column, "filter");

    if (ast.bin) {
      const ColumnSchema* x = table->find_column(ast.x);
      if (x && x->kind != ColumnKind::temporal)
        add(Severity::error, "bin", "bin on non-temporal column '" + ast.x + "'");
    }
    if (ast.y_agg == AggFunction::sum || ast.y_agg == AggFunction::avg) {
      const ColumnSchema* y = table->find_column(ast.y);
      if (y && y->kind != ColumnKind::numeric)
        add(Severity::warning, "y",
            std::string(to_string(ast.y_agg)) + " over non-numeric column '" + ast.y + "'");
    }
  }
  report.ok = report.error_count() == 0;
  return report;
}

}  // namespace nl2vis::vega_zero
