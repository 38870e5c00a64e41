#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

#include "nl2vis/error.hpp"
#include "nl2vis/vega_zero/ast.hpp"
#include "nl2vis/vega_zero/lexer.hpp"
#include "nl2vis/vega_zero/schema.hpp"

namespace nl2vis::vega_zero {

inline constexpr std::string_view kVegaLiteSchemaUrl =
    "https://vega.github.io/schema/vega-lite/v5.json";

/// Where the compiled chart reads its rows from: a URL or inline row objects.
struct DataRef {
  std::variant<std::string, nlohmann::json> source;

  static DataRef url(std::string u) { return DataRef{std::move(u)}; }
  static DataRef rows(nlohmann::json values) { return DataRef{std::move(values)}; }
};

namespace detail {

inline std::string_view time_unit(BinInterval interval) {
  switch (interval) {
    case BinInterval::month: return "month";
    case BinInterval::weekday: return "day";
    case BinInterval::year: return "year";
    case BinInterval::day: return "date";
    case BinInterval::quarter: return "quarter";
  }
  return "month";
}

inline std::string_view aggregate_op(AggFunction fn) {
  switch (fn) {
    case AggFunction::avg: return "mean";
    default: return to_string(fn);
  }
}

inline bool is_number(std::string_view s) {
  if (s.empty()) return false;
  double d = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

inline std::string field_ref(const std::string& column) {
  return "datum[" + nlohmann::json(column).dump() + "]";
}

inline std::string unquote(std::string_view tok) {
  if (tok.size() >= 2 && is_quote(tok.front()) && tok.back() == tok.front())
    return std::string(tok.substr(1, tok.size() - 2));
  return std::string(tok);
}

/// Vega expression literal for a filter operand.
inline std::string value_literal(const std::string& tok) {
  const bool quoted = !tok.empty() && is_quote(tok.front());
  const std::string text = unquote(tok);
  if (quoted && to_lower(text) == "null") return "null";
  if (!quoted && is_number(text)) return text;
  return nlohmann::json(text).dump();
}

/// SQL LIKE pattern as an anchored regular expression.
inline std::string like_regex(const std::string& pattern) {
  std::string re = "^";
  for (char c : unquote(pattern)) {
    switch (c) {
      case '%': re += ".*"; break;
      case '_': re += '.'; break;
      case '.': case '*': case '+': case '?': case '(': case ')': case '[': case ']':
      case '{': case '}': case '^': case '$': case '|': case '\\':
        re += '\\';
        re += c;
        break;
      default: re += c;
    }
  }
  return re + "$";
}

inline std::string predicate_expression(const Predicate& p) {
  const std::string field = field_ref(p.column);
  switch (p.op) {
    case CompareOp::eq: return field + " == " + value_literal(p.value);
    case CompareOp::ne: return field + " != " + value_literal(p.value);
    case CompareOp::lt: return field + " < " + value_literal(p.value);
    case CompareOp::gt: return field + " > " + value_literal(p.value);
    case CompareOp::le: return field + " <= " + value_literal(p.value);
    case CompareOp::ge: return field + " >= " + value_literal(p.value);
    case CompareOp::like:
      return "test(regexp(" + nlohmann::json(like_regex(p.value)).dump() + ", \"i\"), " +
             field + ")";
    case CompareOp::between:
      return "(" + field + " >= " + value_literal(p.value) + " && " + field +
             " <= " + value_literal(p.upper) + ")";
  }
  return "true";
}

}  // namespace detail

/// Vega expression for a flat filter. Connectives bind left to right with
/// equal precedence, so every step is parenthesised explicitly.
inline std::string filter_expression(const FilterExpr& filter) {
  std::string expr = detail::predicate_expression(filter.predicates.front());
  for (std::size_t i = 1; i < filter.predicates.size(); ++i) {
    const char* op = filter.connectives[i - 1] == Connective::and_ ? " && " : " || ";
    expr = "(" + expr + op + detail::predicate_expression(filter.predicates[i]) + ")";
  }
  return expr;
}

/// Compiles a vega-zero query into a Vega-Lite v5 document. `table`, when
/// given, refines field types from the column kinds.
inline nlohmann::json compile_to_vegalite(const VegaZeroAST& ast, const DataRef& data,
                                          const TableSchema* table = nullptr) {
  using nlohmann::json;
  if (!ast.mark) throw CompileError("chart type unresolved");
  const ChartType mark = *ast.mark;

  auto kind_of = [&](const std::string& column) -> std::optional<ColumnKind> {
    if (!table) return std::nullopt;
    if (const ColumnSchema* c = table->find_column(column)) return c->kind;
    return std::nullopt;
  };

  json doc;
  doc["$schema"] = kVegaLiteSchemaUrl;
  if (const auto* url = std::get_if<std::string>(&data.source)) {
    doc["data"] = {{"url", *url}};
  } else {
    doc["data"] = {{"values", std::get<json>(data.source)}};
  }
  doc["mark"] = to_string(mark);

  json transforms = json::array();
  if (ast.filter) transforms.push_back({{"filter", filter_expression(*ast.filter)}});

  std::string x_field = ast.x;
  std::string y_field = ast.y;
  bool y_aggregated_in_encoding = ast.y_agg != AggFunction::none;
  bool x_unit_in_encoding = ast.bin.has_value();

  if (ast.topk) {
    // Rank after aggregation: aggregate and bin explicitly, then window.
    if (ast.bin) {
      x_field = ast.x + "_" + std::string(detail::time_unit(ast.bin->interval));
      transforms.push_back({{"timeUnit", detail::time_unit(ast.bin->interval)},
                            {"field", ast.x},
                            {"as", x_field}});
      x_unit_in_encoding = false;
    }
    if (ast.y_agg != AggFunction::none) {
      y_field = std::string(to_string(ast.y_agg)) + "_" + ast.y;
      json groupby = json::array({x_field});
      if (ast.color) groupby.push_back(*ast.color);
      json op = {{"op", detail::aggregate_op(ast.y_agg)}, {"as", y_field}};
      if (ast.y_agg != AggFunction::count) op["field"] = ast.y;
      transforms.push_back({{"aggregate", json::array({op})}, {"groupby", groupby}});
      y_aggregated_in_encoding = false;
    }
    std::string rank_field = y_field;
    std::string order = "descending";
    if (ast.sort) {
      rank_field = ast.sort->axis == Axis::x ? x_field : y_field;
      order = ast.sort->direction == SortDirection::asc ? "ascending" : "descending";
    }
    transforms.push_back({{"window", json::array({{{"op", "rank"}, {"as", "rank"}}})},
                          {"sort", json::array({{{"field", rank_field}, {"order", order}}})}});
    transforms.push_back({{"filter", "datum.rank <= " + std::to_string(*ast.topk)}});
  }

  json x_enc = {{"field", x_field}};
  if (x_unit_in_encoding) {
    x_enc["timeUnit"] = detail::time_unit(ast.bin->interval);
    x_enc["type"] = "ordinal";
  } else if (ast.bin || kind_of(ast.x) == ColumnKind::temporal) {
    x_enc["type"] = ast.bin ? "ordinal" : "temporal";
  } else if (kind_of(ast.x) == ColumnKind::numeric &&
             (mark == ChartType::point || mark == ChartType::line)) {
    x_enc["type"] = "quantitative";
  } else {
    x_enc["type"] = "nominal";
  }

  json y_enc = {{"field", y_field}, {"type", "quantitative"}};
  if (y_aggregated_in_encoding) y_enc["aggregate"] = detail::aggregate_op(ast.y_agg);

  json encoding;
  if (mark == ChartType::arc) {
    // Pie charts map the measure to theta and the category to color.
    encoding["theta"] = y_enc;
    json color = x_enc;
    color["type"] = "nominal";
    encoding["color"] = color;
    if (ast.color) encoding["detail"] = {{"field", *ast.color}, {"type", "nominal"}};
    if (ast.sort) {
      const char* dir = ast.sort->direction == SortDirection::asc ? "ascending" : "descending";
      (ast.sort->axis == Axis::x ? encoding["color"] : encoding["theta"])["sort"] = dir;
    }
  } else {
    encoding["x"] = x_enc;
    encoding["y"] = y_enc;
    if (ast.color) encoding["color"] = {{"field", *ast.color}, {"type", "nominal"}};
    if (ast.sort) {
      const char* dir = ast.sort->direction == SortDirection::asc ? "ascending" : "descending";
      encoding[std::string(to_string(ast.sort->axis))]["sort"] = dir;
    }
  }
  if (ast.group && *ast.group != "x" && *ast.group != "y" &&
      (!ast.color || *ast.group != *ast.color) && !encoding.contains("detail"))
    encoding["detail"] = {{"field", *ast.group}, {"type", "nominal"}};

  doc["encoding"] = encoding;
  if (!transforms.empty()) doc["transform"] = transforms;
  return doc;
}

}  // namespace nl2vis::vega_zero
