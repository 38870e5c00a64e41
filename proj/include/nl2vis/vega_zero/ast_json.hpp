#pragma once

#include <nlohmann/json.hpp>

#include "nl2vis/error.hpp"
#include "nl2vis/vega_zero/ast.hpp"

namespace nl2vis::vega_zero {

// Stable JSON shape for tooling. Absent optional clauses are omitted; the
// placeholder mark is null.

inline nlohmann::json to_json(const FilterExpr& f) {
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& p : f.predicates) {
    nlohmann::json jp = {{"column", p.column}, {"op", to_string(p.op)}, {"value", p.value}};
    if (p.op == CompareOp::between) jp["upper"] = p.upper;
    preds.push_back(std::move(jp));
  }
  nlohmann::json conns = nlohmann::json::array();
  for (auto c : f.connectives) conns.push_back(to_string(c));
  return {{"predicates", preds}, {"connectives", conns}};
}

inline nlohmann::json to_json(const VegaZeroAST& ast) {
  nlohmann::json j;
  j["mark"] = ast.mark ? nlohmann::json(to_string(*ast.mark)) : nlohmann::json(nullptr);
  j["data"] = ast.data;
  j["x"] = ast.x;
  j["y_agg"] = to_string(ast.y_agg);
  j["y"] = ast.y;
  if (ast.color) j["color"] = *ast.color;
  if (ast.filter) j["filter"] = to_json(*ast.filter);
  if (ast.group) j["group"] = *ast.group;
  if (ast.sort)
    j["sort"] = {{"axis", to_string(ast.sort->axis)},
                 {"direction", to_string(ast.sort->direction)}};
  if (ast.bin) j["bin"] = {{"axis", "x"}, {"interval", to_string(ast.bin->interval)}};
  if (ast.topk) j["topk"] = *ast.topk;
  return j;
}

namespace detail {

template <typename T>
T required_enum(const std::optional<T>& v, const std::string& field) {
  if (!v) throw Error("invalid value for AST field '" + field + "'");
  return *v;
}

}  // namespace detail

inline FilterExpr filter_from_json(const nlohmann::json& j) {
  FilterExpr f;
  for (const auto& jp : j.at("predicates")) {
    Predicate p;
    p.column = jp.at("column").get<std::string>();
    p.op = detail::required_enum(compare_op_from(jp.at("op").get<std::string>()), "op");
    p.value = jp.at("value").get<std::string>();
    if (p.op == CompareOp::between) p.upper = jp.at("upper").get<std::string>();
    f.predicates.push_back(std::move(p));
  }
  for (const auto& jc : j.at("connectives"))
    f.connectives.push_back(
        detail::required_enum(connective_from(jc.get<std::string>()), "connectives"));
  if (f.predicates.empty() || f.connectives.size() + 1 != f.predicates.size())
    throw Error("filter needs one connective between each pair of predicates");
  return f;
}

inline VegaZeroAST ast_from_json(const nlohmann::json& j) {
  VegaZeroAST ast;
  if (!j.at("mark").is_null())
    ast.mark = detail::required_enum(chart_type_from(j.at("mark").get<std::string>()), "mark");
  ast.data = j.at("data").get<std::string>();
  ast.x = j.at("x").get<std::string>();
  ast.y_agg = detail::required_enum(agg_function_from(j.at("y_agg").get<std::string>()), "y_agg");
  ast.y = j.at("y").get<std::string>();
  if (j.contains("color")) ast.color = j.at("color").get<std::string>();
  if (j.contains("filter")) ast.filter = filter_from_json(j.at("filter"));
  if (j.contains("group")) ast.group = j.at("group").get<std::string>();
  if (j.contains("sort")) {
    const auto& s = j.at("sort");
    ast.sort = SortClause{
        detail::required_enum(axis_from(s.at("axis").get<std::string>()), "sort.axis"),
        detail::required_enum(direction_from(s.at("direction").get<std::string>()),
                              "sort.direction")};
  }
  if (j.contains("bin"))
    ast.bin = BinClause{detail::required_enum(
        bin_interval_from(j.at("bin").at("interval").get<std::string>()), "bin.interval")};
  if (j.contains("topk")) ast.topk = j.at("topk").get<int>();
  return ast;
}

}  // namespace nl2vis::vega_zero
