#pragma once

#include <charconv>
#include <string>
#include <string_view>

#include "nl2vis/error.hpp"
#include "nl2vis/vega_zero/ast.hpp"
#include "nl2vis/vega_zero/lexer.hpp"

namespace nl2vis::vega_zero {

namespace detail {

class Parser {
 public:
  explicit Parser(const TokenSeq& tokens) : tokens_(tokens) {}

  VegaZeroAST parse() {
    VegaZeroAST ast;
    expect("mark", "mark");
    const std::string& chart = next("mark", "chart type");
    if (chart != "[T]") {
      ast.mark = chart_type_from(chart);
      if (!ast.mark) throw ParseError("mark", "unknown chart type '" + chart + "'");
    }

    expect("data", "data");
    ast.data = next("data", "table name");

    expect("encoding", "encoding");
    expect("x", "x");
    ast.x = next("x", "column");
    expect("y", "y");
    expect("y", "aggregate");
    const std::string& agg = next("y", "aggregate function");
    const auto fn = agg_function_from(agg);
    if (!fn) throw ParseError("y", "unknown aggregate function '" + agg + "'");
    ast.y_agg = *fn;
    ast.y = next("y", "column");

    if (peek() == "color") {
      ++pos_;
      ast.color = next("color", "column");
    }
    if (at_end()) return ast;

    if (peek() != "transform")
      throw ParseError("encoding", "unexpected token '" + std::string(peek()) + "'");
    ++pos_;
    if (at_end()) throw ParseError("transform", "transform without clauses");
    while (!at_end()) parse_transform_clause(ast);
    return ast;
  }

  FilterExpr parse_filter_only() {
    FilterExpr f = parse_filter();
    if (!at_end())
      throw ParseError("filter", "unexpected token '" + std::string(peek()) + "'");
    return f;
  }

 private:
  bool at_end() const { return pos_ >= tokens_.size(); }

  std::string_view peek() const {
    return at_end() ? std::string_view{} : std::string_view(tokens_[pos_]);
  }

  const std::string& next(const char* clause, const char* what) {
    if (at_end())
      throw ParseError(clause, std::string("expected ") + what + ", found end of input");
    return tokens_[pos_++];
  }

  void expect(const char* clause, std::string_view keyword) {
    if (at_end())
      throw ParseError(clause, "missing clause: expected '" + std::string(keyword) + "'");
    if (tokens_[pos_] != keyword)
      throw ParseError(clause, "expected '" + std::string(keyword) + "', found '" +
                                   tokens_[pos_] + "'");
    ++pos_;
  }

  template <typename T>
  static void set_once(std::optional<T>& slot, T value, const char* clause) {
    if (slot) throw ParseError(clause, "duplicate clause");
    slot = std::move(value);
  }

  void parse_transform_clause(VegaZeroAST& ast) {
    const std::string keyword = tokens_[pos_++];
    if (keyword == "filter") {
      set_once(ast.filter, parse_filter(), "filter");
    } else if (keyword == "group") {
      set_once(ast.group, next("group", "axis or column"), "group");
    } else if (keyword == "sort") {
      const std::string& axis_tok = next("sort", "axis");
      const auto axis = axis_from(axis_tok);
      if (!axis) throw ParseError("sort", "sort axis must be x or y, found '" + axis_tok + "'");
      const std::string& dir_tok = next("sort", "direction");
      const auto dir = direction_from(dir_tok);
      if (!dir) throw ParseError("sort", "unknown sort direction '" + dir_tok + "'");
      set_once(ast.sort, SortClause{*axis, *dir}, "sort");
    } else if (keyword == "bin") {
      expect("bin", "x");
      expect("bin", "by");
      const std::string& tok = next("bin", "interval");
      const auto interval = bin_interval_from(tok);
      if (!interval) throw ParseError("bin", "unknown bin interval '" + tok + "'");
      set_once(ast.bin, BinClause{*interval}, "bin");
    } else if (keyword == "topk") {
      const std::string& tok = next("topk", "count");
      int k = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), k);
      if (ec != std::errc{} || ptr != tok.data() + tok.size() || k <= 0)
        throw ParseError("topk", "expected positive integer, found '" + tok + "'");
      set_once(ast.topk, k, "topk");
    } else {
      throw ParseError("transform", "unknown clause keyword '" + keyword + "'");
    }
  }

  Predicate parse_predicate() {
    Predicate p;
    if (at_end() || is_transform_keyword(peek()))
      throw ParseError("filter", "expected column");
    p.column = tokens_[pos_++];
    const std::string& op_tok = next("filter", "operator");
    const auto op = compare_op_from(op_tok);
    if (!op) throw ParseError("filter", "unknown operator '" + op_tok + "'");
    p.op = *op;
    p.value = next("filter", "value");
    if (p.op == CompareOp::between) {
      expect("filter", "and");
      p.upper = next("filter", "upper bound");
    }
    return p;
  }

  FilterExpr parse_filter() {
    FilterExpr f;
    f.predicates.push_back(parse_predicate());
    while (!at_end()) {
      const auto conj = connective_from(peek());
      if (!conj) break;
      ++pos_;
      f.connectives.push_back(*conj);
      f.predicates.push_back(parse_predicate());
    }
    return f;
  }

  const TokenSeq& tokens_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses one complete vega-zero query. Transform sub-clauses may come in any
/// order but each at most once.
inline VegaZeroAST parse(const TokenSeq& tokens) { return detail::Parser(tokens).parse(); }

inline VegaZeroAST parse(std::string_view text) { return parse(tokenize(text)); }

/// Parses a bare filter predicate list, e.g. the body of a SQL WHERE clause.
inline FilterExpr parse_filter(const TokenSeq& tokens) {
  return detail::Parser(tokens).parse_filter_only();
}

}  // namespace nl2vis::vega_zero
