#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "nl2vis/error.hpp"
#include "nl2vis/vega_zero/ast.hpp"
#include "nl2vis/vega_zero/lexer.hpp"
#include "nl2vis/vega_zero/parser.hpp"

namespace nl2vis::vega_zero {

inline void append_filter_tokens(const FilterExpr& filter, TokenSeq& out) {
  for (std::size_t i = 0; i < filter.predicates.size(); ++i) {
    if (i) out.emplace_back(to_string(filter.connectives[i - 1]));
    const Predicate& p = filter.predicates[i];
    out.push_back(p.column);
    out.emplace_back(to_string(p.op));
    out.push_back(p.value);
    if (p.op == CompareOp::between) {
      out.emplace_back("and");
      out.push_back(p.upper);
    }
  }
}

/// Canonical token order: mark, data, encoding x, y aggregate, color, then
/// transform sub-clauses as filter, group, sort, bin, topk.
inline TokenSeq serialize_tokens(const VegaZeroAST& ast) {
  TokenSeq out;
  out.emplace_back("mark");
  out.emplace_back(ast.mark ? std::string(to_string(*ast.mark)) : std::string("[T]"));
  out.emplace_back("data");
  out.push_back(ast.data);
  out.emplace_back("encoding");
  out.emplace_back("x");
  out.push_back(ast.x);
  out.emplace_back("y");
  out.emplace_back("aggregate");
  out.emplace_back(to_string(ast.y_agg));
  out.push_back(ast.y);
  if (ast.color) {
    out.emplace_back("color");
    out.push_back(*ast.color);
  }
  if (!ast.has_transform()) return out;

  out.emplace_back("transform");
  if (ast.filter) {
    out.emplace_back("filter");
    append_filter_tokens(*ast.filter, out);
  }
  if (ast.group) {
    out.emplace_back("group");
    out.push_back(*ast.group);
  }
  if (ast.sort) {
    out.emplace_back("sort");
    out.emplace_back(to_string(ast.sort->axis));
    out.emplace_back(to_string(ast.sort->direction));
  }
  if (ast.bin) {
    out.emplace_back("bin");
    out.emplace_back("x");
    out.emplace_back("by");
    out.emplace_back(to_string(ast.bin->interval));
  }
  if (ast.topk) {
    out.emplace_back("topk");
    out.push_back(std::to_string(*ast.topk));
  }
  return out;
}

inline std::string serialize(const VegaZeroAST& ast) { return join(serialize_tokens(ast)); }

inline std::string serialize(const FilterExpr& filter) {
  TokenSeq out;
  append_filter_tokens(filter, out);
  return join(out);
}

/// serialize(parse(text)); nullopt when the text does not parse.
inline std::optional<std::string> try_normalize(std::string_view text) {
  try {
    return serialize(parse(tokenize(text)));
  } catch (const Error&) {
    return std::nullopt;
  }
}

/// Canonical form used for exact-match comparison. Text that does not parse
/// falls back to its whitespace-collapsed form.
inline std::string normalize(std::string_view text) {
  if (auto canonical = try_normalize(text)) return *canonical;
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

}  // namespace nl2vis::vega_zero
