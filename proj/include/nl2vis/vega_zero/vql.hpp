#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "nl2vis/error.hpp"
#include "nl2vis/vega_zero/ast.hpp"
#include "nl2vis/vega_zero/lexer.hpp"
#include "nl2vis/vega_zero/parser.hpp"

namespace nl2vis::vega_zero {

namespace detail {

struct SqlToken {
  enum class Kind { word, number, string, punct, op } kind;
  std::string text;   // original spelling
  std::string upper;  // uppercased for keyword tests; empty for strings
};

inline std::vector<SqlToken> sql_lex(std::string_view s) {
  std::vector<SqlToken> out;
  std::size_t i = 0;
  auto upper = [](std::string_view w) {
    std::string u(w);
    for (auto& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return u;
  };
  while (i < s.size()) {
    const char c = s[i];
    if (is_space(c)) {
      ++i;
    } else if (is_quote(c)) {
      const std::size_t close = s.find(c, i + 1);
      if (close == std::string_view::npos) throw LexError("unterminated quote", i);
      out.push_back({SqlToken::Kind::string, std::string(s.substr(i, close - i + 1)), {}});
      i = close + 1;
    } else if (c == '(' || c == ')' || c == ',' || c == '*') {
      out.push_back({SqlToken::Kind::punct, std::string(1, c), std::string(1, c)});
      ++i;
    } else if (c == '!' || c == '<' || c == '>' || c == '=') {
      std::string op(1, c);
      if (i + 1 < s.size() && (s[i + 1] == '=' || (c == '<' && s[i + 1] == '>'))) op += s[i + 1];
      if (op == "!") throw LexError("stray '!'", i);
      i += op.size();
      if (op == "<>") op = "!=";
      out.push_back({SqlToken::Kind::op, op, op});
    } else {
      const std::size_t start = i;
      while (i < s.size() && !is_space(s[i]) && std::string_view("(),!<>='\"").find(s[i]) == std::string_view::npos) ++i;
      const std::string_view w = s.substr(start, i - start);
      const bool numeric = std::isdigit(static_cast<unsigned char>(w.front())) || w.front() == '-';
      out.push_back({numeric ? SqlToken::Kind::number : SqlToken::Kind::word, std::string(w),
                     upper(w)});
    }
  }
  return out;
}

class VqlReader {
 public:
  explicit VqlReader(std::vector<SqlToken> tokens) : t_(std::move(tokens)) {}

  VegaZeroAST read() {
    VegaZeroAST ast;
    expect_word("VISUALIZE");
    std::string type;
    while (!at_end() && peek_upper() != "SELECT") type += (type.empty() ? "" : " ") + t_[pos_++].upper;
    ast.mark = chart_from_vql(type);

    expect_word("SELECT");
    SelectItem first = select_item();
    expect_punct(",");
    SelectItem second = select_item();
    std::optional<SelectItem> third;
    if (peek_text() == ",") {
      ++pos_;
      third = select_item();
    }
    if (first.agg != AggFunction::none)
      throw UnsupportedConstruct("aggregate on the x column is not supported");
    ast.x = first.column;
    ast.y_agg = second.agg;
    ast.y = second.column == "*" ? ast.x : second.column;
    if (third) ast.color = third->column;

    expect_word("FROM");
    if (at_end() || t_[pos_].kind != SqlToken::Kind::word)
      throw UnsupportedConstruct("FROM must name a single table");
    ast.data = to_lower(t_[pos_++].text);
    if (peek_text() == "," || peek_upper() == "JOIN" || peek_upper() == "AS" ||
        (peek_upper() != "" && !is_clause_start()))
      throw UnsupportedConstruct("multi-table FROM is not supported");

    while (!at_end()) {
      const std::string kw = peek_upper();
      if (kw == "WHERE") {
        ++pos_;
        ast.filter = where_clause();
      } else if (kw == "GROUP") {
        ++pos_;
        expect_word("BY");
        const std::string col = column_name();
        ast.group = col == ast.x ? std::string("x") : col == ast.y ? std::string("y") : col;
      } else if (kw == "ORDER") {
        ++pos_;
        expect_word("BY");
        SortClause sort;
        sort.axis = order_axis(ast);
        if (peek_upper() == "ASC" || peek_upper() == "DESC") {
          sort.direction = peek_upper() == "ASC" ? SortDirection::asc : SortDirection::desc;
          ++pos_;
        }
        ast.sort = sort;
      } else if (kw == "BIN") {
        ++pos_;
        if (peek_upper() != "BY") column_name();
        expect_word("BY");
        const std::string interval = to_lower(next().text);
        const auto iv = bin_interval_from(interval);
        if (!iv) throw ParseError("bin", "unknown bin interval '" + interval + "'");
        ast.bin = BinClause{*iv};
      } else if (kw == "LIMIT") {
        ++pos_;
        const SqlToken& k = next();
        try {
          ast.topk = std::stoi(k.text);
        } catch (const std::exception&) {
          throw ParseError("topk", "LIMIT needs an integer");
        }
        if (*ast.topk <= 0) throw ParseError("topk", "LIMIT must be positive");
      } else {
        throw UnsupportedConstruct("unsupported VQL construct '" + t_[pos_].text + "'");
      }
    }
    return ast;
  }

 private:
  struct SelectItem {
    AggFunction agg = AggFunction::none;
    std::string column;
  };

  bool at_end() const { return pos_ >= t_.size(); }
  std::string peek_upper() const { return at_end() ? std::string() : t_[pos_].upper; }
  std::string peek_text() const { return at_end() ? std::string() : t_[pos_].text; }

  bool is_clause_start() const {
    const std::string u = peek_upper();
    return u == "WHERE" || u == "GROUP" || u == "ORDER" || u == "BIN" || u == "LIMIT";
  }

  const SqlToken& next() {
    if (at_end()) throw ParseError("vql", "unexpected end of query");
    return t_[pos_++];
  }

  void expect_word(std::string_view w) {
    if (peek_upper() != w) throw ParseError("vql", "expected " + std::string(w));
    ++pos_;
  }

  void expect_punct(std::string_view p) {
    if (peek_text() != p) throw ParseError("vql", "expected '" + std::string(p) + "'");
    ++pos_;
  }

  std::string column_name() {
    const SqlToken& tok = next();
    if (tok.kind != SqlToken::Kind::word && tok.text != "*")
      throw ParseError("vql", "expected column, found '" + tok.text + "'");
    if (tok.text.find('.') != std::string::npos)
      throw UnsupportedConstruct("qualified column '" + tok.text + "' implies a join");
    return to_lower(tok.text);
  }

  SelectItem select_item() {
    SelectItem item;
    if (pos_ + 1 < t_.size() && t_[pos_ + 1].text == "(") {
      const auto agg = agg_function_from(to_lower(t_[pos_].text));
      if (!agg || *agg == AggFunction::none)
        throw UnsupportedConstruct("unsupported function '" + t_[pos_].text + "'");
      item.agg = *agg;
      pos_ += 2;
      if (peek_upper() == "DISTINCT") throw UnsupportedConstruct("DISTINCT is not supported");
      item.column = column_name();
      expect_punct(")");
    } else {
      item.column = column_name();
    }
    return item;
  }

  static ChartType chart_from_vql(const std::string& type) {
    if (type == "BAR" || type == "STACKED BAR") return ChartType::bar;
    if (type == "PIE") return ChartType::arc;
    if (type == "LINE" || type == "GROUPING LINE") return ChartType::line;
    if (type == "SCATTER" || type == "GROUPING SCATTER") return ChartType::point;
    throw ParseError("mark", "unknown VQL chart type '" + type + "'");
  }

  Axis order_axis(const VegaZeroAST& ast) {
    SelectItem item = select_item();
    if (item.agg == AggFunction::none && item.column == ast.x) return Axis::x;
    if (item.column == ast.y || (item.column == "*" && item.agg == ast.y_agg)) return Axis::y;
    if (item.agg == AggFunction::none && (item.column == "x" || item.column == "y"))
      return item.column == "x" ? Axis::x : Axis::y;
    throw UnsupportedConstruct("ORDER BY must reference the x or y expression");
  }

  FilterExpr where_clause() {
    TokenSeq tokens;
    while (!at_end() && !is_clause_start()) {
      const SqlToken& tok = t_[pos_++];
      if (tok.upper == "SELECT") throw UnsupportedConstruct("nested subqueries are not supported");
      switch (tok.kind) {
        case SqlToken::Kind::string: tokens.push_back(tok.text); break;
        case SqlToken::Kind::op: tokens.push_back(tok.text); break;
        default: tokens.push_back(to_lower(tok.text));
      }
    }
    if (tokens.empty()) throw ParseError("filter", "empty WHERE clause");
    try {
      return parse_filter(tokens);
    } catch (const ParseError& e) {
      throw UnsupportedConstruct(std::string("unsupported WHERE predicate: ") + e.what());
    }
  }

  std::vector<SqlToken> t_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Translates a single-table VQL query
/// (`Visualize <TYPE> SELECT x , AGG(y) FROM t [WHERE ...] [GROUP BY ...]
///  [ORDER BY ... ASC|DESC] [BIN x BY interval] [LIMIT k]`) into vega-zero.
inline VegaZeroAST from_vql(std::string_view vql) {
  return detail::VqlReader(detail::sql_lex(vql)).read();
}

}  // namespace nl2vis::vega_zero
