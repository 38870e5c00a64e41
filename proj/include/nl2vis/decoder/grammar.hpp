#pragma once

#include <algorithm>
#include <charconv>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nl2vis/vega_zero.hpp"

namespace nl2vis::decoder {

using vega_zero::TokenSeq;

inline constexpr std::string_view kEos = "<eos>";

/// Tokens allowed at one position: explicit words plus two open classes.
struct AllowedSet {
  std::vector<std::string> words;
  bool values = false;             // any value-like token
  bool positive_integers = false;  // 1, 2, ...

  bool contains(std::string_view tok) const;
  bool empty() const { return words.empty() && !values && !positive_integers; }
};

inline bool is_positive_integer(std::string_view tok) {
  if (tok.empty() || tok.front() == '0' || tok.size() > 9) return false;
  return std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; });
}

/// A token that can stand in a filter value slot and survive re-tokenisation.
inline bool is_value_token(std::string_view tok) {
  if (tok.empty() || tok == kEos || tok == "<pad>" || tok == "<unk>" || tok == "<sos>") return false;
  if (vega_zero::is_special_marker(tok)) return false;
  return vega_zero::is_lexically_stable(tok);
}

inline bool AllowedSet::contains(std::string_view tok) const {
  if (std::find(words.begin(), words.end(), tok) != words.end()) return true;
  if (positive_integers && is_positive_integer(tok)) return true;
  return values && is_value_token(tok);
}

/// Prefix automaton over the output grammar, bound to one source table.
/// Transform clauses may appear in any order, each at most once.
class GrammarState {
 public:
  GrammarState(const vega_zero::TableSchema& table, std::optional<vega_zero::ChartType> chart)
      : table_(&table), chart_(chart) {}

  /// The tokens that may come next. Never empty until after <eos>.
  AllowedSet allowed() const {
    AllowedSet a;
    auto words = [&](std::initializer_list<std::string_view> ws) {
      for (auto w : ws) a.words.emplace_back(w);
    };
    switch (pos_) {
      case Pos::mark_kw: words({"mark"}); break;
      case Pos::chart:
        if (chart_) a.words.emplace_back(vega_zero::to_string(*chart_));
        else
          for (auto c : vega_zero::kAllChartTypes) a.words.emplace_back(vega_zero::to_string(c));
        break;
      case Pos::data_kw: words({"data"}); break;
      case Pos::table: a.words.push_back(table_->name); break;
      case Pos::encoding_kw: words({"encoding"}); break;
      case Pos::x_kw: words({"x"}); break;
      case Pos::y_kw: words({"y"}); break;
      case Pos::aggregate_kw: words({"aggregate"}); break;
      case Pos::agg:
        for (auto f : vega_zero::kAllAggFunctions) a.words.emplace_back(vega_zero::to_string(f));
        break;
      case Pos::x_col:
      case Pos::y_col:
      case Pos::color_col:
      case Pos::filter_col: a.words = columns(); break;
      case Pos::after_y: words({"color", "transform", kEos}); break;
      case Pos::after_color: words({"transform", kEos}); break;
      case Pos::first_clause: a.words = open_clauses(); break;
      case Pos::group_arg:
        words({"x", "y"});
        for (auto& c : columns())
          if (c != "x" && c != "y") a.words.push_back(c);
        break;
      case Pos::sort_axis: words({"x", "y"}); break;
      case Pos::sort_dir: words({"asc", "desc"}); break;
      case Pos::bin_x: words({"x"}); break;
      case Pos::bin_by: words({"by"}); break;
      case Pos::bin_interval:
        for (auto b : vega_zero::kAllBinIntervals) a.words.emplace_back(vega_zero::to_string(b));
        break;
      case Pos::topk_k: a.positive_integers = true; break;
      case Pos::filter_op:
        for (auto op : vega_zero::kAllCompareOps) a.words.emplace_back(vega_zero::to_string(op));
        break;
      case Pos::filter_value:
      case Pos::filter_upper:
        a.values = true;
        for (const auto& v : table_->sample_values) {
          if (is_value_token(v)) a.words.push_back(v);
          const std::string quoted = "'" + v + "'";
          if (v.find('\'') == std::string::npos && is_value_token(quoted)) a.words.push_back(quoted);
        }
        break;
      case Pos::filter_and: words({"and"}); break;
      case Pos::after_predicate:
        words({"and", "or"});
        for (auto& k : open_clauses()) a.words.push_back(k);
        a.words.emplace_back(kEos);
        break;
      case Pos::after_clause:
        a.words = open_clauses();
        a.words.emplace_back(kEos);
        break;
      case Pos::done: break;
    }
    return a;
  }

  bool accepts(std::string_view tok) const { return allowed().contains(tok); }

  /// Advances on `tok`; returns false (state unchanged) if it is not allowed.
  bool advance(std::string_view tok) {
    if (!accepts(tok)) return false;
    const std::string t(tok);
    switch (pos_) {
      case Pos::mark_kw: pos_ = Pos::chart; break;
      case Pos::chart: pos_ = Pos::data_kw; break;
      case Pos::data_kw: pos_ = Pos::table; break;
      case Pos::table: pos_ = Pos::encoding_kw; break;
      case Pos::encoding_kw: pos_ = Pos::x_kw; break;
      case Pos::x_kw: pos_ = Pos::x_col; break;
      case Pos::x_col:
        x_column_ = t;
        pos_ = Pos::y_kw;
        break;
      case Pos::y_kw: pos_ = Pos::aggregate_kw; break;
      case Pos::aggregate_kw: pos_ = Pos::agg; break;
      case Pos::agg: pos_ = Pos::y_col; break;
      case Pos::y_col: pos_ = Pos::after_y; break;
      case Pos::color_col: pos_ = Pos::after_color; break;
      case Pos::after_y:
      case Pos::after_color:
        if (t == "color") pos_ = Pos::color_col;
        else if (t == "transform") pos_ = Pos::first_clause;
        else pos_ = Pos::done;
        break;
      case Pos::first_clause:
      case Pos::after_clause:
      case Pos::after_predicate: enter_after(t); break;
      case Pos::group_arg:
      case Pos::sort_dir:
      case Pos::bin_interval:
      case Pos::topk_k: pos_ = Pos::after_clause; break;
      case Pos::sort_axis: pos_ = Pos::sort_dir; break;
      case Pos::bin_x: pos_ = Pos::bin_by; break;
      case Pos::bin_by: pos_ = Pos::bin_interval; break;
      case Pos::filter_col: pos_ = Pos::filter_op; break;
      case Pos::filter_op:
        between_ = t == "between";
        pos_ = Pos::filter_value;
        break;
      case Pos::filter_value: pos_ = between_ ? Pos::filter_and : Pos::after_predicate; break;
      case Pos::filter_and: pos_ = Pos::filter_upper; break;
      case Pos::filter_upper: pos_ = Pos::after_predicate; break;
      case Pos::done: return false;
    }
    emitted_.push_back(t);
    return true;
  }

  bool complete() const { return pos_ == Pos::done; }

  /// Fewest further tokens, <eos> excluded, before <eos> can be read.
  int min_to_finish() const {
    switch (pos_) {
      case Pos::mark_kw: return 11;
      case Pos::chart: return 10;
      case Pos::data_kw: return 9;
      case Pos::table: return 8;
      case Pos::encoding_kw: return 7;
      case Pos::x_kw: return 6;
      case Pos::x_col: return 5;
      case Pos::y_kw: return 4;
      case Pos::aggregate_kw: return 3;
      case Pos::agg: return 2;
      case Pos::y_col:
      case Pos::color_col:
      case Pos::group_arg:
      case Pos::sort_dir:
      case Pos::bin_interval:
      case Pos::topk_k:
      case Pos::filter_upper: return 1;
      case Pos::first_clause: {
        int best = 4;
        for (const auto& k : open_clauses())
          best = std::min(best, k == "group" || k == "topk" ? 2 : k == "sort" ? 3 : 4);
        return best;
      }
      case Pos::sort_axis:
      case Pos::bin_by:
      case Pos::filter_op:
      case Pos::filter_and: return 2;
      case Pos::bin_x:
      case Pos::filter_col: return 3;
      case Pos::filter_value: return between_ ? 3 : 1;
      case Pos::after_y:
      case Pos::after_color:
      case Pos::after_predicate:
      case Pos::after_clause:
      case Pos::done: return 0;
    }
    return 0;
  }

  /// allowed() minus the tokens after which the query could no longer be
  /// closed within `budget` further tokens (<eos> excluded). Falls back to
  /// allowed() when nothing fits.
  AllowedSet allowed_within(int budget) const {
    AllowedSet all = allowed();
    auto fits = [&](std::string_view tok) {
      if (tok == kEos) return true;
      GrammarState next = *this;
      return next.advance(tok) && 1 + next.min_to_finish() <= budget;
    };
    AllowedSet out;
    for (const auto& w : all.words)
      if (fits(w)) out.words.push_back(w);
    out.values = all.values && fits("0");
    out.positive_integers = all.positive_integers && fits("1");
    return out.empty() ? all : out;
  }
  const TokenSeq& emitted() const { return emitted_; }

 private:
  enum class Pos {
    mark_kw, chart, data_kw, table, encoding_kw, x_kw, x_col, y_kw, aggregate_kw, agg, y_col,
    after_y, color_col, after_color, first_clause, group_arg, sort_axis, sort_dir, bin_x, bin_by,
    bin_interval, topk_k, filter_col, filter_op, filter_value, filter_and, filter_upper,
    after_predicate, after_clause, done
  };

  std::vector<std::string> columns() const {
    std::vector<std::string> out;
    for (const auto& c : table_->columns) out.push_back(c.name);
    return out;
  }

  bool x_is_temporal() const {
    const auto* c = table_->find_column(x_column_);
    return c && c->kind == vega_zero::ColumnKind::temporal;
  }

  std::vector<std::string> open_clauses() const {
    std::vector<std::string> out;
    for (auto k : vega_zero::kTransformKeywords) {
      if (used_.contains(std::string(k))) continue;
      if (k == "bin" && !x_is_temporal()) continue;
      out.emplace_back(k);
    }
    return out;
  }

  // Handles a token read where a connective, clause keyword or <eos> may appear.
  void enter_after(const std::string& t) {
    if (t == kEos) {
      pos_ = Pos::done;
    } else if (t == "and" || t == "or") {
      pos_ = Pos::filter_col;
    } else {
      used_.insert(t);
      if (t == "filter") pos_ = Pos::filter_col;
      else if (t == "group") pos_ = Pos::group_arg;
      else if (t == "sort") pos_ = Pos::sort_axis;
      else if (t == "bin") pos_ = Pos::bin_x;
      else pos_ = Pos::topk_k;
    }
  }

  const vega_zero::TableSchema* table_;
  std::optional<vega_zero::ChartType> chart_;
  Pos pos_ = Pos::mark_kw;
  std::string x_column_;
  std::set<std::string> used_;
  bool between_ = false;
  TokenSeq emitted_;
};

}  // namespace nl2vis::decoder
