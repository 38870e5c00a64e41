#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nl2vis::vega_zero {

enum class ChartType { arc, bar, line, point };
enum class AggFunction { none, count, sum, avg, max, min };
enum class Axis { x, y };
enum class SortDirection { asc, desc };
enum class BinInterval { month, weekday, year, day, quarter };
enum class CompareOp { eq, ne, lt, gt, le, ge, like, between };
enum class Connective { and_, or_ };

namespace detail {

template <typename Enum, std::size_t N>
struct EnumNames {
  std::array<std::pair<Enum, std::string_view>, N> entries;

  constexpr std::string_view name(Enum e) const {
    for (const auto& [value, text] : entries)
      if (value == e) return text;
    return {};
  }

  constexpr std::optional<Enum> find(std::string_view text) const {
    for (const auto& [value, name] : entries)
      if (name == text) return value;
    return std::nullopt;
  }
};

inline constexpr EnumNames<ChartType, 4> kChartNames{{{
    {ChartType::arc, "arc"},
    {ChartType::bar, "bar"},
    {ChartType::line, "line"},
    {ChartType::point, "point"},
}}};

inline constexpr EnumNames<AggFunction, 6> kAggNames{{{
    {AggFunction::none, "none"},
    {AggFunction::count, "count"},
    {AggFunction::sum, "sum"},
    {AggFunction::avg, "avg"},
    {AggFunction::max, "max"},
    {AggFunction::min, "min"},
}}};

inline constexpr EnumNames<Axis, 2> kAxisNames{{{{Axis::x, "x"}, {Axis::y, "y"}}}};

inline constexpr EnumNames<SortDirection, 2> kDirectionNames{
    {{{SortDirection::asc, "asc"}, {SortDirection::desc, "desc"}}}};

inline constexpr EnumNames<BinInterval, 5> kIntervalNames{{{
    {BinInterval::month, "month"},
    {BinInterval::weekday, "weekday"},
    {BinInterval::year, "year"},
    {BinInterval::day, "day"},
    {BinInterval::quarter, "quarter"},
}}};

inline constexpr EnumNames<CompareOp, 8> kOpNames{{{
    {CompareOp::eq, "="},
    {CompareOp::ne, "!="},
    {CompareOp::lt, "<"},
    {CompareOp::gt, ">"},
    {CompareOp::le, "<="},
    {CompareOp::ge, ">="},
    {CompareOp::like, "like"},
    {CompareOp::between, "between"},
}}};

inline constexpr EnumNames<Connective, 2> kConnectiveNames{
    {{{Connective::and_, "and"}, {Connective::or_, "or"}}}};

}  // namespace detail

inline std::string_view to_string(ChartType v) { return detail::kChartNames.name(v); }
inline std::string_view to_string(AggFunction v) { return detail::kAggNames.name(v); }
inline std::string_view to_string(Axis v) { return detail::kAxisNames.name(v); }
inline std::string_view to_string(SortDirection v) { return detail::kDirectionNames.name(v); }
inline std::string_view to_string(BinInterval v) { return detail::kIntervalNames.name(v); }
inline std::string_view to_string(CompareOp v) { return detail::kOpNames.name(v); }
inline std::string_view to_string(Connective v) { return detail::kConnectiveNames.name(v); }

inline std::optional<ChartType> chart_type_from(std::string_view s) {
  return detail::kChartNames.find(s);
}
inline std::optional<AggFunction> agg_function_from(std::string_view s) {
  return detail::kAggNames.find(s);
}
inline std::optional<Axis> axis_from(std::string_view s) { return detail::kAxisNames.find(s); }
inline std::optional<SortDirection> direction_from(std::string_view s) {
  return detail::kDirectionNames.find(s);
}
inline std::optional<BinInterval> bin_interval_from(std::string_view s) {
  return detail::kIntervalNames.find(s);
}
inline std::optional<CompareOp> compare_op_from(std::string_view s) {
  return detail::kOpNames.find(s);
}
inline std::optional<Connective> connective_from(std::string_view s) {
  return detail::kConnectiveNames.find(s);
}

inline constexpr std::array<ChartType, 4> kAllChartTypes = {ChartType::arc, ChartType::bar,
                                                            ChartType::line, ChartType::point};
inline constexpr std::array<AggFunction, 6> kAllAggFunctions = {
    AggFunction::none, AggFunction::count, AggFunction::sum,
    AggFunction::avg,  AggFunction::max,   AggFunction::min};
inline constexpr std::array<BinInterval, 5> kAllBinIntervals = {
    BinInterval::month, BinInterval::weekday, BinInterval::year, BinInterval::day,
    BinInterval::quarter};
inline constexpr std::array<CompareOp, 8> kAllCompareOps = {
    CompareOp::eq, CompareOp::ne,   CompareOp::lt,   CompareOp::gt,
    CompareOp::le, CompareOp::ge,   CompareOp::like, CompareOp::between};

/// One comparison inside a filter. `upper` is only used by `between`.
struct Predicate {
  std::string column;
  CompareOp op = CompareOp::eq;
  std::string value;
  std::string upper;

  bool operator==(const Predicate&) const = default;
};

/// Flat predicate list joined left to right; connectives.size() == predicates.size() - 1.
struct FilterExpr {
  std::vector<Predicate> predicates;
  std::vector<Connective> connectives;

  bool operator==(const FilterExpr&) const = default;
};

struct SortClause {
  Axis axis = Axis::x;
  SortDirection direction = SortDirection::asc;

  bool operator==(const SortClause&) const = default;
};

/// Binning always applies to the x channel.
struct BinClause {
  BinInterval interval = BinInterval::month;

  bool operator==(const BinClause&) const = default;
};

struct VegaZeroAST {
  std::optional<ChartType> mark;  // nullopt is the [T] placeholder
  std::string data;
  std::string x;
  AggFunction y_agg = AggFunction::none;
  std::string y;
  std::optional<std::string> color;
  std::optional<FilterExpr> filter;
  std::optional<std::string> group;
  std::optional<SortClause> sort;
  std::optional<BinClause> bin;
  std::optional<int> topk;

  bool has_transform() const { return filter || group || sort || bin || topk; }

  bool operator==(const VegaZeroAST&) const = default;
};

// Keywords with a fixed role in the grammar.
inline constexpr std::array<std::string_view, 5> kTransformKeywords = {"filter", "group", "sort",
                                                                       "bin", "topk"};

inline bool is_transform_keyword(std::string_view tok) {
  for (auto k : kTransformKeywords)
    if (k == tok) return true;
  return false;
}

}  // namespace nl2vis::vega_zero
