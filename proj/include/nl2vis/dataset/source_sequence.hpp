#pragma once

#include <array>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nl2vis/dataset/corpus.hpp"
#include "nl2vis/error.hpp"
#include "nl2vis/vega_zero.hpp"

namespace nl2vis::dataset {

using vega_zero::TokenSeq;

/// Per-token segment tag of a source sequence.
enum class Segment : int { nl = 0, template_ = 1, data = 2, col = 3, val = 4, special = 5 };
inline constexpr int kSegmentCount = 6;

struct SourceSequence {
  TokenSeq tokens;
  std::vector<Segment> segments;
  bool chart_given = false;
};

struct SourceOptions {
  std::size_t max_values = 16;
  std::size_t max_len = 256;
};

/// Whitespace split, lowercased, with `,` and `.` peeled off word edges as
/// standalone tokens. Decimal points inside numbers stay put.
inline TokenSeq tokenize_nl(std::string_view text) {
  TokenSeq out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && vega_zero::is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !vega_zero::is_space(text[i])) ++i;
    if (start == i) break;
    std::string_view word = text.substr(start, i - start);

    std::vector<std::string> leading;
    while (!word.empty() && (word.front() == ',' || word.front() == '.') &&
           !(word.size() > 1 && std::isdigit(static_cast<unsigned char>(word[1])) &&
             word.front() == '.')) {
      leading.emplace_back(1, word.front());
      word.remove_prefix(1);
    }
    std::vector<std::string> trailing;
    while (!word.empty() && (word.back() == ',' || word.back() == '.')) {
      trailing.emplace_back(1, word.back());
      word.remove_suffix(1);
    }
    for (auto& p : leading) out.push_back(std::move(p));
    if (!word.empty()) out.push_back(vega_zero::to_lower(word));
    for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) out.push_back(std::move(*it));
  }
  return out;
}

/// Template with slot placeholders, the table name filled in and [T]
/// optionally replaced by a chart word.
inline TokenSeq template_tokens(const std::string& table,
                                std::optional<vega_zero::ChartType> chart) {
  return {"mark", chart ? std::string(vega_zero::to_string(*chart)) : std::string("[T]"),
          "data", table, "encoding", "x", "[X]", "y", "aggregate", "[AggFunction]", "[Y]",
          "color", "[Z]", "transform", "filter", "[F]", "group", "[G]", "bin", "[B]",
          "sort", "[S]", "topk", "[K]"};
}

/// Builds `<N> nl </N> <C> template </C> <D> table <COL> columns </COL>
/// <VAL> values </VAL> </D>`. Sequences over `max_len` lose VAL tokens first,
/// then trailing NL tokens.
inline SourceSequence build_source_sequence(std::string_view nl,
                                            const vega_zero::TableSchema& table,
                                            std::optional<vega_zero::ChartType> chart,
                                            const SourceOptions& options = {}) {
  TokenSeq nl_tokens = tokenize_nl(nl);
  // Values are split on whitespace but keep their case.
  TokenSeq values;
  for (const auto& v : table.sample_values) {
    if (values.size() >= options.max_values) break;
    std::size_t i = 0;
    while (i < v.size() && values.size() < options.max_values) {
      while (i < v.size() && vega_zero::is_space(v[i])) ++i;
      const std::size_t start = i;
      while (i < v.size() && !vega_zero::is_space(v[i])) ++i;
      if (start < i) values.emplace_back(v.substr(start, i - start));
    }
  }
  const TokenSeq tmpl = template_tokens(table.name, chart);

  const std::size_t fixed = vega_zero::kSectionMarkers.size() + tmpl.size() + 1 + table.columns.size();
  std::size_t budget = options.max_len > fixed ? options.max_len - fixed : 0;
  if (nl_tokens.size() + values.size() > budget) {
    const std::size_t keep_values = budget > nl_tokens.size() ? budget - nl_tokens.size() : 0;
    values.resize(std::min(values.size(), keep_values));
    if (nl_tokens.size() > budget) nl_tokens.resize(budget);
  }

  SourceSequence seq;
  seq.chart_given = chart.has_value();
  auto push = [&](std::string tok, Segment seg) {
    seq.tokens.push_back(std::move(tok));
    seq.segments.push_back(seg);
  };
  push("<N>", Segment::special);
  for (auto& t : nl_tokens) push(t, Segment::nl);
  push("</N>", Segment::special);
  push("<C>", Segment::special);
  for (const auto& t : tmpl) push(t, Segment::template_);
  push("</C>", Segment::special);
  push("<D>", Segment::special);
  push(table.name, Segment::data);
  push("<COL>", Segment::special);
  for (const auto& c : table.columns) push(c.name, Segment::col);
  push("</COL>", Segment::special);
  push("<VAL>", Segment::special);
  for (auto& v : values) push(v, Segment::val);
  push("</VAL>", Segment::special);
  push("</D>", Segment::special);
  return seq;
}

inline SourceSequence build_source_sequence(const NvPair& pair, bool chart_given,
                                            const SourceOptions& options = {}) {
  const auto* table = pair.schema.find_table(pair.table);
  if (!table) throw CorpusError("table '" + pair.table + "' missing from schema");
  return build_source_sequence(pair.nl, *table, chart_given ? pair.label.mark : std::nullopt,
                               options);
}

/// Model-ready item: one augmented source with its label and the metadata
/// guided decoding and evaluation need.
struct TrainingItem {
  SourceSequence source;
  vega_zero::VegaZeroAST label;
  TokenSeq label_tokens;
  vega_zero::TableSchema table;
  std::optional<Hardness> hardness;
  std::size_t pair_index = 0;

  bool chart_given() const { return source.chart_given; }
  std::optional<vega_zero::ChartType> given_chart() const {
    return source.chart_given ? label.mark : std::nullopt;
  }
};

/// The two training variants of a pair: chart left as [T], then chart filled in.
inline std::array<TrainingItem, 2> augment_pair(const NvPair& pair, std::size_t pair_index = 0,
                                                const SourceOptions& options = {}) {
  std::array<TrainingItem, 2> items;
  for (int given = 0; given < 2; ++given) {
    TrainingItem& item = items[given];
    item.source = build_source_sequence(pair, given == 1, options);
    item.label = pair.label;
    item.label_tokens = vega_zero::serialize_tokens(pair.label);
    item.table = pair.table_schema();
    item.hardness = pair.hardness;
    item.pair_index = pair_index;
  }
  return items;
}

inline std::vector<TrainingItem> augment_corpus(const std::vector<NvPair>& pairs,
                                                const SourceOptions& options = {}) {
  std::vector<TrainingItem> items;
  items.reserve(pairs.size() * 2);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    for (auto& item : augment_pair(pairs[i], i, options)) items.push_back(std::move(item));
  return items;
}

}  // namespace nl2vis::dataset
