#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nl2vis/dataset/corpus.hpp"
#include "nl2vis/error.hpp"
#include "nl2vis/vega_zero.hpp"

namespace nl2vis::eval {

using vega_zero::TokenSeq;

enum class WordClass { easy_template = 0, hard_template = 1, non_template = 2 };
inline constexpr std::array<WordClass, 3> kAllWordClasses = {
    WordClass::easy_template, WordClass::hard_template, WordClass::non_template};

inline std::string_view to_string(WordClass c) {
  switch (c) {
    case WordClass::easy_template: return "easy_template";
    case WordClass::hard_template: return "hard_template";
    case WordClass::non_template: return "non_template";
  }
  return "?";
}

/// Easy words sit at fixed positions; hard ones come and go with the query.
inline WordClass classify(std::string_view tok) {
  for (auto w : {"mark", "data", "encoding", "aggregate", "transform"})
    if (tok == w) return WordClass::easy_template;
  for (auto w : {"x", "y", "color", "filter", "group", "bin", "sort", "topk"})
    if (tok == w) return WordClass::hard_template;
  return WordClass::non_template;
}

struct Rate {
  std::size_t hits = 0;
  std::size_t total = 0;

  void add(bool hit) { add(hit ? 1 : 0, 1); }
  void add(std::size_t h, std::size_t t) {
    hits += h;
    total += t;
  }
  double value() const { return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0; }
  bool operator==(const Rate&) const = default;
};

/// A rate over all items and split by whether the chart type was given.
struct SplitRate {
  Rate overall;
  Rate query_only;
  Rate query_plus_chart;

  void add(bool chart_given, std::size_t hits, std::size_t total) {
    overall.add(hits, total);
    (chart_given ? query_plus_chart : query_only).add(hits, total);
  }
  void add(bool chart_given, bool hit) { add(chart_given, hit ? 1 : 0, 1); }
  bool operator==(const SplitRate&) const = default;
};

struct CountSummary {
  double mean = 0.0;
  std::size_t min = 0;
  std::size_t max = 0;
  bool operator==(const CountSummary&) const = default;
};

inline CountSummary summarize(const std::vector<std::size_t>& counts) {
  CountSummary s;
  if (counts.empty()) return s;
  std::size_t sum = 0;
  for (auto c : counts) sum += c;
  s.mean = static_cast<double>(sum) / static_cast<double>(counts.size());
  s.min = *std::min_element(counts.begin(), counts.end());
  s.max = *std::max_element(counts.begin(), counts.end());
  return s;
}

struct ClassBreakdown {
  std::array<Rate, 3> accuracy{};             // by WordClass of the label token
  std::array<CountSummary, 3> incorrect{};    // wrong predictions per example
  CountSummary template_count, non_template_count, total_count;  // label words per example
  std::size_t items = 0;     // items included
  std::size_t excluded = 0;  // length mismatches
  bool operator==(const ClassBreakdown&) const = default;
};

/// Position-aligned scoring of predictions against labels, bucketed by the
/// word class of each label token. Items whose lengths differ are counted in
/// `excluded` and left out of everything else.
inline ClassBreakdown template_breakdown(const std::vector<TokenSeq>& predictions,
                                         const std::vector<TokenSeq>& labels) {
  if (predictions.size() != labels.size())
    throw Error("template_breakdown: " + std::to_string(predictions.size()) + " predictions for " +
                std::to_string(labels.size()) + " labels");
  ClassBreakdown b;
  std::array<std::vector<std::size_t>, 3> wrong;
  std::vector<std::size_t> tmpl, non, total;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& pred = predictions[i];
    const auto& label = labels[i];
    if (pred.size() != label.size()) {
      ++b.excluded;
      continue;
    }
    ++b.items;
    std::array<std::size_t, 3> count{}, miss{};
    for (std::size_t k = 0; k < label.size(); ++k) {
      const auto c = static_cast<std::size_t>(classify(label[k]));
      const bool ok = pred[k] == label[k];
      b.accuracy[c].add(ok);
      ++count[c];
      miss[c] += ok ? 0 : 1;
    }
    for (std::size_t c = 0; c < 3; ++c) wrong[c].push_back(miss[c]);
    tmpl.push_back(count[0] + count[1]);
    non.push_back(count[2]);
    total.push_back(label.size());
  }
  for (std::size_t c = 0; c < 3; ++c) b.incorrect[c] = summarize(wrong[c]);
  b.template_count = summarize(tmpl);
  b.non_template_count = summarize(non);
  b.total_count = summarize(total);
  return b;
}

/// The chart word of a sequence that starts with `mark`.
inline std::optional<std::string> chart_word(const TokenSeq& tokens) {
  if (tokens.size() < 2 || tokens[0] != "mark") return std::nullopt;
  return tokens[1];
}

inline SplitRate chart_type_accuracy(const std::vector<TokenSeq>& predictions,
                                     const std::vector<TokenSeq>& labels,
                                     const std::vector<bool>& chart_given) {
  if (predictions.size() != labels.size() || labels.size() != chart_given.size())
    throw Error("chart_type_accuracy: input sizes differ");
  SplitRate r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto p = chart_word(predictions[i]);
    const auto l = chart_word(labels[i]);
    r.add(chart_given[i], p && l && *p == *l);
  }
  return r;
}

struct HardnessRow {
  std::string level;
  std::size_t success = 0;
  std::size_t failure = 0;

  std::size_t count() const { return success + failure; }
  double rate() const { return count() ? static_cast<double>(success) / static_cast<double>(count()) : 0.0; }
  bool operator==(const HardnessRow&) const = default;
};

/// Success/failure per difficulty level, in Easy..Extra Hard order; an
/// "Unlabeled" row is appended when some item has no level.
inline std::vector<HardnessRow> hardness_report(const std::vector<bool>& matches,
                                                const std::vector<std::optional<dataset::Hardness>>& levels) {
  if (matches.size() != levels.size()) throw Error("hardness_report: input sizes differ");
  using dataset::Hardness;
  std::vector<HardnessRow> rows;
  for (auto h : {Hardness::easy, Hardness::medium, Hardness::hard, Hardness::extra_hard})
    rows.push_back({std::string(dataset::to_string(h)), 0, 0});
  HardnessRow unlabeled{"Unlabeled", 0, 0};
  for (std::size_t i = 0; i < matches.size(); ++i) {
    HardnessRow& row = levels[i] ? rows[static_cast<std::size_t>(*levels[i])] : unlabeled;
    ++(matches[i] ? row.success : row.failure);
  }
  if (unlabeled.count()) rows.push_back(unlabeled);
  return rows;
}

/// Match after parse normalisation; anything that does not parse never matches.
inline bool exact_match(std::string_view prediction, std::string_view label) {
  const auto p = vega_zero::try_normalize(prediction);
  const auto l = vega_zero::try_normalize(label);
  return p && l && *p == *l;
}

}  // namespace nl2vis::eval
