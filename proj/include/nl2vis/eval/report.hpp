#pragma once

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "nl2vis/eval/evaluator.hpp"

namespace nl2vis::eval {

using nlohmann::json;

inline json to_json(const Rate& r) { return {{"hits", r.hits}, {"total", r.total}, {"rate", r.value()}}; }

inline json to_json(const SplitRate& s) {
  return {{"overall", to_json(s.overall)},
          {"query_only", to_json(s.query_only)},
          {"query_plus_chart", to_json(s.query_plus_chart)}};
}

inline json to_json(const CountSummary& c) { return {{"mean", c.mean}, {"min", c.min}, {"max", c.max}}; }

inline json to_json(const ClassBreakdown& b) {
  json acc = json::object(), wrong = json::object();
  for (auto c : kAllWordClasses) {
    acc[std::string(to_string(c))] = to_json(b.accuracy[static_cast<std::size_t>(c)]);
    wrong[std::string(to_string(c))] = to_json(b.incorrect[static_cast<std::size_t>(c)]);
  }
  return {{"class_accuracy", acc},
          {"incorrect_counts", wrong},
          {"class_counts",
           {{"template", to_json(b.template_count)},
            {"non_template", to_json(b.non_template_count)},
            {"total", to_json(b.total_count)}}},
          {"items", b.items},
          {"excluded_length_mismatch", b.excluded}};
}

inline json to_json(const EvalReport& r) {
  json hardness = json::array();
  for (const auto& h : r.hardness)
    hardness.push_back({{"level", h.level}, {"success", h.success}, {"failure", h.failure},
                        {"count", h.count()}, {"rate", h.rate()}});
  json j = {{"items", r.items},
            {"token_accuracy", to_json(r.token_accuracy)},
            {"guided_exact_match", to_json(r.guided_exact_match)},
            {"template_breakdown", to_json(r.classes)},
            {"chart_type_accuracy",
             {{"raw", to_json(r.chart_accuracy_raw)}, {"guided", to_json(r.chart_accuracy_guided)}}},
            {"hardness", hardness},
            {"correction",
             {{"before", to_json(r.before_correction)}, {"after", to_json(r.after_correction)}}},
            {"truncated", r.truncated},
            {"fallback_steps", r.fallback_steps}};
  if (r.greedy_exact_match) {
    j["greedy_exact_match"] = to_json(*r.greedy_exact_match);
    j["greedy_off_grammar"] = r.greedy_off_grammar;
  }
  return j;
}

inline json to_json(const ItemResult& it) {
  json classes = json::array();
  for (const auto& t : it.label) classes.push_back(to_string(classify(t)));
  json j = {{"index", it.index},
            {"pair_index", it.pair_index},
            {"chart_given", it.chart_given},
            {"hardness", it.hardness ? json(dataset::to_string(*it.hardness)) : json(nullptr)},
            {"source", vega_zero::join(it.source)},
            {"label", vega_zero::join(it.label)},
            {"prediction", vega_zero::join(it.guided)},
            {"match", it.match},
            {"corrected", it.corrected},
            {"corrected_match", it.corrected_match},
            {"truncated", it.truncated},
            {"teacher_forced", vega_zero::join(it.teacher_forced)},
            {"token_correct", it.tf_correct},
            {"token_total", it.label.size() + 1},
            {"classes", classes}};
  if (it.greedy) {
    j["greedy"] = vega_zero::join(*it.greedy);
    j["greedy_match"] = it.greedy_match;
    j["greedy_off_grammar"] = it.greedy_off_grammar;
  }
  return j;
}

inline void write_items_jsonl(std::ostream& out, const std::vector<ItemResult>& items) {
  for (const auto& it : items) out << to_json(it).dump() << '\n';
}

namespace detail {

inline std::string pct(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%6.2f%%", 100.0 * v);
  return buf;
}

inline std::string cell(const std::string& s, int width) {
  std::string out = s;
  if (static_cast<int>(out.size()) < width) out.append(static_cast<std::size_t>(width - static_cast<int>(out.size())), ' ');
  return out;
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline void split_row(std::ostream& out, const std::string& name, const SplitRate& s) {
  out << cell(name, 24) << cell(pct(s.overall.value()), 12) << cell(pct(s.query_only.value()), 12)
      << pct(s.query_plus_chart.value()) << '\n';
}

}  // namespace detail

/// Plain-text tables: accuracy, class breakdown, chart type, hardness, repair.
inline std::string to_text(const EvalReport& r) {
  using detail::cell;
  using detail::num;
  using detail::pct;
  std::ostringstream out;
  out << "Items evaluated: " << r.items << "\n\n";
  out << cell("Metric", 24) << cell("Overall", 12) << cell("Query", 12) << "Query+Chart\n";
  detail::split_row(out, "Token accuracy", r.token_accuracy);
  detail::split_row(out, "Guided exact match", r.guided_exact_match);
  if (r.greedy_exact_match) detail::split_row(out, "Greedy exact match", *r.greedy_exact_match);
  detail::split_row(out, "Chart type (raw)", r.chart_accuracy_raw);
  detail::split_row(out, "Chart type (guided)", r.chart_accuracy_guided);

  out << "\n" << cell("Word class", 16) << cell("Accuracy", 12) << cell("Wrong mean", 12)
      << cell("Wrong min", 11) << "Wrong max\n";
  for (auto c : kAllWordClasses) {
    const auto i = static_cast<std::size_t>(c);
    out << cell(std::string(to_string(c)), 16) << cell(pct(r.classes.accuracy[i].value()), 12)
        << cell(num(r.classes.incorrect[i].mean), 12) << cell(std::to_string(r.classes.incorrect[i].min), 11)
        << r.classes.incorrect[i].max << '\n';
  }
  out << "\n" << cell("Words per item", 16) << cell("Mean", 10) << cell("Min", 6) << "Max\n";
  auto count_row = [&](const std::string& name, const CountSummary& s) {
    out << cell(name, 16) << cell(num(s.mean), 10) << cell(std::to_string(s.min), 6) << s.max << '\n';
  };
  count_row("template", r.classes.template_count);
  count_row("non-template", r.classes.non_template_count);
  count_row("total", r.classes.total_count);
  if (r.classes.excluded) out << "Excluded (length mismatch): " << r.classes.excluded << '\n';

  out << "\n" << cell("Hardness", 12) << cell("Success", 9) << cell("Failure", 9) << "Rate\n";
  for (const auto& h : r.hardness)
    out << cell(h.level, 12) << cell(std::to_string(h.success), 9) << cell(std::to_string(h.failure), 9)
        << pct(h.rate()) << '\n';

  out << "\nExact match before repair: " << pct(r.before_correction.value()) << " ("
      << r.before_correction.hits << "/" << r.before_correction.total << ")\n";
  out << "Exact match after repair:  " << pct(r.after_correction.value()) << " ("
      << r.after_correction.hits << "/" << r.after_correction.total << ")\n";
  out << "Truncated decodes: " << r.truncated << ", fallback steps: " << r.fallback_steps;
  if (r.greedy_exact_match) out << ", greedy off-grammar: " << r.greedy_off_grammar;
  out << '\n';
  return out.str();
}

}  // namespace nl2vis::eval
