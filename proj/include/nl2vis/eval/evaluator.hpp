#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nl2vis/decoder/prepare.hpp"
#include "nl2vis/eval/correction.hpp"
#include "nl2vis/eval/metrics.hpp"
#include "nl2vis/model/seq2seq.hpp"

namespace nl2vis::eval {

using dataset::Vocabulary;

struct EvalOptions {
  decoder::DecodeOptions decode;
  bool greedy = true;  // also run unconstrained decoding
};

struct ItemResult {
  std::size_t index = 0;
  std::size_t pair_index = 0;
  bool chart_given = false;
  std::optional<dataset::Hardness> hardness;
  TokenSeq source;
  TokenSeq label;
  TokenSeq teacher_forced;  // argmax at each label position, <eos> slot included
  std::size_t tf_correct = 0;
  TokenSeq guided;
  bool truncated = false;
  int fallback_steps = 0;
  bool match = false;
  std::string corrected;  // guided text after repair
  bool corrected_match = false;
  std::optional<TokenSeq> greedy;
  bool greedy_match = false;
  bool greedy_off_grammar = false;
};

struct EvalReport {
  std::size_t items = 0;
  SplitRate token_accuracy;
  SplitRate guided_exact_match;
  std::optional<SplitRate> greedy_exact_match;
  std::size_t greedy_off_grammar = 0;
  std::size_t truncated = 0;
  std::size_t fallback_steps = 0;
  ClassBreakdown classes;
  SplitRate chart_accuracy_raw;     // teacher-forced argmax at the chart slot
  SplitRate chart_accuracy_guided;  // after grammar narrowing
  std::vector<HardnessRow> hardness;
  Rate before_correction;
  Rate after_correction;
  bool operator==(const EvalReport&) const = default;
};

struct EvalRun {
  EvalReport report;
  std::vector<ItemResult> items;
};

/// Argmax ids at every teacher-forced position: input <sos> t1..tn, targets
/// t1..tn <eos>. Ties go to the lowest id.
inline std::vector<int> teacher_forced_argmax(const model::Seq2Seq<float>& net,
                                              const model::SourceView<float>& src,
                                              const std::vector<int>& label_ids) {
  const auto memory = net.encode_eval(src);
  const std::vector<int> prefix(label_ids.begin(), label_ids.end() - 1);
  const auto logits = net.logits_eval(memory, prefix);
  std::vector<int> out;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    logits.row(r).maxCoeff(&best);
    out.push_back(static_cast<int>(best));
  }
  return out;
}

/// Aggregates per-item results into the report. Pure and order-stable.
inline EvalReport summarize_run(const std::vector<ItemResult>& items) {
  EvalReport r;
  r.items = items.size();
  std::vector<TokenSeq> tf_preds, labels, guided;
  std::vector<bool> given, matches;
  std::vector<std::optional<dataset::Hardness>> levels;
  bool any_greedy = false;
  SplitRate greedy;
  for (const auto& it : items) {
    r.token_accuracy.add(it.chart_given, it.tf_correct, it.label.size() + 1);
    r.guided_exact_match.add(it.chart_given, it.match);
    r.truncated += it.truncated ? 1 : 0;
    r.fallback_steps += static_cast<std::size_t>(it.fallback_steps);
    r.before_correction.add(it.match);
    r.after_correction.add(it.corrected_match);
    if (it.greedy) {
      any_greedy = true;
      greedy.add(it.chart_given, it.greedy_match);
      r.greedy_off_grammar += it.greedy_off_grammar ? 1 : 0;
    }
    TokenSeq aligned(it.teacher_forced.begin(),
                     it.teacher_forced.begin() + static_cast<std::ptrdiff_t>(std::min(it.teacher_forced.size(), it.label.size())));
    tf_preds.push_back(std::move(aligned));
    labels.push_back(it.label);
    guided.push_back(it.guided);
    given.push_back(it.chart_given);
    matches.push_back(it.match);
    levels.push_back(it.hardness);
  }
  if (any_greedy) r.greedy_exact_match = greedy;
  r.classes = template_breakdown(tf_preds, labels);
  // Raw chart guess: the teacher-forced prediction at the chart slot alone.
  std::vector<TokenSeq> raw;
  for (const auto& it : items)
    raw.push_back(it.teacher_forced.size() > 1 ? TokenSeq{"mark", it.teacher_forced[1]} : TokenSeq{});
  r.chart_accuracy_raw = chart_type_accuracy(raw, labels, given);
  r.chart_accuracy_guided = chart_type_accuracy(guided, labels, given);
  r.hardness = hardness_report(matches, levels);
  return r;
}

/// Scores one item: teacher-forced accuracy, guided (and optionally greedy)
/// decoding, and exact match before and after repair.
inline ItemResult evaluate_item(const model::Seq2Seq<float>& net, const Vocabulary& vocab,
                                const dataset::TrainingItem& item, std::size_t index,
                                model::EmbeddingProvider* provider, const EvalOptions& options) {
  const auto prepared = decoder::prepare_item(item, vocab, net.config().encoder_variant, provider);
  const auto in = prepared.input();
  ItemResult r;
  r.index = index;
  r.pair_index = item.pair_index;
  r.chart_given = item.chart_given();
  r.hardness = item.hardness;
  r.source = item.source.tokens;
  r.label = item.label_tokens;

  // Unseen label words enter as <unk> and always count as misses.
  std::vector<int> label_ids{Vocabulary::kSos};
  for (const auto& t : item.label_tokens) label_ids.push_back(vocab.id_or_unk(t));
  label_ids.push_back(Vocabulary::kEos);
  const auto tf = teacher_forced_argmax(net, in.source, label_ids);
  for (std::size_t k = 0; k < tf.size(); ++k) {
    r.teacher_forced.push_back(vocab.token(tf[k]));
    const int want = label_ids[k + 1];
    r.tf_correct += tf[k] == want && want != Vocabulary::kUnk ? 1 : 0;
  }

  const auto g = decoder::guided_decode(net, vocab, in, options.decode);
  r.guided = g.tokens;
  r.truncated = g.truncated;
  r.fallback_steps = g.fallback_steps;
  const std::string label_text = vega_zero::join(item.label_tokens);
  const std::string guided_text = vega_zero::join(g.tokens);
  r.match = !g.truncated && exact_match(guided_text, label_text);
  r.corrected = correct_systematic_errors(guided_text);
  // The label goes through the same repair.
  r.corrected_match = !g.truncated && exact_match(r.corrected, correct_systematic_errors(label_text));

  if (options.greedy) {
    const auto u = decoder::greedy_decode(net, vocab, in, options.decode);
    r.greedy = u.tokens;
    r.greedy_off_grammar = u.off_grammar;
    r.greedy_match = !u.truncated && exact_match(vega_zero::join(u.tokens), label_text);
  }
  return r;
}

inline EvalRun evaluate(const model::Seq2Seq<float>& net, const Vocabulary& vocab,
                        const std::vector<dataset::TrainingItem>& items,
                        model::EmbeddingProvider* provider = nullptr, const EvalOptions& options = {}) {
  if (items.empty()) throw CorpusError("no items to evaluate");
  EvalRun run;
  run.items.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
    run.items.push_back(evaluate_item(net, vocab, items[i], i, provider, options));
  run.report = summarize_run(run.items);
  return run;
}

}  // namespace nl2vis::eval
