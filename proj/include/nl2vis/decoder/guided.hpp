#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "nl2vis/dataset/vocabulary.hpp"
#include "nl2vis/decoder/grammar.hpp"
#include "nl2vis/model/seq2seq.hpp"

namespace nl2vis::decoder {

using dataset::Vocabulary;

struct DecodeOptions {
  int max_len = 64;  // output tokens, <eos> excluded; also capped by the model
  int top_k = 5;
};

struct DecodeResult {
  TokenSeq tokens;        // without <eos>
  bool truncated = false; // stopped at max_len before <eos>
  int fallback_steps = 0; // no allowed token among the top k
  int unk_steps = 0;      // allowed word outside the vocabulary was emitted
  bool off_grammar = false;  // greedy only: some token broke the grammar
};

/// What the decoder conditions on: the encoder input and the schema it binds to.
template <typename S>
struct DecodeInput {
  model::SourceView<S> source;
  const vega_zero::TableSchema& table;
  std::optional<vega_zero::ChartType> chart;
};

struct Choice {
  int id = -1;        // token fed back to the model
  std::string text;   // token emitted
  bool fallback = false;
};

/// Ids sorted by descending probability; ties go to the lower id.
inline std::vector<int> rank_ids(const std::vector<double>& probs) {
  std::vector<int> ids(probs.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    return probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(b)];
  });
  return ids;
}

/// Picks the first allowed token among the top k; failing that, the most
/// probable allowed vocabulary token; failing that, the first allowed word
/// (fed back as <unk>), or a literal for the open classes.
inline Choice choose_token(const std::vector<double>& probs, const AllowedSet& allowed,
                           const Vocabulary& vocab, int top_k) {
  const auto ranked = rank_ids(probs);
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const int id = ranked[r];
    if (id == Vocabulary::kPad || id == Vocabulary::kUnk || id == Vocabulary::kSos) continue;
    if (allowed.contains(vocab.token(id)))
      return {id, vocab.token(id), r >= static_cast<std::size_t>(top_k)};
  }
  std::string text;
  if (!allowed.words.empty()) text = allowed.words.front();
  else if (allowed.positive_integers) text = "1";
  else text = "0";
  return {vocab.id_or_unk(text), text, true};
}

inline std::vector<double> softmax(const model::RowVec<float>& logits) {
  std::vector<double> p(static_cast<std::size_t>(logits.size()));
  const double mx = static_cast<double>(logits.maxCoeff());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(static_cast<double>(logits(static_cast<Eigen::Index>(i))) - mx);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

namespace detail {
inline int output_limit(const model::ModelConfig& c, const DecodeOptions& o) {
  return std::max(0, std::min(o.max_len, c.max_len - 1));
}
}  // namespace detail

/// Grammar-constrained decoding: every output parses and names only columns
/// of the bound table. Near the length limit only tokens that still let the
/// query close in time are offered.
inline DecodeResult guided_decode(const model::Seq2Seq<float>& net, const Vocabulary& vocab,
                                  const DecodeInput<float>& in, const DecodeOptions& options = {}) {
  const model::Mat<float> memory = net.encode_eval(in.source);
  GrammarState state(in.table, in.chart);
  std::vector<int> prefix{Vocabulary::kSos};
  DecodeResult out;
  const int limit = detail::output_limit(net.config(), options);
  for (;;) {
    if (static_cast<int>(out.tokens.size()) >= limit) {
      out.truncated = !state.advance(kEos);
      break;
    }
    const int budget = limit - static_cast<int>(out.tokens.size());
    const Choice c = choose_token(softmax(net.next_logits(memory, prefix)), state.allowed_within(budget),
                                  vocab, options.top_k);
    if (c.fallback) ++out.fallback_steps;
    state.advance(c.text);
    if (c.text == kEos) break;
    if (c.id == Vocabulary::kUnk) ++out.unk_steps;
    out.tokens.push_back(c.text);
    prefix.push_back(c.id);
  }
  return out;
}

/// Unconstrained argmax decoding. The grammar is tracked only to report
/// whether the output left it.
inline DecodeResult greedy_decode(const model::Seq2Seq<float>& net, const Vocabulary& vocab,
                                  const DecodeInput<float>& in, const DecodeOptions& options = {}) {
  const model::Mat<float> memory = net.encode_eval(in.source);
  GrammarState state(in.table, in.chart);
  std::vector<int> prefix{Vocabulary::kSos};
  DecodeResult out;
  const int limit = detail::output_limit(net.config(), options);
  for (;;) {
    if (static_cast<int>(out.tokens.size()) >= limit) {
      out.truncated = true;
      break;
    }
    const auto logits = net.next_logits(memory, prefix);
    Eigen::Index best = 0;
    logits.maxCoeff(&best);  // first maximum on ties
    const int id = static_cast<int>(best);
    const std::string& tok = vocab.token(id);
    if (!out.off_grammar && !state.advance(tok)) out.off_grammar = true;
    if (id == Vocabulary::kEos) break;
    out.tokens.push_back(tok);
    prefix.push_back(id);
  }
  if (!state.complete()) out.off_grammar = true;
  return out;
}

}  // namespace nl2vis::decoder
