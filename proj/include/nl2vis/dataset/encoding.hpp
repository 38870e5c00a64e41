#pragma once

#include <vector>

#include "nl2vis/dataset/source_sequence.hpp"
#include "nl2vis/dataset/vocabulary.hpp"
#include "nl2vis/error.hpp"

namespace nl2vis::dataset {

struct EncodedExample {
  std::vector<int> source_ids;
  std::vector<int> source_segment_ids;
  std::vector<int> label_ids;  // <sos> ... <eos>
};

inline std::vector<int> encode_source(const TokenSeq& tokens, const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id_or_unk(t));
  return ids;
}

/// Labels are closed-vocabulary: an unknown label token is an error.
inline std::vector<int> encode_label(const TokenSeq& tokens, const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size() + 2);
  ids.push_back(Vocabulary::kSos);
  for (const auto& t : tokens) {
    const auto id = vocab.find(t);
    if (!id) throw EncodingError("label token '" + t + "' is outside the vocabulary");
    ids.push_back(*id);
  }
  ids.push_back(Vocabulary::kEos);
  return ids;
}

inline EncodedExample encode_example(const SourceSequence& source, const TokenSeq& label_tokens,
                                     const Vocabulary& vocab) {
  EncodedExample ex;
  ex.source_ids = encode_source(source.tokens, vocab);
  ex.source_segment_ids.reserve(source.segments.size());
  for (auto s : source.segments) ex.source_segment_ids.push_back(static_cast<int>(s));
  ex.label_ids = encode_label(label_tokens, vocab);
  return ex;
}

inline EncodedExample encode_example(const TrainingItem& item, const Vocabulary& vocab) {
  return encode_example(item.source, item.label_tokens, vocab);
}

/// Inverse of encode_label: drops <sos>/<pad> and stops at <eos>.
inline TokenSeq decode_tokens(const std::vector<int>& ids, const Vocabulary& vocab) {
  TokenSeq out;
  for (int id : ids) {
    if (id == Vocabulary::kEos) break;
    if (id == Vocabulary::kSos || id == Vocabulary::kPad) continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

}  // namespace nl2vis::dataset
