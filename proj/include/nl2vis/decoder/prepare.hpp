#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nl2vis/dataset/encoding.hpp"
#include "nl2vis/decoder/guided.hpp"
#include "nl2vis/model/bridge.hpp"
#include "nl2vis/model/config.hpp"

namespace nl2vis::decoder {

/// Owns everything a DecodeInput points at.
struct PreparedSource {
  dataset::SourceSequence sequence;
  std::vector<int> ids;
  std::vector<int> segments;
  std::optional<model::Mat<float>> external;
  vega_zero::TableSchema table;
  std::optional<vega_zero::ChartType> chart;

  PreparedSource() = default;
  PreparedSource(const PreparedSource&) = delete;
  PreparedSource& operator=(const PreparedSource&) = delete;
  PreparedSource(PreparedSource&&) = default;
  PreparedSource& operator=(PreparedSource&&) = default;

  DecodeInput<float> input() const {
    return {{ids, segments, external ? &*external : nullptr}, table, chart};
  }
};

inline PreparedSource prepare_source(dataset::SourceSequence seq, vega_zero::TableSchema table,
                                     std::optional<vega_zero::ChartType> chart,
                                     const Vocabulary& vocab, model::EncoderVariant variant,
                                     model::EmbeddingProvider* provider) {
  PreparedSource p;
  p.ids = dataset::encode_source(seq.tokens, vocab);
  for (auto s : seq.segments) p.segments.push_back(static_cast<int>(s));
  if (model::uses_external(variant)) {
    if (!provider)
      throw EncoderError("encoder variant " + std::string(model::to_string(variant)) +
                         " needs a bridge connection");
    try {
      p.external = provider->embed(seq.tokens);
    } catch (const BridgeError& e) {
      throw EncoderError("encoder variant " + std::string(model::to_string(variant)) + ": " + e.what());
    }
  }
  p.sequence = std::move(seq);
  p.table = std::move(table);
  p.chart = chart;
  return p;
}

inline PreparedSource prepare_item(const dataset::TrainingItem& item, const Vocabulary& vocab,
                                   model::EncoderVariant variant,
                                   model::EmbeddingProvider* provider = nullptr) {
  return prepare_source(item.source, item.table, item.given_chart(), vocab, variant, provider);
}

/// Builds the source for a free-text question against one table.
inline PreparedSource prepare_query(const std::string& nl, const vega_zero::TableSchema& table,
                                    std::optional<vega_zero::ChartType> chart,
                                    const Vocabulary& vocab, const model::ModelConfig& config,
                                    model::EmbeddingProvider* provider = nullptr) {
  dataset::SourceOptions opts;
  opts.max_len = static_cast<std::size_t>(config.max_len);
  return prepare_source(dataset::build_source_sequence(nl, table, chart, opts), table, chart, vocab,
                        config.encoder_variant, provider);
}

}  // namespace nl2vis::decoder
