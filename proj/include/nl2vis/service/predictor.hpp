#pragma once

#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "nl2vis/decoder/prepare.hpp"
#include "nl2vis/error.hpp"
#include "nl2vis/eval/correction.hpp"
#include "nl2vis/model/checkpoint.hpp"
#include "nl2vis/vega_zero.hpp"

namespace nl2vis::service {

struct PredictRequest {
  std::string nl;
  std::string table;
  std::optional<vega_zero::ChartType> chart;
};

struct Prediction {
  std::string vega_zero;      // repaired text
  nlohmann::json vega_lite;   // null when the query could not be compiled
  bool valid = false;         // parses, validates, and was not truncated
  bool corrected = false;     // the repair changed the decoded text
  bool truncated = false;
};

/// Answers questions against one immutable checkpoint and schema. Safe to call
/// from many threads as long as the embedding provider is.
class Predictor {
 public:
  Predictor(model::Checkpoint checkpoint, vega_zero::DatabaseSchema schema,
            std::shared_ptr<model::EmbeddingProvider> provider = nullptr)
      : ckpt_(std::move(checkpoint)), schema_(std::move(schema)), provider_(std::move(provider)) {
    if (model::uses_external(ckpt_.config().encoder_variant) && !provider_)
      throw EncoderError("encoder variant " + std::string(model::to_string(ckpt_.config().encoder_variant)) +
                         " needs a bridge connection");
  }

  const vega_zero::DatabaseSchema& schema() const { return schema_; }
  const model::Checkpoint& checkpoint() const { return ckpt_; }

  Prediction predict(const PredictRequest& req) const {
    const vega_zero::TableSchema* table = schema_.find_table(req.table);
    if (!table) throw RequestError("unknown table '" + req.table + "'");
    if (req.nl.find_first_not_of(" \t\r\n") == std::string::npos) throw RequestError("empty question");
    const auto src = decoder::prepare_query(req.nl, *table, req.chart, ckpt_.vocab, ckpt_.config(),
                                            provider_.get());
    decoder::DecodeOptions opts;
    opts.max_len = ckpt_.config().max_len;
    const auto out = decoder::guided_decode(ckpt_.model, ckpt_.vocab, src.input(), opts);

    Prediction p;
    const std::string raw = vega_zero::join(out.tokens);
    p.vega_zero = eval::correct_systematic_errors(raw);
    p.corrected = p.vega_zero != raw;
    p.truncated = out.truncated;
    p.vega_lite = nullptr;
    if (out.truncated) return p;
    try {
      const auto ast = vega_zero::parse(p.vega_zero);
      p.valid = vega_zero::validate(ast, schema_).error_count() == 0;
      p.vega_lite = vega_zero::compile_to_vegalite(ast, vega_zero::DataRef::url(table->name + ".csv"), table);
    } catch (const Error&) {
      p.valid = false;
    }
    return p;
  }

 private:
  model::Checkpoint ckpt_;
  vega_zero::DatabaseSchema schema_;
  std::shared_ptr<model::EmbeddingProvider> provider_;
};

inline nlohmann::json to_json(const Prediction& p) {
  return {{"vega_zero", p.vega_zero}, {"vega_lite", p.vega_lite}, {"valid", p.valid}, {"corrected", p.corrected}};
}

}  // namespace nl2vis::service
