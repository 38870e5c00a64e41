#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "nl2vis/dataset/encoding.hpp"
#include "nl2vis/error.hpp"
#include "nl2vis/model/bridge.hpp"
#include "nl2vis/model/checkpoint.hpp"
#include "nl2vis/model/optimizer.hpp"
#include "nl2vis/model/seq2seq.hpp"

namespace nl2vis::model {

/// Encoded examples plus, for external variants, one bridge matrix each.
struct ExampleSet {
  std::vector<dataset::EncodedExample> examples;
  std::vector<Mat<float>> external;

  std::size_t size() const { return examples.size(); }

  template <typename S>
  SourceView<S> view(std::size_t i, const std::vector<Mat<S>>& ext) const {
    const auto& e = examples[i];
    return {e.source_ids, e.source_segment_ids, ext.empty() ? nullptr : &ext[i]};
  }
};

/// Encodes items; external variants fetch embeddings from `provider` once per item.
inline ExampleSet make_example_set(const std::vector<dataset::TrainingItem>& items,
                                   const dataset::Vocabulary& vocab, EncoderVariant variant,
                                   EmbeddingProvider* provider = nullptr) {
  ExampleSet set;
  for (const auto& item : items) {
    set.examples.push_back(dataset::encode_example(item, vocab));
    if (uses_external(variant)) {
      if (!provider)
        throw EncoderError("encoder variant " + std::string(to_string(variant)) +
                           " needs a bridge connection");
      try {
        set.external.push_back(provider->embed(item.source.tokens));
      } catch (const BridgeError& e) {
        throw EncoderError("encoder variant " + std::string(to_string(variant)) + ": " + e.what());
      }
    }
  }
  return set;
}

struct TrainOptions {
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  Seq2Seq<float> model;  // parameters of the selected epoch
  std::vector<EpochRecord> history;
  int selected_epoch = 0;
};

/// Mean teacher-forced token loss over a set, no dropout.
template <typename S>
double mean_loss(const Seq2Seq<S>& model, const ExampleSet& set,
                 const std::vector<Mat<S>>& external) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto [l, n] = model.eval_loss(set.view(i, external), set.examples[i].label_ids);
    total += l;
    tokens += n;
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

/// Runs one epoch of shuffled mini-batch Adam; returns the mean token loss
/// seen during the epoch.
template <typename S>
double train_epoch(Seq2Seq<S>& model, Adam<S>& adam, const ExampleSet& set,
                   const std::vector<Mat<S>>& external, Rng& rng, int epoch) {
  const auto& cfg = model.config();
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);
  double total = 0.0;
  std::size_t tokens = 0;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  for (std::size_t start = 0, batch = 0; start < order.size(); start += bs, ++batch) {
    const std::size_t end = std::min(order.size(), start + bs);
    std::size_t batch_tokens = 0;
    for (std::size_t k = start; k < end; ++k) batch_tokens += set.examples[order[k]].label_ids.size() - 1;
    model.params().zero_grad();
    double batch_loss = 0.0;
    for (std::size_t k = start; k < end; ++k) {
      const std::size_t i = order[k];
      Tape<S> t;
      const Var l = model.loss(t, set.view(i, external), set.examples[i].label_ids,
                               S(1) / static_cast<S>(batch_tokens), &rng);
      batch_loss += static_cast<double>(t.value(l)(0, 0));
      t.backward(l);
    }
    if (!std::isfinite(batch_loss)) throw TrainingDiverged(epoch, static_cast<int>(batch));
    adam.step(model.params());
    total += batch_loss * static_cast<double>(batch_tokens);
    tokens += batch_tokens;
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

/// Trains from a seeded initialisation and keeps the parameters of the
/// epoch with the lowest validation loss (earliest on ties). Both recorded
/// losses are dropout-free means measured after the epoch's updates. Single-threaded
/// and bitwise reproducible for a fixed config.
inline TrainResult train(const ModelConfig& config, int vocab_size, const ExampleSet& train_set,
                         const ExampleSet& val_set, const TrainOptions& options = {}) {
  config.validate();
  if (train_set.size() == 0) throw CorpusError("training split is empty");
  if (val_set.size() == 0) throw CorpusError("validation split is empty");
  Seq2Seq<float> model(config, vocab_size, config.seed);
  Rng rng(config.seed + 1);
  Adam<float> adam(config.learning_rate, config.adam);
  TrainResult result{model, {}, 0};
  double best = std::numeric_limits<double>::infinity();
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    train_epoch(model, adam, train_set, train_set.external, rng, epoch);
    rec.train_loss = mean_loss(model, train_set, train_set.external);
    rec.val_loss = &val_set == &train_set ? rec.train_loss : mean_loss(model, val_set, val_set.external);
    if (!std::isfinite(rec.train_loss)) throw TrainingDiverged(epoch, -1);
    if (!std::isfinite(rec.val_loss)) throw TrainingDiverged(epoch, -1);
    if (rec.val_loss < best) {
      best = rec.val_loss;
      result.model.params().assign_values(model.params());
      result.selected_epoch = epoch;
    }
    result.history.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }
  return result;
}

}  // namespace nl2vis::model
