#pragma once

#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nl2vis/dataset/source_sequence.hpp"
#include "nl2vis/dataset/vocabulary.hpp"
#include "nl2vis/error.hpp"
#include "nl2vis/model/config.hpp"
#include "nl2vis/model/ops.hpp"
#include "nl2vis/model/parameters.hpp"

namespace nl2vis::model {

/// One encoder input: token ids, segment ids and, for external variants,
/// one bridge vector per token.
template <typename S>
struct SourceView {
  std::span<const int> ids;
  std::span<const int> segments;
  const Mat<S>* external = nullptr;
};

/// Post-LN transformer encoder/decoder with swappable encoder front ends.
template <typename S>
class Seq2Seq {
 public:
  Seq2Seq(const ModelConfig& config, int vocab_size) : config_(config), vocab_size_(vocab_size) {
    config_.validate();
    if (vocab_size < 5) throw ConfigError("vocabulary too small");
    build();
  }

  /// Fresh parameters drawn from `seed`.
  Seq2Seq(const ModelConfig& config, int vocab_size, std::uint32_t seed) : Seq2Seq(config, vocab_size) {
    Rng rng(seed);
    params_.initialize(rng);
  }

  const ModelConfig& config() const { return config_; }
  int vocab_size() const { return vocab_size_; }
  ParameterSet<S>& params() { return params_; }
  const ParameterSet<S>& params() const { return params_; }

  // token + position (+ segment) embedding, each row d_model wide.
  Var embed(Tape<S>& t, bool encoder_side, std::span<const int> ids,
            std::span<const int> segments, std::span<const int> positions) const {
    const auto& e = encoder_side ? enc_emb_ : dec_emb_;
    if (positions.size() != ids.size()) throw ShapeError("embed: positions/ids length mismatch");
    for (int p : positions)
      if (p < 0 || p >= config_.max_len)
        throw ShapeError("position " + std::to_string(p) + " exceeds max_len " +
                         std::to_string(config_.max_len));
    for (int id : ids)
      if (id < 0 || id >= vocab_size_) throw ShapeError("token id " + std::to_string(id) + " out of range");
    Var x = add(t, gather_rows(t, leaf(t, e.tok), {ids.begin(), ids.end()}),
                gather_rows(t, leaf(t, e.pos), {positions.begin(), positions.end()}));
    if (encoder_side) {
      if (segments.size() != ids.size()) throw ShapeError("embed: segments/ids length mismatch");
      for (int s : segments)
        if (s < 0 || s >= dataset::kSegmentCount) throw ShapeError("segment id out of range");
      x = add(t, x, gather_rows(t, leaf(t, e.seg), {segments.begin(), segments.end()}));
    }
    return x;
  }

  Var embed(Tape<S>& t, bool encoder_side, std::span<const int> ids,
            std::span<const int> segments) const {
    std::vector<int> pos(ids.size());
    std::iota(pos.begin(), pos.end(), 0);
    return embed(t, encoder_side, ids, segments, pos);
  }

  /// Multi-head attention block: Q/K/V projections, attention, output projection.
  Var multi_head_attention(Tape<S>& t, int block, Var queries, Var keys_values,
                           std::shared_ptr<const Mask> mask) const {
    return multi_head_attention(t, block, queries, project_kv(t, block, keys_values), mask);
  }

  Var encode(Tape<S>& t, const SourceView<S>& src, Rng* dropout_rng = nullptr) const {
    const std::size_t n = src.ids.size();
    if (n == 0) throw ShapeError("encode: empty source");
    const auto variant = config_.encoder_variant;
    std::optional<Var> native, external;
    if (uses_native(variant)) {
      Var x = dropout(t, embed(t, true, src.ids, src.segments), config_.dropout, dropout_rng);
      for (int l = 0; l < config_.n_layers; ++l) {
        const auto& L = enc_layers_[static_cast<std::size_t>(l)];
        x = residual_norm(t, x, multi_head_attention(t, L.self, x, x, nullptr), L.ln1, dropout_rng);
        x = residual_norm(t, x, feed_forward(t, L.ff, x), L.ln2, dropout_rng);
      }
      native = x;
    }
    if (uses_external(variant)) {
      if (!src.external)
        throw EncoderError("encoder variant " + std::string(to_string(variant)) +
                           " needs external embeddings");
      if (static_cast<std::size_t>(src.external->rows()) != n ||
          src.external->cols() != config_.external_dim)
        throw ShapeError("external embeddings must be " + std::to_string(n) + "x" +
                         std::to_string(config_.external_dim));
      Var p = linear(t, t.ref(*src.external), leaf(t, ext_.proj_w), leaf(t, ext_.proj_b));
      if (variant == EncoderVariant::external_cnn) {
        std::optional<Var> stacked;
        for (std::size_t k = 0; k < config_.cnn.size(); ++k) {
          Var c = linear(t, im2col(t, p, config_.cnn[k].width), leaf(t, ext_.conv_w[k]),
                         leaf(t, ext_.conv_b[k]));
          stacked = stacked ? concat_cols(t, *stacked, c) : c;
        }
        p = *stacked;
      }
      external = p;
    }
    if (variant == EncoderVariant::combined)
      return linear(t, concat_cols(t, *native, *external), leaf(t, ext_.comb_w), leaf(t, ext_.comb_b));
    return native ? *native : *external;
  }

  /// Logits for every prefix position: row i scores the token after prefix[0..i].
  Var decode(Tape<S>& t, Var memory, std::span<const int> prefix, Rng* dropout_rng = nullptr) const {
    if (prefix.empty()) throw ShapeError("decode: empty prefix");
    if (t.value(memory).cols() != config_.d_model) throw ShapeError("decode: memory width mismatch");
    auto causal = std::make_shared<const Mask>(causal_mask(static_cast<Eigen::Index>(prefix.size())));
    Var y = dropout(t, embed(t, false, prefix, {}), config_.dropout, dropout_rng);
    for (int l = 0; l < config_.n_layers; ++l) {
      const auto& L = dec_layers_[static_cast<std::size_t>(l)];
      y = residual_norm(t, y, multi_head_attention(t, L.self, y, y, causal), L.ln1, dropout_rng);
      y = residual_norm(t, y, multi_head_attention(t, L.cross, y, memory, nullptr), L.ln2, dropout_rng);
      y = residual_norm(t, y, feed_forward(t, L.ff, y), L.ln3, dropout_rng);
    }
    return linear(t, y, leaf(t, out_w_), leaf(t, out_b_));
  }

  /// Teacher-forced summed cross-entropy of `label_ids` (<sos> ... <eos>)
  /// times `factor`. Row t of the logits is scored against label t+1.
  Var loss(Tape<S>& t, const SourceView<S>& src, std::span<const int> label_ids, S factor,
           Rng* dropout_rng = nullptr) const {
    if (label_ids.size() < 2) throw ShapeError("loss: label needs at least <sos> and one target");
    Var memory = encode(t, src, dropout_rng);
    Var logits = decode(t, memory, label_ids.first(label_ids.size() - 1), dropout_rng);
    return cross_entropy(t, logits, {label_ids.begin() + 1, label_ids.end()}, factor,
                         dataset::Vocabulary::kPad);
  }

  // Inference helpers; safe to call concurrently on a const model.
  Mat<S> encode_eval(const SourceView<S>& src) const {
    Tape<S> t(false);
    return t.value(encode(t, src));
  }

  Mat<S> logits_eval(const Mat<S>& memory, std::span<const int> prefix) const {
    Tape<S> t(false);
    return t.value(decode(t, t.ref(memory), prefix));
  }

  RowVec<S> next_logits(const Mat<S>& memory, std::span<const int> prefix) const {
    const Mat<S> all = logits_eval(memory, prefix);
    return all.row(all.rows() - 1);
  }

  /// Summed token loss without dropout, plus the token count.
  std::pair<double, std::size_t> eval_loss(const SourceView<S>& src, std::span<const int> label_ids) const {
    Tape<S> t(false);
    const Var l = loss(t, src, label_ids, S(1));
    return {static_cast<double>(t.value(l)(0, 0)), label_ids.size() - 1};
  }

 private:
  struct Embedding {
    int tok = -1, pos = -1, seg = -1;
  };
  struct Attn {
    int wq, bq, wk, bk, wv, bv, wo, bo;
  };
  struct Norm {
    int g, b;
  };
  struct FeedForward {
    int w1, b1, w2, b2;
  };
  struct EncLayer {
    int self;
    Norm ln1;
    FeedForward ff;
    Norm ln2;
  };
  struct DecLayer {
    int self;
    Norm ln1;
    int cross;
    Norm ln2;
    FeedForward ff;
    Norm ln3;
  };
  struct External {
    int proj_w = -1, proj_b = -1;
    std::vector<int> conv_w, conv_b;
    int comb_w = -1, comb_b = -1;
  };

  Var leaf(Tape<S>& t, int index) const {
    auto& p = const_cast<Parameter<S>&>(params_[index]);
    return t.recording() ? t.param(p) : t.ref(p.value);
  }

  int add_attention(const std::string& prefix) {
    const int d = config_.d_model;
    Attn a{};
    a.wq = params_.add(prefix + ".wq", d, d, Init::xavier);
    a.bq = params_.add(prefix + ".bq", 1, d, Init::zeros);
    a.wk = params_.add(prefix + ".wk", d, d, Init::xavier);
    a.bk = params_.add(prefix + ".bk", 1, d, Init::zeros);
    a.wv = params_.add(prefix + ".wv", d, d, Init::xavier);
    a.bv = params_.add(prefix + ".bv", 1, d, Init::zeros);
    a.wo = params_.add(prefix + ".wo", d, d, Init::xavier);
    a.bo = params_.add(prefix + ".bo", 1, d, Init::zeros);
    attn_.push_back(a);
    return static_cast<int>(attn_.size()) - 1;
  }

  Norm add_norm(const std::string& prefix) {
    return {params_.add(prefix + ".g", 1, config_.d_model, Init::ones),
            params_.add(prefix + ".b", 1, config_.d_model, Init::zeros)};
  }

  FeedForward add_ff(const std::string& prefix) {
    const int d = config_.d_model, f = config_.ff_dim;
    return {params_.add(prefix + ".w1", d, f, Init::xavier), params_.add(prefix + ".b1", 1, f, Init::zeros),
            params_.add(prefix + ".w2", f, d, Init::xavier), params_.add(prefix + ".b2", 1, d, Init::zeros)};
  }

  void build() {
    const int d = config_.d_model;
    const auto variant = config_.encoder_variant;
    if (uses_native(variant)) {
      enc_emb_.tok = params_.add("enc.tok", vocab_size_, d, Init::embedding);
      enc_emb_.pos = params_.add("enc.pos", config_.max_len, d, Init::embedding);
      enc_emb_.seg = params_.add("enc.seg", dataset::kSegmentCount, d, Init::embedding);
      for (int l = 0; l < config_.n_layers; ++l) {
        const std::string p = "enc.l" + std::to_string(l);
        EncLayer L{};
        L.self = add_attention(p + ".self");
        L.ln1 = add_norm(p + ".ln1");
        L.ff = add_ff(p + ".ff");
        L.ln2 = add_norm(p + ".ln2");
        enc_layers_.push_back(L);
      }
    }
    if (uses_external(variant)) {
      ext_.proj_w = params_.add("ext.proj.w", config_.external_dim, d, Init::xavier);
      ext_.proj_b = params_.add("ext.proj.b", 1, d, Init::zeros);
      if (variant == EncoderVariant::external_cnn) {
        for (std::size_t k = 0; k < config_.cnn.size(); ++k) {
          const auto& c = config_.cnn[k];
          const std::string p = "ext.conv" + std::to_string(k);
          ext_.conv_w.push_back(params_.add(p + ".w", c.width * d, c.channels, Init::xavier));
          ext_.conv_b.push_back(params_.add(p + ".b", 1, c.channels, Init::zeros));
        }
      }
      if (variant == EncoderVariant::combined) {
        ext_.comb_w = params_.add("comb.w", 2 * d, d, Init::xavier);
        ext_.comb_b = params_.add("comb.b", 1, d, Init::zeros);
      }
    }
    dec_emb_.tok = params_.add("dec.tok", vocab_size_, d, Init::embedding);
    dec_emb_.pos = params_.add("dec.pos", config_.max_len, d, Init::embedding);
    for (int l = 0; l < config_.n_layers; ++l) {
      const std::string p = "dec.l" + std::to_string(l);
      DecLayer L{};
      L.self = add_attention(p + ".self");
      L.ln1 = add_norm(p + ".ln1");
      L.cross = add_attention(p + ".cross");
      L.ln2 = add_norm(p + ".ln2");
      L.ff = add_ff(p + ".ff");
      L.ln3 = add_norm(p + ".ln3");
      dec_layers_.push_back(L);
    }
    out_w_ = params_.add("out.w", d, vocab_size_, Init::xavier);
    out_b_ = params_.add("out.b", 1, vocab_size_, Init::zeros);
  }

  std::pair<Var, Var> project_kv(Tape<S>& t, int block, Var x) const {
    const auto& a = attn_[static_cast<std::size_t>(block)];
    return {linear(t, x, leaf(t, a.wk), leaf(t, a.bk)), linear(t, x, leaf(t, a.wv), leaf(t, a.bv))};
  }

  Var multi_head_attention(Tape<S>& t, int block, Var queries, std::pair<Var, Var> kv,
                           std::shared_ptr<const Mask> mask) const {
    const auto& a = attn_[static_cast<std::size_t>(block)];
    Var q = linear(t, queries, leaf(t, a.wq), leaf(t, a.bq));
    Var h = attention(t, q, kv.first, kv.second, config_.n_heads, std::move(mask));
    return linear(t, h, leaf(t, a.wo), leaf(t, a.bo));
  }

  Var feed_forward(Tape<S>& t, const FeedForward& f, Var x) const {
    Var h = relu(t, linear(t, x, leaf(t, f.w1), leaf(t, f.b1)));
    return linear(t, h, leaf(t, f.w2), leaf(t, f.b2));
  }

  Var residual_norm(Tape<S>& t, Var x, Var sub, const Norm& n, Rng* rng) const {
    return layer_norm(t, add(t, x, dropout(t, sub, config_.dropout, rng)), leaf(t, n.g), leaf(t, n.b));
  }

  ModelConfig config_;
  int vocab_size_;
  ParameterSet<S> params_;
  Embedding enc_emb_, dec_emb_;
  std::vector<Attn> attn_;
  std::vector<EncLayer> enc_layers_;
  std::vector<DecLayer> dec_layers_;
  External ext_;
  int out_w_ = -1, out_b_ = -1;
};

}  // namespace nl2vis::model
