#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2vis/error.hpp"

namespace nl2vis::model {

enum class EncoderVariant { native, external, external_cnn, combined };

inline std::string_view to_string(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::native: return "native";
    case EncoderVariant::external: return "external";
    case EncoderVariant::external_cnn: return "external_cnn";
    case EncoderVariant::combined: return "combined";
  }
  return "?";
}

inline std::optional<EncoderVariant> encoder_variant_from(std::string_view s) {
  for (auto v : {EncoderVariant::native, EncoderVariant::external, EncoderVariant::external_cnn,
                 EncoderVariant::combined})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

inline bool uses_external(EncoderVariant v) { return v != EncoderVariant::native; }
inline bool uses_native(EncoderVariant v) {
  return v == EncoderVariant::native || v == EncoderVariant::combined;
}

struct ConvSpec {
  int width = 3;
  int channels = 32;
  bool operator==(const ConvSpec&) const = default;
};

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // 0 disables clipping
  bool operator==(const AdamSettings&) const = default;
};

struct ModelConfig {
  int d_model = 64;
  int n_heads = 2;
  int n_layers = 2;
  int ff_dim = 128;
  double dropout = 0.1;
  int max_len = 256;
  EncoderVariant encoder_variant = EncoderVariant::native;
  int external_dim = 0;
  std::vector<ConvSpec> cnn = {{3, 32}, {5, 32}};
  double learning_rate = 0.0005;
  int epochs = 5;
  int batch_size = 8;
  std::uint32_t seed = 1;
  AdamSettings adam;

  bool operator==(const ModelConfig&) const = default;

  /// Throws ConfigError on the first broken invariant.
  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("invalid model config: " + m); };
    if (d_model <= 0) fail("d_model must be positive");
    if (n_heads <= 0 || d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
    if (n_layers < 1) fail("n_layers must be at least 1");
    if (ff_dim <= 0) fail("ff_dim must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
    if (max_len < 2) fail("max_len must be at least 2");
    if (uses_external(encoder_variant) && external_dim <= 0)
      fail("variant " + std::string(to_string(encoder_variant)) + " needs external_dim > 0");
    if (encoder_variant == EncoderVariant::external_cnn) {
      if (cnn.empty()) fail("external_cnn needs at least one kernel");
      int total = 0;
      for (const auto& c : cnn) {
        if (c.width < 1 || c.channels < 1) fail("cnn kernels need positive width and channels");
        total += c.channels;
      }
      if (total != d_model) fail("cnn channels must sum to d_model");
    }
    if (!(learning_rate >= 0.0)) fail("learning_rate must be non-negative");
    if (epochs < 1) fail("epochs must be at least 1");
    if (batch_size < 1) fail("batch_size must be at least 1");
  }

  /// Kernel list scaled to the current d_model: widths 3 and 5, d_model/2 each.
  static std::vector<ConvSpec> default_cnn(int d_model) {
    return {{3, d_model / 2}, {5, d_model - d_model / 2}};
  }
};

inline nlohmann::json to_json(const ModelConfig& c) {
  nlohmann::json cnn = nlohmann::json::array();
  for (const auto& k : c.cnn) cnn.push_back({k.width, k.channels});
  return {{"d_model", c.d_model},
          {"n_heads", c.n_heads},
          {"n_layers", c.n_layers},
          {"ff_dim", c.ff_dim},
          {"dropout", c.dropout},
          {"max_len", c.max_len},
          {"encoder_variant", to_string(c.encoder_variant)},
          {"external_dim", c.external_dim},
          {"cnn", cnn},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"adam",
           {{"beta1", c.adam.beta1},
            {"beta2", c.adam.beta2},
            {"eps", c.adam.eps},
            {"clip_norm", c.adam.clip_norm}}}};
}

/// Reads a config; absent keys keep their defaults, unknown keys are errors.
/// When d_model is given without cnn, the kernel list follows d_model.
inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  try {
    for (const auto& [key, val] : j.items()) {
      if (key == "d_model") c.d_model = val.get<int>();
      else if (key == "n_heads") c.n_heads = val.get<int>();
      else if (key == "n_layers") c.n_layers = val.get<int>();
      else if (key == "ff_dim") c.ff_dim = val.get<int>();
      else if (key == "dropout") c.dropout = val.get<double>();
      else if (key == "max_len") c.max_len = val.get<int>();
      else if (key == "encoder_variant") {
        const auto v = encoder_variant_from(val.get<std::string>());
        if (!v) throw ConfigError("unknown encoder_variant '" + val.get<std::string>() + "'");
        c.encoder_variant = *v;
      } else if (key == "external_dim") c.external_dim = val.get<int>();
      else if (key == "cnn") {
        c.cnn.clear();
        for (const auto& k : val) c.cnn.push_back({k.at(0).get<int>(), k.at(1).get<int>()});
      } else if (key == "learning_rate") c.learning_rate = val.get<double>();
      else if (key == "epochs") c.epochs = val.get<int>();
      else if (key == "batch_size") c.batch_size = val.get<int>();
      else if (key == "seed") c.seed = val.get<std::uint32_t>();
      else if (key == "adam") {
        for (const auto& [ak, av] : val.items()) {
          if (ak == "beta1") c.adam.beta1 = av.get<double>();
          else if (ak == "beta2") c.adam.beta2 = av.get<double>();
          else if (ak == "eps") c.adam.eps = av.get<double>();
          else if (ak == "clip_norm") c.adam.clip_norm = av.get<double>();
          else throw ConfigError("unknown adam key '" + ak + "'");
        }
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  if (j.contains("d_model") && !j.contains("cnn")) c.cnn = ModelConfig::default_cnn(c.d_model);
  return c;
}

}  // namespace nl2vis::model
