#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2vis/dataset/vocabulary.hpp"
#include "nl2vis/error.hpp"
#include "nl2vis/model/seq2seq.hpp"

namespace nl2vis::model {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool operator==(const EpochRecord&) const = default;
};

/// A trained model ready for inference: configuration and parameters, the
/// vocabulary they index, and the loss history that picked them.
struct Checkpoint {
  dataset::Vocabulary vocab;
  Seq2Seq<float> model;
  std::vector<EpochRecord> history;
  int selected_epoch = 0;
  std::string external_model;  // bridge model name for external variants

  const ModelConfig& config() const { return model.config(); }
};

inline constexpr char kCheckpointMagic[8] = {'N', 'L', '2', 'V', 'I', 'S', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline std::uint64_t get_le(const std::string& in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)]))
         << (8 * i);
  return v;
}

}  // namespace detail

inline std::string checkpoint_bytes(const Checkpoint& ck) {
  nlohmann::json header;
  header["format"] = "nl2vis-checkpoint";
  header["config"] = to_json(ck.config());
  header["vocab_size"] = ck.vocab.size();
  header["vocab"] = ck.vocab.entries();
  header["external_model"] = ck.external_model;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& r : ck.history)
    hist.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss}});
  header["history"] = hist;
  header["selected_epoch"] = ck.selected_epoch;
  nlohmann::json index = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& p : ck.model.params()) {
    index.push_back({{"name", p.name}, {"shape", {p.value.rows(), p.value.cols()}}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(p.value.size());
  }
  header["tensors"] = index;
  const std::string h = header.dump();

  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u64(out, h.size());
  out += h;
  out.reserve(out.size() + offset * 4);
  for (const auto& p : ck.model.params())
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      std::uint32_t bits;
      const float f = p.value.data()[i];
      std::memcpy(&bits, &f, 4);
      detail::put_u32(out, bits);
    }
  return out;
}

/// Writes via a temporary file and rename, so readers never see a partial file.
inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const std::string bytes = checkpoint_bytes(ck);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint checkpoint_from_bytes(const std::string& in) {
  auto bad = [](const std::string& m) { throw CheckpointError("corrupt checkpoint: " + m); };
  if (in.size() < 20 || std::memcmp(in.data(), kCheckpointMagic, 8) != 0) bad("bad magic");
  const auto version = detail::get_le(in, 8, 4);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto hlen = detail::get_le(in, 12, 8);
  if (hlen > in.size() - 20) bad("header length past end of file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.substr(20, hlen));
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("header is not JSON: ") + e.what());
  }
  try {
    const ModelConfig config = model_config_from_json(header.at("config"));
    dataset::Vocabulary vocab(header.at("vocab").get<std::vector<std::string>>());
    if (vocab.size() != header.at("vocab_size").get<int>()) bad("vocabulary size mismatch");
    Checkpoint ck{std::move(vocab), Seq2Seq<float>(config, header.at("vocab_size").get<int>()), {}, 0,
                  header.value("external_model", std::string())};
    for (const auto& r : header.at("history"))
      ck.history.push_back({r.at("epoch").get<int>(), r.at("train_loss").get<double>(),
                            r.at("val_loss").get<double>()});
    ck.selected_epoch = header.at("selected_epoch").get<int>();

    const auto& index = header.at("tensors");
    if (index.size() != ck.model.params().size()) bad("tensor count does not match config");
    const std::size_t base = 20 + hlen;
    std::size_t i = 0;
    for (auto& p : ck.model.params()) {
      const auto& e = index[i++];
      if (e.at("name").get<std::string>() != p.name) bad("unexpected tensor '" + e.at("name").get<std::string>() + "'");
      if (e.at("shape").at(0).get<Eigen::Index>() != p.value.rows() ||
          e.at("shape").at(1).get<Eigen::Index>() != p.value.cols())
        bad("shape mismatch for '" + p.name + "'");
      const std::size_t off = base + 4 * e.at("offset").get<std::size_t>();
      if (off + 4 * static_cast<std::size_t>(p.value.size()) > in.size()) bad("truncated tensor data");
      for (Eigen::Index k = 0; k < p.value.size(); ++k) {
        const auto bits = static_cast<std::uint32_t>(detail::get_le(in, off + 4 * static_cast<std::size_t>(k), 4));
        float f;
        std::memcpy(&f, &bits, 4);
        p.value.data()[k] = f;
      }
      if (!p.value.allFinite()) bad("non-finite values in '" + p.name + "'");
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("corrupt checkpoint config: ") + e.what());
  }
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_bytes(buf.str());
}

/// epoch,train_loss,val_loss with full round-trip precision.
inline std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "epoch,train_loss,val_loss\n";
  for (const auto& r : history) out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << '\n';
  return out.str();
}

}  // namespace nl2vis::model
