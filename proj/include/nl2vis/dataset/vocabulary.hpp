#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nl2vis/dataset/source_sequence.hpp"
#include "nl2vis/error.hpp"

namespace nl2vis::dataset {

/// Closed token <-> id map shared by source and label sides. Ids 0..3 are
/// reserved; the remaining tokens are sorted bytewise, so ids do not depend on
/// insertion order.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSos = 2;
  static constexpr int kEos = 3;
  static constexpr std::array<std::string_view, 4> kReserved = {"<pad>", "<unk>", "<sos>",
                                                                "<eos>"};

  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

  /// Builds from any token collection; duplicates and reserved names are dropped.
  explicit Vocabulary(std::vector<std::string> tokens) {
    std::set<std::string> unique(std::make_move_iterator(tokens.begin()),
                                 std::make_move_iterator(tokens.end()));
    for (auto r : kReserved) unique.erase(std::string(r));
    for (auto r : kReserved) id_to_token_.emplace_back(r);
    id_to_token_.insert(id_to_token_.end(), unique.begin(), unique.end());
    for (std::size_t i = 0; i < id_to_token_.size(); ++i)
      token_to_id_.emplace(id_to_token_[i], static_cast<int>(i));
  }

  static Vocabulary build(const std::vector<TrainingItem>& items) {
    std::vector<std::string> tokens;
    for (const auto& item : items) {
      tokens.insert(tokens.end(), item.source.tokens.begin(), item.source.tokens.end());
      tokens.insert(tokens.end(), item.label_tokens.begin(), item.label_tokens.end());
    }
    return Vocabulary(std::move(tokens));
  }

  int size() const { return static_cast<int>(id_to_token_.size()); }

  std::optional<int> find(const std::string& token) const {
    const auto it = token_to_id_.find(token);
    if (it == token_to_id_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const std::string& token) const { return token_to_id_.contains(token); }

  int id_or_unk(const std::string& token) const { return find(token).value_or(kUnk); }

  const std::string& token(int id) const {
    if (id < 0 || id >= size()) throw EncodingError("token id " + std::to_string(id) + " out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// Non-reserved tokens in id order, as stored on disk.
  std::vector<std::string> entries() const {
    return {id_to_token_.begin() + kReserved.size(), id_to_token_.end()};
  }

  void save(std::ostream& out) const {
    for (const auto& t : entries()) out << t << '\n';
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write vocabulary '" + path.string() + "'");
    save(out);
  }

  static Vocabulary load(std::istream& in) {
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) tokens.push_back(line);
    return Vocabulary(std::move(tokens));
  }

  static Vocabulary load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read vocabulary '" + path.string() + "'");
    return load(in);
  }

  bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace nl2vis::dataset
