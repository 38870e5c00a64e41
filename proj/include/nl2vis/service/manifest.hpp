#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "nl2vis/error.hpp"

namespace nl2vis::service {

/// FNV-1a over the file bytes, as 16 hex digits.
inline std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Record of one CLI run: written when the run starts, finalised when it ends.
class RunManifest {
 public:
  RunManifest(std::filesystem::path path, std::string command) : path_(std::move(path)) {
    doc_ = {{"command", std::move(command)}, {"status", "running"}, {"started_at", utc_timestamp()}};
  }

  nlohmann::json& fields() { return doc_; }
  const std::filesystem::path& path() const { return path_; }

  void write() const {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_);
    if (!out) throw IoError("cannot write manifest '" + path_.string() + "'");
    out << doc_.dump(2) << '\n';
  }

  void finish(int exit_code, const std::string& error = {}) {
    doc_["status"] = exit_code == 0 ? "ok" : "failed";
    doc_["exit_code"] = exit_code;
    doc_["finished_at"] = utc_timestamp();
    if (!error.empty()) doc_["error"] = error;
    write();
  }

 private:
  std::filesystem::path path_;
  nlohmann::json doc_;
};

/// Exclusive lock on a checkpoint path, held for the lifetime of the object.
class LockFile {
 public:
  explicit LockFile(std::filesystem::path target) : path_(target.string() + ".lock") {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) throw IoError("'" + target.string() + "' is locked by another run (" + path_.string() + ")");
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
  }
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;
  ~LockFile() {
    ::close(fd_);
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

}  // namespace nl2vis::service
