#pragma once

#include <fcntl.h>
#include <netdb.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2vis/error.hpp"
#include "nl2vis/model/tensor.hpp"
#include "nl2vis/vega_zero/lexer.hpp"

namespace nl2vis::model {

using vega_zero::TokenSeq;

/// Source of one external vector per source token.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dim() const = 0;
  virtual std::string model_name() const = 0;
  virtual Mat<float> embed(const TokenSeq& tokens) = 0;
};

namespace detail {

/// Newline-framed byte channel over a pair of file descriptors.
class LineChannel {
 public:
  LineChannel(int read_fd, int write_fd) : rfd_(read_fd), wfd_(write_fd) {}
  LineChannel(const LineChannel&) = delete;
  LineChannel& operator=(const LineChannel&) = delete;
  virtual ~LineChannel() {
    if (wfd_ >= 0 && wfd_ != rfd_) ::close(wfd_);
    if (rfd_ >= 0) ::close(rfd_);
  }

  void write_line(const std::string& line) {
    std::string data = line + "\n";
    std::size_t done = 0;
    while (done < data.size()) {
      const ssize_t n = send_or_write(wfd_, data.data() + done, data.size() - done, socket_);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BridgeError(std::string("bridge write failed: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      char chunk[65536];
      const ssize_t n = ::read(rfd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw BridgeError("bridge closed the connection");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  void close_write() {
    if (wfd_ >= 0 && wfd_ != rfd_) ::close(wfd_);
    wfd_ = -1;
  }
  bool socket_ = false;

 private:
  static ssize_t send_or_write(int fd, const char* p, std::size_t n, bool socket) {
    return socket ? ::send(fd, p, n, MSG_NOSIGNAL) : ::write(fd, p, n);
  }

  int rfd_, wfd_;
  std::string buffer_;
};

class ProcessChannel : public LineChannel {
 public:
  static std::unique_ptr<ProcessChannel> spawn(const std::string& command) {
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw BridgeError("pipe failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw BridgeError("pipe failed");
    }
    ::signal(SIGPIPE, SIG_IGN);
    const pid_t pid = ::fork();
    if (pid < 0) throw BridgeError("fork failed");
    if (pid == 0) {
      ::dup2(to_child[0], 0);
      ::dup2(from_child[1], 1);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
    return std::unique_ptr<ProcessChannel>(new ProcessChannel(from_child[0], to_child[1], pid));
  }

  ~ProcessChannel() override {
    close_write();
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

 private:
  ProcessChannel(int r, int w, pid_t pid) : LineChannel(r, w), pid_(pid) {}
  pid_t pid_;
};

class SocketChannel : public LineChannel {
 public:
  static std::unique_ptr<SocketChannel> connect(const std::string& host, const std::string& port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || !res)
      throw BridgeError("cannot resolve bridge host '" + host + "'");
    int fd = -1;
    for (addrinfo* a = res; a; a = a->ai_next) {
      fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw BridgeError("bridge unreachable at " + host + ":" + port);
    auto ch = std::unique_ptr<SocketChannel>(new SocketChannel(fd));
    return ch;
  }

 private:
  explicit SocketChannel(int fd) : LineChannel(fd, fd) { socket_ = true; }
};

}  // namespace detail

/// Client for the line-delimited JSON bridge protocol. One request per line:
/// {"kind":"hello"|"embed"|"generate","tokens":[...]}; one response per line,
/// or {"error":{"code","message"}}. Requests are serialised by a mutex.
class BridgeClient : public EmbeddingProvider {
 public:
  /// `spec` is "stdio:<command>" or "tcp:<host>:<port>". Performs the hello
  /// handshake.
  static std::unique_ptr<BridgeClient> connect(const std::string& spec) {
    std::unique_ptr<detail::LineChannel> ch;
    if (spec.rfind("stdio:", 0) == 0) {
      ch = detail::ProcessChannel::spawn(spec.substr(6));
    } else if (spec.rfind("tcp:", 0) == 0) {
      const std::string rest = spec.substr(4);
      const auto colon = rest.rfind(':');
      if (colon == std::string::npos) throw BridgeError("bridge spec needs tcp:<host>:<port>");
      ch = detail::SocketChannel::connect(rest.substr(0, colon), rest.substr(colon + 1));
    } else {
      throw BridgeError("bridge spec must start with stdio: or tcp:, got '" + spec + "'");
    }
    std::unique_ptr<BridgeClient> client(new BridgeClient(std::move(ch)));
    client->hello();
    return client;
  }

  int dim() const override { return dim_; }
  std::string model_name() const override { return model_name_; }

  Mat<float> embed(const TokenSeq& tokens) override {
    const auto r = request({{"kind", "embed"}, {"tokens", tokens}});
    const auto it = r.find("vectors");
    if (it == r.end() || !it->is_array()) throw BridgeError("embed response lacks 'vectors'");
    if (it->size() != tokens.size())
      throw BridgeError("bridge returned " + std::to_string(it->size()) + " vectors for " +
                        std::to_string(tokens.size()) + " tokens");
    Mat<float> out(static_cast<Eigen::Index>(tokens.size()), dim_);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto& row = (*it)[i];
      if (!row.is_array() || static_cast<int>(row.size()) != dim_)
        throw BridgeError("bridge vector " + std::to_string(i) + " has wrong width");
      for (int k = 0; k < dim_; ++k) out(static_cast<Eigen::Index>(i), k) = row[static_cast<std::size_t>(k)].get<float>();
    }
    return out;
  }

  /// External-generator mode: the bridge produces output tokens itself.
  TokenSeq generate(const TokenSeq& tokens) {
    const auto r = request({{"kind", "generate"}, {"tokens", tokens}});
    if (!r.contains("tokens")) throw BridgeError("generate response lacks 'tokens'");
    return r.at("tokens").get<TokenSeq>();
  }

 private:
  explicit BridgeClient(std::unique_ptr<detail::LineChannel> ch) : channel_(std::move(ch)) {}

  void hello() {
    const auto r = request({{"kind", "hello"}});
    if (!r.contains("dim") || !r.at("dim").is_number_integer() || r.at("dim").get<int>() <= 0)
      throw BridgeError("hello response lacks a positive 'dim'");
    dim_ = r.at("dim").get<int>();
    model_name_ = r.value("model_name", std::string());
  }

  nlohmann::json request(const nlohmann::json& req) {
    std::lock_guard lock(mutex_);
    channel_->write_line(req.dump());
    nlohmann::json r;
    try {
      r = nlohmann::json::parse(channel_->read_line());
    } catch (const nlohmann::json::exception& e) {
      throw BridgeError(std::string("malformed bridge response: ") + e.what());
    }
    if (!r.is_object()) throw BridgeError("bridge response is not an object");
    if (r.contains("error")) {
      const auto& e = r.at("error");
      throw BridgeError("bridge error " + e.value("code", std::string("?")) + ": " +
                        e.value("message", std::string()));
    }
    return r;
  }

  std::unique_ptr<detail::LineChannel> channel_;
  std::mutex mutex_;
  int dim_ = 0;
  std::string model_name_;
};

/// Memoises embeddings by token sequence.
class CachingProvider : public EmbeddingProvider {
 public:
  explicit CachingProvider(std::shared_ptr<EmbeddingProvider> inner) : inner_(std::move(inner)) {}
  int dim() const override { return inner_->dim(); }
  std::string model_name() const override { return inner_->model_name(); }
  Mat<float> embed(const TokenSeq& tokens) override {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(tokens);
    if (it == cache_.end()) it = cache_.emplace(tokens, inner_->embed(tokens)).first;
    return it->second;
  }

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
  std::mutex mutex_;
  std::map<TokenSeq, Mat<float>> cache_;
};

}  // namespace nl2vis::model
