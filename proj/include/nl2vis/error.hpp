#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nl2vis {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LexError : public Error {
 public:
  LexError(const std::string& message, std::size_t offset)
      : Error(message + " at byte " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Raised by the vega-zero parser. `clause()` names the clause being read.
class ParseError : public Error {
 public:
  ParseError(std::string clause, const std::string& message)
      : Error("parse error in '" + clause + "': " + message), clause_(std::move(clause)) {}

  const std::string& clause() const noexcept { return clause_; }

 private:
  std::string clause_;
};

class CompileError : public Error {
 public:
  using Error::Error;
};

class UnsupportedConstruct : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class CorpusError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class EncoderError : public Error {
 public:
  using Error::Error;
};

class BridgeError : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(int epoch, int batch)
      : Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}

  int epoch() const noexcept { return epoch_; }
  int batch() const noexcept { return batch_; }

 private:
  int epoch_;
  int batch_;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied request that cannot be served (unknown table, bad field).
class RequestError : public Error {
 public:
  using Error::Error;
};

}  // namespace nl2vis
