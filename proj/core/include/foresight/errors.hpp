#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace foresight {

// Every error the library raises derives from Error and carries a stable
// machine-readable kind, which the CLI reports on its error stream.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config_error", message) {}
};

// A record that could not be parsed. line() is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0)
      : Error("parse_error", line ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& message) : Error("invariant_violation", message) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& message) : Error("transport_error", message) {}
};

// Endpoint reply arrived but did not contain what the protocol requires.
class ReplyParseError : public Error {
 public:
  explicit ReplyParseError(const std::string& message) : Error("reply_parse_error", message) {}
};

class SplitRejected : public Error {
 public:
  explicit SplitRejected(const std::string& message) : Error("split_rejected", message) {}
};

class PartitionError : public Error {
 public:
  explicit PartitionError(const std::string& message) : Error("partition_error", message) {}
};

class UndefinedMetricError : public Error {
 public:
  explicit UndefinedMetricError(const std::string& message)
      : Error("undefined_metric", message) {}
};

class AlignmentError : public Error {
 public:
  AlignmentError(const std::string& message, std::vector<std::string> ids)
      : Error("alignment_error", message), ids_(std::move(ids)) {}

  const std::vector<std::string>& offending_ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

class GradientError : public Error {
 public:
  explicit GradientError(const std::string& message) : Error("non_finite_gradient", message) {}
};

class MissingArtifactError : public Error {
 public:
  MissingArtifactError(const std::string& path, const std::string& producer)
      : Error("missing_artifact",
              "missing artifact " + path + "; run `foresight " + producer + "` first"),
        producer_(producer) {}

  const std::string& producer() const noexcept { return producer_; }

 private:
  std::string producer_;
};

class StaleArtifactError : public Error {
 public:
  StaleArtifactError(const std::string& path, const std::string& producer)
      : Error("stale_artifact", "artifact " + path +
                                    " was produced under a different config; rerun `foresight " +
                                    producer + "`"),
        producer_(producer) {}

  const std::string& producer() const noexcept { return producer_; }

 private:
  std::string producer_;
};

}  // namespace foresight
