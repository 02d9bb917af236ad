#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace polyse {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  Ok = 0,
  Usage = 1,
  Data = 2,
  Divergence = 3,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::Data; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::Usage; }
};

// A command was run before the command producing its input.
class MissingArtifact : public Error {
 public:
  MissingArtifact(const std::string& artifact, const std::string& producer)
      : Error("missing artifact '" + artifact + "' (produce it with `" +
              producer + "`)") {}
  ExitCode exit_code() const noexcept override { return ExitCode::Usage; }
};

class KindConflict : public Error {
 public:
  using Error::Error;
};

class SchemaViolation : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

class Exhausted : public Error {
 public:
  using Error::Error;
};

class MissingEmbedding : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Metric undefined because a class is absent.
class Degenerate : public Error {
 public:
  using Error::Error;
};

class UnknownPair : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::Divergence; }
};

}  // namespace polyse
