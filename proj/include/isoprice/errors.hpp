#pragma once

#include <stdexcept>
#include <string>

namespace isoprice {

// Mirrors isp_status in isoprice.h; the C layer maps exceptions through code().
enum class ErrorCode {
  argument = 1,
  config = 2,
  stall = 3,
  degenerate_weights = 4,
  domain = 5,
  io = 6,
  state = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct ArgumentError : Error {
  explicit ArgumentError(const std::string& w) : Error(ErrorCode::argument, w) {}
};

// Configuration and input-parsing failures share exit code 2.
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorCode::config, w) {}
};

struct ParseError : ConfigError {
  ParseError(std::size_t row, const std::string& w)
      : ConfigError("row " + std::to_string(row) + ": " + w), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

struct StallError : Error {
  StallError(double epsilon, const std::string& w)
      : Error(ErrorCode::stall, w), epsilon_(epsilon) {}
  double epsilon() const noexcept { return epsilon_; }

 private:
  double epsilon_;
};

struct DegenerateWeightsError : Error {
  explicit DegenerateWeightsError(const std::string& w)
      : Error(ErrorCode::degenerate_weights, w) {}
};

// Parameter outside a family's support; the sampler treats it as zero prior mass.
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorCode::domain, w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorCode::io, w) {}
};

struct StateError : Error {
  explicit StateError(const std::string& w) : Error(ErrorCode::state, w) {}
};

}  // namespace isoprice
