#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hydrocla {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  RankDeficient(std::size_t rank, std::size_t cols);
  std::size_t rank() const noexcept { return rank_; }
  std::size_t cols() const noexcept { return cols_; }

 private:
  std::size_t rank_;
  std::size_t cols_;
};

/// Malformed input text. `line()` is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Semantically invalid network or measurement set; carries every violation.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class NotConnected : public Error {
 public:
  using Error::Error;
};

class RootNotFixedHead : public Error {
 public:
  using Error::Error;
};

/// Iterative solver gave up. `context()` names the caller-level run
/// (e.g. an ESM column or a perturbation trial) when known.
class NotConverged : public Error {
 public:
  NotConverged(int iterations, double residual, std::string context = {});
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }
  const std::string& context() const noexcept { return context_; }

 private:
  int iterations_;
  double residual_;
  std::string context_;
};

}  // namespace hydrocla
