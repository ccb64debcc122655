#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace tissuefield {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by ``sample_patches`` when no patch fits inside the tissue mask.
class UnsatisfiableMask : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss was asked to average over an empty set of unmasked pixels.
class UndefinedBatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IngestionError : public std::runtime_error {
 public:
  IngestionError(const std::string& message, std::string path)
      : std::runtime_error(message + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NormalizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IncompatibleCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss term evaluated to NaN or infinity; ``term()`` names it.
class NonFiniteLoss : public std::runtime_error {
 public:
  explicit NonFiniteLoss(std::string term)
      : std::runtime_error("non-finite loss term: " + term), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

}  // namespace tissuefield
