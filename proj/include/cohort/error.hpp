#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace cohort {

/// Base of every error the engine throws. `path` locates the problem inside
/// the input (a JSON pointer, a `line N` marker, or empty when not applicable).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message, std::string path = {})
      : std::runtime_error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Input is not well-formed JSON.
class SyntaxError : public Error {
  using Error::Error;
};

/// JSON is well-formed but does not have the expected shape.
class StructureError : public Error {
  using Error::Error;
};

/// Catalog or case data violates a content rule (duplicate names, bad ranges,
/// unknown fields).
class DataError : public Error {
  using Error::Error;
};

/// A filter failed validation where a valid one was required.
class ValidationError : public Error {
  using Error::Error;
};

class IoError : public Error {
  using Error::Error;
};

/// A caller broke an operation's precondition.
class ContractError : public Error {
  using Error::Error;
};

/// Synthetic generation could not reach its target (dedup exhaustion).
class GenerationError : public Error {
  using Error::Error;
};

/// Automaton construction exceeded its state budget.
class BudgetError : public Error {
  using Error::Error;
};

/// A random walk hit its length cap before reaching an accepting state.
class TruncationError : public Error {
  using Error::Error;
};

/// The external model endpoint could not be reached or answered with a
/// non-success status.
class TransportError : public Error {
  using Error::Error;
};

/// The external model answered, but its text is not an acceptable filter.
class InvalidGenerationError : public Error {
 public:
  InvalidGenerationError(const std::string& message, std::string raw_text)
      : Error(message), raw_text_(std::move(raw_text)) {}

  const std::string& raw_text() const noexcept { return raw_text_; }

 private:
  std::string raw_text_;
};

}  // namespace cohort
