#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace htp {

enum class Errc {
  // hypertree
  EmptyQuery,
  UnknownParent,
  ParentNotDivisible,
  CycleDetected,
  EmptyBranch,
  DepthLimitExceeded,
  BranchTooWide,
  RuleMismatch,
  NoDivisibleLeaf,
  // rule library
  SyntaxError,
  MissingSection,
  // model gateway
  MissingSlot,
  UnknownTemplate,
  BackendUnavailable,
  ParseFailure,
  PatternViolation,
  TranscriptMiss,
  IoFailure,
  // planning pipeline
  StepBudgetExceeded,
  // evaluators and datasets
  PreconditionViolated,
  UnknownAction,
  UnknownBlock,
  UnknownAtom,
  EmptyInput,
  SchemaError,
  FormatError,
  // runner
  ConfigError,
  MalformedTrace,
};

std::string_view to_string(Errc code);

/// Single exception type for the library. `line()` is set for errors that
/// point into a source file (rule library, dataset, transcript).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::optional<std::size_t> line = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  Errc code_;
  std::optional<std::size_t> line_;
};

namespace text {

/// Trim, collapse internal whitespace runs to one space, ASCII case-fold.
std::string normalize(std::string_view s);

/// Trim and collapse whitespace, preserving case.
std::string collapse(std::string_view s);

std::string trim(std::string_view s);
std::string lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_icase(std::string_view s, std::string_view prefix);
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// Strip a single pair of enclosing square brackets, if present.
std::string_view unbracket(std::string_view s);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

/// FNV-1a 64-bit, hex encoded. Stable across platforms.
std::string stable_hash(std::string_view data);

}  // namespace text
}  // namespace htp
