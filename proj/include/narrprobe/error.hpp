#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace narrprobe {

enum class ErrorCode {
  MissingInput,
  Io,
  InvalidConfig,
  InvalidArgument,
  // corpus
  MalformedLine,
  UnknownLabel,
  EmptyToken,
  EmptyDataset,
  NoPosTags,
  // embedstore
  BadMagic,
  VersionUnsupported,
  TruncatedFile,
  ManifestMismatch,
  AlignmentFailure,
  DimMismatch,
  EmptySpan,
  // probe
  DegenerateClass,
  ZeroCount,
  NonFiniteLoss,
  BadSigma,
  EmptyMatrix,
  // evalmetrics / structure
  LengthMismatch,
  LabelOutOfRange,
  SingleCluster,
  BadK,
  TooFewPoints,
};

std::string_view to_string(ErrorCode code);

// Process exit status for a hard error of this kind. 0 is never returned.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Error raised while reading a line-oriented input; carries the 1-based line.
class LineError : public Error {
 public:
  LineError(ErrorCode code, std::size_t line_no, const std::string& message)
      : Error(code, "line " + std::to_string(line_no) + ": " + message),
        line_no_(line_no) {}

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

}  // namespace narrprobe
