#include "narrprobe/error.hpp"

namespace narrprobe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingInput: return "MissingInput";
    case ErrorCode::Io: return "Io";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::EmptyToken: return "EmptyToken";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NoPosTags: return "NoPosTags";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::ManifestMismatch: return "ManifestMismatch";
    case ErrorCode::AlignmentFailure: return "AlignmentFailure";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptySpan: return "EmptySpan";
    case ErrorCode::DegenerateClass: return "DegenerateClass";
    case ErrorCode::ZeroCount: return "ZeroCount";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::BadSigma: return "BadSigma";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidArgument:
      return 2;
    case ErrorCode::MissingInput:
      return 3;
    case ErrorCode::Io:
      return 4;
    case ErrorCode::MalformedLine:
    case ErrorCode::UnknownLabel:
    case ErrorCode::EmptyToken:
    case ErrorCode::BadMagic:
    case ErrorCode::VersionUnsupported:
    case ErrorCode::TruncatedFile:
    case ErrorCode::ManifestMismatch:
      return 5;
    case ErrorCode::EmptyDataset:
    case ErrorCode::NoPosTags:
    case ErrorCode::AlignmentFailure:
    case ErrorCode::DimMismatch:
    case ErrorCode::EmptySpan:
    case ErrorCode::DegenerateClass:
    case ErrorCode::ZeroCount:
    case ErrorCode::EmptyMatrix:
    case ErrorCode::LengthMismatch:
    case ErrorCode::LabelOutOfRange:
    case ErrorCode::SingleCluster:
    case ErrorCode::BadK:
    case ErrorCode::TooFewPoints:
      return 6;
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::BadSigma:
      return 7;
  }
  return 1;
}

}  // namespace narrprobe
