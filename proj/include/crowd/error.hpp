#pragma once

#include <stdexcept>
#include <string>

namespace crowd {

enum class ErrorKind {
  // data errors
  DuplicateLabel,
  LabelOutOfRange,
  EmptyDataset,
  ParseError,
  InvalidConfig,
  InvalidRho,
  TooFewWorkers,
  // numerical errors
  ZeroEntry,
  IllConditionedMoments,
  NotPositiveDefinite,
  ZeroProbability,
  NoOverlap,
  DegeneratePair,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DuplicateLabel: return "DuplicateLabel";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidRho: return "InvalidRho";
    case ErrorKind::TooFewWorkers: return "TooFewWorkers";
    case ErrorKind::ZeroEntry: return "ZeroEntry";
    case ErrorKind::IllConditionedMoments: return "IllConditionedMoments";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::ZeroProbability: return "ZeroProbability";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::DegeneratePair: return "DegeneratePair";
  }
  return "Unknown";
}

/// True for failures of the numerical procedures (as opposed to bad input).
inline bool is_numerical(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ZeroEntry:
    case ErrorKind::IllConditionedMoments:
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::ZeroProbability:
    case ErrorKind::NoOverlap:
    case ErrorKind::DegeneratePair:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace crowd
