#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridflex {

enum class ErrorKind {
  MissingFile,
  ParseError,
  ColumnMissing,
  LengthMismatch,
  DomainViolation,
  ConfigInvalid,
  NegativeIdealLoad,
  ActionOutOfRangeForMode,
  IndexOutOfRange,
  WindowNotWarm,
  UnknownAction,
  UnknownObservation,
  EpisodeFinished,
  ActionArityMismatch,
  EmptyDistrict,
  EmptyTrace,
  ZeroActual,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ColumnMissing: return "ColumnMissing";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::NegativeIdealLoad: return "NegativeIdealLoad";
    case ErrorKind::ActionOutOfRangeForMode: return "ActionOutOfRangeForMode";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::WindowNotWarm: return "WindowNotWarm";
    case ErrorKind::UnknownAction: return "UnknownAction";
    case ErrorKind::UnknownObservation: return "UnknownObservation";
    case ErrorKind::EpisodeFinished: return "EpisodeFinished";
    case ErrorKind::ActionArityMismatch: return "ActionArityMismatch";
    case ErrorKind::EmptyDistrict: return "EmptyDistrict";
    case ErrorKind::EmptyTrace: return "EmptyTrace";
    case ErrorKind::ZeroActual: return "ZeroActual";
  }
  return "Unknown";
}

/// Every failure raised by the engine. The kind name is part of the public
/// contract: foreign bindings surface it verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace gridflex
