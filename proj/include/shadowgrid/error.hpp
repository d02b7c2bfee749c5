// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shadowgrid {

enum class ErrorKind {
  // solar / geometry
  NightTime,
  DegeneratePolygon,
  CoincidentPoints,
  InvalidInput,
  // graph
  DuplicateId,
  UnknownBuilding,
  EmptyTimeline,
  // numerics
  ShapeMismatch,
  WindowTooShort,
  OddChannels,
  NonScalarLoss,
  MissingGradient,
  NegativeWeight,
  DimensionMismatch,
  // models
  EmptyHistory,
  InsufficientHistory,
  SingularSystem,
  EmptyTrainingSet,
  NumericFailure,
  GraphMismatch,
  // dataset
  IdMismatch,
  TimelineGap,
  ParseError,
  UnknownCategory,
  TimelineTooShort,
  InvalidConfig,
  // evaluation
  EmptySeries,
  AllZeroActuals,
  EmptySeason,
  // io
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace shadowgrid
