// SPDX-License-Identifier: Apache-2.0
#include "shadowgrid/error.hpp"

namespace shadowgrid {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NightTime: return "NightTime";
    case ErrorKind::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorKind::CoincidentPoints: return "CoincidentPoints";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::UnknownBuilding: return "UnknownBuilding";
    case ErrorKind::EmptyTimeline: return "EmptyTimeline";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::WindowTooShort: return "WindowTooShort";
    case ErrorKind::OddChannels: return "OddChannels";
    case ErrorKind::NonScalarLoss: return "NonScalarLoss";
    case ErrorKind::MissingGradient: return "MissingGradient";
    case ErrorKind::NegativeWeight: return "NegativeWeight";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyHistory: return "EmptyHistory";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::NumericFailure: return "NumericFailure";
    case ErrorKind::GraphMismatch: return "GraphMismatch";
    case ErrorKind::IdMismatch: return "IdMismatch";
    case ErrorKind::TimelineGap: return "TimelineGap";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownCategory: return "UnknownCategory";
    case ErrorKind::TimelineTooShort: return "TimelineTooShort";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::EmptySeries: return "EmptySeries";
    case ErrorKind::AllZeroActuals: return "AllZeroActuals";
    case ErrorKind::EmptySeason: return "EmptySeason";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace shadowgrid
