#include "tbm/errors.hpp"

namespace tbm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::NegativeMeasure: return "NegativeMeasure";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyAfterCleansing: return "EmptyAfterCleansing";
    case ErrorCode::NonUniformSampling: return "NonUniformSampling";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::Unimodal: return "Unimodal";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::KExceedsIndex: return "KExceedsIndex";
    case ErrorCode::NoSuccessor: return "NoSuccessor";
    case ErrorCode::TooFewEligibleNeighbors: return "TooFewEligibleNeighbors";
    case ErrorCode::UnknownGroundClass: return "UnknownGroundClass";
    case ErrorCode::ModelNotLoaded: return "ModelNotLoaded";
    case ErrorCode::MissingModel: return "MissingModel";
    case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::NoActions: return "NoActions";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::SessionClosed: return "SessionClosed";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io: return 2;
    case ErrorCode::SchemaMismatch:
    case ErrorCode::ParseError: return 3;
    case ErrorCode::NonFinite:
    case ErrorCode::ArityMismatch:
    case ErrorCode::NegativeMeasure: return 4;
    case ErrorCode::EmptyAfterCleansing:
    case ErrorCode::NonUniformSampling:
    case ErrorCode::ZeroVariance:
    case ErrorCode::InsufficientData:
    case ErrorCode::Unimodal: return 5;
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidSpec:
    case ErrorCode::EmptyGrid: return 6;
    case ErrorCode::DimensionMismatch:
    case ErrorCode::NonFiniteLoss: return 7;
    case ErrorCode::TooFewPoints:
    case ErrorCode::KExceedsIndex:
    case ErrorCode::NoSuccessor:
    case ErrorCode::TooFewEligibleNeighbors:
    case ErrorCode::NoActions: return 8;
    case ErrorCode::MissingModel: return 10;
    case ErrorCode::FingerprintMismatch: return 11;
    case ErrorCode::UnknownGroundClass: return 12;
    case ErrorCode::ModelNotLoaded: return 13;
    case ErrorCode::SessionClosed: return 14;
  }
  return 1;
}

}  // namespace tbm
