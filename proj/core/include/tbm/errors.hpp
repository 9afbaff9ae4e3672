#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tbm {

// One code per failure class named by the module contracts. The CLI maps
// each code to a stable exit status (see exit_code()).
enum class ErrorCode {
  NonFinite,
  ArityMismatch,
  NegativeMeasure,
  SchemaMismatch,
  ParseError,
  EmptyAfterCleansing,
  NonUniformSampling,
  ZeroVariance,
  InsufficientData,
  Unimodal,
  InvalidConfig,
  DimensionMismatch,
  NonFiniteLoss,
  EmptyGrid,
  TooFewPoints,
  KExceedsIndex,
  NoSuccessor,
  TooFewEligibleNeighbors,
  UnknownGroundClass,
  ModelNotLoaded,
  MissingModel,
  FingerprintMismatch,
  NoActions,
  InvalidSpec,
  SessionClosed,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Process exit status used by the CLI for a given failure class.
int exit_code(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tbm
