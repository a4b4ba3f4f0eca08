#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pecons {

enum class ErrorCode {
  InvalidArgument,
  SelfLoop,
  DuplicateEdge,
  VertexOutOfRange,
  NegativeWeight,
  TooFewVertices,
  DisconnectedGraph,
  NumericalFailure,
  InvalidWindow,
  HorizonTooShort,
  EdgeIndexOutOfRange,
  DimensionMismatch,
  NonFiniteState,
  DegenerateBound,
  UnderflowInWindow,
  Config,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::VertexOutOfRange: return "VertexOutOfRange";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::TooFewVertices: return "TooFewVertices";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::HorizonTooShort: return "HorizonTooShort";
    case ErrorCode::EdgeIndexOutOfRange: return "EdgeIndexOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::DegenerateBound: return "DegenerateBound";
    case ErrorCode::UnderflowInWindow: return "UnderflowInWindow";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Single exception type for the library. `index` carries the offending
/// element position (edge, profile, ...) when one exists, so callers can
/// qualify the message with their own field path.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(what), code_(code), index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace pecons
