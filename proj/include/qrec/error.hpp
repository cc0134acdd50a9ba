#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qrec {

enum class ErrorCode {
  MalformedFile,
  EmptyCatalog,
  DanglingForeignKey,
  NoJoinPath,
  SyntaxError,
  UnknownTable,
  UnknownColumn,
  AmbiguousColumn,
  InvalidQuery,
  EmptyText,
  DimensionMismatch,
  EmbeddingServiceError,
  NoUsableQueries,
  EmptyHistory,
  NoCandidates,
  InvalidConfig,
  BackendError,
  SchemaDrift,
  UnknownDatabase,
  UnknownSession,
  StaleRecommendationIndex,
  IndexOutOfRange,
  InvalidCell,
  OverlappingCells,
  UnknownDashboard,
  StorageError,
  BadRequest,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. `position` is a byte offset
/// into the input for parse errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> position = std::nullopt)
      : std::runtime_error(message), code_(code), position_(position) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> position() const noexcept { return position_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> position_;
};

}  // namespace qrec
