#include "qrec/error.hpp"

namespace qrec {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::EmptyCatalog: return "EmptyCatalog";
    case ErrorCode::DanglingForeignKey: return "DanglingForeignKey";
    case ErrorCode::NoJoinPath: return "NoJoinPath";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::AmbiguousColumn: return "AmbiguousColumn";
    case ErrorCode::InvalidQuery: return "InvalidQuery";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmbeddingServiceError: return "EmbeddingServiceError";
    case ErrorCode::NoUsableQueries: return "NoUsableQueries";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::SchemaDrift: return "SchemaDrift";
    case ErrorCode::UnknownDatabase: return "UnknownDatabase";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::StaleRecommendationIndex: return "StaleRecommendationIndex";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidCell: return "InvalidCell";
    case ErrorCode::OverlappingCells: return "OverlappingCells";
    case ErrorCode::UnknownDashboard: return "UnknownDashboard";
    case ErrorCode::StorageError: return "StorageError";
    case ErrorCode::BadRequest: return "BadRequest";
  }
  return "Unknown";
}

}  // namespace qrec
