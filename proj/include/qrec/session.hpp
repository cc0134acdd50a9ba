#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrec/query_ir.hpp"
#include "qrec/recommender.hpp"
#include "qrec/visualization.hpp"

namespace qrec {

struct ExplanationSegment {
  enum class Kind { Plain, TableMention, ColumnMention };
  std::string text;
  Kind kind = Kind::Plain;

  bool operator==(const ExplanationSegment&) const = default;
};

struct NLExplanation {
  std::vector<ExplanationSegment> segments;

  std::string text() const;
  bool operator==(const NLExplanation&) const = default;
};

/// "retrieves <column> from <table>" per selection, then "grouped by ...".
NLExplanation explain(const QueryIR& query);

struct HistoryEntry {
  std::size_t index = 0;
  QueryIR query;
  std::string sql;
  std::string nl_text;
  ResultTable result;
  ChartSpec chart;
  NLExplanation explanation;

  bool operator==(const HistoryEntry&) const = default;
};

/// Executes nothing; assembles the derived fields of an entry.
HistoryEntry make_entry(std::size_t index, QueryIR query, ResultTable result);

struct GridCell {
  std::size_t history_index = 0;
  int row = 0;
  int col = 0;
  int width = 1;
  int height = 1;

  bool operator==(const GridCell&) const = default;
};

inline constexpr int kDashboardColumns = 12;

struct Dashboard {
  std::string id;
  std::string session_id;
  std::vector<GridCell> cells;

  bool operator==(const Dashboard&) const = default;
};

/// Throws InvalidCell for a bad index or geometry and OverlappingCells when
/// two cells share a grid square.
void validate_cells(const std::vector<GridCell>& cells, std::size_t history_size);

nlohmann::json to_json(const NLExplanation& explanation);
NLExplanation explanation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HistoryEntry& entry);
HistoryEntry entry_from_json(const nlohmann::json& j, CatalogPtr catalog);
nlohmann::json to_json(const GridCell& cell);
GridCell cell_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Dashboard& dashboard);
Dashboard dashboard_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Recommendation& rec, std::size_t rank);
nlohmann::json to_json(const RecommendationSet& set);

}  // namespace qrec
