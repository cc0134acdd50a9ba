#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qrec/schema_catalog.hpp"

namespace qrec {

/// Declaration order doubles as the tie-break order when ranking suggestions.
enum class AggregateFn { Min, Max, Count, Sum, Avg };

inline constexpr AggregateFn kAllAggregates[] = {AggregateFn::Min, AggregateFn::Max,
                                                 AggregateFn::Count, AggregateFn::Sum,
                                                 AggregateFn::Avg};

std::string_view to_string(AggregateFn fn);
std::optional<AggregateFn> aggregate_from_string(std::string_view name);

enum class ActionKind { Selection, Grouping, Aggregation };

inline constexpr ActionKind kAllActions[] = {ActionKind::Selection, ActionKind::Grouping,
                                             ActionKind::Aggregation};

std::string_view to_string(ActionKind kind);

struct SelectItem {
  ColumnRef column;
  std::optional<AggregateFn> aggregate;

  bool operator==(const SelectItem&) const = default;
};

/// A SELECT ... FROM ... GROUP BY query bound to the catalog it was resolved
/// against. Equality compares query structure only; `lossy` and `schema` are
/// provenance.
struct QueryIR {
  std::vector<SelectItem> selections;
  std::vector<ColumnRef> grouping;
  std::set<std::string> source_tables;
  std::vector<FkEdge> join_edges;
  /// Set when the parser dropped clauses outside the supported grammar.
  bool lossy = false;
  CatalogPtr schema;

  bool operator==(const QueryIR& other) const {
    return selections == other.selections && grouping == other.grouping &&
           source_tables == other.source_tables && join_edges == other.join_edges;
  }
};

/// Throws InvalidQuery when a structural invariant does not hold.
void validate(const QueryIR& ir);

/// Parses the supported SQL subset (see docs/sql-subset.md). WHERE, HAVING,
/// ORDER BY, LIMIT, DISTINCT, `*` items, COUNT(*) and trailing set operations
/// are dropped and flag the result as lossy.
QueryIR parse_sql(std::string_view text, CatalogPtr catalog);

/// Canonical SQL: fully qualified columns, JOIN order following join_edges,
/// GROUP BY in grouping order.
std::string synthesize_sql(const QueryIR& ir);

/// Template-based English question for the query.
std::string render_nl(const QueryIR& ir);

std::set<ColumnRef> action_columns(const QueryIR& ir, ActionKind action);

/// Structural JSON form; see docs/formats.md.
nlohmann::json to_json(const QueryIR& ir);
/// Resolves every reference against `catalog` and validates. Throws
/// MalformedFile for a wrong shape and the usual resolution errors otherwise.
QueryIR query_from_json(const nlohmann::json& j, CatalogPtr catalog);

}  // namespace qrec
