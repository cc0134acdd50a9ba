#pragma once

#include <compare>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace qrec {

enum class ValueKind { Numeric, Text, Datetime, Boolean };

std::string_view to_string(ValueKind kind);
ValueKind value_kind_from_string(std::string_view s);

struct ColumnDef {
  std::string name;
  std::string display_text;
  ValueKind kind = ValueKind::Text;

  bool operator==(const ColumnDef&) const = default;
};

struct TableDef {
  std::string name;
  std::string display_text;
  std::vector<ColumnDef> columns;
  std::optional<std::string> primary_key;

  bool operator==(const TableDef&) const = default;
};

/// Identity of a column. Names are stored in the catalog's canonical
/// spelling, so plain comparison is sufficient once resolved.
struct ColumnRef {
  std::string table;
  std::string column;

  auto operator<=>(const ColumnRef&) const = default;
  bool operator==(const ColumnRef&) const = default;

  std::string qualified() const { return table + "." + column; }
};

/// `from` references `to` (from is the foreign key side).
struct FkEdge {
  ColumnRef from;
  ColumnRef to;

  auto operator<=>(const FkEdge&) const = default;
  bool operator==(const FkEdge&) const = default;
};

class SchemaCatalog {
 public:
  /// Validates all invariants; throws qrec::Error on violation.
  SchemaCatalog(std::string database_id, std::string domain_label, std::vector<TableDef> tables,
                std::vector<FkEdge> fk_edges);

  const std::string& database_id() const { return database_id_; }
  const std::string& domain_label() const { return domain_label_; }
  const std::vector<TableDef>& tables() const { return tables_; }
  const std::vector<FkEdge>& fk_edges() const { return fk_edges_; }

  const TableDef* find_table(std::string_view name) const;
  const ColumnDef* find_column(std::string_view table, std::string_view column) const;

  /// Canonical reference for a (case-insensitive) table/column pair.
  /// Throws UnknownTable / UnknownColumn.
  ColumnRef resolve(std::string_view table, std::string_view column) const;

  /// Throws UnknownColumn when the reference does not resolve.
  const ColumnDef& column(const ColumnRef& ref) const;
  const TableDef& table(std::string_view name) const;

  /// Every column in table order, then column order.
  std::vector<ColumnRef> all_columns() const;
  std::size_t column_count() const;

  SchemaCatalog with_domain_label(std::string label) const;

  bool operator==(const SchemaCatalog&) const = default;

 private:
  std::string database_id_;
  std::string domain_label_;
  std::vector<TableDef> tables_;
  std::vector<FkEdge> fk_edges_;
};

using CatalogPtr = std::shared_ptr<const SchemaCatalog>;

/// Builds a catalog from one Spider `tables.json` entry.
SchemaCatalog catalog_from_spider_json(const nlohmann::json& entry);
nlohmann::json to_spider_json(const SchemaCatalog& catalog);

/// Reads a Spider `tables.json` holding a single database entry (either a
/// bare object or a one-element array). When the file holds several entries,
/// `database_id` selects one.
SchemaCatalog load_spider_schema(const std::filesystem::path& path,
                                 std::optional<std::string> database_id = std::nullopt);

/// Reads every entry of a Spider `tables.json`. Entries that violate catalog
/// invariants are reported through `rejected` rather than thrown.
std::vector<SchemaCatalog> load_spider_schemas(const std::filesystem::path& path,
                                               std::vector<std::string>* rejected = nullptr);

SchemaCatalog load_sqlite_schema(const std::filesystem::path& path,
                                 std::optional<std::string> domain_label = std::nullopt);

/// Shortest undirected path over fk_edges, walking from `from_table` to
/// `to_table`. Ties are broken by the lexicographic order of the edges'
/// (table, column) names along the path. Throws NoJoinPath.
std::vector<FkEdge> join_path(const SchemaCatalog& catalog, std::string_view from_table,
                              std::string_view to_table);

}  // namespace qrec
