#include "qrec/schema_catalog.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include "qrec/error.hpp"
#include "qrec/sqlite_db.hpp"
#include "qrec/text_util.hpp"

namespace qrec {

using nlohmann::json;

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::Numeric: return "numeric";
    case ValueKind::Text: return "text";
    case ValueKind::Datetime: return "datetime";
    case ValueKind::Boolean: return "boolean";
  }
  return "text";
}

ValueKind value_kind_from_string(std::string_view s) {
  if (s == "numeric") return ValueKind::Numeric;
  if (s == "datetime") return ValueKind::Datetime;
  if (s == "boolean") return ValueKind::Boolean;
  if (s == "text") return ValueKind::Text;
  throw Error(ErrorCode::MalformedFile, "unknown value kind: " + std::string(s));
}

SchemaCatalog::SchemaCatalog(std::string database_id, std::string domain_label,
                             std::vector<TableDef> tables, std::vector<FkEdge> fk_edges)
    : database_id_(std::move(database_id)),
      domain_label_(std::move(domain_label)),
      tables_(std::move(tables)),
      fk_edges_(std::move(fk_edges)) {
  if (tables_.empty()) throw Error(ErrorCode::EmptyCatalog, "catalog has no tables");
  std::set<std::string> table_names;
  for (auto& t : tables_) {
    if (t.columns.empty()) {
      throw Error(ErrorCode::MalformedFile, "table '" + t.name + "' has no columns");
    }
    if (!table_names.insert(to_lower(t.name)).second) {
      throw Error(ErrorCode::MalformedFile, "duplicate table name '" + t.name + "'");
    }
    if (t.display_text.empty()) t.display_text = default_display_text(t.name);
    std::set<std::string> column_names;
    for (auto& c : t.columns) {
      if (!column_names.insert(to_lower(c.name)).second) {
        throw Error(ErrorCode::MalformedFile,
                    "duplicate column '" + c.name + "' in table '" + t.name + "'");
      }
      if (trim(c.display_text).empty()) c.display_text = default_display_text(c.name);
    }
  }
  for (auto& e : fk_edges_) {
    const ColumnDef* from = find_column(e.from.table, e.from.column);
    const ColumnDef* to = find_column(e.to.table, e.to.column);
    if (!from || !to) {
      throw Error(ErrorCode::DanglingForeignKey,
                  "foreign key " + e.from.qualified() + " -> " + e.to.qualified() +
                      " does not resolve");
    }
    e.from = resolve(e.from.table, e.from.column);
    e.to = resolve(e.to.table, e.to.column);
  }
}

const TableDef* SchemaCatalog::find_table(std::string_view name) const {
  for (const auto& t : tables_) {
    if (iequals(t.name, name)) return &t;
  }
  return nullptr;
}

const ColumnDef* SchemaCatalog::find_column(std::string_view table, std::string_view column) const {
  const TableDef* t = find_table(table);
  if (!t) return nullptr;
  for (const auto& c : t->columns) {
    if (iequals(c.name, column)) return &c;
  }
  return nullptr;
}

ColumnRef SchemaCatalog::resolve(std::string_view table, std::string_view column) const {
  const TableDef* t = find_table(table);
  if (!t) throw Error(ErrorCode::UnknownTable, "unknown table '" + std::string(table) + "'");
  for (const auto& c : t->columns) {
    if (iequals(c.name, column)) return ColumnRef{t->name, c.name};
  }
  throw Error(ErrorCode::UnknownColumn,
              "unknown column '" + std::string(column) + "' in table '" + t->name + "'");
}

const ColumnDef& SchemaCatalog::column(const ColumnRef& ref) const {
  const ColumnDef* c = find_column(ref.table, ref.column);
  if (!c) throw Error(ErrorCode::UnknownColumn, "unknown column '" + ref.qualified() + "'");
  return *c;
}

const TableDef& SchemaCatalog::table(std::string_view name) const {
  const TableDef* t = find_table(name);
  if (!t) throw Error(ErrorCode::UnknownTable, "unknown table '" + std::string(name) + "'");
  return *t;
}

std::vector<ColumnRef> SchemaCatalog::all_columns() const {
  std::vector<ColumnRef> out;
  for (const auto& t : tables_) {
    for (const auto& c : t.columns) out.push_back({t.name, c.name});
  }
  return out;
}

std::size_t SchemaCatalog::column_count() const {
  std::size_t n = 0;
  for (const auto& t : tables_) n += t.columns.size();
  return n;
}

SchemaCatalog SchemaCatalog::with_domain_label(std::string label) const {
  SchemaCatalog copy = *this;
  copy.domain_label_ = std::move(label);
  return copy;
}

// ---------------------------------------------------------------------------
// Spider tables.json

namespace {

ValueKind kind_from_spider_type(std::string_view t) {
  if (t == "number") return ValueKind::Numeric;
  if (t == "time") return ValueKind::Datetime;
  if (t == "boolean") return ValueKind::Boolean;
  return ValueKind::Text;
}

std::string_view spider_type(ValueKind k) {
  switch (k) {
    case ValueKind::Numeric: return "number";
    case ValueKind::Datetime: return "time";
    case ValueKind::Boolean: return "boolean";
    case ValueKind::Text: return "text";
  }
  return "text";
}

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedFile, "malformed Spider schema: " + what);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedFile, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
  }
}

}  // namespace

SchemaCatalog catalog_from_spider_json(const json& entry) {
  try {
    if (!entry.is_object()) malformed("entry is not an object");
    std::string db_id = entry.at("db_id").get<std::string>();
    const json& table_names = entry.at("table_names_original");
    const json& column_names = entry.at("column_names_original");
    const json& column_types = entry.at("column_types");
    const json* readable_tables = entry.contains("table_names") ? &entry["table_names"] : nullptr;
    const json* readable_columns = entry.contains("column_names") ? &entry["column_names"] : nullptr;

    if (table_names.empty()) throw Error(ErrorCode::EmptyCatalog, "no tables in '" + db_id + "'");
    if (column_types.size() != column_names.size()) malformed("column_types length mismatch");

    std::vector<TableDef> tables;
    for (std::size_t i = 0; i < table_names.size(); ++i) {
      TableDef t;
      t.name = table_names[i].get<std::string>();
      if (readable_tables && i < readable_tables->size()) {
        t.display_text = (*readable_tables)[i].get<std::string>();
      }
      tables.push_back(std::move(t));
    }

    // Global column index -> (table index, column index within table).
    std::vector<std::pair<int, std::size_t>> index;
    for (std::size_t i = 0; i < column_names.size(); ++i) {
      int table_idx = column_names[i].at(0).get<int>();
      if (table_idx < 0) {
        index.emplace_back(-1, 0);
        continue;
      }
      if (static_cast<std::size_t>(table_idx) >= tables.size()) malformed("column table index");
      ColumnDef c;
      c.name = column_names[i].at(1).get<std::string>();
      if (readable_columns && i < readable_columns->size()) {
        c.display_text = (*readable_columns)[i].at(1).get<std::string>();
      }
      c.kind = kind_from_spider_type(column_types[i].get<std::string>());
      auto& cols = tables[static_cast<std::size_t>(table_idx)].columns;
      index.emplace_back(table_idx, cols.size());
      cols.push_back(std::move(c));
    }

    auto column_at = [&](const json& idx_json) -> ColumnRef {
      long long idx = idx_json.get<long long>();
      if (idx < 0 || static_cast<std::size_t>(idx) >= index.size() || index[idx].first < 0) {
        throw Error(ErrorCode::DanglingForeignKey,
                    "column index " + std::to_string(idx) + " out of range in '" + db_id + "'");
      }
      const auto& t = tables[static_cast<std::size_t>(index[idx].first)];
      return ColumnRef{t.name, t.columns[index[idx].second].name};
    };

    if (entry.contains("primary_keys")) {
      for (const auto& pk : entry["primary_keys"]) {
        // Composite keys appear as nested lists in newer Spider releases.
        const json& first = pk.is_array() ? pk.at(0) : pk;
        ColumnRef ref = column_at(first);
        for (auto& t : tables) {
          if (t.name == ref.table && !t.primary_key) t.primary_key = ref.column;
        }
      }
    }

    std::vector<FkEdge> edges;
    if (entry.contains("foreign_keys")) {
      for (const auto& fk : entry["foreign_keys"]) {
        if (!fk.is_array() || fk.size() != 2) malformed("foreign key pair");
        edges.push_back({column_at(fk[0]), column_at(fk[1])});
      }
    }

    std::string label = entry.contains("domain_label") ? entry["domain_label"].get<std::string>()
                                                       : default_display_text(db_id);
    return SchemaCatalog(db_id, label, std::move(tables), std::move(edges));
  } catch (const json::exception& e) {
    malformed(e.what());
  }
}

json to_spider_json(const SchemaCatalog& catalog) {
  json table_names = json::array(), table_names_original = json::array();
  json column_names = json::array({json::array({-1, "*"})});
  json column_names_original = json::array({json::array({-1, "*"})});
  json column_types = json::array({"text"});
  json primary_keys = json::array(), foreign_keys = json::array();

  std::map<ColumnRef, std::size_t> global_index;
  for (std::size_t ti = 0; ti < catalog.tables().size(); ++ti) {
    const auto& t = catalog.tables()[ti];
    table_names.push_back(t.display_text);
    table_names_original.push_back(t.name);
    for (const auto& c : t.columns) {
      global_index[{t.name, c.name}] = column_names_original.size();
      column_names.push_back(json::array({ti, c.display_text}));
      column_names_original.push_back(json::array({ti, c.name}));
      column_types.push_back(spider_type(c.kind));
    }
    if (t.primary_key) primary_keys.push_back(global_index.at({t.name, *t.primary_key}));
  }
  for (const auto& e : catalog.fk_edges()) {
    foreign_keys.push_back(json::array({global_index.at(e.from), global_index.at(e.to)}));
  }
  return json{{"db_id", catalog.database_id()},
              {"domain_label", catalog.domain_label()},
              {"table_names", table_names},
              {"table_names_original", table_names_original},
              {"column_names", column_names},
              {"column_names_original", column_names_original},
              {"column_types", column_types},
              {"primary_keys", primary_keys},
              {"foreign_keys", foreign_keys}};
}

SchemaCatalog load_spider_schema(const std::filesystem::path& path,
                                 std::optional<std::string> database_id) {
  json doc = read_json_file(path);
  if (doc.is_object()) return catalog_from_spider_json(doc);
  if (!doc.is_array()) malformed("top level must be an object or array");
  if (doc.empty()) throw Error(ErrorCode::EmptyCatalog, path.string() + " holds no databases");
  if (database_id) {
    for (const auto& entry : doc) {
      if (entry.is_object() && entry.value("db_id", "") == *database_id) {
        return catalog_from_spider_json(entry);
      }
    }
    throw Error(ErrorCode::UnknownDatabase, "no database '" + *database_id + "' in " + path.string());
  }
  if (doc.size() != 1) malformed("expected a single database entry, found " + std::to_string(doc.size()));
  return catalog_from_spider_json(doc[0]);
}

std::vector<SchemaCatalog> load_spider_schemas(const std::filesystem::path& path,
                                               std::vector<std::string>* rejected) {
  json doc = read_json_file(path);
  if (doc.is_object()) doc = json::array({doc});
  if (!doc.is_array()) malformed("top level must be an object or array");
  std::vector<SchemaCatalog> out;
  for (const auto& entry : doc) {
    try {
      out.push_back(catalog_from_spider_json(entry));
    } catch (const Error& e) {
      if (!rejected) throw;
      rejected->push_back(entry.is_object() ? entry.value("db_id", "?") + ": " + e.what()
                                            : std::string(e.what()));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SQLite

namespace {

std::string quote_identifier(std::string_view name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool contains(const std::string& upper, std::string_view needle) {
  return upper.find(needle) != std::string::npos;
}

std::string to_upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

bool values_all_dates(SqliteDb& db, const std::string& table, const std::string& column) {
  auto rows = db.query("SELECT " + quote_identifier(column) + " FROM " + quote_identifier(table) +
                       " WHERE " + quote_identifier(column) + " IS NOT NULL LIMIT 1000");
  if (rows.rows.empty()) return false;
  return std::all_of(rows.rows.begin(), rows.rows.end(), [](const auto& row) {
    const auto* s = std::get_if<std::string>(&row[0]);
    return s && parse_iso8601(*s);
  });
}

// Follows SQLite's column affinity rules on the declared type.
ValueKind infer_kind(SqliteDb& db, const std::string& table, const std::string& column,
                     const std::string& declared) {
  std::string t = to_upper(declared);
  if (contains(t, "BOOL")) return ValueKind::Boolean;
  if (contains(t, "INT")) return ValueKind::Numeric;
  bool text_affinity = contains(t, "CHAR") || contains(t, "CLOB") || contains(t, "TEXT");
  bool blob_affinity = t.empty() || contains(t, "BLOB");
  if (text_affinity || blob_affinity) {
    return values_all_dates(db, table, column) ? ValueKind::Datetime : ValueKind::Text;
  }
  if (contains(t, "REAL") || contains(t, "FLOA") || contains(t, "DOUB")) return ValueKind::Numeric;
  if (contains(t, "DATE") || contains(t, "TIME")) return ValueKind::Datetime;
  return ValueKind::Numeric;
}

}  // namespace

SchemaCatalog load_sqlite_schema(const std::filesystem::path& path,
                                 std::optional<std::string> domain_label) {
  SqliteDb db(path, SqliteDb::Mode::ReadOnly);
  SqliteDb::Rows names;
  try {
    names = db.query(
        "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' "
        "ORDER BY rowid");
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
  }
  if (names.rows.empty()) throw Error(ErrorCode::EmptyCatalog, path.string() + " has no tables");

  std::vector<TableDef> tables;
  std::vector<FkEdge> edges;
  for (const auto& row : names.rows) {
    TableDef t;
    t.name = std::get<std::string>(row[0]);
    t.display_text = default_display_text(t.name);
    auto info = db.query("PRAGMA table_info(" + quote_identifier(t.name) + ")");
    // cid, name, type, notnull, dflt_value, pk
    for (const auto& col : info.rows) {
      ColumnDef c;
      c.name = std::get<std::string>(col[1]);
      c.display_text = default_display_text(c.name);
      const auto* declared = std::get_if<std::string>(&col[2]);
      c.kind = infer_kind(db, t.name, c.name, declared ? *declared : std::string());
      if (std::get<std::int64_t>(col[5]) == 1) t.primary_key = c.name;
      t.columns.push_back(std::move(c));
    }
    // id, seq, table, from, to, on_update, on_delete, match
    auto fks = db.query("PRAGMA foreign_key_list(" + quote_identifier(t.name) + ")");
    for (const auto& fk : fks.rows) {
      FkEdge e;
      e.from = {t.name, std::get<std::string>(fk[3])};
      e.to.table = std::get<std::string>(fk[2]);
      if (const auto* to = std::get_if<std::string>(&fk[4])) e.to.column = *to;
      edges.push_back(std::move(e));
    }
    tables.push_back(std::move(t));
  }
  // Foreign keys without an explicit target column refer to the parent's key.
  for (auto& e : edges) {
    if (!e.to.column.empty()) continue;
    auto it = std::find_if(tables.begin(), tables.end(),
                           [&](const TableDef& t) { return iequals(t.name, e.to.table); });
    if (it == tables.end() || !it->primary_key) {
      throw Error(ErrorCode::DanglingForeignKey,
                  "foreign key from " + e.from.qualified() + " has no resolvable target");
    }
    e.to.column = *it->primary_key;
  }

  std::string db_id = path.stem().string();
  std::string label = domain_label ? *domain_label : default_display_text(db_id);
  return SchemaCatalog(db_id, label, std::move(tables), std::move(edges));
}

// ---------------------------------------------------------------------------
// Join paths

std::vector<FkEdge> join_path(const SchemaCatalog& catalog, std::string_view from_table,
                              std::string_view to_table) {
  const auto& tables = catalog.tables();
  auto index_of = [&](std::string_view name) -> std::size_t {
    for (std::size_t i = 0; i < tables.size(); ++i) {
      if (iequals(tables[i].name, name)) return i;
    }
    throw Error(ErrorCode::UnknownTable, "unknown table '" + std::string(name) + "'");
  };
  std::size_t source = index_of(from_table);
  std::size_t target = index_of(to_table);
  if (source == target) return {};

  struct Arc {
    std::size_t neighbor;
    const FkEdge* edge;
  };
  std::vector<std::vector<Arc>> adjacency(tables.size());
  for (const auto& e : catalog.fk_edges()) {
    std::size_t a = index_of(e.from.table), b = index_of(e.to.table);
    if (a == b) continue;
    adjacency[a].push_back({b, &e});
    adjacency[b].push_back({a, &e});
  }

  // Distances to the target, then a greedy walk from the source picking the
  // lexicographically smallest edge among those that make progress.
  constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(tables.size(), kUnreached);
  std::deque<std::size_t> frontier{target};
  dist[target] = 0;
  while (!frontier.empty()) {
    std::size_t u = frontier.front();
    frontier.pop_front();
    for (const auto& arc : adjacency[u]) {
      if (dist[arc.neighbor] == kUnreached) {
        dist[arc.neighbor] = dist[u] + 1;
        frontier.push_back(arc.neighbor);
      }
    }
  }
  if (dist[source] == kUnreached) {
    throw Error(ErrorCode::NoJoinPath, "no join path between '" + tables[source].name + "' and '" +
                                           tables[target].name + "'");
  }

  auto key = [](const FkEdge& e) {
    return std::make_tuple(to_lower(e.from.table), to_lower(e.from.column), to_lower(e.to.table),
                           to_lower(e.to.column));
  };
  std::vector<FkEdge> path;
  for (std::size_t u = source; u != target;) {
    const Arc* best = nullptr;
    for (const auto& arc : adjacency[u]) {
      if (dist[arc.neighbor] + 1 != dist[u]) continue;
      if (!best || key(*arc.edge) < key(*best->edge)) best = &arc;
    }
    path.push_back(*best->edge);
    u = best->neighbor;
  }
  return path;
}

}  // namespace qrec
