#include "qrec/executor.hpp"

#include <algorithm>
#include <map>

#include "qrec/error.hpp"
#include "qrec/text_util.hpp"

namespace qrec {

namespace {

QueryIR with_grouping_selected(const QueryIR& ir) {
  QueryIR out = ir;
  for (const auto& g : ir.grouping) {
    bool present = std::any_of(ir.selections.begin(), ir.selections.end(),
                               [&](const SelectItem& s) { return !s.aggregate && s.column == g; });
    if (!present) out.selections.push_back({g, std::nullopt});
  }
  return out;
}

std::vector<std::string> output_names(const QueryIR& ir) {
  auto base = [](const SelectItem& s) {
    std::string name = to_lower(s.column.column);
    if (s.aggregate) name = to_lower(to_string(*s.aggregate)) + "_" + name;
    return name;
  };
  std::map<std::string, int> uses;
  for (const auto& s : ir.selections) ++uses[base(s)];

  std::vector<std::string> names;
  std::map<std::string, int> seen;
  for (const auto& s : ir.selections) {
    std::string name = base(s);
    if (uses[name] > 1) name = to_lower(s.column.table) + "_" + name;
    if (int n = seen[name]++; n > 0) name += "_" + std::to_string(n + 1);
    names.push_back(std::move(name));
  }
  return names;
}

}  // namespace

namespace {

SqliteDb open_backend(const std::filesystem::path& path) {
  try {
    return SqliteDb(path, SqliteDb::Mode::ReadOnly);
  } catch (const Error& e) {
    throw Error(ErrorCode::BackendError, e.what());
  }
}

}  // namespace

SqliteBackend::SqliteBackend(const std::filesystem::path& path) : db_(open_backend(path)) {}

void SqliteBackend::check_schema(const QueryIR& ir) {
  std::map<std::string, std::vector<std::string>> live;
  for (const auto& table : ir.source_tables) {
    auto info = db_.query("PRAGMA table_info(\"" + table + "\")");
    if (info.rows.empty()) {
      throw Error(ErrorCode::SchemaDrift, "table '" + table + "' no longer exists");
    }
    auto& cols = live[table];
    for (const auto& row : info.rows) cols.push_back(to_lower(std::get<std::string>(row.at(1))));
  }
  auto check = [&](const ColumnRef& ref) {
    const auto& cols = live[ref.table];
    if (std::find(cols.begin(), cols.end(), to_lower(ref.column)) == cols.end()) {
      throw Error(ErrorCode::SchemaDrift, "column '" + ref.qualified() + "' no longer exists");
    }
  };
  for (const auto& s : ir.selections) check(s.column);
  for (const auto& g : ir.grouping) check(g);
  for (const auto& e : ir.join_edges) {
    check(e.from);
    check(e.to);
  }
}

SqliteDb::Rows SqliteBackend::run(const QueryIR& ir, const std::string& sql) {
  std::lock_guard lock(mu_);
  check_schema(ir);
  return db_.query(sql);
}

std::string execution_sql(const QueryIR& ir) { return synthesize_sql(with_grouping_selected(ir)); }

ResultTable execute(const QueryIR& ir, ExecutionBackend& backend) {
  validate(ir);
  QueryIR full = with_grouping_selected(ir);
  auto rows = backend.run(full, synthesize_sql(full));
  auto names = output_names(full);
  if (rows.columns.size() != names.size()) {
    throw Error(ErrorCode::BackendError, "backend returned " + std::to_string(rows.columns.size()) +
                                             " columns, expected " + std::to_string(names.size()));
  }
  ResultTable table;
  for (auto& n : names) table.columns.push_back({std::move(n), FieldType::N});
  table.rows = std::move(rows.rows);
  return classify_fields(std::move(table));
}

}  // namespace qrec
