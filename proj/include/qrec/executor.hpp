#pragma once

#include <filesystem>
#include <mutex>
#include <string>

#include "qrec/query_ir.hpp"
#include "qrec/sqlite_db.hpp"
#include "qrec/visualization.hpp"

namespace qrec {

class ExecutionBackend {
 public:
  virtual ~ExecutionBackend() = default;
  /// Runs `sql` against the live data. `ir` is what the SQL was generated
  /// from, so backends can check that the referenced schema still exists.
  virtual SqliteDb::Rows run(const QueryIR& ir, const std::string& sql) = 0;
};

/// Read-only SQLite backend. Safe to share across threads.
class SqliteBackend : public ExecutionBackend {
 public:
  explicit SqliteBackend(const std::filesystem::path& path);
  SqliteDb::Rows run(const QueryIR& ir, const std::string& sql) override;

 private:
  void check_schema(const QueryIR& ir);

  std::mutex mu_;
  SqliteDb db_;
};

/// The SQL actually sent to the backend: the canonical query with any
/// grouping column that is not already selected appended as a plain item.
std::string execution_sql(const QueryIR& ir);

/// Executes and classifies. Column names are `column` for plain items and
/// `fn_column` for aggregates, prefixed with `table_` when two would clash.
ResultTable execute(const QueryIR& ir, ExecutionBackend& backend);

}  // namespace qrec
