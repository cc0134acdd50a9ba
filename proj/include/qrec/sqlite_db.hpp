#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

struct sqlite3;
struct sqlite3_stmt;

namespace qrec {

/// A single SQL value as returned by the backend.
using Value = std::variant<std::monostate, std::int64_t, double, std::string>;

/// Owning handle over a sqlite3 connection.
class SqliteDb {
 public:
  enum class Mode { ReadOnly, ReadWriteCreate };

  SqliteDb(const std::filesystem::path& path, Mode mode);
  ~SqliteDb();
  SqliteDb(const SqliteDb&) = delete;
  SqliteDb& operator=(const SqliteDb&) = delete;
  SqliteDb(SqliteDb&& other) noexcept;
  SqliteDb& operator=(SqliteDb&& other) noexcept;

  /// Runs one or more statements with no result rows.
  void exec(std::string_view sql);

  /// Runs a query and returns its column names and rows.
  struct Rows {
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;
  };
  Rows query(std::string_view sql);

  const std::filesystem::path& path() const { return path_; }

 private:
  sqlite3* db_ = nullptr;
  std::filesystem::path path_;
};

}  // namespace qrec
