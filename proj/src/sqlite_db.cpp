#include "qrec/sqlite_db.hpp"

#include <sqlite3.h>

#include <memory>
#include <utility>

#include "qrec/error.hpp"

namespace qrec {

namespace {

struct StmtDeleter {
  void operator()(sqlite3_stmt* stmt) const { sqlite3_finalize(stmt); }
};
using StmtPtr = std::unique_ptr<sqlite3_stmt, StmtDeleter>;

}  // namespace

SqliteDb::SqliteDb(const std::filesystem::path& path, Mode mode) : path_(path) {
  if (mode == Mode::ReadOnly && !std::filesystem::exists(path)) {
    throw Error(ErrorCode::MalformedFile, "database file not found: " + path.string());
  }
  int flags = mode == Mode::ReadOnly ? SQLITE_OPEN_READONLY
                                     : SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE;
  if (sqlite3_open_v2(path.c_str(), &db_, flags | SQLITE_OPEN_NOMUTEX, nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error(ErrorCode::MalformedFile, "cannot open " + path.string() + ": " + msg);
  }
  sqlite3_extended_result_codes(db_, 1);
}

SqliteDb::~SqliteDb() {
  if (db_) sqlite3_close(db_);
}

SqliteDb::SqliteDb(SqliteDb&& other) noexcept
    : db_(std::exchange(other.db_, nullptr)), path_(std::move(other.path_)) {}

SqliteDb& SqliteDb::operator=(SqliteDb&& other) noexcept {
  if (this != &other) {
    if (db_) sqlite3_close(db_);
    db_ = std::exchange(other.db_, nullptr);
    path_ = std::move(other.path_);
  }
  return *this;
}

void SqliteDb::exec(std::string_view sql) {
  std::string text(sql);
  char* err = nullptr;
  if (sqlite3_exec(db_, text.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(ErrorCode::BackendError, msg);
  }
}

SqliteDb::Rows SqliteDb::query(std::string_view sql) {
  sqlite3_stmt* raw = nullptr;
  if (sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &raw, nullptr) !=
      SQLITE_OK) {
    throw Error(ErrorCode::BackendError, sqlite3_errmsg(db_));
  }
  StmtPtr stmt(raw);
  Rows out;
  int ncols = sqlite3_column_count(raw);
  for (int i = 0; i < ncols; ++i) out.columns.emplace_back(sqlite3_column_name(raw, i));

  for (;;) {
    int rc = sqlite3_step(raw);
    if (rc == SQLITE_DONE) break;
    if (rc != SQLITE_ROW) throw Error(ErrorCode::BackendError, sqlite3_errmsg(db_));
    std::vector<Value> row;
    row.reserve(ncols);
    for (int i = 0; i < ncols; ++i) {
      switch (sqlite3_column_type(raw, i)) {
        case SQLITE_INTEGER: row.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(raw, i))); break;
        case SQLITE_FLOAT: row.emplace_back(sqlite3_column_double(raw, i)); break;
        case SQLITE_NULL: row.emplace_back(std::monostate{}); break;
        default: {
          auto* text = reinterpret_cast<const char*>(sqlite3_column_text(raw, i));
          row.emplace_back(std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(raw, i))));
        }
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace qrec
