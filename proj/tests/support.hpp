#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <unistd.h>

#include "qrec/reference_repository.hpp"
#include "qrec/schema_catalog.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path built_fixtures() { return QREC_FIXTURES; }
inline fs::path source_fixtures() { return QREC_SOURCE_FIXTURES; }

inline qrec::CatalogPtr toy_catalog(std::string label = "customers and orders") {
  return std::make_shared<const qrec::SchemaCatalog>(
      qrec::load_sqlite_schema(built_fixtures() / "toy.sqlite", label));
}

inline const qrec::ReferenceRepository& reference_repo() {
  static const qrec::ReferenceRepository repo = qrec::load_snapshot(built_fixtures() / "refs.json");
  return repo;
}

/// Removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("qrec-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

}  // namespace testing

#include <doctest.h>
#include <functional>

#include "qrec/error.hpp"

namespace testing {

/// Runs `f` and returns the code of the qrec::Error it throws.
inline qrec::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const qrec::Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return qrec::ErrorCode::MalformedFile;
}

}  // namespace testing
