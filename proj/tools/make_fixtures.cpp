// Builds the binary test fixtures from the checked-in SQL and Spider files.
//   qrec-make-fixtures <fixtures source dir> <output dir>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qrec/error.hpp"
#include "qrec/recommender.hpp"
#include "qrec/reference_repository.hpp"
#include "qrec/sqlite_db.hpp"

namespace fs = std::filesystem;

namespace {

void build_db(const fs::path& sql, const fs::path& out) {
  std::ifstream in(sql);
  if (!in) throw std::runtime_error("cannot read " + sql.string());
  std::stringstream text;
  text << in.rdbuf();
  fs::remove(out);
  qrec::SqliteDb db(out, qrec::SqliteDb::Mode::ReadWriteCreate);
  db.exec(text.str());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: qrec-make-fixtures <src dir> <out dir>\n";
    return 2;
  }
  fs::path src = argv[1], out = argv[2];
  try {
    fs::create_directories(out);
    build_db(src / "customers_and_orders.sql", out / "toy.sqlite");
    build_db(src / "mini.sql", out / "mini.sqlite");
    auto repo = qrec::load_log(src / "reference_tables.json", src / "reference_queries.json");
    qrec::save_snapshot(repo, out / "refs.json");

    // Example service config; paths are relative to this file.
    nlohmann::json service = {
        {"host", "127.0.0.1"},
        {"port", 8080},
        {"storage", "events.jsonl"},
        {"reference", {{"snapshot", "refs.json"}}},
        {"databases",
         nlohmann::json::array({{{"id", "customers_and_orders"},
                                 {"path", "toy.sqlite"},
                                 {"domain_label", "customers and orders"}},
                                {{"id", "mini"}, {"path", "mini.sqlite"}}})},
        {"recommender", qrec::RecommenderConfig{}.to_json()},
        {"embedder", {{"provider", "lexical_default"}, {"dimension", 256}}}};
    std::ofstream(out / "service.json") << service.dump(2) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "qrec-make-fixtures: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
