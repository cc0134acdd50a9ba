#include <doctest.h>

#include <fstream>
#include <set>

#include "qrec/reference_repository.hpp"
#include "support.hpp"

using namespace qrec;
using testing::code_of;

namespace {

ReferenceRepository fixture_log() {
  return load_log(testing::source_fixtures() / "reference_tables.json",
                  testing::source_fixtures() / "reference_queries.json");
}

void write_json(const std::filesystem::path& p, const nlohmann::json& j) { std::ofstream(p) << j.dump(1); }

std::vector<std::string> labels(const std::vector<RankedDomain>& ranked) {
  std::vector<std::string> out;
  for (const auto& r : ranked) out.push_back(r.group->domain_label);
  return out;
}

}  // namespace

TEST_CASE("loading the fixture log reports what was skipped") {
  auto repo = fixture_log();
  const auto& s = repo.stats();
  CHECK(s.records == 38);
  CHECK(s.unknown_database == 1);
  CHECK(s.unparseable == 2);
  CHECK(s.duplicates == 2);
  CHECK(s.lossy == 11);
  CHECK(repo.query_count() == 33);

  std::vector<std::pair<std::string, std::size_t>> sizes;
  for (const auto& g : repo.groups()) sizes.emplace_back(g.domain_label, g.queries.size());
  CHECK(sizes == std::vector<std::pair<std::string, std::size_t>>{{"cinema", 5},
                                                                  {"concert singer", 4},
                                                                  {"customer deliveries", 6},
                                                                  {"customer order addresses", 14},
                                                                  {"pets 1", 4}});
}

TEST_CASE("every loaded query is valid against its own schema and unique") {
  auto repo = fixture_log();
  for (const auto& g : repo.groups()) {
    std::set<std::string> sqls;
    for (const auto& q : g.queries) {
      CHECK(q.schema == g.schema);
      CHECK_NOTHROW(validate(q));
      CHECK(sqls.insert(synthesize_sql(q)).second);
    }
  }
}

TEST_CASE("loading is idempotent") {
  auto a = fixture_log();
  auto b = fixture_log();
  CHECK(to_snapshot_json(a) == to_snapshot_json(b));
}

TEST_CASE("snapshot round trip preserves groups and queries") {
  auto repo = fixture_log();
  testing::TempDir dir;
  save_snapshot(repo, dir / "snap.json");
  auto back = load_snapshot(dir / "snap.json");
  REQUIRE(back.groups().size() == repo.groups().size());
  for (std::size_t i = 0; i < repo.groups().size(); ++i) {
    const auto& g = repo.groups()[i];
    const auto& h = back.groups()[i];
    CHECK(g.domain_label == h.domain_label);
    CHECK(*g.schema == *h.schema);
    CHECK(g.queries == h.queries);
  }
  CHECK(to_snapshot_json(back) == to_snapshot_json(repo));
  CHECK(back.stats().records == repo.stats().records);
}

TEST_CASE("built snapshot fixture matches a fresh load") {
  CHECK(to_snapshot_json(testing::reference_repo()) == to_snapshot_json(fixture_log()));
}

TEST_CASE("bad inputs") {
  testing::TempDir dir;
  auto schemas = testing::source_fixtures() / "reference_tables.json";

  SUBCASE("nothing usable") {
    write_json(dir / "q.json", nlohmann::json::array({
                                   {{"db_id", "world_1"}, {"question", "x"}, {"query", "SELECT name FROM city"}},
                                   {{"db_id", "cinema"}, {"question", "x"}, {"query", "SELECT count(*) FROM film"}},
                               }));
    CHECK(code_of([&] { load_log(schemas, dir / "q.json"); }) == ErrorCode::NoUsableQueries);
  }
  SUBCASE("empty record list") {
    write_json(dir / "q.json", nlohmann::json::array());
    CHECK(code_of([&] { load_log(schemas, dir / "q.json"); }) == ErrorCode::NoUsableQueries);
  }
  SUBCASE("record file is not an array") {
    write_json(dir / "q.json", {{"db_id", "cinema"}});
    CHECK(code_of([&] { load_log(schemas, dir / "q.json"); }) == ErrorCode::MalformedFile);
  }
  SUBCASE("unreadable json") {
    std::ofstream(dir / "q.json") << "[{";
    CHECK(code_of([&] { load_log(schemas, dir / "q.json"); }) == ErrorCode::MalformedFile);
  }
  SUBCASE("missing file") {
    CHECK(code_of([&] { load_log(schemas, dir / "absent.json"); }) == ErrorCode::MalformedFile);
    CHECK(code_of([&] { load_snapshot(dir / "absent.json"); }) == ErrorCode::MalformedFile);
  }
  SUBCASE("snapshot of the wrong format") {
    write_json(dir / "s.json", {{"format", "something-else"}, {"version", 1}, {"groups", nlohmann::json::array()}});
    CHECK(code_of([&] { load_snapshot(dir / "s.json"); }) == ErrorCode::MalformedFile);
  }
  SUBCASE("duplicate labels are rejected") {
    auto g = testing::reference_repo().groups().front();
    CHECK(code_of([&] { ReferenceRepository({g, g}); }) == ErrorCode::MalformedFile);
  }
}

TEST_CASE("retrieval ranks domains by label similarity") {
  const auto& repo = testing::reference_repo();
  TextSimilarity sim;

  auto ranked = retrieve_relevant_domains(repo, "customer order deliveries", 5, sim);
  CHECK(labels(ranked) == std::vector<std::string>{"customer deliveries", "customer order addresses",
                                                   "concert singer", "cinema", "pets 1"});
  CHECK(ranked[0].score == doctest::Approx(0.8956685895029607).epsilon(1e-12));
  CHECK(ranked[1].score == doctest::Approx(0.6275716324421889).epsilon(1e-12));
  CHECK(ranked[2].score == doctest::Approx(0.11094003924504585).epsilon(1e-12));
  CHECK(ranked[3].score == 0.0);
  CHECK(ranked[4].score == 0.0);

  auto exact = retrieve_relevant_domains(repo, "pets 1", 1, sim);
  REQUIRE(exact.size() == 1);
  CHECK(exact[0].group->domain_label == "pets 1");
  CHECK(exact[0].score == 1.0);

  CHECK(retrieve_relevant_domains(repo, "cinema", 50, sim).size() == 5);
  CHECK(retrieve_relevant_domains(repo, "cinema", 0, sim).empty());
  CHECK(code_of([&] { retrieve_relevant_domains(repo, "  ", 3, sim); }) == ErrorCode::EmptyText);
}

TEST_CASE("top-k retrieval is a prefix of the full ranking") {
  const auto& repo = testing::reference_repo();
  TextSimilarity sim;
  for (const char* target : {"customers and orders", "movie theaters", "animals", "music concerts", "orders"}) {
    auto full = labels(retrieve_relevant_domains(repo, target, 5, sim));
    for (std::size_t k = 0; k <= 5; ++k) {
      auto part = labels(retrieve_relevant_domains(repo, target, k, sim));
      CHECK(part == std::vector<std::string>(full.begin(), full.begin() + k));
    }
    auto scored = retrieve_relevant_domains(repo, target, 5, sim);
    for (std::size_t i = 1; i < scored.size(); ++i) CHECK(scored[i - 1].score >= scored[i].score);
  }
}

TEST_CASE("reference queries concatenate in rank order") {
  const auto& repo = testing::reference_repo();
  TextSimilarity sim;
  auto ranked = retrieve_relevant_domains(repo, "customer order deliveries", 2, sim);
  auto qs = reference_queries(ranked);
  REQUIRE(qs.size() == 6 + 14);
  for (std::size_t i = 0; i < 6; ++i) CHECK(qs[i].schema->domain_label() == "customer deliveries");
  for (std::size_t i = 6; i < qs.size(); ++i) CHECK(qs[i].schema->domain_label() == "customer order addresses");
  std::vector<const DomainGroup*> groups;
  for (const auto& r : ranked) groups.push_back(r.group);
  CHECK(reference_queries(groups) == qs);
  CHECK(reference_queries(std::vector<RankedDomain>{}).empty());
}
