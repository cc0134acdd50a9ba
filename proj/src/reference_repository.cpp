#include "qrec/reference_repository.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "qrec/error.hpp"
#include "qrec/text_util.hpp"

namespace qrec {

using nlohmann::json;

ReferenceRepository::ReferenceRepository(std::vector<DomainGroup> groups, LoadStats stats)
    : groups_(std::move(groups)), stats_(stats) {
  std::sort(groups_.begin(), groups_.end(),
            [](const DomainGroup& a, const DomainGroup& b) { return a.domain_label < b.domain_label; });
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i].queries.empty()) {
      throw Error(ErrorCode::MalformedFile, "domain '" + groups_[i].domain_label + "' has no queries");
    }
    if (i > 0 && groups_[i].domain_label == groups_[i - 1].domain_label) {
      throw Error(ErrorCode::MalformedFile, "duplicate domain label '" + groups_[i].domain_label + "'");
    }
  }
}

std::size_t ReferenceRepository::query_count() const {
  std::size_t n = 0;
  for (const auto& g : groups_) n += g.queries.size();
  return n;
}

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MalformedFile, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
  }
}

// Distinct databases can share a label after underscore replacement; fall back
// to the raw identifier for the later ones.
std::vector<DomainGroup> label_groups(std::vector<std::pair<CatalogPtr, std::vector<QueryIR>>> raw) {
  std::vector<DomainGroup> groups;
  std::set<std::string> labels;
  for (auto& [schema, queries] : raw) {
    if (queries.empty()) continue;
    std::string label = schema->domain_label();
    if (!labels.insert(label).second) {
      label = schema->database_id();
      labels.insert(label);
    }
    groups.push_back({label, schema, std::move(queries)});
  }
  return groups;
}

}  // namespace

ReferenceRepository load_log(const std::filesystem::path& schemas_path,
                             const std::filesystem::path& queries_path) {
  std::vector<std::string> rejected;
  std::map<std::string, CatalogPtr> schemas;
  for (auto& catalog : load_spider_schemas(schemas_path, &rejected)) {
    std::string id = catalog.database_id();
    schemas.emplace(id, std::make_shared<const SchemaCatalog>(std::move(catalog)));
  }

  json records = read_json(queries_path);
  if (!records.is_array()) {
    throw Error(ErrorCode::MalformedFile, queries_path.string() + ": expected an array of records");
  }

  LoadStats stats;
  std::map<std::string, std::vector<QueryIR>> by_db;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& record : records) {
    ++stats.records;
    if (!record.is_object() || !record.contains("db_id") || !record.contains("query")) {
      throw Error(ErrorCode::MalformedFile, queries_path.string() + ": record lacks db_id/query");
    }
    std::string db_id = record["db_id"].get<std::string>();
    auto it = schemas.find(db_id);
    if (it == schemas.end()) {
      ++stats.unknown_database;
      continue;
    }
    QueryIR ir;
    try {
      ir = parse_sql(record["query"].get<std::string>(), it->second);
    } catch (const Error&) {
      ++stats.unparseable;
      continue;
    }
    if (!seen.emplace(db_id, synthesize_sql(ir)).second) {
      ++stats.duplicates;
      continue;
    }
    if (ir.lossy) ++stats.lossy;
    by_db[db_id].push_back(std::move(ir));
  }

  std::vector<std::pair<CatalogPtr, std::vector<QueryIR>>> raw;
  for (auto& [db_id, queries] : by_db) raw.emplace_back(schemas.at(db_id), std::move(queries));
  auto groups = label_groups(std::move(raw));
  if (groups.empty()) {
    throw Error(ErrorCode::NoUsableQueries,
                "no usable reference queries in " + queries_path.string() + " (" +
                    std::to_string(stats.records) + " records)");
  }
  return ReferenceRepository(std::move(groups), stats);
}

json to_snapshot_json(const ReferenceRepository& repo) {
  json groups = json::array();
  for (const auto& g : repo.groups()) {
    json queries = json::array();
    for (const auto& q : g.queries) queries.push_back({{"sql", synthesize_sql(q)}, {"lossy", q.lossy}});
    groups.push_back({{"domain_label", g.domain_label},
                      {"schema", to_spider_json(*g.schema)},
                      {"queries", queries}});
  }
  const auto& s = repo.stats();
  return {{"format", "qrec-reference-repository"},
          {"version", 1},
          {"stats",
           {{"records", s.records},
            {"unknown_database", s.unknown_database},
            {"unparseable", s.unparseable},
            {"duplicates", s.duplicates},
            {"lossy", s.lossy}}},
          {"groups", groups}};
}

ReferenceRepository repository_from_snapshot(const json& snapshot) {
  try {
    if (snapshot.value("format", "") != "qrec-reference-repository") {
      throw Error(ErrorCode::MalformedFile, "not a reference repository snapshot");
    }
    LoadStats stats;
    if (snapshot.contains("stats")) {
      const auto& s = snapshot["stats"];
      stats.records = s.value("records", std::size_t{0});
      stats.unknown_database = s.value("unknown_database", std::size_t{0});
      stats.unparseable = s.value("unparseable", std::size_t{0});
      stats.duplicates = s.value("duplicates", std::size_t{0});
      stats.lossy = s.value("lossy", std::size_t{0});
    }
    std::vector<DomainGroup> groups;
    for (const auto& g : snapshot.at("groups")) {
      auto schema = std::make_shared<const SchemaCatalog>(catalog_from_spider_json(g.at("schema")));
      DomainGroup group{g.at("domain_label").get<std::string>(), schema, {}};
      for (const auto& q : g.at("queries")) {
        QueryIR ir = parse_sql(q.at("sql").get<std::string>(), schema);
        ir.lossy = q.value("lossy", false);
        group.queries.push_back(std::move(ir));
      }
      groups.push_back(std::move(group));
    }
    return ReferenceRepository(std::move(groups), stats);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("snapshot: ") + e.what());
  }
}

void save_snapshot(const ReferenceRepository& repo, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::StorageError, "cannot write " + path.string());
  out << to_snapshot_json(repo).dump(1) << '\n';
}

ReferenceRepository load_snapshot(const std::filesystem::path& path) {
  return repository_from_snapshot(read_json(path));
}

std::vector<RankedDomain> retrieve_relevant_domains(const ReferenceRepository& repo,
                                                    std::string_view target_domain, std::size_t k,
                                                    const TextSimilarity& similarity) {
  if (trim(target_domain).empty()) throw Error(ErrorCode::EmptyText, "empty target domain");
  std::vector<RankedDomain> ranked;
  for (const auto& g : repo.groups()) ranked.push_back({&g, similarity(target_domain, g.domain_label)});
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedDomain& a, const RankedDomain& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.group->domain_label < b.group->domain_label;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

std::vector<QueryIR> reference_queries(const std::vector<RankedDomain>& ranked) {
  std::vector<const DomainGroup*> groups;
  for (const auto& r : ranked) groups.push_back(r.group);
  return reference_queries(groups);
}

std::vector<QueryIR> reference_queries(const std::vector<const DomainGroup*>& groups) {
  std::vector<QueryIR> out;
  for (const auto* g : groups) out.insert(out.end(), g->queries.begin(), g->queries.end());
  return out;
}

}  // namespace qrec
