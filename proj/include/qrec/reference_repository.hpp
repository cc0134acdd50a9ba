#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qrec/embedding.hpp"
#include "qrec/query_ir.hpp"
#include "qrec/schema_catalog.hpp"

namespace qrec {

struct DomainGroup {
  std::string domain_label;
  CatalogPtr schema;
  std::vector<QueryIR> queries;
};

struct LoadStats {
  std::size_t records = 0;
  std::size_t unknown_database = 0;
  std::size_t unparseable = 0;
  std::size_t duplicates = 0;
  std::size_t lossy = 0;
};

/// Domain-grouped reference query log. Groups are ordered by label.
class ReferenceRepository {
 public:
  ReferenceRepository() = default;
  /// Throws MalformedFile on duplicate labels or empty groups.
  explicit ReferenceRepository(std::vector<DomainGroup> groups, LoadStats stats = {});

  const std::vector<DomainGroup>& groups() const { return groups_; }
  const LoadStats& stats() const { return stats_; }
  bool empty() const { return groups_.empty(); }
  std::size_t query_count() const;

 private:
  std::vector<DomainGroup> groups_;
  LoadStats stats_;
};

/// Loads Spider `tables.json` plus a `[{db_id, question, query}]` record file.
/// Records with an unknown db_id or outside the supported grammar are skipped;
/// duplicate (db_id, canonical SQL) pairs are kept once. Throws NoUsableQueries
/// when nothing survives.
ReferenceRepository load_log(const std::filesystem::path& schemas_path,
                             const std::filesystem::path& queries_path);

/// Snapshot format documented in docs/formats.md.
nlohmann::json to_snapshot_json(const ReferenceRepository& repo);
ReferenceRepository repository_from_snapshot(const nlohmann::json& snapshot);
void save_snapshot(const ReferenceRepository& repo, const std::filesystem::path& path);
ReferenceRepository load_snapshot(const std::filesystem::path& path);

struct RankedDomain {
  const DomainGroup* group;
  double score;
};

/// Groups ranked by cosine(target, label), descending; ties by label. At most k.
std::vector<RankedDomain> retrieve_relevant_domains(const ReferenceRepository& repo,
                                                    std::string_view target_domain, std::size_t k,
                                                    const TextSimilarity& similarity);

/// Concatenates group queries in rank order.
std::vector<QueryIR> reference_queries(const std::vector<RankedDomain>& ranked);
std::vector<QueryIR> reference_queries(const std::vector<const DomainGroup*>& groups);

}  // namespace qrec
