#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrec/embedding.hpp"
#include "qrec/query_ir.hpp"
#include "qrec/reference_repository.hpp"
#include "qrec/schema_catalog.hpp"

namespace qrec {

struct RecommenderConfig {
  /// Recency decay applied per step back in the history.
  double alpha = 0.8;
  /// Weight of the reference-pool similarity in the relevance blend.
  double beta = 0.5;
  double binarization_threshold = 0.5;
  /// Relative support for maximal frequent column sets.
  double min_support = 0.1;
  std::size_t top_k = 5;
  std::size_t reference_domain_k = 5;

  /// Throws InvalidConfig.
  void validate() const;
  static RecommenderConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// One bit per reference occurrence: 1 when the occurrence's column text is
/// at least `threshold` similar to the target column.
struct RelevanceVector {
  ColumnRef column;
  std::vector<std::uint8_t> bits;
  std::size_t frequency = 0;
};

struct Recommendation {
  QueryIR query;
  std::string sql;
  std::string nl_text;
  double score = 0.0;
  std::map<ActionKind, double> action_breakdown;
  /// Reference-frequency score of the candidate; breaks ties in `score`.
  double frequency_score = 0.0;
};

struct RecommendationSet {
  std::vector<Recommendation> items;
  /// No target column matched any reference occurrence; ranked by raw
  /// maximum similarity instead of frequency.
  bool fallback = false;
  /// Every column was already explored; the full frequency-ranked pool was used.
  bool exhausted = false;
};

/// The target catalog plus the shared reference log and similarity cache.
struct RecommenderContext {
  CatalogPtr catalog;
  const ReferenceRepository* repository = nullptr;
  const TextSimilarity* similarity = nullptr;
};

/// Display text of every column occurrence in the action-relevant clause of
/// `refs` (SELECT for Selection/Aggregation, GROUP BY for Grouping).
std::vector<std::string> reference_occurrences(const std::vector<QueryIR>& refs, ActionKind action);

RelevanceVector column_relevance_vector(const ColumnRef& column, const SchemaCatalog& catalog,
                                        const std::vector<QueryIR>& refs, ActionKind action,
                                        double threshold, const TextSimilarity& similarity);

struct FrequentColumnSet {
  std::vector<ColumnRef> columns;  // sorted
  std::size_t support = 0;

  bool operator==(const FrequentColumnSet&) const = default;
};

/// Maximal frequent column sets over the per-occurrence transactions implied
/// by `vectors`. Throws DimensionMismatch when bit lengths differ.
std::vector<FrequentColumnSet> mine_frequent_attribute_sets(const std::vector<RelevanceVector>& vectors,
                                                            double min_support);

/// Aggregates applied to similar reference columns, most frequent first, ties
/// in MIN, MAX, COUNT, SUM, AVG order. Falls back to [SUM, AVG, COUNT] for
/// numeric columns and [COUNT] otherwise.
std::vector<AggregateFn> suggest_aggregations(const ColumnRef& column, const SchemaCatalog& catalog,
                                              const std::vector<QueryIR>& refs, double threshold,
                                              const TextSimilarity& similarity);

/// Mean over the earlier query's action columns of the best match in the
/// other query; 1 when both sides are empty, 0 when exactly one is.
double action_similarity(const QueryIR& a, const QueryIR& b, ActionKind action,
                         const TextSimilarity& similarity);

double relevance(const QueryIR& query, const std::vector<QueryIR>& refs, const QueryIR& candidate,
                 ActionKind action, double beta, const TextSimilarity& similarity);

/// sum_r alpha^r * relevance[r], newest first.
double decayed_sum(std::span<const double> relevance_newest_first, double alpha);

/// `history` is newest first. Throws EmptyHistory.
double contextual_score(const std::vector<QueryIR>& history, const std::vector<QueryIR>& refs,
                        const QueryIR& candidate, ActionKind action, const RecommenderConfig& config,
                        const TextSimilarity& similarity);

/// Joins the owning tables of all columns, connecting tables in lexicographic
/// order through shortest join paths. Throws NoJoinPath.
QueryIR assemble_query(const std::vector<SelectItem>& selections, const std::vector<ColumnRef>& grouping,
                       CatalogPtr catalog);

struct Candidate {
  QueryIR query;
  /// The column set the candidate was built from, before aggregation and
  /// grouping were attached.
  std::vector<ColumnRef> basis;
  std::optional<ColumnRef> group_column;
  double frequency_score = 0.0;
  std::map<ActionKind, double> frequency_breakdown;
};

struct CandidatePool {
  std::vector<Candidate> candidates;
  std::vector<QueryIR> references;
  bool fallback = false;
  bool exhausted = false;
};

/// Candidate queries for the next step given a chronological history.
CandidatePool candidate_pool(const std::vector<QueryIR>& history, const RecommenderContext& context,
                             const RecommenderConfig& config);

/// Sorts by score, then frequency score (both descending), then SQL text.
void rank_recommendations(std::vector<Recommendation>& items);

RecommendationSet recommend_initial(const RecommenderContext& context, const RecommenderConfig& config);

/// `history` is chronological (newest last); it is reversed internally so
/// the newest query carries weight 1.
RecommendationSet recommend_next(const std::vector<QueryIR>& history, const RecommenderContext& context,
                                 const RecommenderConfig& config);

}  // namespace qrec
