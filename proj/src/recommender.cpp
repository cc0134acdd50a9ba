#include "qrec/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "qrec/error.hpp"
#include "qrec/fpmax.hpp"

namespace qrec {

namespace {

constexpr std::size_t kMaxSingleCandidates = 200;
constexpr std::size_t kMaxItemsetCandidates = 100;
constexpr std::size_t kMaxPairCandidates = 200;
constexpr std::size_t kMaxGroupingAttempts = 5;
constexpr std::size_t kTopUpAggregateRanks = 3;

void require_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, std::string(name) + " must lie in [0, 1]");
  }
}

std::string display_of(const QueryIR& ir, const ColumnRef& ref) {
  if (!ir.schema) return ref.column;
  return ir.schema->column(ref).display_text;
}

}  // namespace

void RecommenderConfig::validate() const {
  require_unit_interval(alpha, "alpha");
  require_unit_interval(beta, "beta");
  if (!std::isfinite(binarization_threshold)) {
    throw Error(ErrorCode::InvalidConfig, "binarization_threshold must be finite");
  }
  if (!(min_support > 0.0 && min_support <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "min_support must lie in (0, 1]");
  }
  if (top_k == 0) throw Error(ErrorCode::InvalidConfig, "top_k must be positive");
  if (reference_domain_k == 0) throw Error(ErrorCode::InvalidConfig, "reference_domain_k must be positive");
}

RecommenderConfig RecommenderConfig::from_json(const nlohmann::json& j) {
  RecommenderConfig c;
  try {
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    c.binarization_threshold = j.value("binarization_threshold", c.binarization_threshold);
    c.min_support = j.value("min_support", c.min_support);
    auto positive = [&](const char* key, std::size_t fallback) {
      if (!j.contains(key)) return fallback;
      long long v = j[key].get<long long>();
      if (v <= 0) throw Error(ErrorCode::InvalidConfig, std::string(key) + " must be positive");
      return static_cast<std::size_t>(v);
    };
    c.top_k = positive("top_k", c.top_k);
    c.reference_domain_k = positive("reference_domain_k", c.reference_domain_k);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("recommender config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json RecommenderConfig::to_json() const {
  return {{"alpha", alpha},
          {"beta", beta},
          {"binarization_threshold", binarization_threshold},
          {"min_support", min_support},
          {"top_k", top_k},
          {"reference_domain_k", reference_domain_k}};
}

// ---------------------------------------------------------------------------
// Relevance vectors, mining, aggregation suggestions

std::vector<std::string> reference_occurrences(const std::vector<QueryIR>& refs, ActionKind action) {
  std::vector<std::string> out;
  for (const auto& ref : refs) {
    if (action == ActionKind::Grouping) {
      for (const auto& g : ref.grouping) out.push_back(display_of(ref, g));
    } else {
      for (const auto& item : ref.selections) out.push_back(display_of(ref, item.column));
    }
  }
  return out;
}

namespace {

RelevanceVector binarize(const ColumnRef& column, const std::string& text,
                         const std::vector<std::string>& occurrences, double threshold,
                         const TextSimilarity& similarity) {
  RelevanceVector v{column, {}, 0};
  v.bits.reserve(occurrences.size());
  for (const auto& occ : occurrences) {
    std::uint8_t bit = similarity(text, occ) >= threshold ? 1 : 0;
    v.bits.push_back(bit);
    v.frequency += bit;
  }
  return v;
}

struct AggregateCount {
  AggregateFn fn;
  std::size_t count;
};

std::vector<AggregateCount> count_aggregations(const std::string& text, ValueKind kind,
                                               const std::vector<QueryIR>& refs, double threshold,
                                               const TextSimilarity& similarity) {
  std::map<AggregateFn, std::size_t> counts;
  for (const auto& ref : refs) {
    for (const auto& item : ref.selections) {
      if (item.aggregate && similarity(text, display_of(ref, item.column)) >= threshold) {
        ++counts[*item.aggregate];
      }
    }
  }
  std::vector<AggregateCount> out;
  for (AggregateFn fn : kAllAggregates) {
    if (counts[fn] > 0) out.push_back({fn, counts[fn]});
  }
  // kAllAggregates is already in tie-break order, so a stable sort suffices.
  std::stable_sort(out.begin(), out.end(),
                   [](const AggregateCount& a, const AggregateCount& b) { return a.count > b.count; });
  if (out.empty()) {
    if (kind == ValueKind::Numeric) {
      out = {{AggregateFn::Sum, 0}, {AggregateFn::Avg, 0}, {AggregateFn::Count, 0}};
    } else {
      out = {{AggregateFn::Count, 0}};
    }
  }
  return out;
}

}  // namespace

RelevanceVector column_relevance_vector(const ColumnRef& column, const SchemaCatalog& catalog,
                                        const std::vector<QueryIR>& refs, ActionKind action,
                                        double threshold, const TextSimilarity& similarity) {
  return binarize(column, catalog.column(column).display_text, reference_occurrences(refs, action),
                  threshold, similarity);
}

std::vector<FrequentColumnSet> mine_frequent_attribute_sets(const std::vector<RelevanceVector>& vectors,
                                                            double min_support) {
  if (!(min_support > 0.0 && min_support <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "min_support must lie in (0, 1]");
  }
  if (vectors.empty()) return {};
  std::size_t n = vectors.front().bits.size();
  for (const auto& v : vectors) {
    if (v.bits.size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "relevance vectors have unequal lengths");
    }
  }
  std::vector<fpmax::Itemset> transactions(n);
  for (std::size_t item = 0; item < vectors.size(); ++item) {
    for (std::size_t pos = 0; pos < n; ++pos) {
      if (vectors[item].bits[pos]) transactions[pos].push_back(static_cast<fpmax::Item>(item));
    }
  }
  std::vector<FrequentColumnSet> out;
  for (const auto& m : fpmax::mine(transactions, fpmax::min_count(min_support, n))) {
    FrequentColumnSet set;
    for (auto item : m.items) set.columns.push_back(vectors[item].column);
    std::sort(set.columns.begin(), set.columns.end());
    set.columns.erase(std::unique(set.columns.begin(), set.columns.end()), set.columns.end());
    set.support = m.support;
    out.push_back(std::move(set));
  }
  std::sort(out.begin(), out.end(), [](const FrequentColumnSet& a, const FrequentColumnSet& b) {
    return a.columns < b.columns;
  });
  return out;
}

std::vector<AggregateFn> suggest_aggregations(const ColumnRef& column, const SchemaCatalog& catalog,
                                              const std::vector<QueryIR>& refs, double threshold,
                                              const TextSimilarity& similarity) {
  const ColumnDef& def = catalog.column(column);
  std::vector<AggregateFn> out;
  for (const auto& c : count_aggregations(def.display_text, def.kind, refs, threshold, similarity)) {
    out.push_back(c.fn);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contextual scoring

double action_similarity(const QueryIR& a, const QueryIR& b, ActionKind action,
                         const TextSimilarity& similarity) {
  auto lhs = action_columns(a, action);
  auto rhs = action_columns(b, action);
  if (lhs.empty() && rhs.empty()) return 1.0;
  if (lhs.empty() || rhs.empty()) return 0.0;
  std::vector<std::string> rhs_text;
  for (const auto& y : rhs) rhs_text.push_back(display_of(b, y));
  double total = 0.0;
  for (const auto& x : lhs) {
    std::string text = display_of(a, x);
    double best = -1.0;
    for (const auto& y : rhs_text) best = std::max(best, similarity(text, y));
    total += best;
  }
  return std::clamp(total / static_cast<double>(lhs.size()), 0.0, 1.0);
}

namespace {

double best_reference_similarity(const QueryIR& query, const std::vector<QueryIR>& refs,
                                 ActionKind action, const TextSimilarity& similarity) {
  double best = 0.0;
  for (const auto& r : refs) best = std::max(best, action_similarity(query, r, action, similarity));
  return best;
}

}  // namespace

double relevance(const QueryIR& query, const std::vector<QueryIR>& refs, const QueryIR& candidate,
                 ActionKind action, double beta, const TextSimilarity& similarity) {
  return action_similarity(query, candidate, action, similarity) +
         beta * best_reference_similarity(query, refs, action, similarity);
}

double decayed_sum(std::span<const double> relevance_newest_first, double alpha) {
  double total = 0.0;
  double weight = 1.0;
  for (double r : relevance_newest_first) {
    total += weight * r;
    weight *= alpha;
  }
  return total;
}

double contextual_score(const std::vector<QueryIR>& history, const std::vector<QueryIR>& refs,
                        const QueryIR& candidate, ActionKind action, const RecommenderConfig& config,
                        const TextSimilarity& similarity) {
  if (history.empty()) throw Error(ErrorCode::EmptyHistory, "contextual score needs a prior query");
  std::vector<double> per_query;
  per_query.reserve(history.size());
  for (const auto& q : history) {
    per_query.push_back(relevance(q, refs, candidate, action, config.beta, similarity));
  }
  return decayed_sum(per_query, config.alpha);
}

// ---------------------------------------------------------------------------
// Query assembly

QueryIR assemble_query(const std::vector<SelectItem>& selections, const std::vector<ColumnRef>& grouping,
                       CatalogPtr catalog) {
  QueryIR ir;
  ir.schema = catalog;
  std::set<std::string> tables;
  auto add = [&](const ColumnRef& ref) {
    ColumnRef canonical = catalog->resolve(ref.table, ref.column);
    tables.insert(canonical.table);
    return canonical;
  };
  for (const auto& item : selections) ir.selections.push_back({add(item.column), item.aggregate});
  for (const auto& ref : grouping) ir.grouping.push_back(add(ref));

  std::set<std::string> connected;
  for (const auto& table : tables) {
    if (connected.empty()) {
      connected.insert(table);
      continue;
    }
    if (connected.count(table)) continue;
    std::optional<std::vector<FkEdge>> best;
    for (const auto& from : connected) {
      try {
        auto path = join_path(*catalog, from, table);
        if (!best || path.size() < best->size()) best = std::move(path);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoJoinPath) throw;
      }
    }
    if (!best) throw Error(ErrorCode::NoJoinPath, "table '" + table + "' cannot be joined");
    for (const auto& e : *best) {
      if (std::find(ir.join_edges.begin(), ir.join_edges.end(), e) == ir.join_edges.end()) {
        ir.join_edges.push_back(e);
      }
      connected.insert(e.from.table);
      connected.insert(e.to.table);
    }
  }
  ir.source_tables = connected;
  validate(ir);
  return ir;
}

// ---------------------------------------------------------------------------
// Candidate generation

namespace {

bool is_categorical(ValueKind kind) { return kind != ValueKind::Numeric; }

class Prepared {
 public:
  Prepared(const RecommenderContext& context, const RecommenderConfig& config)
      : catalog_(context.catalog), similarity_(*context.similarity), config_(config) {
    if (!context.catalog || !context.repository || !context.similarity) {
      throw Error(ErrorCode::InvalidConfig, "recommender context is incomplete");
    }
    config.validate();
    refs_ = reference_queries(retrieve_relevant_domains(*context.repository, catalog_->domain_label(),
                                                        config.reference_domain_k, similarity_));
    auto selection_occ = reference_occurrences(refs_, ActionKind::Selection);
    auto grouping_occ = reference_occurrences(refs_, ActionKind::Grouping);
    selection_total_ = selection_occ.size();
    grouping_total_ = grouping_occ.size();

    std::vector<RelevanceVector> vectors;
    for (const auto& ref : catalog_->all_columns()) {
      const std::string& text = catalog_->column(ref).display_text;
      columns_.push_back(ref);
      auto sel = binarize(ref, text, selection_occ, config.binarization_threshold, similarity_);
      auto grp = binarize(ref, text, grouping_occ, config.binarization_threshold, similarity_);
      double best = 0.0;
      for (const auto& occ : selection_occ) best = std::max(best, similarity_(text, occ));
      max_similarity_[ref] = best;
      any_frequency_ = any_frequency_ || sel.frequency > 0;
      selection_bits_[ref] = sel.bits;
      selection_frequency_[ref] = sel.frequency;
      grouping_frequency_[ref] = grp.frequency;
      vectors.push_back(std::move(sel));
    }
    mined_ = mine_frequent_attribute_sets(vectors, config.min_support);
    std::stable_sort(mined_.begin(), mined_.end(), [](const auto& a, const auto& b) {
      if (a.support != b.support) return a.support > b.support;
      return a.columns.size() > b.columns.size();
    });

    for (const auto& ref : columns_) {
      if (is_categorical(catalog_->column(ref).kind) && grouping_frequency_[ref] > 0) {
        grouping_rank_.push_back(ref);
      }
    }
    std::stable_sort(grouping_rank_.begin(), grouping_rank_.end(), [&](const auto& a, const auto& b) {
      return grouping_frequency_[a] > grouping_frequency_[b];
    });
  }

  const std::vector<QueryIR>& refs() const { return refs_; }
  bool fallback() const { return !any_frequency_; }
  const std::vector<FrequentColumnSet>& mined() const { return mined_; }

  // Columns in descending selection frequency, then catalog order.
  std::vector<ColumnRef> ranked_columns(const std::set<ColumnRef>& exclude = {}) const {
    std::vector<ColumnRef> out;
    for (const auto& c : columns_) {
      if (!exclude.count(c)) out.push_back(c);
    }
    std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
      return rank_value(a) > rank_value(b);
    });
    return out;
  }

  /// `aggregate_rank` picks a lower-ranked aggregation suggestion for every
  /// numeric column (clamped to the last one).
  std::optional<Candidate> build(std::vector<ColumnRef> selected, std::size_t aggregate_rank = 0) {
    // Same-named key columns on both sides of a join would render the same
    // question twice; keep the first.
    std::set<std::string> texts;
    std::erase_if(selected, [&](const ColumnRef& c) {
      return !texts.insert(catalog_->column(c).display_text).second;
    });
    std::vector<SelectItem> items;
    std::vector<ColumnRef> plain;
    std::vector<double> aggregation_scores;
    for (const auto& ref : selected) {
      const ColumnDef& def = catalog_->column(ref);
      if (def.kind == ValueKind::Numeric) {
        auto top = ranked_aggregate(ref, aggregate_rank);
        items.push_back({ref, top.fn});
        aggregation_scores.push_back(fraction(top.count, selection_total_));
      } else {
        items.push_back({ref, std::nullopt});
        plain.push_back(ref);
      }
    }

    std::optional<QueryIR> ir;
    double grouping_score = 0.0;
    std::optional<ColumnRef> group_column;
    if (!aggregation_scores.empty()) {
      std::size_t attempts = 0;
      for (const auto& g : grouping_rank_) {
        if (texts.count(catalog_->column(g).display_text)) continue;
        if (attempts++ == kMaxGroupingAttempts) break;
        std::vector<SelectItem> with_group{{g, std::nullopt}};
        with_group.insert(with_group.end(), items.begin(), items.end());
        std::vector<ColumnRef> grouping = plain;
        grouping.push_back(g);
        try {
          ir = assemble_query(with_group, grouping, catalog_);
          grouping_score = fraction(grouping_frequency_.at(g), grouping_total_);
          group_column = g;
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoJoinPath) throw;
        }
      }
    }
    if (!ir) {
      std::vector<ColumnRef> grouping = aggregation_scores.empty() ? std::vector<ColumnRef>{} : plain;
      try {
        ir = assemble_query(items, grouping, catalog_);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoJoinPath) throw;
        return std::nullopt;
      }
    }

    Candidate c;
    c.query = std::move(*ir);
    c.basis = selected;
    c.group_column = group_column;
    double selection_score = fallback() ? mean_max_similarity(selected)
                                        : fraction(joint_support(selected), selection_total_);
    double aggregation_score = 0.0;
    for (double s : aggregation_scores) aggregation_score += s;
    if (!aggregation_scores.empty()) aggregation_score /= static_cast<double>(aggregation_scores.size());
    c.frequency_breakdown = {{ActionKind::Selection, selection_score},
                             {ActionKind::Grouping, grouping_score},
                             {ActionKind::Aggregation, aggregation_score}};
    c.frequency_score = selection_score + grouping_score + aggregation_score;
    return c;
  }

 private:
  static double fraction(std::size_t count, std::size_t total) {
    return total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total);
  }

  double rank_value(const ColumnRef& c) const {
    return fallback() ? max_similarity_.at(c) : static_cast<double>(selection_frequency_.at(c));
  }

  std::size_t joint_support(const std::vector<ColumnRef>& selected) const {
    std::size_t support = 0;
    for (std::size_t pos = 0; pos < selection_total_; ++pos) {
      bool all = std::all_of(selected.begin(), selected.end(),
                             [&](const ColumnRef& c) { return selection_bits_.at(c)[pos] != 0; });
      support += all ? 1 : 0;
    }
    return support;
  }

  double mean_max_similarity(const std::vector<ColumnRef>& selected) const {
    double total = 0.0;
    for (const auto& c : selected) total += max_similarity_.at(c);
    return selected.empty() ? 0.0 : total / static_cast<double>(selected.size());
  }

  AggregateCount ranked_aggregate(const ColumnRef& ref, std::size_t rank) {
    auto it = aggregates_.find(ref);
    if (it == aggregates_.end()) {
      const ColumnDef& def = catalog_->column(ref);
      it = aggregates_.emplace(ref, count_aggregations(def.display_text, def.kind, refs_,
                                                       config_.binarization_threshold, similarity_))
               .first;
    }
    return it->second[std::min(rank, it->second.size() - 1)];
  }

  CatalogPtr catalog_;
  const TextSimilarity& similarity_;
  const RecommenderConfig& config_;
  std::vector<QueryIR> refs_;
  std::size_t selection_total_ = 0;
  std::size_t grouping_total_ = 0;
  std::vector<ColumnRef> columns_;
  std::map<ColumnRef, std::vector<std::uint8_t>> selection_bits_;
  std::map<ColumnRef, std::size_t> selection_frequency_;
  std::map<ColumnRef, std::size_t> grouping_frequency_;
  std::map<ColumnRef, double> max_similarity_;
  std::map<ColumnRef, std::vector<AggregateCount>> aggregates_;
  std::vector<FrequentColumnSet> mined_;
  std::vector<ColumnRef> grouping_rank_;
  bool any_frequency_ = false;
};

void add_candidate(std::vector<Candidate>& pool, std::optional<Candidate> c) {
  if (!c) return;
  bool duplicate = std::any_of(pool.begin(), pool.end(),
                               [&](const Candidate& existing) { return existing.query == c->query; });
  if (!duplicate) pool.push_back(std::move(*c));
}

void add_full_pool(Prepared& prepared, std::vector<Candidate>& pool, std::size_t aggregate_rank = 0) {
  auto columns = prepared.ranked_columns();
  if (columns.size() > kMaxSingleCandidates) columns.resize(kMaxSingleCandidates);
  for (const auto& c : columns) add_candidate(pool, prepared.build({c}, aggregate_rank));
  std::size_t sets = 0;
  for (const auto& m : prepared.mined()) {
    if (m.columns.size() < 2) continue;
    if (sets++ == kMaxItemsetCandidates) break;
    add_candidate(pool, prepared.build(m.columns, aggregate_rank));
  }
}

std::set<ColumnRef> explored_columns(const std::vector<QueryIR>& history, const SchemaCatalog& catalog) {
  std::set<ColumnRef> explored;
  for (const auto& q : history) {
    for (ActionKind a : kAllActions) {
      for (const auto& c : action_columns(q, a)) {
        if (catalog.find_column(c.table, c.column)) explored.insert(catalog.resolve(c.table, c.column));
      }
    }
  }
  return explored;
}

CandidatePool pool_from(Prepared& prepared, const std::vector<QueryIR>& history,
                        const SchemaCatalog& catalog) {
  CandidatePool out;
  out.fallback = prepared.fallback();
  out.references = prepared.refs();
  if (history.empty()) {
    add_full_pool(prepared, out.candidates);
    return out;
  }

  auto explored = explored_columns(history, catalog);
  auto unexplored = prepared.ranked_columns(explored);
  if (unexplored.empty()) {
    out.exhausted = true;
    add_full_pool(prepared, out.candidates);
    return out;
  }
  if (unexplored.size() > kMaxSingleCandidates) unexplored.resize(kMaxSingleCandidates);
  std::set<ColumnRef> unexplored_set(unexplored.begin(), unexplored.end());

  for (const auto& c : unexplored) add_candidate(out.candidates, prepared.build({c}));

  std::size_t sets = 0;
  for (const auto& m : prepared.mined()) {
    if (m.columns.size() < 2) continue;
    bool fresh = std::any_of(m.columns.begin(), m.columns.end(),
                             [&](const ColumnRef& c) { return unexplored_set.count(c) > 0; });
    if (!fresh) continue;
    if (sets++ == kMaxItemsetCandidates) break;
    add_candidate(out.candidates, prepared.build(m.columns));
  }

  std::vector<ColumnRef> explored_ranked;
  for (const auto& c : prepared.ranked_columns()) {
    if (explored.count(c)) explored_ranked.push_back(c);
  }
  std::size_t pairs = 0;
  for (const auto& u : unexplored) {
    for (const auto& e : explored_ranked) {
      if (pairs++ == kMaxPairCandidates) break;
      add_candidate(out.candidates, prepared.build({e, u}));
    }
    if (pairs > kMaxPairCandidates) break;
  }
  return out;
}

bool in_history(const QueryIR& q, const std::vector<QueryIR>& history) {
  return std::find(history.begin(), history.end(), q) != history.end();
}

RecommendationSet finish(std::vector<Recommendation> items, const std::vector<QueryIR>& history,
                         std::size_t top_k, bool fallback, bool exhausted) {
  rank_recommendations(items);
  RecommendationSet out;
  out.fallback = fallback;
  out.exhausted = exhausted;
  for (auto& r : items) {
    if (out.items.size() == top_k) break;
    if (in_history(r.query, history)) continue;
    bool duplicate = std::any_of(out.items.begin(), out.items.end(), [&](const Recommendation& x) {
      return x.query == r.query || x.nl_text == r.nl_text;
    });
    if (!duplicate) out.items.push_back(std::move(r));
  }
  return out;
}

Recommendation from_candidate(Candidate c) {
  Recommendation r;
  r.sql = synthesize_sql(c.query);
  r.nl_text = render_nl(c.query);
  r.frequency_score = c.frequency_score;
  r.action_breakdown = std::move(c.frequency_breakdown);
  r.score = 0.0;
  for (ActionKind a : kAllActions) r.score += r.action_breakdown[a];
  r.query = std::move(c.query);
  return r;
}

}  // namespace

CandidatePool candidate_pool(const std::vector<QueryIR>& history, const RecommenderContext& context,
                             const RecommenderConfig& config) {
  Prepared prepared(context, config);
  return pool_from(prepared, history, *context.catalog);
}

void rank_recommendations(std::vector<Recommendation>& items) {
  std::stable_sort(items.begin(), items.end(), [](const Recommendation& a, const Recommendation& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.frequency_score != b.frequency_score) return a.frequency_score > b.frequency_score;
    return a.sql < b.sql;
  });
}

RecommendationSet recommend_initial(const RecommenderContext& context, const RecommenderConfig& config) {
  Prepared prepared(context, config);
  CandidatePool pool = pool_from(prepared, {}, *context.catalog);
  std::vector<Recommendation> items;
  for (auto& c : pool.candidates) items.push_back(from_candidate(std::move(c)));
  return finish(std::move(items), {}, config.top_k, pool.fallback, false);
}

RecommendationSet recommend_next(const std::vector<QueryIR>& history, const RecommenderContext& context,
                                 const RecommenderConfig& config) {
  if (history.empty()) return recommend_initial(context, config);
  Prepared prepared(context, config);
  CandidatePool pool = pool_from(prepared, history, *context.catalog);
  const TextSimilarity& similarity = *context.similarity;

  std::function<std::vector<Recommendation>(std::vector<Candidate>)> score;
  std::vector<QueryIR> newest_first(history.rbegin(), history.rend());
  std::map<ActionKind, std::vector<double>> reference_term;
  if (pool.exhausted) {
    score = [](std::vector<Candidate> candidates) {
      std::vector<Recommendation> items;
      for (auto& c : candidates) items.push_back(from_candidate(std::move(c)));
      return items;
    };
  } else {
    // The reference term of the relevance blend does not depend on the
    // candidate; evaluate it once per (history query, action).
    for (ActionKind a : kAllActions) {
      for (const auto& q : newest_first) {
        reference_term[a].push_back(best_reference_similarity(q, pool.references, a, similarity));
      }
    }
    score = [&](std::vector<Candidate> candidates) {
      std::vector<Recommendation> items;
      for (auto& c : candidates) {
        Recommendation r;
        r.sql = synthesize_sql(c.query);
        r.nl_text = render_nl(c.query);
        r.frequency_score = c.frequency_score;
        for (ActionKind a : kAllActions) {
          std::vector<double> per_query;
          for (std::size_t i = 0; i < newest_first.size(); ++i) {
            per_query.push_back(action_similarity(newest_first[i], c.query, a, similarity) +
                                config.beta * reference_term[a][i]);
          }
          r.action_breakdown[a] = decayed_sum(per_query, config.alpha);
          r.score += r.action_breakdown[a];
        }
        r.query = std::move(c.query);
        items.push_back(std::move(r));
      }
      return items;
    };
  }

  auto out = finish(score(std::move(pool.candidates)), history, config.top_k, pool.fallback, pool.exhausted);
  if (out.items.size() < config.top_k) {
    // Small schemas run out of candidates before top_k distinct queries
    // exist; fill the rest from the full pool with lower-ranked aggregation
    // suggestions, ranked after everything above.
    std::vector<Candidate> rest;
    for (std::size_t rank = 0; rank < kTopUpAggregateRanks; ++rank) add_full_pool(prepared, rest, rank);
    std::vector<QueryIR> seen = history;
    for (const auto& r : out.items) seen.push_back(r.query);
    auto extra = finish(score(std::move(rest)), seen, config.top_k, pool.fallback, false);
    for (auto& r : extra.items) {
      if (out.items.size() == config.top_k) break;
      bool same_text = std::any_of(out.items.begin(), out.items.end(),
                                   [&](const Recommendation& x) { return x.nl_text == r.nl_text; });
      if (!same_text) out.items.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace qrec
