#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "qrec/fpmax.hpp"
#include "qrec/recommender.hpp"
#include "support.hpp"

using namespace qrec;
using testing::code_of;

namespace {

// Exhaustive maximal-itemset enumeration over item ids < 6.
std::vector<fpmax::MaximalItemset> brute_force_maximal(const std::vector<fpmax::Itemset>& transactions,
                                                       std::size_t min_count, unsigned items) {
  std::vector<std::size_t> support(1u << items, 0);
  std::vector<unsigned> masks;
  for (const auto& t : transactions) {
    unsigned m = 0;
    for (auto i : t) m |= 1u << i;
    masks.push_back(m);
  }
  for (unsigned s = 1; s < (1u << items); ++s) {
    for (unsigned m : masks) support[s] += (m & s) == s ? 1 : 0;
  }
  std::vector<fpmax::MaximalItemset> out;
  for (unsigned s = 1; s < (1u << items); ++s) {
    if (support[s] < min_count) continue;
    bool maximal = true;
    for (unsigned sup = 1; sup < (1u << items) && maximal; ++sup) {
      if (sup != s && (sup & s) == s && support[sup] >= min_count) maximal = false;
    }
    if (!maximal) continue;
    fpmax::MaximalItemset mi;
    for (unsigned i = 0; i < items; ++i) {
      if (s & (1u << i)) mi.items.push_back(i);
    }
    mi.support = support[s];
    out.push_back(mi);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.items < b.items; });
  return out;
}

CatalogPtr words_catalog() {
  TableDef t{"t", "things", {}, "id"};
  t.columns = {{"id", "id", ValueKind::Numeric},
               {"order_quantity", "order quantity", ValueKind::Numeric},
               {"quantity_ordered", "quantity ordered", ValueKind::Numeric},
               {"order_qty", "order qty", ValueKind::Numeric},
               {"singer_name", "singer name", ValueKind::Text},
               {"product_details", "product details", ValueKind::Text},
               {"order_status", "order status", ValueKind::Text}};
  return std::make_shared<const SchemaCatalog>(SchemaCatalog("words", "words", {t}, {}));
}

QueryIR words_query(const std::string& sql) { return parse_sql(sql, words_catalog()); }

// Independent reading of the contextual score: mean-of-max column similarity,
// max over references, alpha^r weights by recency rank.
double oracle_pair(const QueryIR& a, const QueryIR& b, ActionKind action, const TextSimilarity& sim) {
  auto cols = [&](const QueryIR& q) {
    std::vector<std::string> out;
    for (const auto& c : action_columns(q, action)) out.push_back(q.schema->column(c).display_text);
    return out;
  };
  auto x = cols(a), y = cols(b);
  if (x.empty() != y.empty()) return 0.0;
  if (x.empty()) return 1.0;
  double sum = 0;
  for (const auto& s : x) {
    double best = -2;
    for (const auto& t : y) best = std::max(best, sim.uncached(s, t));
    sum += best;
  }
  return std::min(1.0, std::max(0.0, sum / x.size()));
}

double oracle_contextual(const std::vector<QueryIR>& newest_first, const std::vector<QueryIR>& refs,
                         const QueryIR& cand, ActionKind action, double alpha, double beta,
                         const TextSimilarity& sim) {
  double total = 0;
  for (std::size_t r = 0; r < newest_first.size(); ++r) {
    double ref_best = 0;
    for (const auto& q : refs) ref_best = std::max(ref_best, oracle_pair(newest_first[r], q, action, sim));
    total += std::pow(alpha, static_cast<double>(r)) * (oracle_pair(newest_first[r], cand, action, sim) + beta * ref_best);
  }
  return total;
}

const char* kProductOrderSql =
    "SELECT Products.product_details, SUM(Order_Items.order_quantity) FROM Order_Items JOIN Products "
    "ON Order_Items.product_id = Products.product_id GROUP BY Products.product_details";

RecommenderContext toy_context(const TextSimilarity& sim) {
  return {testing::toy_catalog(), &testing::reference_repo(), &sim};
}

bool selects(const Recommendation& r, const std::string& table, const std::string& column) {
  return std::any_of(r.query.selections.begin(), r.query.selections.end(), [&](const SelectItem& s) {
    return s.column.table == table && s.column.column == column;
  });
}

void check_set_invariants(const RecommendationSet& set, const std::vector<QueryIR>& history) {
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    const auto& r = set.items[i];
    CHECK(r.nl_text == render_nl(r.query));
    CHECK(r.sql == synthesize_sql(r.query));
    double sum = 0;
    for (const auto& [a, v] : r.action_breakdown) sum += v;
    CHECK(r.score == doctest::Approx(sum).epsilon(1e-12));
    if (i > 0) CHECK(set.items[i - 1].score >= r.score);
    for (std::size_t j = 0; j < i; ++j) CHECK_FALSE(set.items[j].query == r.query);
    for (const auto& h : history) CHECK_FALSE(h == r.query);
  }
}

}  // namespace

TEST_CASE("fpmax worked examples") {
  using fpmax::MaximalItemset;
  std::vector<fpmax::Itemset> tx = {{0, 1}, {0, 1, 2}, {0, 2}};
  CHECK(fpmax::min_count(2.0 / 3.0, 3) == 2);
  CHECK(fpmax::mine(tx, 2) == std::vector<MaximalItemset>{{{0, 1}, 2}, {{0, 2}, 2}});
  CHECK(fpmax::mine({{0}}, fpmax::min_count(1.0, 1)) == std::vector<MaximalItemset>{{{0}, 1}});
  CHECK(fpmax::mine(tx, 4).empty());
  CHECK(fpmax::mine({}, 1).empty());
  CHECK(fpmax::min_count(0.1, 38) == 4);
  CHECK(fpmax::min_count(0.5, 4) == 2);
  CHECK(fpmax::min_count(0.01, 3) == 1);
}

TEST_CASE("fpmax equals brute-force enumeration on random databases") {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> n_items(1, 6), n_tx(0, 12), coin(0, 2);
  for (int trial = 0; trial < 2000; ++trial) {
    unsigned items = n_items(rng);
    std::vector<fpmax::Itemset> tx(n_tx(rng));
    for (auto& t : tx) {
      for (unsigned i = 0; i < items; ++i) {
        if (coin(rng)) t.push_back(i);
      }
      std::shuffle(t.begin(), t.end(), rng);
      if (!t.empty() && coin(rng) == 0) t.push_back(t.front());  // repeated item
    }
    std::size_t min_count = std::uniform_int_distribution<std::size_t>(1, tx.size() + 1)(rng);
    CAPTURE(trial);
    REQUIRE(fpmax::mine(tx, min_count) == brute_force_maximal(tx, min_count, items));
  }
}

TEST_CASE("relevance vectors binarize per reference occurrence") {
  TextSimilarity sim;
  auto catalog = words_catalog();
  std::vector<QueryIR> refs = {words_query("SELECT order_quantity, quantity_ordered FROM t"),
                               words_query("SELECT order_qty, singer_name FROM t")};
  ColumnRef oq{"t", "order_quantity"};
  auto v = column_relevance_vector(oq, *catalog, refs, ActionKind::Selection, 0.5, sim);
  CHECK(v.bits == std::vector<std::uint8_t>{1, 1, 1, 0});
  CHECK(v.frequency == 3);

  auto none = column_relevance_vector(oq, *catalog, refs, ActionKind::Selection, 1.01, sim);
  CHECK(none.bits == std::vector<std::uint8_t>{0, 0, 0, 0});
  CHECK(none.frequency == 0);

  auto empty = column_relevance_vector(oq, *catalog, {}, ActionKind::Selection, 0.5, sim);
  CHECK(empty.bits.empty());
  CHECK(empty.frequency == 0);

  auto grouped = column_relevance_vector({"t", "order_status"}, *catalog,
                                         {words_query("SELECT order_status, SUM(order_qty) FROM t GROUP BY order_status")},
                                         ActionKind::Grouping, 0.5, sim);
  CHECK(grouped.bits == std::vector<std::uint8_t>{1});
}

TEST_CASE("binarization flips exactly at the oracle similarity") {
  // cosine("order quantity", "order qty") = 0.6390096504226936 per the oracle.
  TextSimilarity sim;
  auto catalog = words_catalog();
  std::vector<QueryIR> refs = {words_query("SELECT order_qty FROM t")};
  ColumnRef oq{"t", "order_quantity"};
  const double s = 0.6390096504226936;
  CHECK(column_relevance_vector(oq, *catalog, refs, ActionKind::Selection, s - 1e-9, sim).bits[0] == 1);
  CHECK(column_relevance_vector(oq, *catalog, refs, ActionKind::Selection, s + 1e-9, sim).bits[0] == 0);
}

TEST_CASE("frequent attribute sets come from per-occurrence transactions") {
  RelevanceVector a{{"t", "a"}, {1, 1, 1}, 3}, b{{"t", "b"}, {1, 1, 0}, 2}, c{{"t", "c"}, {0, 1, 1}, 2};
  auto sets = mine_frequent_attribute_sets({a, b, c}, 2.0 / 3.0);
  CHECK(sets == std::vector<FrequentColumnSet>{{{{"t", "a"}, {"t", "b"}}, 2}, {{{"t", "a"}, {"t", "c"}}, 2}});
  RelevanceVector short_one{{"t", "d"}, {1}, 1};
  CHECK(code_of([&] { mine_frequent_attribute_sets({a, short_one}, 0.5); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { mine_frequent_attribute_sets({a}, 0.0); }) == ErrorCode::InvalidConfig);
  CHECK(mine_frequent_attribute_sets({}, 0.5).empty());
}

TEST_CASE("aggregation suggestions count similar aggregated occurrences") {
  TextSimilarity sim;
  auto catalog = words_catalog();
  ColumnRef oq{"t", "order_quantity"};
  std::vector<QueryIR> refs = {words_query("SELECT SUM(order_qty) FROM t"),
                               words_query("SELECT SUM(quantity_ordered) FROM t"),
                               words_query("SELECT AVG(order_quantity) FROM t"),
                               words_query("SELECT MAX(singer_name) FROM t")};
  CHECK(suggest_aggregations(oq, *catalog, refs, 0.5, sim) == std::vector<AggregateFn>{AggregateFn::Sum, AggregateFn::Avg});

  std::vector<QueryIR> tied = {words_query("SELECT AVG(order_qty) FROM t"), words_query("SELECT SUM(order_qty) FROM t")};
  CHECK(suggest_aggregations(oq, *catalog, tied, 0.5, sim) == std::vector<AggregateFn>{AggregateFn::Sum, AggregateFn::Avg});

  CHECK(suggest_aggregations({"t", "product_details"}, *catalog, refs, 0.5, sim) ==
        std::vector<AggregateFn>{AggregateFn::Count});
  CHECK(suggest_aggregations(oq, *catalog, {}, 0.5, sim) ==
        std::vector<AggregateFn>{AggregateFn::Sum, AggregateFn::Avg, AggregateFn::Count});
}

TEST_CASE("action similarity") {
  TextSimilarity sim;
  auto q = words_query("SELECT order_status, SUM(order_quantity) FROM t GROUP BY order_status");
  for (ActionKind a : kAllActions) CHECK(action_similarity(q, q, a, sim) == 1.0);

  auto plain = words_query("SELECT order_quantity FROM t");
  CHECK(action_similarity(q, plain, ActionKind::Grouping, sim) == 0.0);
  CHECK(action_similarity(plain, plain, ActionKind::Grouping, sim) == 1.0);

  auto wider = words_query("SELECT order_quantity, product_details FROM t");
  CHECK(action_similarity(plain, wider, ActionKind::Selection, sim) == 1.0);
  // Direction matters: from the wider query, "product details" only meets a
  // negative cosine. Clamping applies to the mean, not to each term.
  CHECK(action_similarity(wider, plain, ActionKind::Selection, sim) ==
        doctest::Approx((1.0 - 0.07453559924999299) / 2).epsilon(1e-12));

  auto status = words_query("SELECT order_status FROM t");
  CHECK(action_similarity(plain, status, ActionKind::Selection, sim) ==
        doctest::Approx(0.3892494720807615).epsilon(1e-12));
  // Negative cosine clamps to zero.
  auto details = words_query("SELECT product_details FROM t");
  CHECK(action_similarity(plain, details, ActionKind::Selection, sim) == 0.0);
}

TEST_CASE("relevance blends candidate and reference similarity") {
  TextSimilarity sim;
  auto q = words_query("SELECT order_quantity FROM t");
  auto cand = words_query("SELECT order_status FROM t");
  auto ref = words_query("SELECT order_qty FROM t");
  double c = 0.3892494720807615, r = 0.6390096504226936;
  CHECK(relevance(q, {ref}, cand, ActionKind::Selection, 0.5, sim) == doctest::Approx(c + 0.5 * r).epsilon(1e-12));
  CHECK(relevance(q, {ref}, cand, ActionKind::Selection, 0.0, sim) == doctest::Approx(c).epsilon(1e-12));
  CHECK(relevance(q, {cand}, cand, ActionKind::Selection, 1.0, sim) == doctest::Approx(2 * c).epsilon(1e-12));
  CHECK(relevance(q, {}, cand, ActionKind::Selection, 1.0, sim) == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("decayed sum and contextual score") {
  std::vector<double> rel = {1.0, 0.5, 0.25};
  CHECK(decayed_sum(rel, 0.8) == doctest::Approx(1.56).epsilon(1e-12));
  CHECK(decayed_sum(rel, 0.0) == 1.0);
  CHECK(decayed_sum({}, 0.8) == 0.0);

  TextSimilarity sim;
  RecommenderConfig config;
  auto q = words_query("SELECT order_quantity FROM t");
  auto cand = words_query("SELECT order_status FROM t");
  CHECK(contextual_score({q}, {}, cand, ActionKind::Selection, config, sim) ==
        relevance(q, {}, cand, ActionKind::Selection, config.beta, sim));
  config.alpha = 0.0;
  auto older = words_query("SELECT order_status FROM t");
  CHECK(contextual_score({q, older}, {}, cand, ActionKind::Selection, config, sim) ==
        relevance(q, {}, cand, ActionKind::Selection, config.beta, sim));
  CHECK(code_of([&] { contextual_score({}, {}, cand, ActionKind::Selection, config, sim); }) ==
        ErrorCode::EmptyHistory);
}

TEST_CASE("contextual score matches a direct-summation oracle on random histories") {
  TextSimilarity sim;
  auto catalog = testing::toy_catalog();
  auto columns = catalog->all_columns();
  std::mt19937 rng(99);
  auto random_query = [&] {
    std::vector<SelectItem> items;
    std::vector<ColumnRef> grouping;
    std::set<ColumnRef> used;
    int n = std::uniform_int_distribution<int>(1, 3)(rng);
    bool aggregate = std::uniform_int_distribution<int>(0, 1)(rng);
    for (int i = 0; i < n; ++i) {
      auto c = columns[std::uniform_int_distribution<std::size_t>(0, columns.size() - 1)(rng)];
      if (!used.insert(c).second) continue;
      if (aggregate && i == 0) {
        items.push_back({c, AggregateFn::Count});
      } else {
        items.push_back({c, std::nullopt});
        if (aggregate) grouping.push_back(c);
      }
    }
    return assemble_query(items, grouping, catalog);
  };
  const auto& refs = testing::reference_repo().groups().front().queries;
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t len = std::uniform_int_distribution<std::size_t>(1, 5)(rng);
    std::vector<QueryIR> history;
    for (std::size_t i = 0; i < len; ++i) history.push_back(random_query());
    auto cand = random_query();
    RecommenderConfig config;
    config.alpha = std::uniform_real_distribution<double>(0, 1)(rng);
    config.beta = std::uniform_real_distribution<double>(0, 1)(rng);
    for (ActionKind a : kAllActions) {
      double got = contextual_score(history, refs, cand, a, config, sim);
      double want = oracle_contextual(history, refs, cand, a, config.alpha, config.beta, sim);
      CHECK(std::abs(got - want) <= 1e-9);
    }
  }
}

TEST_CASE("recency: a contribution at an earlier rank never scores lower") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    double alpha = u(rng) * 0.999;
    std::size_t n = 5;
    std::size_t r1 = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
    std::size_t r2 = std::uniform_int_distribution<std::size_t>(r1 + 1, n - 1)(rng);
    std::vector<double> base(n);
    for (auto& x : base) x = u(rng);
    double bump = u(rng);
    auto a = base, b = base;
    a[r1] += bump;
    b[r2] += bump;
    CHECK(decayed_sum(a, alpha) >= decayed_sum(b, alpha));
  }
}

TEST_CASE("raising one score never lowers its rank") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0, 3);
  auto rank_of = [](const std::vector<Recommendation>& items, const std::string& sql) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].sql == sql) return i;
    }
    return items.size();
  };
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Recommendation> items(8);
    for (std::size_t i = 0; i < items.size(); ++i) {
      items[i].sql = "q" + std::to_string(i);
      items[i].score = std::round(u(rng) * 4) / 4;  // frequent ties
      items[i].frequency_score = std::round(u(rng));
    }
    rank_recommendations(items);
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng);
    std::string sql = items[pick].sql;
    auto raised = items;
    raised[pick].score += std::uniform_real_distribution<double>(0, 1)(rng);
    rank_recommendations(raised);
    CHECK(rank_of(raised, sql) <= pick);
  }
}

TEST_CASE("assemble_query joins owning tables") {
  auto catalog = testing::toy_catalog();
  auto ir = assemble_query({{{"Products", "product_details"}, std::nullopt}, {{"Order_Items", "order_quantity"}, AggregateFn::Sum}},
                           {{"Products", "product_details"}}, catalog);
  CHECK(ir.source_tables == std::set<std::string>{"Order_Items", "Products"});
  CHECK(ir.join_edges == std::vector<FkEdge>{{{"Order_Items", "product_id"}, {"Products", "product_id"}}});
  CHECK(ir == parse_sql(kProductOrderSql, catalog));

  auto single = assemble_query({{{"Products", "product_details"}, std::nullopt}}, {}, catalog);
  CHECK(single.join_edges.empty());

  TableDef a{"a", "", {{"id", "", ValueKind::Numeric}}, "id"};
  TableDef b{"b", "", {{"id", "", ValueKind::Numeric}}, "id"};
  auto islands = std::make_shared<const SchemaCatalog>(SchemaCatalog("i", "i", {a, b}, {}));
  CHECK(code_of([&] { assemble_query({{{"a", "id"}, std::nullopt}, {{"b", "id"}, std::nullopt}}, {}, islands); }) ==
        ErrorCode::NoJoinPath);
  CHECK(code_of([&] { assemble_query({{{"a", "nope"}, std::nullopt}}, {}, islands); }) == ErrorCode::UnknownColumn);
}

TEST_CASE("recommender config") {
  RecommenderConfig c;
  CHECK(c.alpha == 0.8);
  CHECK(c.beta == 0.5);
  CHECK(c.binarization_threshold == 0.5);
  CHECK(c.top_k == 5);
  auto back = RecommenderConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(code_of([] { RecommenderConfig::from_json({{"alpha", 1.5}}); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { RecommenderConfig::from_json({{"beta", -0.1}}); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { RecommenderConfig::from_json({{"min_support", 0}}); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { RecommenderConfig::from_json({{"top_k", 0}}); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { RecommenderConfig::from_json({{"top_k", "five"}}); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("initial recommendations on the toy catalog") {
  TextSimilarity sim;
  auto ctx = toy_context(sim);
  RecommenderConfig config;
  auto set = recommend_initial(ctx, config);
  REQUIRE(set.items.size() == 5);
  CHECK_FALSE(set.fallback);
  CHECK_FALSE(set.exhausted);
  check_set_invariants(set, {});
  CHECK(std::any_of(set.items.begin(), set.items.end(),
                    [](const Recommendation& r) { return selects(r, "Order_Items", "order_quantity"); }));

  auto again = recommend_initial(ctx, config);
  REQUIRE(again.items.size() == set.items.size());
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    CHECK(again.items[i].sql == set.items[i].sql);
    CHECK(again.items[i].score == set.items[i].score);
  }
  CHECK(recommend_next({}, ctx, config).items.size() == set.items.size());
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    CHECK(recommend_next({}, ctx, config).items[i].query == set.items[i].query);
  }

  config.top_k = 1;
  auto one = recommend_initial(ctx, config);
  REQUIRE(one.items.size() == 1);
  CHECK(one.items[0].sql == set.items[0].sql);
}

TEST_CASE("empty reference repository takes the fallback path") {
  TextSimilarity sim;
  ReferenceRepository empty;
  RecommenderContext ctx{testing::toy_catalog(), &empty, &sim};
  auto set = recommend_initial(ctx, {});
  CHECK(set.fallback);
  CHECK(set.items.size() == 5);
  check_set_invariants(set, {});
}

TEST_CASE("next-step recommendations after the product-order query") {
  TextSimilarity sim;
  auto ctx = toy_context(sim);
  auto first = parse_sql(kProductOrderSql, ctx.catalog);
  std::vector<QueryIR> history = {first};
  auto set = recommend_next(history, ctx, {});
  REQUIRE(set.items.size() == 5);
  CHECK_FALSE(set.exhausted);
  check_set_invariants(set, history);

  std::set<ColumnRef> explored;
  for (ActionKind a : kAllActions) {
    for (const auto& c : action_columns(first, a)) explored.insert(c);
  }
  bool unexplored_order_column = false;
  for (const auto& r : set.items) {
    for (const auto& s : r.query.selections) {
      const auto& text = ctx.catalog->column(s.column).display_text;
      if (!explored.count(s.column) && text.find("order") != std::string::npos) unexplored_order_column = true;
    }
  }
  CHECK(unexplored_order_column);

  // Feeding the top pick back in keeps every invariant.
  history.push_back(set.items[0].query);
  auto second = recommend_next(history, ctx, {});
  CHECK(second.items.size() == 5);
  check_set_invariants(second, history);
}

TEST_CASE("exploring every column marks the pool exhausted") {
  TextSimilarity sim;
  auto mini = std::make_shared<const SchemaCatalog>(
      load_sqlite_schema(testing::built_fixtures() / "mini.sqlite", "customers and orders"));
  RecommenderContext ctx{mini, &testing::reference_repo(), &sim};
  std::vector<SelectItem> all;
  for (const auto& c : mini->all_columns()) all.push_back({c, std::nullopt});
  std::vector<QueryIR> history = {assemble_query(all, {}, mini)};
  auto set = recommend_next(history, ctx, {});
  CHECK(set.exhausted);
  CHECK_FALSE(set.items.empty());
  check_set_invariants(set, history);
}

TEST_CASE("candidate pool records its basis") {
  TextSimilarity sim;
  auto ctx = toy_context(sim);
  auto pool = candidate_pool({}, ctx, {});
  CHECK_FALSE(pool.candidates.empty());
  CHECK_FALSE(pool.references.empty());
  for (const auto& c : pool.candidates) {
    for (const auto& b : c.basis) {
      CHECK(std::any_of(c.query.selections.begin(), c.query.selections.end(),
                        [&](const SelectItem& s) { return s.column == b; }));
    }
    if (c.group_column) CHECK(std::find(c.query.grouping.begin(), c.query.grouping.end(), *c.group_column) != c.query.grouping.end());
    double sum = 0;
    for (const auto& [a, v] : c.frequency_breakdown) sum += v;
    CHECK(c.frequency_score == doctest::Approx(sum).epsilon(1e-12));
  }
}

TEST_CASE("small schemas still fill top_k after most columns are explored") {
  TextSimilarity sim;
  auto mini = std::make_shared<const SchemaCatalog>(
      load_sqlite_schema(testing::built_fixtures() / "mini.sqlite", "customers and orders"));
  RecommenderContext ctx{mini, &testing::reference_repo(), &sim};
  RecommenderConfig config;
  std::vector<QueryIR> history;
  for (int step = 0; step < 6; ++step) {
    auto set = recommend_next(history, ctx, config);
    CAPTURE(step);
    REQUIRE(set.items.size() == config.top_k);
    check_set_invariants(set, history);
    std::set<std::string> texts;
    for (const auto& r : set.items) CHECK(texts.insert(r.nl_text).second);
    history.push_back(set.items.front().query);
  }
}
