#include <doctest.h>

#include <functional>
#include <random>

#include "qrec/error.hpp"
#include "qrec/query_ir.hpp"
#include "support.hpp"

using namespace qrec;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::MalformedFile;
}

const char* kProductOrderSql =
    "SELECT products.product_details, SUM(order_items.order_quantity) FROM order_items JOIN products "
    "ON order_items.product_id = products.product_id GROUP BY products.product_details";

CatalogPtr two_names_catalog() {
  TableDef a{"a", "", {{"id", "", ValueKind::Numeric}, {"name", "", ValueKind::Text}}, "id"};
  TableDef b{"b", "", {{"id", "", ValueKind::Numeric}, {"name", "", ValueKind::Text}, {"a_id", "", ValueKind::Numeric}}, "id"};
  return std::make_shared<const SchemaCatalog>(SchemaCatalog("ab", "ab", {a, b}, {{{"b", "a_id"}, {"a", "id"}}}));
}

// Random valid IR over the catalog: a random FK tree grown from one table,
// distinct select items, and a grouping that covers every plain item.
QueryIR random_ir(std::mt19937& rng, const CatalogPtr& catalog) {
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  const auto& tables = catalog->tables();
  QueryIR ir;
  ir.schema = catalog;
  ir.source_tables.insert(tables[pick(tables.size())].name);
  std::size_t extra = pick(4);
  for (std::size_t i = 0; i < extra; ++i) {
    std::vector<FkEdge> frontier;
    for (const auto& e : catalog->fk_edges()) {
      bool has_from = ir.source_tables.count(e.from.table) > 0, has_to = ir.source_tables.count(e.to.table) > 0;
      if (has_from != has_to) frontier.push_back(e);
    }
    if (frontier.empty()) break;
    const FkEdge& e = frontier[pick(frontier.size())];
    ir.join_edges.push_back(e);
    ir.source_tables.insert(e.from.table);
    ir.source_tables.insert(e.to.table);
  }

  std::vector<ColumnRef> pool;
  for (const auto& t : ir.source_tables) {
    for (const auto& c : catalog->table(t).columns) pool.push_back({t, c.name});
  }
  std::size_t count = 1 + pick(4);
  bool any_aggregate = false;
  for (std::size_t i = 0; i < count; ++i) {
    SelectItem item{pool[pick(pool.size())], std::nullopt};
    if (pick(2) == 0) {
      item.aggregate = kAllAggregates[pick(5)];
      any_aggregate = true;
    }
    if (std::find(ir.selections.begin(), ir.selections.end(), item) == ir.selections.end()) {
      ir.selections.push_back(item);
    }
  }
  if (any_aggregate && pick(3) != 0) {
    for (const auto& s : ir.selections) {
      if (!s.aggregate && std::find(ir.grouping.begin(), ir.grouping.end(), s.column) == ir.grouping.end()) {
        ir.grouping.push_back(s.column);
      }
    }
    if (pick(2) == 0) {
      const auto& g = pool[pick(pool.size())];
      if (std::find(ir.grouping.begin(), ir.grouping.end(), g) == ir.grouping.end()) ir.grouping.push_back(g);
    }
    std::shuffle(ir.grouping.begin(), ir.grouping.end(), rng);
  }
  return ir;
}

}  // namespace

TEST_CASE("parse the product order query") {
  auto c = testing::toy_catalog();
  auto ir = parse_sql(kProductOrderSql, c);
  REQUIRE(ir.selections.size() == 2);
  CHECK(ir.selections[0] == SelectItem{{"Products", "product_details"}, std::nullopt});
  CHECK(ir.selections[1] == SelectItem{{"Order_Items", "order_quantity"}, AggregateFn::Sum});
  CHECK(ir.grouping == std::vector<ColumnRef>{{"Products", "product_details"}});
  CHECK(ir.source_tables == std::set<std::string>{"Order_Items", "Products"});
  REQUIRE(ir.join_edges.size() == 1);
  CHECK(ir.join_edges[0] == FkEdge{{"Order_Items", "product_id"}, {"Products", "product_id"}});
  CHECK_FALSE(ir.lossy);

  CHECK(synthesize_sql(ir) ==
        "SELECT Products.product_details, SUM(Order_Items.order_quantity) FROM Order_Items JOIN Products "
        "ON Order_Items.product_id = Products.product_id GROUP BY Products.product_details");
  CHECK(parse_sql(synthesize_sql(ir), c) == ir);
}

TEST_CASE("parse resolves unqualified names, aliases and reversed ON") {
  auto c = testing::toy_catalog();
  auto ir = parse_sql(
      "select product_details, sum(T1.order_quantity) as total from Order_Items as T1 inner join Products T2 "
      "on T2.product_id = T1.product_id group by product_details",
      c);
  CHECK(ir == parse_sql(kProductOrderSql, c));
}

TEST_CASE("parse errors") {
  auto c = testing::toy_catalog();
  CHECK(code_of([&] { parse_sql("SELECT x FROM no_such_table", c); }) == ErrorCode::UnknownTable);
  CHECK(code_of([&] { parse_sql("SELECT nope FROM products", c); }) == ErrorCode::UnknownColumn);
  CHECK(code_of([&] { parse_sql("SELECT name FROM a JOIN b ON a.id = b.a_id", two_names_catalog()); }) ==
        ErrorCode::AmbiguousColumn);
  CHECK(code_of([&] { parse_sql("SELECT product_id + 1 FROM products", c); }) == ErrorCode::SyntaxError);
  CHECK(code_of([&] { parse_sql("SELECT FROM products", c); }) == ErrorCode::SyntaxError);
  CHECK(code_of([&] { parse_sql("SELECT product_id FROM (SELECT * FROM products)", c); }) == ErrorCode::SyntaxError);
  CHECK(code_of([&] { parse_sql("SELECT customers.customer_name FROM customers, products", c); }) ==
        ErrorCode::SyntaxError);
  CHECK(code_of([&] { parse_sql("SELECT count(*) FROM products", c); }) == ErrorCode::InvalidQuery);
  CHECK(code_of([&] { parse_sql("SELECT products.product_details FROM products JOIN customers ON 1 = 1", c); }) ==
        ErrorCode::SyntaxError);

  try {
    parse_sql("SELECT product_details FROM products WHERE", c);
  } catch (const Error&) {
    FAIL("a trailing WHERE with no condition is tolerated and dropped");
  }
  try {
    parse_sql("SELECT product_details FROM products GROUP", c);
    FAIL("expected a syntax error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SyntaxError);
    REQUIRE(e.position());
    CHECK(*e.position() == 42);  // end of input, where BY was expected
  }
}

TEST_CASE("lossy parses keep the outer SELECT signal") {
  auto c = testing::toy_catalog();
  auto where = parse_sql("SELECT order_status FROM customer_orders WHERE order_id > 3 ORDER BY order_date LIMIT 2", c);
  CHECK(where.lossy);
  CHECK(synthesize_sql(where) == "SELECT Customer_Orders.order_status FROM Customer_Orders");

  auto set_op = parse_sql(
      "SELECT order_status FROM customer_orders UNION SELECT payment_method FROM customers", c);
  CHECK(set_op.lossy);
  CHECK(set_op.source_tables == std::set<std::string>{"Customer_Orders"});

  auto count_star = parse_sql("SELECT order_status, count(*) FROM customer_orders GROUP BY order_status", c);
  CHECK(count_star.lossy);
  CHECK(count_star.selections.size() == 1);

  auto missing_group = parse_sql(
      "SELECT order_status, order_date, count(order_id) FROM customer_orders GROUP BY order_status", c);
  CHECK(missing_group.lossy);
  CHECK(missing_group.grouping ==
        std::vector<ColumnRef>{{"Customer_Orders", "order_status"}, {"Customer_Orders", "order_date"}});
  CHECK_NOTHROW(validate(missing_group));

  auto nested = parse_sql(
      "SELECT customer_name FROM customers WHERE customer_id NOT IN (SELECT customer_id FROM customer_orders)", c);
  CHECK(nested.lossy);
  CHECK(nested.source_tables == std::set<std::string>{"Customers"});
}

TEST_CASE("synthesize examples") {
  auto c = testing::toy_catalog();
  QueryIR single;
  single.schema = c;
  single.selections = {{{"Customers", "customer_name"}, std::nullopt}};
  single.source_tables = {"Customers"};
  CHECK(synthesize_sql(single) == "SELECT Customers.customer_name FROM Customers");

  auto chain = parse_sql(
      "SELECT customers.customer_name, SUM(order_items.order_quantity) FROM customers JOIN customer_orders ON "
      "customer_orders.customer_id = customers.customer_id JOIN order_items ON order_items.order_id = "
      "customer_orders.order_id GROUP BY customers.customer_name",
      c);
  REQUIRE(chain.join_edges.size() == 2);
  auto sql = synthesize_sql(chain);
  std::size_t joins = 0;
  for (auto pos = sql.find(" JOIN "); pos != std::string::npos; pos = sql.find(" JOIN ", pos + 1)) ++joins;
  CHECK(joins == 2);
  CHECK(parse_sql(sql, c) == chain);
}

TEST_CASE("render_nl templates") {
  auto c = testing::toy_catalog();
  auto by_product = parse_sql(
      "SELECT SUM(order_items.order_quantity), products.product_details FROM order_items JOIN products ON "
      "order_items.product_id = products.product_id GROUP BY products.product_details",
      c);
  CHECK(render_nl(by_product) == "What is the total order quantity for each product details?");
  CHECK(render_nl(parse_sql("SELECT customer_name FROM customers", c)) == "What are the customer names?");
  CHECK(render_nl(parse_sql("SELECT COUNT(order_id) FROM customer_orders", c)) == "What is the number of order id?");
  CHECK(render_nl(parse_sql("SELECT MIN(order_quantity), MAX(order_quantity) FROM order_items", c)) ==
        "What are the minimum order quantity and maximum order quantity?");
  CHECK(render_nl(parse_sql("SELECT city, country, zip_postcode FROM addresses", c)) ==
        "What are the cities, countries and zip postcodes?");
  CHECK(render_nl(parse_sql("SELECT order_status FROM customer_orders GROUP BY order_status", c)) ==
        "What are the different order status?");
}

TEST_CASE("action columns") {
  auto ir = parse_sql(kProductOrderSql, testing::toy_catalog());
  ColumnRef details{"Products", "product_details"}, quantity{"Order_Items", "order_quantity"};
  CHECK(action_columns(ir, ActionKind::Selection) == std::set<ColumnRef>{details, quantity});
  CHECK(action_columns(ir, ActionKind::Aggregation) == std::set<ColumnRef>{quantity});
  CHECK(action_columns(ir, ActionKind::Grouping) == std::set<ColumnRef>{details});
}

TEST_CASE("validate rejects broken invariants") {
  auto c = testing::toy_catalog();
  auto ir = parse_sql(kProductOrderSql, c);

  auto disconnected = ir;
  disconnected.join_edges.clear();
  CHECK(code_of([&] { validate(disconnected); }) == ErrorCode::InvalidQuery);

  auto ungrouped = ir;
  ungrouped.grouping = {{"Order_Items", "order_id"}};
  CHECK(code_of([&] { validate(ungrouped); }) == ErrorCode::InvalidQuery);

  auto foreign = ir;
  foreign.selections.push_back({{"Customers", "customer_name"}, AggregateFn::Count});
  CHECK(code_of([&] { validate(foreign); }) == ErrorCode::InvalidQuery);
}

TEST_CASE("JSON form round trips") {
  auto c = testing::toy_catalog();
  auto ir = parse_sql(kProductOrderSql, c);
  auto back = query_from_json(to_json(ir), c);
  CHECK(back == ir);
  CHECK(to_json(back) == to_json(ir));
}

TEST_CASE("round trip over 2000 generated queries") {
  auto c = testing::toy_catalog();
  std::mt19937 rng(7);
  int failures = 0;
  for (int i = 0; i < 2000; ++i) {
    QueryIR ir = random_ir(rng, c);
    REQUIRE_NOTHROW(validate(ir));
    std::string sql = synthesize_sql(ir);
    QueryIR back;
    try {
      back = parse_sql(sql, c);
    } catch (const Error& e) {
      ++failures;
      MESSAGE(sql << " -> " << e.what());
      continue;
    }
    if (!(back == ir) || back.lossy) {
      ++failures;
      MESSAGE("mismatch: " << sql);
    }
    CHECK(render_nl(ir) == render_nl(back));
    auto agg = action_columns(ir, ActionKind::Aggregation), sel = action_columns(ir, ActionKind::Selection);
    CHECK(std::includes(sel.begin(), sel.end(), agg.begin(), agg.end()));
  }
  CHECK(failures == 0);
}
