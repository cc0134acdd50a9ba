#include "qrec/query_ir.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include "qrec/error.hpp"
#include "qrec/text_util.hpp"

namespace qrec {

std::string_view to_string(AggregateFn fn) {
  switch (fn) {
    case AggregateFn::Min: return "MIN";
    case AggregateFn::Max: return "MAX";
    case AggregateFn::Count: return "COUNT";
    case AggregateFn::Sum: return "SUM";
    case AggregateFn::Avg: return "AVG";
  }
  return "";
}

std::optional<AggregateFn> aggregate_from_string(std::string_view name) {
  for (AggregateFn fn : kAllAggregates) {
    if (iequals(to_string(fn), name)) return fn;
  }
  return std::nullopt;
}

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Selection: return "selection";
    case ActionKind::Grouping: return "grouping";
    case ActionKind::Aggregation: return "aggregation";
  }
  return "";
}

void validate(const QueryIR& ir) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidQuery, msg); };
  if (ir.selections.empty()) fail("query selects no columns");
  if (ir.source_tables.empty()) fail("query has no source tables");
  auto check_ref = [&](const ColumnRef& ref) {
    if (!ir.source_tables.count(ref.table)) {
      fail("column " + ref.qualified() + " is not from a source table");
    }
    if (ir.schema) ir.schema->column(ref);
  };
  for (const auto& item : ir.selections) check_ref(item.column);
  for (const auto& ref : ir.grouping) check_ref(ref);
  for (const auto& e : ir.join_edges) {
    check_ref(e.from);
    check_ref(e.to);
  }

  // Connectivity over join edges.
  std::map<std::string, std::string> parent;
  for (const auto& t : ir.source_tables) parent[t] = t;
  std::function<std::string(const std::string&)> find = [&](const std::string& t) {
    return parent[t] == t ? t : parent[t] = find(parent[t]);
  };
  for (const auto& e : ir.join_edges) parent[find(e.from.table)] = find(e.to.table);
  std::string root = find(*ir.source_tables.begin());
  for (const auto& t : ir.source_tables) {
    if (find(t) != root) fail("join edges do not connect table '" + t + "'");
  }

  if (!ir.grouping.empty()) {
    for (const auto& item : ir.selections) {
      if (!item.aggregate &&
          std::find(ir.grouping.begin(), ir.grouping.end(), item.column) == ir.grouping.end()) {
        fail("non-aggregated column " + item.column.qualified() + " missing from GROUP BY");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class TokenKind { Ident, Number, String, Symbol, End };

struct Token {
  TokenKind kind;
  std::string text;
  std::size_t pos;
};

[[noreturn]] void syntax_error(const std::string& msg, std::size_t pos) {
  throw Error(ErrorCode::SyntaxError, msg + " at offset " + std::to_string(pos), pos);
}

std::vector<Token> tokenize(std::string_view sql) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < sql.size()) {
    unsigned char c = static_cast<unsigned char>(sql[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (std::isalpha(c) || c == '_') {
      std::size_t start = i;
      while (i < sql.size() &&
             (std::isalnum(static_cast<unsigned char>(sql[i])) || sql[i] == '_')) {
        ++i;
      }
      out.push_back({TokenKind::Ident, std::string(sql.substr(start, i - start)), start});
    } else if (std::isdigit(c)) {
      std::size_t start = i;
      while (i < sql.size() &&
             (std::isdigit(static_cast<unsigned char>(sql[i])) || sql[i] == '.')) {
        ++i;
      }
      out.push_back({TokenKind::Number, std::string(sql.substr(start, i - start)), start});
    } else if (c == '\'' || c == '"' || c == '`') {
      std::size_t start = i++;
      std::string text;
      for (;;) {
        if (i >= sql.size()) syntax_error("unterminated quoted literal", start);
        if (sql[i] == static_cast<char>(c)) {
          if (i + 1 < sql.size() && sql[i + 1] == static_cast<char>(c)) {
            text += sql[i];
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        text += sql[i++];
      }
      out.push_back({TokenKind::String, text, start});
    } else {
      static constexpr std::string_view kTwoChar[] = {"<=", ">=", "<>", "!=", "||"};
      std::size_t start = i;
      std::string sym(1, static_cast<char>(c));
      if (i + 1 < sql.size()) {
        std::string two(sql.substr(i, 2));
        if (std::find(std::begin(kTwoChar), std::end(kTwoChar), two) != std::end(kTwoChar)) {
          sym = two;
        }
      }
      if (sym.size() == 1 && std::string_view("(),.=*<>;+-/%").find(sym[0]) == std::string_view::npos) {
        syntax_error("unexpected character '" + sym + "'", start);
      }
      i += sym.size();
      out.push_back({TokenKind::Symbol, sym, start});
    }
  }
  out.push_back({TokenKind::End, "", sql.size()});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

struct RawColumn {
  std::optional<std::string> qualifier;
  std::string name;
  std::size_t pos;
};

struct RawItem {
  RawColumn column;
  std::optional<AggregateFn> aggregate;
};

struct FromTable {
  std::string table;  // canonical
  std::optional<std::string> alias;
};

class Parser {
 public:
  Parser(std::string_view text, CatalogPtr catalog)
      : tokens_(tokenize(text)), catalog_(std::move(catalog)) {}

  QueryIR parse() {
    QueryIR ir;
    ir.schema = catalog_;
    expect_keyword("SELECT");
    if (accept_keyword("DISTINCT")) lossy_ = true;
    auto raw_items = parse_select_list();
    expect_keyword("FROM");
    parse_from();

    std::vector<RawColumn> raw_grouping;
    std::vector<std::pair<RawColumn, RawColumn>> raw_joins = std::move(joins_);
    for (;;) {
      if (at_end()) break;
      if (accept_keyword("WHERE") || accept_keyword("HAVING")) {
        skip_clause();
      } else if (peek_keyword("GROUP")) {
        advance();
        expect_keyword("BY");
        do {
          raw_grouping.push_back(parse_column_ref());
        } while (accept_symbol(","));
      } else if (peek_keyword("ORDER")) {
        advance();
        expect_keyword("BY");
        skip_clause();
      } else if (accept_keyword("LIMIT")) {
        skip_clause();
      } else if (peek_keyword("UNION") || peek_keyword("INTERSECT") || peek_keyword("EXCEPT")) {
        lossy_ = true;
        pos_ = tokens_.size() - 1;
      } else if (accept_symbol(";")) {
        if (!at_end()) syntax_error("unexpected input after ';'", cur().pos);
      } else {
        syntax_error("unexpected token '" + cur().text + "'", cur().pos);
      }
    }

    for (const auto& t : from_) ir.source_tables.insert(t.table);
    for (const auto& raw : raw_items) {
      ir.selections.push_back({resolve(raw.column), raw.aggregate});
    }
    for (const auto& raw : raw_grouping) ir.grouping.push_back(resolve(raw));
    for (const auto& [lhs, rhs] : raw_joins) ir.join_edges.push_back(orient(resolve(lhs), resolve(rhs)));

    if (ir.selections.empty()) {
      throw Error(ErrorCode::InvalidQuery, "no column selections within the supported grammar");
    }
    if (!ir.grouping.empty()) {
      for (const auto& item : ir.selections) {
        if (!item.aggregate &&
            std::find(ir.grouping.begin(), ir.grouping.end(), item.column) == ir.grouping.end()) {
          ir.grouping.push_back(item.column);
          lossy_ = true;
        }
      }
    }
    ir.lossy = lossy_;
    validate(ir);
    return ir;
  }

 private:
  const Token& cur() const { return tokens_[pos_]; }
  bool at_end() const { return cur().kind == TokenKind::End; }
  void advance() {
    if (!at_end()) ++pos_;
  }

  bool peek_keyword(std::string_view kw, std::size_t ahead = 0) const {
    std::size_t p = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[p].kind == TokenKind::Ident && iequals(tokens_[p].text, kw);
  }
  bool accept_keyword(std::string_view kw) {
    if (!peek_keyword(kw)) return false;
    advance();
    return true;
  }
  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) {
      syntax_error("expected " + std::string(kw) + (at_end() ? " before end of input"
                                                              : " near '" + cur().text + "'"),
                   cur().pos);
    }
  }
  bool peek_symbol(std::string_view s) const {
    return cur().kind == TokenKind::Symbol && cur().text == s;
  }
  bool accept_symbol(std::string_view s) {
    if (!peek_symbol(s)) return false;
    advance();
    return true;
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) syntax_error("expected '" + std::string(s) + "'", cur().pos);
  }

  static bool is_clause_keyword(const Token& t) {
    static constexpr std::string_view kClauses[] = {"FROM",  "WHERE", "GROUP",     "HAVING", "ORDER",
                                                    "LIMIT", "UNION", "INTERSECT", "EXCEPT", "JOIN",
                                                    "ON",    "AS",    "INNER",     "SELECT", "BY"};
    if (t.kind != TokenKind::Ident) return false;
    return std::any_of(std::begin(kClauses), std::end(kClauses),
                       [&](std::string_view kw) { return iequals(t.text, kw); });
  }

  std::string expect_identifier() {
    if (cur().kind != TokenKind::Ident || is_clause_keyword(cur())) {
      syntax_error("expected identifier", cur().pos);
    }
    std::string text = cur().text;
    advance();
    return text;
  }

  // Skips a dropped clause up to the next top-level clause keyword.
  void skip_clause() {
    lossy_ = true;
    int depth = 0;
    while (!at_end()) {
      if (peek_symbol("(")) {
        ++depth;
      } else if (peek_symbol(")")) {
        if (--depth < 0) syntax_error("unbalanced ')'", cur().pos);
      } else if (depth == 0 && (peek_keyword("GROUP") || peek_keyword("HAVING") ||
                                peek_keyword("ORDER") || peek_keyword("LIMIT") ||
                                peek_keyword("UNION") || peek_keyword("INTERSECT") ||
                                peek_keyword("EXCEPT") || peek_symbol(";"))) {
        return;
      }
      advance();
    }
    if (depth != 0) syntax_error("unbalanced '('", cur().pos);
  }

  RawColumn parse_column_ref() {
    std::size_t pos = cur().pos;
    std::string first = expect_identifier();
    if (accept_symbol(".")) return {first, expect_identifier(), pos};
    return {std::nullopt, first, pos};
  }

  std::vector<RawItem> parse_select_list() {
    std::vector<RawItem> items;
    do {
      std::size_t pos = cur().pos;
      if (accept_symbol("*")) {
        lossy_ = true;
      } else if (cur().kind == TokenKind::Ident && aggregate_from_string(cur().text) &&
                 tokens_[pos_ + 1].kind == TokenKind::Symbol && tokens_[pos_ + 1].text == "(") {
        AggregateFn fn = *aggregate_from_string(cur().text);
        advance();
        expect_symbol("(");
        if (accept_keyword("DISTINCT")) lossy_ = true;
        if (accept_symbol("*")) {
          lossy_ = true;
        } else {
          items.push_back({parse_column_ref(), fn});
        }
        expect_symbol(")");
      } else if (cur().kind == TokenKind::Ident && !is_clause_keyword(cur())) {
        items.push_back({parse_column_ref(), std::nullopt});
      } else {
        syntax_error("expected a column or aggregate", pos);
      }
      if (accept_keyword("AS")) expect_identifier();
      if (!peek_symbol(",") && !peek_keyword("FROM")) {
        syntax_error("unsupported expression in SELECT list near '" + cur().text + "'", cur().pos);
      }
    } while (accept_symbol(","));
    return items;
  }

  void parse_table_ref() {
    if (peek_symbol("(")) syntax_error("subqueries in FROM are not supported", cur().pos);
    std::size_t pos = cur().pos;
    std::string name = expect_identifier();
    const TableDef* table = catalog_->find_table(name);
    if (!table) {
      throw Error(ErrorCode::UnknownTable, "unknown table '" + name + "'", pos);
    }
    for (const auto& t : from_) {
      if (t.table == table->name) {
        throw Error(ErrorCode::InvalidQuery, "table '" + table->name + "' appears twice", pos);
      }
    }
    FromTable entry{table->name, std::nullopt};
    if (accept_keyword("AS")) {
      entry.alias = expect_identifier();
    } else if (cur().kind == TokenKind::Ident && !is_clause_keyword(cur()) &&
               !peek_keyword("LEFT") && !peek_keyword("CROSS")) {
      entry.alias = expect_identifier();
    }
    from_.push_back(std::move(entry));
  }

  void parse_from() {
    parse_table_ref();
    for (;;) {
      if (accept_keyword("INNER")) {
        expect_keyword("JOIN");
      } else if (!accept_keyword("JOIN")) {
        if (peek_symbol(",") || peek_keyword("LEFT") || peek_keyword("CROSS")) {
          syntax_error("only INNER JOIN ... ON is supported", cur().pos);
        }
        return;
      }
      parse_table_ref();
      if (!accept_keyword("ON")) syntax_error("JOIN requires an ON condition", cur().pos);
      do {
        RawColumn lhs = parse_column_ref();
        expect_symbol("=");
        RawColumn rhs = parse_column_ref();
        joins_.emplace_back(std::move(lhs), std::move(rhs));
      } while (accept_keyword("AND"));
    }
  }

  ColumnRef resolve(const RawColumn& raw) const {
    if (raw.qualifier) {
      for (const auto& t : from_) {
        if ((t.alias && iequals(*t.alias, *raw.qualifier)) ||
            (!t.alias && iequals(t.table, *raw.qualifier)) || iequals(t.table, *raw.qualifier)) {
          const ColumnDef* c = catalog_->find_column(t.table, raw.name);
          if (!c) {
            throw Error(ErrorCode::UnknownColumn,
                        "unknown column '" + raw.name + "' in table '" + t.table + "'", raw.pos);
          }
          return {t.table, c->name};
        }
      }
      throw Error(ErrorCode::UnknownTable,
                  "'" + *raw.qualifier + "' is not a table in the FROM clause", raw.pos);
    }
    std::optional<ColumnRef> found;
    for (const auto& t : from_) {
      if (const ColumnDef* c = catalog_->find_column(t.table, raw.name)) {
        if (found) {
          throw Error(ErrorCode::AmbiguousColumn,
                      "column '" + raw.name + "' is ambiguous between '" + found->table +
                          "' and '" + t.table + "'",
                      raw.pos);
        }
        found = ColumnRef{t.table, c->name};
      }
    }
    if (!found) throw Error(ErrorCode::UnknownColumn, "unknown column '" + raw.name + "'", raw.pos);
    return *found;
  }

  FkEdge orient(const ColumnRef& lhs, const ColumnRef& rhs) const {
    for (const auto& e : catalog_->fk_edges()) {
      if (e.from == rhs && e.to == lhs) return e;
    }
    return {lhs, rhs};
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  CatalogPtr catalog_;
  std::vector<FromTable> from_;
  std::vector<std::pair<RawColumn, RawColumn>> joins_;
  bool lossy_ = false;
};

}  // namespace

QueryIR parse_sql(std::string_view text, CatalogPtr catalog) {
  if (!catalog) throw Error(ErrorCode::InvalidQuery, "no catalog to resolve against");
  return Parser(text, std::move(catalog)).parse();
}

// ---------------------------------------------------------------------------
// Synthesis

std::string synthesize_sql(const QueryIR& ir) {
  std::ostringstream out;
  out << "SELECT ";
  for (std::size_t i = 0; i < ir.selections.size(); ++i) {
    const auto& item = ir.selections[i];
    if (i) out << ", ";
    if (item.aggregate) {
      out << to_string(*item.aggregate) << '(' << item.column.qualified() << ')';
    } else {
      out << item.column.qualified();
    }
  }

  out << " FROM ";
  if (ir.join_edges.empty()) {
    out << (ir.source_tables.empty() ? std::string() : *ir.source_tables.begin());
  } else {
    std::set<std::string> visited{ir.join_edges.front().from.table};
    out << ir.join_edges.front().from.table;
    std::vector<const FkEdge*> pending;
    for (const auto& e : ir.join_edges) pending.push_back(&e);
    while (!pending.empty()) {
      auto it = std::find_if(pending.begin(), pending.end(), [&](const FkEdge* e) {
        return visited.count(e->from.table) || visited.count(e->to.table);
      });
      if (it == pending.end()) it = pending.begin();
      const FkEdge& e = **it;
      pending.erase(it);
      bool from_seen = visited.count(e.from.table) > 0;
      bool to_seen = visited.count(e.to.table) > 0;
      if (from_seen && to_seen) {
        out << " AND ";
      } else {
        const std::string& joined = from_seen ? e.to.table : e.from.table;
        out << " JOIN " << joined << " ON ";
        visited.insert(joined);
      }
      out << e.from.qualified() << " = " << e.to.qualified();
    }
  }

  if (!ir.grouping.empty()) {
    out << " GROUP BY ";
    for (std::size_t i = 0; i < ir.grouping.size(); ++i) {
      if (i) out << ", ";
      out << ir.grouping[i].qualified();
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Natural language

namespace {

std::string_view aggregate_phrase(AggregateFn fn) {
  switch (fn) {
    case AggregateFn::Min: return "minimum";
    case AggregateFn::Max: return "maximum";
    case AggregateFn::Count: return "number of";
    case AggregateFn::Sum: return "total";
    case AggregateFn::Avg: return "average";
  }
  return "";
}

std::string join_with_and(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += (i + 1 == parts.size()) ? " and " : ", ";
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string render_nl(const QueryIR& ir) {
  auto label = [&](const ColumnRef& ref) {
    if (ir.schema) {
      if (const ColumnDef* c = ir.schema->find_column(ref.table, ref.column)) return c->display_text;
    }
    return default_display_text(ref.column);
  };
  auto grouped = [&](const ColumnRef& ref) {
    return std::find(ir.grouping.begin(), ir.grouping.end(), ref) != ir.grouping.end();
  };

  std::vector<std::string> head;
  std::size_t aggregated = 0, plain = 0;
  for (const auto& item : ir.selections) {
    if (item.aggregate) {
      head.push_back(std::string(aggregate_phrase(*item.aggregate)) + " " + label(item.column));
      ++aggregated;
    } else if (!grouped(item.column)) {
      head.push_back(pluralize_last_word(label(item.column)));
      ++plain;
    }
  }

  std::vector<std::string> groups;
  for (const auto& ref : ir.grouping) groups.push_back(label(ref));

  std::string text;
  if (head.empty()) {
    // Every selected column is a grouping key: list the distinct keys.
    std::vector<std::string> keys;
    for (const auto& g : groups) keys.push_back(pluralize_last_word(g));
    return "What are the different " + join_with_and(keys) + "?";
  }
  bool singular = aggregated == 1 && plain == 0;
  text = singular ? "What is the " : "What are the ";
  text += join_with_and(head);
  if (!groups.empty()) text += " for each " + join_with_and(groups);
  return text + "?";
}

std::set<ColumnRef> action_columns(const QueryIR& ir, ActionKind action) {
  std::set<ColumnRef> out;
  switch (action) {
    case ActionKind::Selection:
      for (const auto& item : ir.selections) out.insert(item.column);
      break;
    case ActionKind::Grouping:
      out.insert(ir.grouping.begin(), ir.grouping.end());
      break;
    case ActionKind::Aggregation:
      for (const auto& item : ir.selections) {
        if (item.aggregate) out.insert(item.column);
      }
      break;
  }
  return out;
}

namespace {

nlohmann::json ref_json(const ColumnRef& c) { return {{"table", c.table}, {"column", c.column}}; }

ColumnRef ref_from(const nlohmann::json& j, const SchemaCatalog& catalog) {
  return catalog.resolve(j.at("table").get<std::string>(), j.at("column").get<std::string>());
}

}  // namespace

nlohmann::json to_json(const QueryIR& ir) {
  nlohmann::json selections = nlohmann::json::array(), grouping = nlohmann::json::array(),
                 edges = nlohmann::json::array();
  for (const auto& s : ir.selections) {
    auto item = ref_json(s.column);
    if (s.aggregate) item["aggregate"] = to_string(*s.aggregate);
    selections.push_back(std::move(item));
  }
  for (const auto& g : ir.grouping) grouping.push_back(ref_json(g));
  for (const auto& e : ir.join_edges) edges.push_back({{"from", ref_json(e.from)}, {"to", ref_json(e.to)}});
  return {{"selections", selections},
          {"grouping", grouping},
          {"source_tables", ir.source_tables},
          {"join_edges", edges},
          {"lossy", ir.lossy}};
}

QueryIR query_from_json(const nlohmann::json& j, CatalogPtr catalog) {
  if (!catalog) throw Error(ErrorCode::InvalidQuery, "no catalog to resolve the query against");
  QueryIR ir;
  try {
    for (const auto& s : j.at("selections")) {
      SelectItem item{ref_from(s, *catalog), std::nullopt};
      if (s.contains("aggregate")) {
        auto name = s["aggregate"].get<std::string>();
        item.aggregate = aggregate_from_string(name);
        if (!item.aggregate) throw Error(ErrorCode::MalformedFile, "unknown aggregate '" + name + "'");
      }
      ir.selections.push_back(std::move(item));
    }
    for (const auto& g : j.at("grouping")) ir.grouping.push_back(ref_from(g, *catalog));
    for (const auto& t : j.at("source_tables")) ir.source_tables.insert(catalog->table(t.get<std::string>()).name);
    for (const auto& e : j.at("join_edges")) {
      ir.join_edges.push_back({ref_from(e.at("from"), *catalog), ref_from(e.at("to"), *catalog)});
    }
    ir.lossy = j.value("lossy", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("malformed query: ") + e.what());
  }
  ir.schema = std::move(catalog);
  validate(ir);
  return ir;
}

}  // namespace qrec
