#include "qrec/session.hpp"

#include <set>
#include <utility>

#include "qrec/error.hpp"

namespace qrec {

using nlohmann::json;
using Kind = ExplanationSegment::Kind;

std::string NLExplanation::text() const {
  std::string out;
  for (const auto& s : segments) out += s.text;
  return out;
}

namespace {

std::string_view aggregate_phrase(AggregateFn fn) {
  switch (fn) {
    case AggregateFn::Min: return "the minimum of ";
    case AggregateFn::Max: return "the maximum of ";
    case AggregateFn::Count: return "the number of ";
    case AggregateFn::Sum: return "the total of ";
    case AggregateFn::Avg: return "the average of ";
  }
  return "";
}

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::Plain: return "plain";
    case Kind::TableMention: return "table_mention";
    case Kind::ColumnMention: return "column_mention";
  }
  return "plain";
}

Kind kind_from_string(std::string_view s) {
  if (s == "plain") return Kind::Plain;
  if (s == "table_mention") return Kind::TableMention;
  if (s == "column_mention") return Kind::ColumnMention;
  throw Error(ErrorCode::MalformedFile, "unknown segment kind '" + std::string(s) + "'");
}

}  // namespace

NLExplanation explain(const QueryIR& query) {
  NLExplanation out;
  auto add = [&](std::string text, Kind kind) { out.segments.push_back({std::move(text), kind}); };
  auto column_text = [&](const ColumnRef& c) {
    return query.schema ? query.schema->column(c).display_text : c.column;
  };
  auto table_text = [&](const std::string& t) {
    return query.schema ? query.schema->table(t).display_text : t;
  };

  add("The system ", Kind::Plain);
  for (std::size_t i = 0; i < query.selections.size(); ++i) {
    const auto& s = query.selections[i];
    if (i > 0) add(i + 1 == query.selections.size() ? ", and " : ", ", Kind::Plain);
    if (s.aggregate) {
      add("computes " + std::string(aggregate_phrase(*s.aggregate)) + "attribute ", Kind::Plain);
    } else {
      add("retrieves the values of attribute ", Kind::Plain);
    }
    add(column_text(s.column), Kind::ColumnMention);
    add(" from the table ", Kind::Plain);
    add(table_text(s.column.table), Kind::TableMention);
  }
  for (std::size_t i = 0; i < query.grouping.size(); ++i) {
    add(i == 0 ? ", grouped by " : " and ", Kind::Plain);
    add(column_text(query.grouping[i]), Kind::ColumnMention);
  }
  add(".", Kind::Plain);
  return out;
}

HistoryEntry make_entry(std::size_t index, QueryIR query, ResultTable result) {
  HistoryEntry e;
  e.index = index;
  e.sql = synthesize_sql(query);
  e.nl_text = render_nl(query);
  e.explanation = explain(query);
  e.chart = recommend_chart(result);
  e.result = std::move(result);
  e.query = std::move(query);
  return e;
}

void validate_cells(const std::vector<GridCell>& cells, std::size_t history_size) {
  for (const auto& c : cells) {
    if (c.history_index >= history_size) {
      throw Error(ErrorCode::InvalidCell, "history index " + std::to_string(c.history_index) +
                                              " is out of range for a history of " +
                                              std::to_string(history_size));
    }
    if (c.row < 0 || c.col < 0 || c.width < 1 || c.height < 1 || c.col + c.width > kDashboardColumns) {
      throw Error(ErrorCode::InvalidCell, "cell geometry outside the 12-column grid");
    }
  }
  // Rectangles overlap iff both axis intervals intersect. Widened to avoid
  // overflow on very tall cells.
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const auto& a = cells[i];
      const auto& b = cells[j];
      bool rows = static_cast<long long>(a.row) < static_cast<long long>(b.row) + b.height &&
                  static_cast<long long>(b.row) < static_cast<long long>(a.row) + a.height;
      bool cols = a.col < b.col + b.width && b.col < a.col + a.width;
      if (rows && cols) {
        throw Error(ErrorCode::OverlappingCells,
                    "cells " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const NLExplanation& explanation) {
  json segments = json::array();
  for (const auto& s : explanation.segments) segments.push_back({{"text", s.text}, {"kind", to_string(s.kind)}});
  return {{"segments", segments}, {"text", explanation.text()}};
}

NLExplanation explanation_from_json(const json& j) {
  NLExplanation out;
  for (const auto& s : j.at("segments")) {
    out.segments.push_back({s.at("text").get<std::string>(), kind_from_string(s.at("kind").get<std::string>())});
  }
  return out;
}

json to_json(const HistoryEntry& entry) {
  return {{"index", entry.index},
          {"sql", entry.sql},
          {"nl_text", entry.nl_text},
          {"query", to_json(entry.query)},
          {"result", to_json(entry.result)},
          {"chart", to_json(entry.chart)},
          {"vega_lite", to_vega_lite(entry.chart)},
          {"explanation", to_json(entry.explanation)}};
}

HistoryEntry entry_from_json(const json& j, CatalogPtr catalog) {
  try {
    HistoryEntry e;
    e.index = j.at("index").get<std::size_t>();
    e.sql = j.at("sql").get<std::string>();
    e.nl_text = j.at("nl_text").get<std::string>();
    e.query = query_from_json(j.at("query"), std::move(catalog));
    e.result = result_table_from_json(j.at("result"));
    e.chart = chart_from_json(j.at("chart"));
    e.explanation = explanation_from_json(j.at("explanation"));
    return e;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("malformed history entry: ") + e.what());
  }
}

json to_json(const GridCell& cell) {
  return {{"history_index", cell.history_index},
          {"row", cell.row},
          {"col", cell.col},
          {"width", cell.width},
          {"height", cell.height}};
}

GridCell cell_from_json(const json& j) {
  try {
    GridCell c;
    c.history_index = j.at("history_index").get<std::size_t>();
    c.row = j.at("row").get<int>();
    c.col = j.at("col").get<int>();
    c.width = j.value("width", 1);
    c.height = j.value("height", 1);
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidCell, std::string("malformed cell: ") + e.what());
  }
}

json to_json(const Dashboard& dashboard) {
  json cells = json::array();
  for (const auto& c : dashboard.cells) cells.push_back(to_json(c));
  return {{"id", dashboard.id}, {"session_id", dashboard.session_id}, {"cells", cells}};
}

Dashboard dashboard_from_json(const json& j) {
  Dashboard d;
  d.id = j.at("id").get<std::string>();
  d.session_id = j.at("session_id").get<std::string>();
  for (const auto& c : j.at("cells")) d.cells.push_back(cell_from_json(c));
  return d;
}

json to_json(const Recommendation& rec, std::size_t rank) {
  json breakdown = json::object();
  for (const auto& [action, value] : rec.action_breakdown) breakdown[std::string(to_string(action))] = value;
  return {{"rank", rank},
          {"sql", rec.sql},
          {"nl_text", rec.nl_text},
          {"score", rec.score},
          {"frequency_score", rec.frequency_score},
          {"action_breakdown", breakdown},
          {"query", to_json(rec.query)}};
}

json to_json(const RecommendationSet& set) {
  json items = json::array();
  for (std::size_t i = 0; i < set.items.size(); ++i) items.push_back(to_json(set.items[i], i));
  return {{"items", items}, {"fallback", set.fallback}, {"exhausted", set.exhausted}};
}

}  // namespace qrec
