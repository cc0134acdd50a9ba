#include "qrec/visualization.hpp"

#include <algorithm>

#include "qrec/error.hpp"
#include "qrec/text_util.hpp"

namespace qrec {

using nlohmann::json;

std::string_view to_string(FieldType type) {
  switch (type) {
    case FieldType::Q: return "Q";
    case FieldType::N: return "N";
    case FieldType::T: return "T";
  }
  return "N";
}

FieldType field_type_from_string(std::string_view s) {
  if (s == "Q") return FieldType::Q;
  if (s == "T") return FieldType::T;
  if (s == "N") return FieldType::N;
  throw Error(ErrorCode::MalformedFile, "unknown field type '" + std::string(s) + "'");
}

ResultTable classify_fields(ResultTable table) {
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    bool any = false, numeric = true, temporal = true;
    for (const auto& row : table.rows) {
      const Value& v = row.at(c);
      if (std::holds_alternative<std::monostate>(v)) continue;
      any = true;
      bool is_number = std::holds_alternative<std::int64_t>(v) || std::holds_alternative<double>(v);
      numeric = numeric && is_number;
      const auto* s = std::get_if<std::string>(&v);
      temporal = temporal && s && parse_iso8601(*s);
    }
    FieldType type = FieldType::N;
    if (any && numeric) {
      type = FieldType::Q;
    } else if (any && temporal) {
      type = FieldType::T;
    }
    table.columns[c].type = type;
  }
  return table;
}

std::string_view to_string(Mark mark) {
  switch (mark) {
    case Mark::Bar: return "bar";
    case Mark::Line: return "line";
    case Mark::Scatter: return "scatter";
    case Mark::Heatmap: return "heatmap";
    case Mark::Histogram: return "histogram";
    case Mark::ValueCard: return "value_card";
    case Mark::Table: return "table";
  }
  return "table";
}

Mark mark_from_string(std::string_view s) {
  for (Mark m : {Mark::Bar, Mark::Line, Mark::Scatter, Mark::Heatmap, Mark::Histogram,
                 Mark::ValueCard, Mark::Table}) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorCode::MalformedFile, "unknown mark '" + std::string(s) + "'");
}

std::string_view to_string(Channel channel) {
  switch (channel) {
    case Channel::X: return "x";
    case Channel::Y: return "y";
    case Channel::Color: return "color";
  }
  return "x";
}

namespace {

Channel channel_from_string(std::string_view s) {
  if (s == "x") return Channel::X;
  if (s == "y") return Channel::Y;
  if (s == "color") return Channel::Color;
  throw Error(ErrorCode::MalformedFile, "unknown channel '" + std::string(s) + "'");
}

Encoding field(const ResultColumn& c) { return {c.name, c.type, std::nullopt, false}; }
Encoding count() { return {"", FieldType::Q, "count", false}; }

}  // namespace

ChartSpec recommend_chart(const ResultTable& table) {
  ChartSpec spec;
  spec.data = table;
  const auto& cols = table.columns;

  std::vector<const ResultColumn*> q, n, t;
  for (const auto& c : cols) {
    (c.type == FieldType::Q ? q : c.type == FieldType::N ? n : t).push_back(&c);
  }

  if (table.rows.size() == 1 && cols.size() == 1) {
    spec.mark = Mark::ValueCard;
  } else if (cols.size() == 1 && q.size() == 1) {
    spec.mark = Mark::Histogram;
    Encoding x = field(*q[0]);
    x.bin = true;
    spec.encodings = {{Channel::X, x}, {Channel::Y, count()}};
  } else if (cols.size() == 1 && n.size() == 1) {
    spec.mark = Mark::Bar;
    spec.encodings = {{Channel::X, field(*n[0])}, {Channel::Y, count()}};
  } else if (cols.size() == 2 && q.size() == 1 && n.size() == 1) {
    spec.mark = Mark::Bar;
    spec.encodings = {{Channel::X, field(*n[0])}, {Channel::Y, field(*q[0])}};
  } else if (cols.size() == 2 && q.size() == 1 && t.size() == 1) {
    spec.mark = Mark::Line;
    spec.encodings = {{Channel::X, field(*t[0])}, {Channel::Y, field(*q[0])}};
  } else if (cols.size() == 2 && q.size() == 2) {
    spec.mark = Mark::Scatter;
    spec.encodings = {{Channel::X, field(*q[0])}, {Channel::Y, field(*q[1])}};
  } else if (cols.size() == 2 && n.size() == 2) {
    spec.mark = Mark::Heatmap;
    spec.encodings = {{Channel::X, field(*n[0])}, {Channel::Y, field(*n[1])}, {Channel::Color, count()}};
  } else if (cols.size() == 3 && q.size() == 1 && n.size() == 2) {
    spec.mark = Mark::Bar;
    spec.encodings = {{Channel::X, field(*n[0])}, {Channel::Y, field(*q[0])}, {Channel::Color, field(*n[1])}};
  } else {
    spec.mark = Mark::Table;
  }
  return spec;
}

// ---------------------------------------------------------------------------
// JSON

json value_to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else {
          return x;
        }
      },
      v);
}

Value value_from_json(const json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw Error(ErrorCode::MalformedFile, "unsupported value " + j.dump());
}

json to_json(const ResultTable& table) {
  json columns = json::array(), rows = json::array();
  for (const auto& c : table.columns) columns.push_back({{"name", c.name}, {"field_type", to_string(c.type)}});
  for (const auto& row : table.rows) {
    json r = json::array();
    for (const auto& v : row) r.push_back(value_to_json(v));
    rows.push_back(std::move(r));
  }
  return {{"columns", columns}, {"rows", rows}};
}

ResultTable result_table_from_json(const json& j) try {
  ResultTable t;
  for (const auto& c : j.at("columns")) {
    t.columns.push_back({c.at("name").get<std::string>(), field_type_from_string(c.at("field_type").get<std::string>())});
  }
  for (const auto& r : j.at("rows")) {
    std::vector<Value> row;
    for (const auto& v : r) row.push_back(value_from_json(v));
    t.rows.push_back(std::move(row));
  }
  return t;
} catch (const json::exception& e) {
  throw Error(ErrorCode::MalformedFile, std::string("result table: ") + e.what());
}

json to_json(const ChartSpec& chart) {
  json encodings = json::object();
  for (const auto& [channel, e] : chart.encodings) {
    json enc = {{"field", e.field}, {"field_type", to_string(e.type)}};
    if (e.aggregate) enc["aggregate"] = *e.aggregate;
    if (e.bin) enc["bin"] = true;
    encodings[std::string(to_string(channel))] = enc;
  }
  return {{"mark", to_string(chart.mark)}, {"encodings", encodings}, {"data", to_json(chart.data)}};
}

ChartSpec chart_from_json(const json& j) try {
  ChartSpec c;
  c.mark = mark_from_string(j.at("mark").get<std::string>());
  for (const auto& [channel, e] : j.at("encodings").items()) {
    Encoding enc;
    enc.field = e.at("field").get<std::string>();
    enc.type = field_type_from_string(e.at("field_type").get<std::string>());
    if (e.contains("aggregate")) enc.aggregate = e["aggregate"].get<std::string>();
    enc.bin = e.value("bin", false);
    c.encodings[channel_from_string(channel)] = enc;
  }
  c.data = result_table_from_json(j.at("data"));
  return c;
} catch (const json::exception& e) {
  throw Error(ErrorCode::MalformedFile, std::string("chart: ") + e.what());
}

namespace {

std::string_view vega_type(FieldType t) {
  switch (t) {
    case FieldType::Q: return "quantitative";
    case FieldType::N: return "nominal";
    case FieldType::T: return "temporal";
  }
  return "nominal";
}

json vega_encoding(const Encoding& e) {
  json out = {{"type", vega_type(e.type)}};
  if (!e.field.empty()) out["field"] = e.field;
  if (e.aggregate) out["aggregate"] = *e.aggregate;
  if (e.bin) out["bin"] = true;
  return out;
}

}  // namespace

json to_vega_lite(const ChartSpec& chart) {
  json values = json::array();
  for (const auto& row : chart.data.rows) {
    json record = json::object();
    for (std::size_t i = 0; i < chart.data.columns.size(); ++i) {
      record[chart.data.columns[i].name] = value_to_json(row[i]);
    }
    values.push_back(std::move(record));
  }
  json doc = {{"$schema", "https://vega.github.io/schema/vega-lite/v5.json"},
              {"data", {{"values", values}}},
              {"usermeta", {{"qrec_mark", to_string(chart.mark)}}}};

  json encoding = json::object();
  for (const auto& [channel, e] : chart.encodings) encoding[std::string(to_string(channel))] = vega_encoding(e);

  switch (chart.mark) {
    case Mark::Bar:
    case Mark::Histogram: doc["mark"] = "bar"; break;
    case Mark::Line: doc["mark"] = {{"type", "line"}, {"point", true}}; break;
    case Mark::Scatter: doc["mark"] = "point"; break;
    case Mark::Heatmap: doc["mark"] = "rect"; break;
    case Mark::ValueCard: {
      doc["mark"] = {{"type", "text"}, {"fontSize", 48}};
      if (!chart.data.columns.empty()) {
        const auto& c = chart.data.columns.front();
        encoding["text"] = {{"field", c.name}, {"type", vega_type(c.type)}};
      }
      break;
    }
    case Mark::Table: {
      json fields = json::array();
      for (const auto& c : chart.data.columns) fields.push_back(c.name);
      doc["transform"] = json::array({{{"window", json::array({{{"op", "row_number"}, {"as", "_row"}}})}},
                                      {{"fold", fields}, {"as", json::array({"_field", "_value"})}}});
      doc["mark"] = "text";
      encoding = {{"x", {{"field", "_field"}, {"type", "nominal"}, {"sort", fields}, {"axis", {{"orient", "top"}, {"title", nullptr}}}}},
                  {"y", {{"field", "_row"}, {"type", "ordinal"}, {"axis", nullptr}}},
                  {"text", {{"field", "_value"}, {"type", "nominal"}}}};
      break;
    }
  }
  doc["encoding"] = encoding;
  return doc;
}

}  // namespace qrec
