#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qrec/sqlite_db.hpp"

namespace qrec {

/// Quantitative, Nominal, Temporal.
enum class FieldType { Q, N, T };

std::string_view to_string(FieldType type);
FieldType field_type_from_string(std::string_view s);

struct ResultColumn {
  std::string name;
  FieldType type = FieldType::N;

  bool operator==(const ResultColumn&) const = default;
};

struct ResultTable {
  std::vector<ResultColumn> columns;
  std::vector<std::vector<Value>> rows;

  bool operator==(const ResultTable&) const = default;
};

/// Numbers -> Q; strings that all parse as ISO-8601 dates -> T; otherwise N.
/// Nulls are ignored; an all-null column is N.
ResultTable classify_fields(ResultTable table);

enum class Mark { Bar, Line, Scatter, Heatmap, Histogram, ValueCard, Table };
enum class Channel { X, Y, Color };

std::string_view to_string(Mark mark);
Mark mark_from_string(std::string_view s);
std::string_view to_string(Channel channel);

struct Encoding {
  /// Empty for derived counts.
  std::string field;
  FieldType type = FieldType::N;
  std::optional<std::string> aggregate;
  bool bin = false;

  bool operator==(const Encoding&) const = default;
};

struct ChartSpec {
  Mark mark = Mark::Table;
  std::map<Channel, Encoding> encodings;
  ResultTable data;

  bool operator==(const ChartSpec&) const = default;
};

/// Rule table over the field-type signature; `table` is the fallback.
ChartSpec recommend_chart(const ResultTable& table);

nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ResultTable& table);
ResultTable result_table_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ChartSpec& chart);
ChartSpec chart_from_json(const nlohmann::json& j);

/// A vega-lite v5 document with inline data.
nlohmann::json to_vega_lite(const ChartSpec& chart);

}  // namespace qrec
