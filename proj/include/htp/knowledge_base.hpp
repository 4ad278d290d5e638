#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace htp {

using Row = std::map<std::string, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

/// Reference tables for planning (flights, accommodations, restaurants,
/// attractions, distances). Lookups never throw: a missing table or key
/// yields an empty result.
class KnowledgeBase {
 public:
  /// Required columns of the known tables. Other table names are accepted as is.
  static const std::map<std::string, std::vector<std::string>>& schemas();

  /// Reads a JSON manifest {"tables": [{"name": ..., "file": ...}]}; files are
  /// CSV or JSON arrays of objects, relative to the manifest. Throws IoFailure
  /// or SchemaError.
  static KnowledgeBase load(const std::string& manifest_path);

  /// Validates columns against schemas(). Throws SchemaError.
  void add_table(Table table);

  bool empty() const noexcept { return tables_.empty(); }
  const Table* table(std::string_view name) const;
  std::vector<std::string> table_names() const;

  /// Rows whose `column` equals `value`, case-insensitively.
  std::vector<Row> lookup(std::string_view table, std::string_view column, std::string_view value) const;
  /// Entity by name, optionally restricted to a city.
  std::optional<Row> find_entity(std::string_view table, std::string_view name, std::string_view city = {}) const;

  /// Every city named in a city, origin or dest column.
  std::set<std::string> cities() const;

  /// Rows relevant to `context` (node text plus its ancestors): tables picked
  /// by topic words, rows filtered by the cities and dates the context names,
  /// at most `cap` rows per table. Empty for an empty knowledge base.
  std::string excerpt(std::string_view context, std::size_t cap = 50) const;

 private:
  std::map<std::string, Table> tables_;
};

/// RFC 4180 style: quoted fields, doubled quotes, CRLF or LF. First row is the header.
Table parse_csv(std::string_view text, std::string name);

}  // namespace htp
