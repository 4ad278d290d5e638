#include "htp/knowledge_base.hpp"

#include <algorithm>
#include <filesystem>
#include <regex>

#include "htp/common.hpp"
#include "json.hpp"

namespace htp {

namespace {

bool mentions(const std::string& haystack_lower, const std::string& word) {
  std::string w = text::lower(word);
  for (std::size_t at = haystack_lower.find(w); at != std::string::npos; at = haystack_lower.find(w, at + 1)) {
    bool left = at == 0 || !std::isalnum(static_cast<unsigned char>(haystack_lower[at - 1]));
    std::size_t end = at + w.size();
    bool right = end == haystack_lower.size() || !std::isalnum(static_cast<unsigned char>(haystack_lower[end]));
    if (left && right) return true;
  }
  return false;
}

const std::vector<std::string> kPlaceColumns{"city", "origin", "dest"};

}  // namespace

const std::map<std::string, std::vector<std::string>>& KnowledgeBase::schemas() {
  static const std::map<std::string, std::vector<std::string>> s{
      {"flights", {"flight_number", "price", "dep_time", "arr_time", "origin", "dest", "date"}},
      {"accommodations", {"name", "city", "price", "room_type", "house_rules", "minimum_nights", "max_occupancy"}},
      {"restaurants", {"name", "city", "avg_cost", "cuisines"}},
      {"attractions", {"name", "city"}},
      {"distances", {"origin", "dest", "mode", "duration", "cost"}},
  };
  return s;
}

Table parse_csv(std::string_view src, std::string name) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false, any = false;
  std::size_t line = 1;
  auto end_field = [&] {
    fields.push_back(field);
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    if (!(fields.size() == 1 && fields[0].empty())) records.push_back(fields);
    fields.clear();
  };
  for (std::size_t i = 0; i < src.size(); ++i) {
    char c = src[i];
    any = true;
    if (quoted) {
      if (c == '"') {
        if (i + 1 < src.size() && src[i + 1] == '"') field += '"', ++i;
        else quoted = false;
      } else {
        if (c == '\n') ++line;
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      continue;
    } else if (c == '\n') {
      end_record();
      ++line;
    } else {
      field += c;
    }
  }
  if (quoted) throw Error(Errc::SchemaError, "unterminated quote in table " + name, line);
  if (any && (!field.empty() || !fields.empty())) end_record();
  if (records.empty()) throw Error(Errc::SchemaError, "table " + name + " has no header row");
  Table t{std::move(name), {}, {}};
  for (auto& h : records[0]) t.columns.push_back(text::trim(h));
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.columns.size())
      throw Error(Errc::SchemaError,
                  "row has " + std::to_string(records[r].size()) + " fields, header has " + std::to_string(t.columns.size()),
                  r + 1);
    Row row;
    for (std::size_t c = 0; c < t.columns.size(); ++c) row[t.columns[c]] = text::trim(records[r][c]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

KnowledgeBase KnowledgeBase::load(const std::string& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, "knowledge manifest " + manifest_path + ": " + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("tables") || !manifest["tables"].is_array())
    throw Error(Errc::SchemaError, "knowledge manifest needs a \"tables\" array");
  auto base = std::filesystem::path(manifest_path).parent_path();
  KnowledgeBase kb;
  for (const auto& entry : manifest["tables"]) {
    if (!entry.is_object() || !entry.contains("name") || !entry.contains("file"))
      throw Error(Errc::SchemaError, "manifest table entries need name and file");
    std::string name = entry["name"].get<std::string>();
    auto path = base / entry["file"].get<std::string>();
    std::string src = text::read_file(path.string());
    Table t;
    if (path.extension() == ".json") {
      nlohmann::json arr;
      try {
        arr = nlohmann::json::parse(src);
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::SchemaError, path.string() + ": " + e.what());
      }
      if (!arr.is_array()) throw Error(Errc::SchemaError, path.string() + " must hold an array of objects");
      t.name = name;
      std::size_t i = 0;
      for (const auto& obj : arr) {
        ++i;
        if (!obj.is_object()) throw Error(Errc::SchemaError, path.string() + ": record is not an object", i);
        Row row;
        for (const auto& [k, v] : obj.items()) row[k] = v.is_string() ? v.get<std::string>() : v.dump();
        if (t.columns.empty())
          for (const auto& [k, _] : row) t.columns.push_back(k);
        for (const auto& c : t.columns)
          if (!row.count(c)) throw Error(Errc::SchemaError, path.string() + ": record lacks " + c, i);
        t.rows.push_back(std::move(row));
      }
    } else {
      t = parse_csv(src, name);
    }
    kb.add_table(std::move(t));
  }
  return kb;
}

void KnowledgeBase::add_table(Table table) {
  auto it = schemas().find(table.name);
  if (it != schemas().end()) {
    for (const auto& col : it->second)
      if (std::find(table.columns.begin(), table.columns.end(), col) == table.columns.end())
        throw Error(Errc::SchemaError, "table " + table.name + " lacks required column " + col);
  }
  if (tables_.count(table.name)) throw Error(Errc::SchemaError, "table " + table.name + " given twice");
  tables_[table.name] = std::move(table);
}

const Table* KnowledgeBase::table(std::string_view name) const {
  auto it = tables_.find(std::string(name));
  return it == tables_.end() ? nullptr : &it->second;
}

std::vector<std::string> KnowledgeBase::table_names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : tables_) out.push_back(n);
  return out;
}

std::vector<Row> KnowledgeBase::lookup(std::string_view table_name, std::string_view column,
                                       std::string_view value) const {
  std::vector<Row> out;
  const Table* t = table(table_name);
  if (!t) return out;
  for (const auto& row : t->rows) {
    auto it = row.find(std::string(column));
    if (it != row.end() && text::iequals(text::trim(it->second), text::trim(value))) out.push_back(row);
  }
  return out;
}

std::optional<Row> KnowledgeBase::find_entity(std::string_view table_name, std::string_view name,
                                              std::string_view city) const {
  for (const auto& row : lookup(table_name, "name", name)) {
    auto c = row.find("city");
    if (city.empty() || (c != row.end() && text::iequals(c->second, text::trim(city)))) return row;
  }
  return std::nullopt;
}

std::set<std::string> KnowledgeBase::cities() const {
  std::set<std::string> out;
  for (const auto& [_, t] : tables_)
    for (const auto& row : t.rows)
      for (const auto& col : kPlaceColumns) {
        auto it = row.find(col);
        if (it != row.end() && !it->second.empty()) out.insert(it->second);
      }
  return out;
}

std::string KnowledgeBase::excerpt(std::string_view context, std::size_t cap) const {
  if (empty()) return {};
  static const std::map<std::string, std::vector<std::string>> topics{
      {"transportation", {"flights", "distances"}}, {"flight", {"flights"}},     {"taxi", {"distances"}},
      {"self-driving", {"distances"}},              {"accommodation", {"accommodations"}},
      {"attraction", {"attractions"}},              {"dining", {"restaurants"}}, {"cuisine", {"restaurants"}},
      {"restaurant", {"restaurants"}},
  };
  static const std::regex date_re(R"(\d{4}-\d{2}-\d{2})");
  const std::string ctx = text::lower(context);

  std::set<std::string> wanted;
  for (const auto& [word, tables] : topics)
    if (ctx.find(word) != std::string::npos) wanted.insert(tables.begin(), tables.end());
  if (wanted.empty())
    for (const auto& [n, _] : tables_) wanted.insert(n);

  std::set<std::string> cities;
  for (const auto& c : this->cities())
    if (mentions(ctx, c)) cities.insert(text::lower(c));
  std::set<std::string> dates;
  for (auto it = std::sregex_iterator(ctx.begin(), ctx.end(), date_re); it != std::sregex_iterator(); ++it)
    dates.insert(it->str());

  std::string out;
  for (const auto& name : wanted) {
    const Table* t = table(name);
    if (!t) continue;
    bool routed = std::find(t->columns.begin(), t->columns.end(), "origin") != t->columns.end();
    bool dated = std::find(t->columns.begin(), t->columns.end(), "date") != t->columns.end();
    std::vector<const Row*> rows;
    for (const auto& row : t->rows) {
      if (!cities.empty()) {
        bool keep;
        if (routed) {
          auto field = [&](const char* col) {
            auto it = row.find(col);
            return it != row.end() && cities.count(text::lower(it->second)) != 0;
          };
          bool o = field("origin"), d = field("dest");
          keep = cities.size() >= 2 ? (o && d) : (o || d);
        } else {
          auto c = row.find("city");
          keep = c == row.end() || cities.count(text::lower(c->second));
        }
        if (!keep) continue;
      }
      if (dated && !dates.empty() && !dates.count(row.at("date"))) continue;
      rows.push_back(&row);
    }
    if (rows.empty()) continue;
    if (!out.empty()) out += "\n";
    out += name + ":\n";
    std::string header;
    for (const auto& c : t->columns) header += (header.empty() ? "" : " | ") + c;
    out += header + "\n";
    for (std::size_t i = 0; i < rows.size() && i < cap; ++i) {
      std::string line;
      for (const auto& c : t->columns) line += (line.empty() ? "" : " | ") + rows[i]->at(c);
      out += line + "\n";
    }
    if (rows.size() > cap) out += "(" + std::to_string(rows.size() - cap) + " more rows not shown)\n";
  }
  return out;
}

}  // namespace htp
