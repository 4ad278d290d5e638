#include "htp/rule_library.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

#include "htp/common.hpp"

namespace htp {

namespace {

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_blank(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Position of the first '#' outside brackets and braces, or npos.
std::size_t comment_start(std::string_view line) {
  int depth = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '[' || c == '{') ++depth;
    else if ((c == ']' || c == '}') && depth > 0) --depth;
    else if (c == '#' && depth == 0) return i;
  }
  return std::string_view::npos;
}

std::string strip_note(std::string_view raw) {
  std::string note = text::trim(raw);
  if (!note.empty() && note.back() == ';') note.pop_back();
  return text::trim(note);
}

// Splits a run of "[..][..] [..]" into atoms.
std::vector<std::string> split_atoms(std::string_view s, std::size_t line) {
  std::vector<std::string> atoms;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_blank(s[i])) {
      ++i;
      continue;
    }
    if (s[i] != '[') throw Error(Errc::SyntaxError, "expected '[' in '" + std::string(s) + "'", line);
    int depth = 0;
    std::size_t j = i;
    for (; j < s.size(); ++j) {
      if (s[j] == '[') ++depth;
      else if (s[j] == ']' && --depth == 0) break;
    }
    if (j == s.size()) throw Error(Errc::SyntaxError, "unbalanced bracket in '" + std::string(s) + "'", line);
    atoms.emplace_back(s.substr(i, j - i + 1));
    i = j + 1;
  }
  return atoms;
}

// Lowercased words with "each" read as "one" and simple plurals dropped, so
// "Specific segments of transportation" and "Specific segment of transportation" agree.
std::string description_key(std::string_view description) {
  std::string cleaned;
  for (char c : description) cleaned.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : ' ');
  std::istringstream in(text::lower(cleaned));
  std::string word, key;
  while (in >> word) {
    if (word == "each") word = "one";
    if (word.size() > 3 && word.back() == 's' && word[word.size() - 2] != 's') word.pop_back();
    if (!key.empty()) key.push_back(' ');
    key += word;
  }
  return key;
}

std::optional<std::string> example_atom(std::string_view note) {
  std::string lowered = text::lower(note);
  auto at = lowered.find("such as");
  if (at == std::string::npos) return std::nullopt;
  auto open = note.find('[', at);
  if (open == std::string_view::npos) return std::nullopt;
  auto close = note.find(']', open);
  if (close == std::string_view::npos) return std::nullopt;
  return std::string(note.substr(open, close - open + 1));
}

bool is_description_entry(std::string_view s) {
  return s.size() >= 4 && s.substr(0, 2) == "{{" && s.substr(s.size() - 2) == "}}";
}

NodePattern parse_entry(std::string_view entry, std::string note, std::size_t line) {
  NodePattern p;
  if (is_description_entry(entry)) {
    std::string description = text::collapse(entry.substr(2, entry.size() - 4));
    if (description.empty()) throw Error(Errc::SyntaxError, "empty description entry", line);
    if (auto ex = example_atom(note)) {
      p = NodePattern::parse(*ex, line);
      p.description = description;
    } else {
      p = NodePattern::abstract(description);
    }
  } else {
    p = NodePattern::parse(entry, line);
  }
  p.note = std::move(note);
  return p;
}

std::string render_entry(const NodePattern& p) {
  std::string out = p.description.empty() ? p.raw() : "{{" + p.description + "}}";
  if (!p.note.empty()) out += " # " + p.note;
  return out;
}

// Inner text of a node after canonicalisation, without its brackets.
std::string inner_text(std::string_view node_text) {
  return std::string(text::unbracket(canonical_node_text(node_text)));
}

struct Best {
  bool found = false;
  std::size_t specificity = 0;
};

Best best_match(const std::vector<NodePattern>& patterns, std::string_view node_text) {
  Best best;
  for (const auto& p : patterns) {
    if (p.is_abstract() || !p.match(node_text)) continue;
    if (!best.found || p.specificity() > best.specificity) best = {true, p.specificity()};
  }
  return best;
}

bool pattern_covers(const NodePattern& atom, std::string_view child) {
  if (atom.match(child)) return true;
  // Qualified form: "[dining cost]" covers "[cost]" when the atom matches a whole-word suffix.
  std::string inner = inner_text(child);
  for (std::size_t i = 0; i < inner.size(); ++i) {
    if (inner[i] != ' ') continue;
    if (atom.match("[" + inner.substr(i + 1) + "]")) return true;
  }
  return false;
}

}  // namespace

std::string canonical_node_text(std::string_view node_text) {
  std::string s = text::collapse(node_text);
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == ' ' && ((!out.empty() && out.back() == '[') || (i + 1 < s.size() && s[i + 1] == ']'))) continue;
    out.push_back(s[i]);
  }
  return out;
}

std::optional<std::string> unique_binding(const Bindings& bindings, std::string_view name) {
  std::optional<std::string> value;
  for (const auto& [k, v] : bindings) {
    if (k != name) continue;
    if (value) return std::nullopt;
    value = v;
  }
  return value;
}

NodePattern NodePattern::parse(std::string_view atom, std::optional<std::size_t> line) {
  std::string s = canonical_node_text(atom);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']')
    throw Error(Errc::SyntaxError, "node pattern must be bracketed: '" + std::string(atom) + "'", line);
  std::string_view in = std::string_view(s).substr(1, s.size() - 2);
  if (text::trim(in).empty()) throw Error(Errc::SyntaxError, "empty node pattern", line);

  NodePattern p;
  p.raw_ = s;
  std::string literal;
  auto flush = [&] {
    if (!literal.empty()) p.segments_.push_back({false, literal, {}});
    literal.clear();
  };
  std::size_t i = 0;
  while (i < in.size()) {
    char c = in[i];
    if (c == '[' || c == ']') throw Error(Errc::SyntaxError, "nested bracket in '" + s + "'", line);
    if (c == '{') {
      bool dbl = i + 1 < in.size() && in[i + 1] == '{';
      std::string_view close = dbl ? "}}" : "}";
      std::size_t start = i + close.size();
      auto end = in.find(close, start);
      if (end == std::string_view::npos) throw Error(Errc::SyntaxError, "unbalanced brace in '" + s + "'", line);
      std::string name = text::trim(in.substr(start, end - start));
      if (name.empty() || name.find('{') != std::string::npos)
        throw Error(Errc::SyntaxError, "bad placeholder in '" + s + "'", line);
      flush();
      p.segments_.push_back({true, name, std::string(in.substr(i, end + close.size() - i))});
      i = end + close.size();
      continue;
    }
    if (c == '}') throw Error(Errc::SyntaxError, "unbalanced brace in '" + s + "'", line);
    bool starts_token = i == 0 || in[i - 1] == ' ';
    bool ends_token = i + 1 == in.size() || in[i + 1] == ' ';
    if (is_upper(c) && starts_token && ends_token) {
      flush();
      p.segments_.push_back({true, std::string(1, c), std::string(1, c)});
      ++i;
      continue;
    }
    literal.push_back(c);
    ++i;
  }
  flush();
  return p;
}

NodePattern NodePattern::abstract(std::string description) {
  NodePattern p;
  p.description = std::move(description);
  return p;
}

bool NodePattern::has_placeholders() const {
  return std::any_of(segments_.begin(), segments_.end(), [](const PatternSegment& s) { return s.placeholder; });
}

std::optional<Bindings> NodePattern::match(std::string_view node_text) const {
  if (is_abstract()) return std::nullopt;
  const std::string subject = text::lower(inner_text(node_text));
  std::vector<std::string> lits;
  lits.reserve(segments_.size());
  for (const auto& seg : segments_) lits.push_back(seg.placeholder ? std::string() : text::lower(seg.text));
  const std::string original = inner_text(node_text);

  Bindings out;
  std::function<bool(std::size_t, std::size_t)> step = [&](std::size_t k, std::size_t pos) -> bool {
    if (k == segments_.size()) return pos == subject.size();
    if (!segments_[k].placeholder) {
      const std::string& lit = lits[k];
      if (subject.compare(pos, lit.size(), lit) != 0) return false;
      return step(k + 1, pos + lit.size());
    }
    for (std::size_t end = pos + 1; end <= subject.size(); ++end) {
      std::string value = text::trim(std::string_view(original).substr(pos, end - pos));
      if (value.empty()) continue;
      out.emplace_back(segments_[k].text, value);
      if (step(k + 1, end)) return true;
      out.pop_back();
    }
    return false;
  };
  if (!step(0, 0)) return std::nullopt;
  return out;
}

std::size_t NodePattern::specificity() const {
  std::size_t n = 0;
  for (const auto& seg : segments_) {
    if (seg.placeholder) continue;
    for (char c : seg.text) n += c != ' ';
  }
  return n;
}

NodePattern NodePattern::bind(const Bindings& bindings) const {
  if (is_abstract()) return *this;
  return parse(render(bindings));
}

std::string NodePattern::render(const Bindings& bindings) const {
  if (is_abstract()) return "{{" + description + "}}";
  if (bindings.empty()) return raw_;
  std::string out = "[";
  for (const auto& seg : segments_) {
    if (!seg.placeholder) {
      out += seg.text;
    } else if (auto v = unique_binding(bindings, seg.text)) {
      out += *v;
    } else {
      out += seg.source;
    }
  }
  return out + "]";
}

bool Rule::licenses(const Bindings& bindings, std::span<const std::string> children) const {
  if (children.empty()) return false;
  if (indefinite) {
    if (body.empty()) return true;
    return std::all_of(children.begin(), children.end(), [&](const std::string& c) {
      return std::any_of(body.begin(), body.end(), [&](const NodePattern& p) { return p.match(c).has_value(); });
    });
  }
  if (children.size() > body.size()) return false;
  std::vector<NodePattern> atoms;
  atoms.reserve(body.size());
  for (const auto& b : body) atoms.push_back(b.bind(bindings));

  std::vector<std::vector<std::size_t>> options(children.size());
  for (std::size_t i = 0; i < children.size(); ++i) {
    for (std::size_t j = 0; j < atoms.size(); ++j)
      if (pattern_covers(atoms[j], children[i])) options[i].push_back(j);
    if (options[i].empty()) return false;
  }
  std::vector<bool> used(atoms.size(), false);
  std::function<bool(std::size_t)> assign = [&](std::size_t i) -> bool {
    if (i == children.size()) return true;
    for (std::size_t j : options[i]) {
      if (used[j]) continue;
      used[j] = true;
      if (assign(i + 1)) return true;
      used[j] = false;
    }
    return false;
  };
  return assign(0);
}

std::optional<std::vector<std::string>> Rule::instantiate(const Bindings& bindings) const {
  if (indefinite) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& atom : body) {
    NodePattern bound = atom.bind(bindings);
    if (bound.has_placeholders()) return std::nullopt;
    out.push_back(bound.raw());
  }
  return out;
}

bool RuleLibrary::is_divisible(std::string_view node_text) const {
  Best div = best_match(divisible_patterns, node_text);
  if (!div.found) return false;
  Best leaf = best_match(leaf_patterns, node_text);
  return !leaf.found || div.specificity >= leaf.specificity;
}

std::vector<RuleMatch> RuleLibrary::rules_for(std::string_view node_text) const {
  std::vector<RuleMatch> out;
  if (!is_divisible(node_text)) return out;
  std::size_t best = 0;
  for (const auto& r : rules) {
    auto b = r.head.match(node_text);
    if (!b) continue;
    std::size_t s = r.head.specificity();
    if (!out.empty() && s < best) continue;
    if (out.empty() || s > best) out.clear();
    best = s;
    out.push_back({&r, std::move(*b)});
  }
  return out;
}

const Rule* RuleLibrary::find_rule(std::string_view id) const {
  for (const auto& r : rules)
    if (r.id == id) return &r;
  return nullptr;
}

std::optional<std::string> RuleLibrary::root_symbol() const {
  if (rules.empty() || rules.front().head.has_placeholders()) return std::nullopt;
  return rules.front().head.raw();
}

std::string RuleLibrary::render() const {
  std::ostringstream os;
  os << "Rules:\n";
  for (const auto& r : rules) {
    if (!r.label.empty()) os << r.label << ". ";
    os << r.head.raw() << " -> ";
    if (!r.body_description.empty()) {
      os << "{{" << r.body_description << "}}";
    } else {
      if (r.indefinite) os << "{{";
      for (const auto& b : r.body) os << b.raw();
      if (r.indefinite) os << "}}";
    }
    if (!r.comment.empty()) os << " # " << r.comment;
    os << "\n";
  }
  os << "\nDivisible Nodes:\n";
  for (const auto& p : divisible_patterns) os << render_entry(p) << "\n";
  os << "\nLeaf Nodes(Example):\n";
  for (const auto& p : leaf_patterns) os << render_entry(p) << "\n";
  return os.str();
}

nlohmann::json RuleLibrary::to_json() const {
  auto entry = [](const NodePattern& p) {
    nlohmann::json j{{"pattern", p.is_abstract() ? nlohmann::json(nullptr) : nlohmann::json(p.raw())}};
    if (!p.description.empty()) j["description"] = p.description;
    if (!p.note.empty()) j["note"] = p.note;
    return j;
  };
  nlohmann::json doc{{"rules", nlohmann::json::array()},
                     {"divisible", nlohmann::json::array()},
                     {"leaves", nlohmann::json::array()}};
  for (const auto& r : rules) {
    nlohmann::json body = nlohmann::json::array();
    for (const auto& b : r.body) body.push_back(b.raw());
    nlohmann::json j{{"id", r.id}, {"head", r.head.raw()}, {"body", body}, {"indefinite", r.indefinite}};
    if (!r.label.empty()) j["label"] = r.label;
    if (!r.body_description.empty()) j["body_description"] = r.body_description;
    if (!r.comment.empty()) j["comment"] = r.comment;
    doc["rules"].push_back(std::move(j));
  }
  for (const auto& p : divisible_patterns) doc["divisible"].push_back(entry(p));
  for (const auto& p : leaf_patterns) doc["leaves"].push_back(entry(p));
  return doc;
}

std::vector<std::string> RuleLibrary::validate() const {
  std::vector<std::string> problems;
  for (const auto& r : rules)
    if (!is_divisible(r.head.raw())) problems.push_back("rule " + r.id + " head " + r.head.raw() + " is not divisible");
  for (const auto& p : leaf_patterns)
    if (!p.is_abstract() && is_divisible(p.raw())) problems.push_back("leaf entry " + p.raw() + " classifies as divisible");
  for (const auto& p : divisible_patterns)
    if (!p.is_abstract() && !is_divisible(p.raw()))
      problems.push_back("divisible entry " + p.raw() + " classifies as a leaf");
  return problems;
}

RuleLibrary parse_library(std::string_view source) {
  enum class Section { None, Rules, Divisible, Leaves };
  RuleLibrary lib;
  Section section = Section::None;
  bool saw_rules = false;
  std::size_t line_no = 0;

  for (const std::string& raw_line : text::split_lines(source)) {
    ++line_no;
    std::string line = text::trim(raw_line);
    if (line.empty()) continue;

    std::string header = text::lower(line);
    header.erase(std::remove(header.begin(), header.end(), ' '), header.end());
    if (header == "rules:") {
      section = Section::Rules;
      saw_rules = true;
      continue;
    }
    if (header == "divisiblenodes:" || header == "devisiblenodes:") {
      section = Section::Divisible;
      continue;
    }
    if (header == "leafnodes:" || header == "leafnodes(example):") {
      section = Section::Leaves;
      continue;
    }

    std::string note;
    if (auto h = comment_start(line); h != std::string::npos) {
      note = strip_note(std::string_view(line).substr(h + 1));
      line = text::trim(std::string_view(line).substr(0, h));
    }

    switch (section) {
      case Section::None:
        throw Error(Errc::SyntaxError, "content before the first section header", line_no);
      case Section::Rules: {
        Rule r;
        std::size_t i = 0;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i > 0 && i < line.size() && line[i] == '.') {
          r.label = line.substr(0, i);
          line = text::trim(std::string_view(line).substr(i + 1));
        }
        auto arrow = line.find("->");
        if (arrow == std::string::npos) throw Error(Errc::SyntaxError, "rule without '->'", line_no);
        std::string head = text::trim(std::string_view(line).substr(0, arrow));
        std::string body = text::trim(std::string_view(line).substr(arrow + 2));
        if (head.empty()) throw Error(Errc::SyntaxError, "rule without a head", line_no);
        if (body.empty()) throw Error(Errc::SyntaxError, "rule without a body", line_no);
        auto head_atoms = split_atoms(head, line_no);
        if (head_atoms.size() != 1) throw Error(Errc::SyntaxError, "rule head must be one node", line_no);
        r.head = NodePattern::parse(head_atoms.front(), line_no);

        if (body.rfind("{{", 0) == 0) {
          if (body.size() < 4 || body.substr(body.size() - 2) != "}}")
            throw Error(Errc::SyntaxError, "unbalanced brace in rule body", line_no);
          r.indefinite = true;
          std::string inner = text::trim(std::string_view(body).substr(2, body.size() - 4));
          if (inner.empty()) throw Error(Errc::SyntaxError, "empty indefinite body", line_no);
          if (inner.front() == '[') {
            for (const auto& a : split_atoms(inner, line_no)) r.body.push_back(NodePattern::parse(a, line_no));
          } else {
            r.body_description = text::collapse(inner);
          }
        } else {
          for (const auto& a : split_atoms(body, line_no)) r.body.push_back(NodePattern::parse(a, line_no));
        }
        r.comment = std::move(note);
        r.id = "r" + std::to_string(lib.rules.size() + 1);
        lib.rules.push_back(std::move(r));
        break;
      }
      case Section::Divisible:
      case Section::Leaves: {
        auto& target = section == Section::Divisible ? lib.divisible_patterns : lib.leaf_patterns;
        std::vector<std::string> entries;
        for (auto& part : text::split(line, ';')) {
          std::string e = text::trim(part);
          if (!e.empty()) entries.push_back(std::move(e));
        }
        for (std::size_t k = 0; k < entries.size(); ++k) {
          const std::string& e = entries[k];
          if (e.front() != '[' && !is_description_entry(e))
            throw Error(Errc::SyntaxError, "node entry must be bracketed or a {{description}}: '" + e + "'", line_no);
          target.push_back(parse_entry(e, k + 1 == entries.size() ? note : std::string(), line_no));
        }
        break;
      }
    }
  }
  if (!saw_rules) throw Error(Errc::MissingSection, "library has no Rules: section");

  // Prose bodies stand for the node entry with the same description.
  for (auto& r : lib.rules) {
    if (r.body_description.empty()) continue;
    std::string key = description_key(r.body_description);
    for (const auto* list : {&lib.divisible_patterns, &lib.leaf_patterns}) {
      for (const auto& p : *list) {
        if (!p.is_abstract() && !p.description.empty() && description_key(p.description) == key)
          r.body = {p};
      }
    }
    for (auto& b : r.body) {
      b.description.clear();
      b.note.clear();
    }
  }
  return lib;
}

RuleLibrary load_library(const std::string& path) { return parse_library(text::read_file(path)); }

bool LibraryGrammar::is_divisible(std::string_view node_text) const { return library_->is_divisible(node_text); }

bool LibraryGrammar::root_divisible(std::string_view query) const {
  std::string t = text::trim(query);
  if (!t.empty() && t.front() == '[' && t.back() == ']') return library_->is_divisible(t);
  return library_->root_symbol().has_value();
}

bool LibraryGrammar::licenses(std::string_view parent_text, std::string_view rule_id,
                              std::span<const std::string> child_texts) const {
  std::string parent = text::trim(parent_text);
  if (parent.empty() || parent.front() != '[' || parent.back() != ']') {
    auto root = library_->root_symbol();
    if (!root) return false;
    parent = *root;
  }
  if (!rule_id.empty()) {
    const Rule* r = library_->find_rule(rule_id);
    if (!r) return false;
    auto b = r->head.match(parent);
    return b && r->licenses(*b, child_texts);
  }
  for (const auto& m : library_->rules_for(parent))
    if (m.rule->licenses(m.bindings, child_texts)) return true;
  return false;
}

}  // namespace htp
