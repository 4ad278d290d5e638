#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "htp/hypertree.hpp"
#include "json.hpp"

namespace htp {

/// Placeholder captures in occurrence order. Names may repeat
/// (e.g. "[{{Block}} on top of {{Block}}]").
using Bindings = std::vector<std::pair<std::string, std::string>>;

/// Value bound to `name` when it occurs exactly once, otherwise nullopt.
std::optional<std::string> unique_binding(const Bindings& bindings, std::string_view name);

struct PatternSegment {
  bool placeholder = false;
  std::string text;    // literal text, or the placeholder name
  std::string source;  // placeholder spelling as written ("{{A}}", "{j}", "A")

  bool operator==(const PatternSegment&) const = default;
};

/// A bracketed node pattern such as "[{{Block}} on the table]".
///
/// Placeholders are written `{{Name}}`. Two shorthand forms found in
/// hand-written libraries are also accepted: single-brace `{name}` and a
/// standalone single capital letter (`[Dining for A]`).
///
/// A pattern declared only by description (`{{Specific dining for one city}}`)
/// takes its concrete form from a "such as [...]" example in its note; without
/// one it is abstract and matches nothing.
class NodePattern {
 public:
  NodePattern() = default;

  /// Parses one bracket atom. Throws Error(SyntaxError) on malformed input.
  static NodePattern parse(std::string_view atom, std::optional<std::size_t> line = std::nullopt);
  static NodePattern abstract(std::string description);

  const std::vector<PatternSegment>& segments() const noexcept { return segments_; }
  const std::string& raw() const noexcept { return raw_; }
  bool is_abstract() const noexcept { return segments_.empty(); }
  bool has_placeholders() const;

  /// Leftmost-shortest unification; placeholders capture non-empty text and
  /// literals compare case-insensitively after whitespace normalization.
  std::optional<Bindings> match(std::string_view node_text) const;

  /// Count of non-space literal characters inside the brackets. Used to prefer
  /// the most specific of several matching patterns.
  std::size_t specificity() const;

  /// Substitutes placeholders that `bindings` binds uniquely; others remain.
  NodePattern bind(const Bindings& bindings) const;
  /// Renders the pattern text; unbound placeholders print as `{{name}}`.
  std::string render(const Bindings& bindings = {}) const;

  std::string description;  // set for entries declared as `{{description}}`
  std::string note;         // trailing '#' comment from the source line

  bool operator==(const NodePattern& other) const {
    return raw_ == other.raw_ && description == other.description && note == other.note;
  }

 private:
  std::vector<PatternSegment> segments_;
  std::string raw_;
};

struct Rule {
  std::string id;     // "r1", "r2", ... in file order
  std::string label;  // source enumerator ("4" for "4. [Self-driving] -> ..."), may be empty
  NodePattern head;
  std::vector<NodePattern> body;
  bool indefinite = false;
  std::string body_description;  // prose body `{{Specific segments of transportation}}`
  std::string comment;

  /// True when `children` is a branch this rule can produce for a head bound by `bindings`.
  /// Indefinite rules: every child matches one of the body templates.
  /// Definite rules: children map one-to-one onto distinct body atoms, each
  /// either matching the atom or qualifying it ("[dining cost]" for "[cost]").
  bool licenses(const Bindings& bindings, std::span<const std::string> children) const;

  /// Body atoms with head bindings substituted; nullopt if any placeholder stays unresolved.
  std::optional<std::vector<std::string>> instantiate(const Bindings& bindings) const;

  bool operator==(const Rule& other) const {
    return id == other.id && label == other.label && head == other.head && body == other.body &&
           indefinite == other.indefinite && body_description == other.body_description && comment == other.comment;
  }
};

struct RuleMatch {
  const Rule* rule = nullptr;
  Bindings bindings;
};

class RuleLibrary {
 public:
  std::vector<Rule> rules;
  std::vector<NodePattern> divisible_patterns;
  std::vector<NodePattern> leaf_patterns;

  /// True iff some divisible pattern matches and no leaf pattern matches more specifically.
  bool is_divisible(std::string_view node_text) const;

  /// Rules whose head matches `node_text` with the greatest head specificity, in
  /// library order. Empty for non-divisible text.
  std::vector<RuleMatch> rules_for(std::string_view node_text) const;

  const Rule* find_rule(std::string_view id) const;

  /// Head of the first rule when it has no placeholders ("[Plan]").
  std::optional<std::string> root_symbol() const;

  /// Canonical text form; reparses to an equal library.
  std::string render() const;
  nlohmann::json to_json() const;

  /// Library well-formedness problems (rule heads not divisible, leaf entries
  /// classified divisible and vice versa). Empty when consistent.
  std::vector<std::string> validate() const;

  bool operator==(const RuleLibrary&) const = default;
};

RuleLibrary parse_library(std::string_view source);
RuleLibrary load_library(const std::string& path);

/// Adapts a rule library to the hypertree's grammar hooks.
class LibraryGrammar : public TreeGrammar {
 public:
  explicit LibraryGrammar(std::shared_ptr<const RuleLibrary> library) : library_(std::move(library)) {}

  bool is_divisible(std::string_view node_text) const override;
  /// A bracketed query must itself be divisible; free text stands for the root symbol.
  bool root_divisible(std::string_view query) const override;
  bool licenses(std::string_view parent_text, std::string_view rule_id,
                std::span<const std::string> child_texts) const override;

  const RuleLibrary& library() const noexcept { return *library_; }

 private:
  std::shared_ptr<const RuleLibrary> library_;
};

/// Whitespace-collapsed text with spaces just inside brackets removed.
std::string canonical_node_text(std::string_view text);

}  // namespace htp
