#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace htp {

// Blocksworld

inline constexpr std::string_view kTable = "table";

struct BlocksState {
  /// Support of every block not in hand: another block or kTable.
  std::map<std::string, std::string> on;
  std::optional<std::string> holding;

  std::set<std::string> blocks() const;
  bool clear(const std::string& block) const;
  std::set<std::string> clear_set() const;
  bool hand_empty() const { return !holding; }
  bool operator==(const BlocksState&) const = default;
};

/// Throws SchemaError when a support is missing or the on-relation cycles.
void validate(const BlocksState& s);
std::string describe(const BlocksState& s);
nlohmann::json to_json(const BlocksState& s);

struct BlocksAction {
  enum class Kind { PickUp, PutDown, Stack, Unstack };
  Kind kind = Kind::PickUp;
  std::string x;
  std::string y;  // stack and unstack
  bool operator==(const BlocksAction&) const = default;
};

/// "pick up the red block", "stack the red block on top of the orange block",
/// "unstack a from on top of b"... Throws UnknownAction.
BlocksAction parse_blocks_action(std::string_view text);
std::string render(const BlocksAction& a);

/// Applies one action. Throws PreconditionViolated or UnknownBlock.
BlocksState apply(const BlocksState& s, const BlocksAction& a);

// Mystery Blocksworld

struct MysteryState {
  std::set<std::string> province;
  std::set<std::string> planet;
  std::set<std::string> pain;
  std::map<std::string, std::string> craves;
  bool harmony = false;

  std::set<std::string> objects() const;
  bool operator==(const MysteryState&) const = default;
};

nlohmann::json to_json(const MysteryState& s);

struct MysteryAction {
  enum class Kind { Attack, Succumb, Overcome, Feast };
  Kind kind = Kind::Attack;
  std::string x;
  std::string y;  // overcome and feast
  bool operator==(const MysteryAction&) const = default;
};

/// "attack object d", "overcome object d from object b"... Throws UnknownAction.
MysteryAction parse_mystery_action(std::string_view text);
std::string render(const MysteryAction& a);

/// A ground fact of the Mystery vocabulary with the truth value it is given.
struct MysteryAtom {
  enum class Kind { Province, Planet, Pain, Craves, Harmony };
  Kind kind = Kind::Harmony;
  std::string x;
  std::string y;
  bool value = true;
  auto operator<=>(const MysteryAtom&) const = default;
};

bool holds(const MysteryState& s, const MysteryAtom& a);

/// Schema effects of `a` (adds true, deletes false) without applying them.
std::vector<MysteryAtom> effects(const MysteryState& s, const MysteryAction& a);
/// Throws PreconditionViolated.
MysteryState apply(const MysteryState& s, const MysteryAction& a);

// Plans and goals

template <class State>
struct Execution {
  std::vector<State> states;  // states[0] is the initial state, states[i] follows step i
  const State& final_state() const { return states.back(); }
};

/// Runs every action in order. Errors carry the 1-based step in their message
/// and in Error::line().
Execution<BlocksState> execute_blocks_plan(const BlocksState& init, const std::vector<std::string>& plan);
Execution<MysteryState> execute_mystery_plan(const MysteryState& init, const std::vector<std::string>& plan);

/// Goal and initial-state atoms.
///   blocks:  "red on orange", "the blue block is on the table", "red clear", "hand empty", "holding red"
///   mystery: "province a", "planet object b", "pain c", "d craves b", "harmony"
/// A leading "not " negates. Throws UnknownAtom.
struct BlocksAtom {
  enum class Kind { On, OnTable, Clear, HandEmpty, Holding };
  Kind kind = Kind::HandEmpty;
  std::string x;
  std::string y;
  bool value = true;
  bool operator==(const BlocksAtom&) const = default;
};
BlocksAtom parse_blocks_atom(std::string_view text);
MysteryAtom parse_mystery_atom(std::string_view text);
bool holds(const BlocksState& s, const BlocksAtom& a);

bool check_goal(const BlocksState& s, const std::vector<std::string>& goal);
bool check_goal(const MysteryState& s, const std::vector<std::string>& goal);

/// Builds a complete state from positive atoms. Throws UnknownAtom or SchemaError.
BlocksState blocks_state_from_atoms(const std::vector<std::string>& atoms);
MysteryState mystery_state_from_atoms(const std::vector<std::string>& atoms);

// Trace reading

/// Parsed "The current state is: ..." line: positions plus the clear flag
/// stated for each block.
struct BlocksObservation {
  BlocksState state;
  std::map<std::string, bool> clear;
};
/// Throws FormatError.
BlocksObservation parse_blocks_state_line(std::string_view line);

struct BlocksTraceStep {
  std::string action;
  std::optional<BlocksObservation> observed;
};
/// "I can <action>" lines each followed by their state line.
std::vector<BlocksTraceStep> parse_blocks_trace(std::string_view text);

struct MysteryTraceStep {
  std::string action;
  std::vector<MysteryAtom> before;  // facts cited as the reason for the step
  std::vector<MysteryAtom> effects;  // "... becomes True/False"
  std::vector<MysteryAtom> after;    // "... is True/False" and bare listings
};
/// Parses the fact listings of a trace line ("Province object a, object a Craves
/// object b becomes False"). `changes` reports whether the line uses "becomes".
std::vector<MysteryAtom> parse_mystery_facts(std::string_view line, bool* changes = nullptr);
std::vector<MysteryTraceStep> parse_mystery_trace(std::string_view text);

/// Compares execution against a trace step by step; returns one message per
/// disagreement (empty when faithful).
std::vector<std::string> compare_blocks_trace(const BlocksState& init, const std::vector<BlocksTraceStep>& trace);
std::vector<std::string> compare_mystery_trace(const MysteryState& init, const std::vector<MysteryTraceStep>& trace);

}  // namespace htp
