#include "htp/executors.hpp"

#include <algorithm>
#include <regex>

#include "htp/common.hpp"

namespace htp {

namespace {

std::string clean(std::string_view s) {
  std::string t = text::normalize(s);
  while (!t.empty() && (t.back() == '.' || t.back() == ' ')) t.pop_back();
  return t;
}

// "the yellow block" -> "yellow"
std::string block_name(std::string s) {
  s = text::trim(s);
  if (text::starts_with_icase(s, "the ")) s = s.substr(4);
  if (s.size() > 6 && s.compare(s.size() - 6, 6, " block") == 0) s.resize(s.size() - 6);
  return text::trim(s);
}

bool simple_name(const std::string& s) {
  return !s.empty() && s != kTable && s.find(' ') == std::string::npos;
}

// Drops filler words so "the blue block is on the table" reads "blue on table".
std::string strip_filler(const std::string& s) {
  std::string out;
  for (const auto& w : text::split(s, ' ')) {
    if (w.empty() || w == "the" || w == "block" || w == "is" || w == "object") continue;
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

template <class F>
auto at_step(std::size_t step, const std::string& action, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), "step " + std::to_string(step) + " (" + action + "): " + e.what(), step);
  }
}

std::string atom_text(const MysteryAtom& a) {
  std::string body;
  switch (a.kind) {
    case MysteryAtom::Kind::Province: body = "province " + a.x; break;
    case MysteryAtom::Kind::Planet: body = "planet " + a.x; break;
    case MysteryAtom::Kind::Pain: body = "pain " + a.x; break;
    case MysteryAtom::Kind::Craves: body = a.x + " craves " + a.y; break;
    case MysteryAtom::Kind::Harmony: body = "harmony"; break;
  }
  return body + (a.value ? " is true" : " is false");
}

}  // namespace

// Blocks state

std::set<std::string> BlocksState::blocks() const {
  std::set<std::string> out;
  for (const auto& [b, _] : on) out.insert(b);
  if (holding) out.insert(*holding);
  return out;
}

bool BlocksState::clear(const std::string& block) const {
  if (holding == block) return false;
  for (const auto& [b, support] : on)
    if (support == block) return false;
  return true;
}

std::set<std::string> BlocksState::clear_set() const {
  std::set<std::string> out;
  for (const auto& b : blocks())
    if (clear(b)) out.insert(b);
  return out;
}

void validate(const BlocksState& s) {
  auto all = s.blocks();
  if (s.holding && s.on.count(*s.holding)) throw Error(Errc::SchemaError, *s.holding + " is both held and placed");
  std::map<std::string, int> load;
  for (const auto& [b, support] : s.on) {
    if (support == kTable) continue;
    if (!all.count(support)) throw Error(Errc::SchemaError, b + " rests on unknown block " + support);
    if (++load[support] > 1) throw Error(Errc::SchemaError, "two blocks on " + support);
  }
  for (const auto& [b, _] : s.on) {
    std::string cur = b;
    for (std::size_t hops = 0; cur != kTable; ++hops) {
      if (hops > s.on.size()) throw Error(Errc::SchemaError, "blocks stacked in a cycle through " + b);
      cur = s.on.at(cur);
    }
  }
}

std::string describe(const BlocksState& s) {
  std::string out;
  for (const auto& b : s.blocks()) {
    if (!out.empty()) out += ", ";
    out += "the " + b + " block is ";
    if (s.holding == b) out += "in my hand";
    else if (s.on.at(b) == kTable) out += "on the table";
    else out += "on top of the " + s.on.at(b) + " block";
    out += s.clear(b) ? " and clear" : " and not clear";
  }
  if (s.hand_empty()) out += out.empty() ? "the hand is empty" : ", the hand is empty";
  return out;
}

nlohmann::json to_json(const BlocksState& s) {
  return {{"on", s.on}, {"holding", s.holding ? nlohmann::json(*s.holding) : nlohmann::json(nullptr)}};
}

BlocksAction parse_blocks_action(std::string_view raw) {
  static const std::regex pick(R"(^pick up (.+)$)");
  static const std::regex put(R"(^put down (.+)$)");
  static const std::regex unstack(R"(^unstack (.+?) from (?:on top of )?(.+)$)");
  static const std::regex stack(R"(^stack (.+?) on (?:top of )?(.+)$)");
  std::string t = clean(raw);
  std::smatch m;
  BlocksAction a;
  if (std::regex_match(t, m, pick)) a = {BlocksAction::Kind::PickUp, block_name(m[1]), {}};
  else if (std::regex_match(t, m, put)) a = {BlocksAction::Kind::PutDown, block_name(m[1]), {}};
  else if (std::regex_match(t, m, unstack)) a = {BlocksAction::Kind::Unstack, block_name(m[1]), block_name(m[2])};
  else if (std::regex_match(t, m, stack)) a = {BlocksAction::Kind::Stack, block_name(m[1]), block_name(m[2])};
  else throw Error(Errc::UnknownAction, "unknown action: " + std::string(raw));
  bool binary = a.kind == BlocksAction::Kind::Stack || a.kind == BlocksAction::Kind::Unstack;
  if (!simple_name(a.x) || (binary && !simple_name(a.y)))
    throw Error(Errc::UnknownAction, "cannot read block names in: " + std::string(raw));
  return a;
}

std::string render(const BlocksAction& a) {
  switch (a.kind) {
    case BlocksAction::Kind::PickUp: return "pick up the " + a.x + " block";
    case BlocksAction::Kind::PutDown: return "put down the " + a.x + " block";
    case BlocksAction::Kind::Stack: return "stack the " + a.x + " block on top of the " + a.y + " block";
    case BlocksAction::Kind::Unstack: return "unstack the " + a.x + " block from on top of the " + a.y + " block";
  }
  return {};
}

BlocksState apply(const BlocksState& s, const BlocksAction& a) {
  auto all = s.blocks();
  if (!all.count(a.x)) throw Error(Errc::UnknownBlock, "unknown block " + a.x);
  bool binary = a.kind == BlocksAction::Kind::Stack || a.kind == BlocksAction::Kind::Unstack;
  if (binary && !all.count(a.y)) throw Error(Errc::UnknownBlock, "unknown block " + a.y);
  auto need = [](bool ok, const std::string& why) {
    if (!ok) throw Error(Errc::PreconditionViolated, why);
  };
  BlocksState n = s;
  switch (a.kind) {
    case BlocksAction::Kind::PickUp:
      need(s.hand_empty(), "hand is not empty");
      need(s.on.at(a.x) == kTable, a.x + " is not on the table");
      need(s.clear(a.x), a.x + " is not clear");
      n.on.erase(a.x);
      n.holding = a.x;
      break;
    case BlocksAction::Kind::PutDown:
      need(s.holding == a.x, "not holding " + a.x);
      n.holding.reset();
      n.on[a.x] = std::string(kTable);
      break;
    case BlocksAction::Kind::Stack:
      need(s.holding == a.x, "not holding " + a.x);
      need(a.x != a.y, "cannot stack a block on itself");
      need(s.clear(a.y), a.y + " is not clear");
      n.holding.reset();
      n.on[a.x] = a.y;
      break;
    case BlocksAction::Kind::Unstack:
      need(s.hand_empty(), "hand is not empty");
      need(s.on.count(a.x) && s.on.at(a.x) == a.y, a.x + " is not on top of " + a.y);
      need(s.clear(a.x), a.x + " is not clear");
      n.on.erase(a.x);
      n.holding = a.x;
      break;
  }
  return n;
}

// Mystery state

std::set<std::string> MysteryState::objects() const {
  std::set<std::string> out(province.begin(), province.end());
  out.insert(planet.begin(), planet.end());
  out.insert(pain.begin(), pain.end());
  for (const auto& [x, y] : craves) {
    out.insert(x);
    out.insert(y);
  }
  return out;
}

nlohmann::json to_json(const MysteryState& s) {
  return {{"province", s.province}, {"planet", s.planet}, {"pain", s.pain}, {"craves", s.craves}, {"harmony", s.harmony}};
}

MysteryAction parse_mystery_action(std::string_view raw) {
  static const std::regex unary(R"(^(attack|succumb) (?:object )?(\w+)$)");
  static const std::regex binary(R"(^(overcome|feast) (?:object )?(\w+) from (?:object )?(\w+)$)");
  std::string t = clean(raw);
  std::smatch m;
  if (std::regex_match(t, m, unary))
    return {m[1] == "attack" ? MysteryAction::Kind::Attack : MysteryAction::Kind::Succumb, m[2], {}};
  if (std::regex_match(t, m, binary))
    return {m[1] == "overcome" ? MysteryAction::Kind::Overcome : MysteryAction::Kind::Feast, m[2], m[3]};
  throw Error(Errc::UnknownAction, "unknown action: " + std::string(raw));
}

std::string render(const MysteryAction& a) {
  switch (a.kind) {
    case MysteryAction::Kind::Attack: return "attack object " + a.x;
    case MysteryAction::Kind::Succumb: return "succumb object " + a.x;
    case MysteryAction::Kind::Overcome: return "overcome object " + a.x + " from object " + a.y;
    case MysteryAction::Kind::Feast: return "feast object " + a.x + " from object " + a.y;
  }
  return {};
}

bool holds(const MysteryState& s, const MysteryAtom& a) {
  bool t = false;
  switch (a.kind) {
    case MysteryAtom::Kind::Province: t = s.province.count(a.x) != 0; break;
    case MysteryAtom::Kind::Planet: t = s.planet.count(a.x) != 0; break;
    case MysteryAtom::Kind::Pain: t = s.pain.count(a.x) != 0; break;
    case MysteryAtom::Kind::Craves: t = s.craves.count(a.x) && s.craves.at(a.x) == a.y; break;
    case MysteryAtom::Kind::Harmony: t = s.harmony; break;
  }
  return t == a.value;
}

std::vector<MysteryAtom> effects(const MysteryState& s, const MysteryAction& a) {
  using K = MysteryAtom::Kind;
  auto pos = [](K k, std::string x = {}, std::string y = {}) { return MysteryAtom{k, std::move(x), std::move(y), true}; };
  auto neg = [](K k, std::string x = {}, std::string y = {}) { return MysteryAtom{k, std::move(x), std::move(y), false}; };
  auto need = [&](const MysteryAtom& atom) {
    if (!holds(s, atom)) throw Error(Errc::PreconditionViolated, "needs " + atom_text(atom));
  };
  const std::string& x = a.x;
  const std::string& y = a.y;
  switch (a.kind) {
    case MysteryAction::Kind::Attack:
      need(pos(K::Province, x));
      need(pos(K::Planet, x));
      need(pos(K::Harmony));
      return {neg(K::Province, x), neg(K::Planet, x), neg(K::Harmony), pos(K::Pain, x)};
    case MysteryAction::Kind::Succumb:
      need(pos(K::Pain, x));
      return {pos(K::Province, x), pos(K::Planet, x), pos(K::Harmony), neg(K::Pain, x)};
    case MysteryAction::Kind::Overcome:
      need(pos(K::Province, y));
      need(pos(K::Pain, x));
      return {pos(K::Harmony), pos(K::Province, x), pos(K::Craves, x, y), neg(K::Province, y), neg(K::Pain, x)};
    case MysteryAction::Kind::Feast:
      need(pos(K::Craves, x, y));
      need(pos(K::Province, x));
      need(pos(K::Harmony));
      return {pos(K::Pain, x), pos(K::Province, y), neg(K::Craves, x, y), neg(K::Province, x), neg(K::Harmony)};
  }
  return {};
}

MysteryState apply(const MysteryState& s, const MysteryAction& a) {
  auto eff = effects(s, a);
  MysteryState n = s;
  // Deletes first, then adds, so an atom both deleted and added ends up true.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& e : eff) {
      if (e.value != (pass == 1)) continue;
      auto set_member = [&](std::set<std::string>& set) {
        if (e.value) set.insert(e.x);
        else set.erase(e.x);
      };
      switch (e.kind) {
        case MysteryAtom::Kind::Province: set_member(n.province); break;
        case MysteryAtom::Kind::Planet: set_member(n.planet); break;
        case MysteryAtom::Kind::Pain: set_member(n.pain); break;
        case MysteryAtom::Kind::Harmony: n.harmony = e.value; break;
        case MysteryAtom::Kind::Craves:
          if (e.value) n.craves[e.x] = e.y;
          else if (n.craves.count(e.x) && n.craves[e.x] == e.y) n.craves.erase(e.x);
          break;
      }
    }
  }
  return n;
}

// Plans

Execution<BlocksState> execute_blocks_plan(const BlocksState& init, const std::vector<std::string>& plan) {
  validate(init);
  Execution<BlocksState> run{{init}};
  for (std::size_t i = 0; i < plan.size(); ++i)
    run.states.push_back(at_step(i + 1, plan[i], [&] { return apply(run.states.back(), parse_blocks_action(plan[i])); }));
  return run;
}

Execution<MysteryState> execute_mystery_plan(const MysteryState& init, const std::vector<std::string>& plan) {
  Execution<MysteryState> run{{init}};
  for (std::size_t i = 0; i < plan.size(); ++i)
    run.states.push_back(at_step(i + 1, plan[i], [&] { return apply(run.states.back(), parse_mystery_action(plan[i])); }));
  return run;
}

// Atoms and goals

BlocksAtom parse_blocks_atom(std::string_view raw) {
  static const std::regex on_table(R"(^(\w+) on table$)");
  static const std::regex on_top(R"(^(\w+) on (?:top of )?(\w+)$)");
  static const std::regex clear_re(R"(^(\w+) clear$)");
  static const std::regex hand_empty(R"(^(?:hand|my hand) empty$)");
  static const std::regex holding(R"(^(?:holding (\w+)|(\w+) in (?:my )?hand)$)");
  std::string t = clean(raw);
  BlocksAtom a;
  if (t.rfind("not ", 0) == 0) {
    a.value = false;
    t = t.substr(4);
  }
  t = strip_filler(t);
  std::smatch m;
  if (std::regex_match(t, m, on_table)) a.kind = BlocksAtom::Kind::OnTable, a.x = m[1];
  else if (std::regex_match(t, m, hand_empty)) a.kind = BlocksAtom::Kind::HandEmpty;
  else if (std::regex_match(t, m, holding)) a.kind = BlocksAtom::Kind::Holding, a.x = m[1].matched ? m[1] : m[2];
  else if (std::regex_match(t, m, on_top)) a.kind = BlocksAtom::Kind::On, a.x = m[1], a.y = m[2];
  else if (std::regex_match(t, m, clear_re)) a.kind = BlocksAtom::Kind::Clear, a.x = m[1];
  else throw Error(Errc::UnknownAtom, "unknown blocks atom: " + std::string(raw));
  if (a.x == kTable || a.y == kTable) throw Error(Errc::UnknownAtom, "unknown blocks atom: " + std::string(raw));
  return a;
}

MysteryAtom parse_mystery_atom(std::string_view raw) {
  static const std::regex unary(R"(^(province|planet|pain) (?:object )?(\w+)$)");
  static const std::regex craves(R"(^(?:object )?(\w+) craves? (?:object )?(\w+)$)");
  static const std::regex pain_is(R"(^the pain object is (\w+)$)");
  std::string t = clean(raw);
  MysteryAtom a;
  if (t.rfind("not ", 0) == 0) {
    a.value = false;
    t = t.substr(4);
  }
  std::smatch m;
  if (t == "harmony" || t == "hamony") {
    a.kind = MysteryAtom::Kind::Harmony;
  } else if (std::regex_match(t, m, unary)) {
    a.kind = m[1] == "province" ? MysteryAtom::Kind::Province
             : m[1] == "planet" ? MysteryAtom::Kind::Planet
                                : MysteryAtom::Kind::Pain;
    a.x = m[2];
  } else if (std::regex_match(t, m, pain_is)) {
    a.kind = MysteryAtom::Kind::Pain;
    a.x = m[1];
  } else if (std::regex_match(t, m, craves)) {
    a.kind = MysteryAtom::Kind::Craves;
    a.x = m[1];
    a.y = m[2];
  } else {
    throw Error(Errc::UnknownAtom, "unknown mystery atom: " + std::string(raw));
  }
  return a;
}

bool holds(const BlocksState& s, const BlocksAtom& a) {
  auto all = s.blocks();
  for (const auto* b : {&a.x, &a.y})
    if (!b->empty() && !all.count(*b)) throw Error(Errc::UnknownAtom, "goal names unknown block " + *b);
  bool t = false;
  switch (a.kind) {
    case BlocksAtom::Kind::On: t = s.on.count(a.x) && s.on.at(a.x) == a.y; break;
    case BlocksAtom::Kind::OnTable: t = s.on.count(a.x) && s.on.at(a.x) == kTable; break;
    case BlocksAtom::Kind::Clear: t = s.clear(a.x); break;
    case BlocksAtom::Kind::HandEmpty: t = s.hand_empty(); break;
    case BlocksAtom::Kind::Holding: t = s.holding == a.x; break;
  }
  return t == a.value;
}

bool check_goal(const BlocksState& s, const std::vector<std::string>& goal) {
  bool ok = true;
  for (const auto& g : goal) ok = holds(s, parse_blocks_atom(g)) && ok;  // parse every atom
  return ok;
}

bool check_goal(const MysteryState& s, const std::vector<std::string>& goal) {
  bool ok = true;
  for (const auto& g : goal) ok = holds(s, parse_mystery_atom(g)) && ok;
  return ok;
}

BlocksState blocks_state_from_atoms(const std::vector<std::string>& atoms) {
  BlocksState s;
  std::vector<BlocksAtom> clears;
  bool hand_empty_said = false;
  std::set<std::string> mentioned;
  for (const auto& text : atoms) {
    BlocksAtom a = parse_blocks_atom(text);
    if (!a.value) throw Error(Errc::SchemaError, "initial state atoms must be positive: " + text);
    auto place = [&](const std::string& b, const std::string& support) {
      if (s.on.count(b) || s.holding == b) throw Error(Errc::SchemaError, "block " + b + " placed twice");
      s.on[b] = support;
    };
    switch (a.kind) {
      case BlocksAtom::Kind::On: place(a.x, a.y); mentioned.insert(a.y); break;
      case BlocksAtom::Kind::OnTable: place(a.x, std::string(kTable)); break;
      case BlocksAtom::Kind::Holding:
        if (s.holding || s.on.count(a.x)) throw Error(Errc::SchemaError, "cannot hold " + a.x);
        s.holding = a.x;
        break;
      case BlocksAtom::Kind::HandEmpty: hand_empty_said = true; break;
      case BlocksAtom::Kind::Clear: clears.push_back(a); mentioned.insert(a.x); break;
    }
  }
  if (hand_empty_said && s.holding) throw Error(Errc::SchemaError, "hand both empty and holding " + *s.holding);
  auto all = s.blocks();
  for (const auto& b : mentioned)
    if (!all.count(b)) throw Error(Errc::SchemaError, "block " + b + " has no position");
  validate(s);
  for (const auto& c : clears)
    if (!s.clear(c.x)) throw Error(Errc::SchemaError, c.x + " is said to be clear but is covered");
  return s;
}

MysteryState mystery_state_from_atoms(const std::vector<std::string>& atoms) {
  MysteryState s;
  for (const auto& text : atoms) {
    MysteryAtom a = parse_mystery_atom(text);
    if (!a.value) throw Error(Errc::SchemaError, "initial state atoms must be positive: " + text);
    switch (a.kind) {
      case MysteryAtom::Kind::Province: s.province.insert(a.x); break;
      case MysteryAtom::Kind::Planet: s.planet.insert(a.x); break;
      case MysteryAtom::Kind::Pain: s.pain.insert(a.x); break;
      case MysteryAtom::Kind::Harmony: s.harmony = true; break;
      case MysteryAtom::Kind::Craves:
        if (s.craves.count(a.x)) throw Error(Errc::SchemaError, a.x + " craves two objects");
        s.craves[a.x] = a.y;
        break;
    }
  }
  return s;
}

// Traces

BlocksObservation parse_blocks_state_line(std::string_view line) {
  static const std::regex clause(
      R"(^the (\w+) block (?:is )?(on the table|on top of the (\w+) block|in my hand) and (not clear|clear)$)");
  std::string t = clean(line);
  const std::string prefix = "the current state is:";
  if (t.rfind(prefix, 0) != 0) throw Error(Errc::FormatError, "not a state line: " + std::string(line));
  t = text::trim(t.substr(prefix.size()));
  BlocksObservation obs;
  std::size_t start = 0;
  while (start <= t.size()) {
    std::size_t comma = t.find(", ", start);
    std::string part = t.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::smatch m;
    if (!std::regex_match(part, m, clause)) throw Error(Errc::FormatError, "cannot read state clause: " + part);
    std::string b = m[1];
    if (obs.clear.count(b)) throw Error(Errc::FormatError, "block " + b + " described twice");
    if (m[2] == "in my hand") obs.state.holding = b;
    else if (m[2] == "on the table") obs.state.on[b] = std::string(kTable);
    else obs.state.on[b] = m[3];
    obs.clear[b] = m[4] == "clear";
    if (comma == std::string::npos) break;
    start = comma + 2;
  }
  return obs;
}

std::vector<BlocksTraceStep> parse_blocks_trace(std::string_view text) {
  std::vector<BlocksTraceStep> steps;
  for (const auto& raw : text::split_lines(text)) {
    std::string line = text::collapse(raw);
    auto at = line.find("I can ");
    if (at != std::string::npos) {
      std::string action = line.substr(at + 6);
      while (!action.empty() && (action.back() == '.' || action.back() == ' ')) action.pop_back();
      steps.push_back({action, std::nullopt});
    } else if (text::starts_with_icase(line, "The current state is:")) {
      if (steps.empty()) throw Error(Errc::FormatError, "state line before any action");
      steps.back().observed = parse_blocks_state_line(line);
    }
  }
  return steps;
}

std::vector<MysteryAtom> parse_mystery_facts(std::string_view line, bool* changes) {
  static const std::regex tail(R"(^(.*) (is|becomes) (true|false)$)");
  static const std::regex pain_is(R"(^the pain object is \w+$)");
  std::string t = clean(line);
  std::vector<MysteryAtom> out;
  std::vector<std::string> pending;
  bool any_change = false;
  auto flush = [&](bool value) {
    for (const auto& p : pending) {
      MysteryAtom a = parse_mystery_atom(p);
      a.value = value;
      out.push_back(a);
    }
    pending.clear();
  };
  std::size_t start = 0;
  while (start <= t.size()) {
    std::size_t comma = t.find(", ", start);
    std::string piece = text::trim(t.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    std::smatch m;
    if (std::regex_match(piece, pain_is)) {
      out.push_back(parse_mystery_atom(piece));
    } else if (std::regex_match(piece, m, tail)) {
      pending.push_back(m[1]);
      if (m[2] == "becomes") any_change = true;
      flush(m[3] == "true");
    } else if (!piece.empty()) {
      pending.push_back(piece);
    }
    if (comma == std::string::npos) break;
    start = comma + 2;
  }
  flush(true);
  if (changes) *changes = any_change;
  return out;
}

std::vector<MysteryTraceStep> parse_mystery_trace(std::string_view text) {
  static const std::regex reason(R"(^(?:by \[[^\]]*\],?\s*)?(?:since\s+)?(.*?),?\s*$)", std::regex::icase);
  std::vector<MysteryTraceStep> steps;
  for (const auto& raw : text::split_lines(text)) {
    std::string line = text::collapse(raw);
    if (line.empty() || line.front() == '[' || text::lower(line).find("the subtask is achieved") != std::string::npos)
      continue;
    auto at = line.find("I can ");
    if (at != std::string::npos) {
      MysteryTraceStep step;
      step.action = clean(line.substr(at + 6));
      std::smatch m;
      std::string before = line.substr(0, at);
      if (std::regex_match(before, m, reason) && !text::trim(m[1].str()).empty())
        step.before = parse_mystery_facts(m[1].str());
      steps.push_back(std::move(step));
      continue;
    }
    if (steps.empty()) continue;
    bool changes = false;
    auto facts = parse_mystery_facts(line, &changes);
    auto& dst = changes ? steps.back().effects : steps.back().after;
    dst.insert(dst.end(), facts.begin(), facts.end());
  }
  return steps;
}

std::vector<std::string> compare_blocks_trace(const BlocksState& init, const std::vector<BlocksTraceStep>& trace) {
  std::vector<std::string> problems;
  BlocksState s = init;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const std::string where = "step " + std::to_string(i + 1) + " (" + trace[i].action + ")";
    try {
      s = apply(s, parse_blocks_action(trace[i].action));
    } catch (const Error& e) {
      problems.push_back(where + ": " + e.what());
      return problems;
    }
    if (!trace[i].observed) continue;
    const auto& obs = *trace[i].observed;
    if (!(obs.state == s)) problems.push_back(where + ": trace says '" + describe(obs.state) + "', executor has '" + describe(s) + "'");
    for (const auto& b : s.blocks()) {
      auto it = obs.clear.find(b);
      if (it == obs.clear.end()) problems.push_back(where + ": trace omits block " + b);
      else if (it->second != s.clear(b)) problems.push_back(where + ": clear flag of " + b + " differs");
    }
  }
  return problems;
}

std::vector<std::string> compare_mystery_trace(const MysteryState& init, const std::vector<MysteryTraceStep>& trace) {
  std::vector<std::string> problems;
  MysteryState s = init;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& step = trace[i];
    const std::string where = "step " + std::to_string(i + 1) + " (" + step.action + ")";
    for (const auto& a : step.before)
      if (!holds(s, a)) problems.push_back(where + ": cited fact does not hold before: " + atom_text(a));
    std::vector<MysteryAtom> eff;
    try {
      auto act = parse_mystery_action(step.action);
      eff = effects(s, act);
      s = apply(s, act);
    } catch (const Error& e) {
      problems.push_back(where + ": " + e.what());
      return problems;
    }
    if (!step.effects.empty()) {
      std::set<MysteryAtom> want(eff.begin(), eff.end()), got(step.effects.begin(), step.effects.end());
      for (const auto& a : want)
        if (!got.count(a)) problems.push_back(where + ": trace omits effect " + atom_text(a));
      for (const auto& a : got)
        if (!want.count(a)) problems.push_back(where + ": trace claims effect " + atom_text(a));
    }
    for (const auto& a : step.after)
      if (!holds(s, a)) problems.push_back(where + ": fact does not hold after: " + atom_text(a));
  }
  return problems;
}

}  // namespace htp
