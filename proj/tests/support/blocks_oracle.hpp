#pragma once

// Independent Blocksworld model for tests: its own state type and successor
// function, so executor bugs cannot hide behind shared code.

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct S {
  std::map<std::string, std::string> below;  // block -> block or "table"; held blocks absent
  std::string held;                          // empty when the hand is empty
  auto operator<=>(const S&) const = default;
};

inline bool covered(const S& s, const std::string& b) {
  for (const auto& [x, y] : s.below)
    if (y == b) return true;
  return false;
}

inline bool free_top(const S& s, const std::string& b) { return s.held != b && !covered(s, b); }

inline std::vector<std::pair<std::string, S>> successors(const S& s, const std::vector<std::string>& blocks) {
  std::vector<std::pair<std::string, S>> out;
  if (s.held.empty()) {
    for (const auto& b : blocks) {
      if (!free_top(s, b)) continue;
      S n = s;
      const std::string under = n.below.at(b);
      n.below.erase(b);
      n.held = b;
      if (under == "table") out.push_back({"pick up the " + b + " block", n});
      else out.push_back({"unstack the " + b + " block from on top of the " + under + " block", n});
    }
  } else {
    S n = s;
    n.below[s.held] = "table";
    n.held.clear();
    out.push_back({"put down the " + s.held + " block", n});
    for (const auto& b : blocks) {
      if (b == s.held || !free_top(s, b)) continue;
      S m = s;
      m.below[s.held] = b;
      m.held.clear();
      out.push_back({"stack the " + s.held + " block on top of the " + b + " block", m});
    }
  }
  return out;
}

/// Every legal arrangement of `blocks`, with and without a held block.
inline std::vector<S> all_states(const std::vector<std::string>& blocks, bool hand_empty_only) {
  std::vector<S> out;
  const std::size_t n = blocks.size();
  std::vector<std::size_t> choice(n, 0);  // 0 = table, 1..n = blocks[k-1], n+1 = hand
  for (;;) {
    S s;
    bool ok = true;
    std::set<std::string> supports;
    int held = 0;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (choice[i] == n + 1) {
        s.held = blocks[i];
        ++held;
      } else if (choice[i] == 0) {
        s.below[blocks[i]] = "table";
      } else {
        const std::string& sup = blocks[choice[i] - 1];
        if (sup == blocks[i] || !supports.insert(sup).second) ok = false;
        s.below[blocks[i]] = sup;
      }
    }
    if (held > 1 || (hand_empty_only && held)) ok = false;
    if (ok && !s.held.empty() && supports.count(s.held)) ok = false;
    for (const auto& [b, _] : s.below) {
      if (!ok) break;
      std::string cur = b;
      for (std::size_t hops = 0; ok && cur != "table"; ++hops) {
        if (hops > n || !s.below.count(cur)) ok = false;
        else cur = s.below.at(cur);
      }
    }
    if (ok) out.push_back(s);
    std::size_t k = 0;
    while (k < n && ++choice[k] == n + 2) choice[k++] = 0;
    if (k == n) break;
  }
  return out;
}

/// Shortest action sequence from `init` to `goal`.
inline std::optional<std::vector<std::string>> bfs(const S& init, const S& goal, const std::vector<std::string>& blocks) {
  std::map<S, std::pair<S, std::string>> parent;
  std::deque<S> frontier{init};
  std::set<S> seen{init};
  while (!frontier.empty()) {
    S cur = frontier.front();
    frontier.pop_front();
    if (cur == goal) {
      std::vector<std::string> plan;
      while (!(cur == init)) {
        auto& [p, a] = parent.at(cur);
        plan.insert(plan.begin(), a);
        cur = p;
      }
      return plan;
    }
    for (auto& [a, n] : successors(cur, blocks)) {
      if (!seen.insert(n).second) continue;
      parent.emplace(n, std::make_pair(cur, a));
      frontier.push_back(n);
    }
  }
  return std::nullopt;
}

/// Goal atoms in the executor's vocabulary describing `s` completely.
inline std::vector<std::string> goal_atoms(const S& s) {
  std::vector<std::string> out;
  for (const auto& [b, u] : s.below) out.push_back(u == "table" ? b + " on table" : b + " on " + u);
  out.push_back(s.held.empty() ? "hand empty" : "holding " + s.held);
  return out;
}

}  // namespace oracle
