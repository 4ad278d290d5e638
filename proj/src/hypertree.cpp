#include "htp/hypertree.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>
#include <sstream>

#include "htp/common.hpp"

namespace htp {

struct TreeAccess {
  static HyperTree blank(std::shared_ptr<const TreeGrammar> grammar, TreeLimits limits) {
    HyperTree t;
    t.grammar_ = std::move(grammar);
    t.limits_ = limits;
    return t;
  }
  static NodeId add_node(HyperTree& t, std::string text, std::size_t depth, bool divisible,
                         std::optional<NodeId> id = std::nullopt) {
    return t.insert_node(std::move(text), depth, divisible, id);
  }
  static std::size_t add_edge(HyperTree& t, HyperEdge edge) { return t.insert_edge(std::move(edge)); }
  static void set_root(HyperTree& t, NodeId id) { t.root_ = id; }
};

namespace {

bool stamp(const std::shared_ptr<const TreeGrammar>& grammar, std::string_view text) {
  return grammar ? grammar->is_divisible(text) : true;
}

}  // namespace

HyperTree::HyperTree(std::string_view query, std::shared_ptr<const TreeGrammar> grammar, TreeLimits limits)
    : grammar_(std::move(grammar)), limits_(limits) {
  std::string text = text::collapse(query);
  if (text.empty()) throw Error(Errc::EmptyQuery, "query is empty");
  bool divisible = grammar_ ? grammar_->root_divisible(text) : true;
  root_ = insert_node(std::move(text), 0, divisible, std::nullopt);
}

const Node& HyperTree::node(NodeId id) const {
  auto it = records_.find(id.value);
  if (it == records_.end()) throw Error(Errc::UnknownParent, "no node with id " + std::to_string(id.value));
  return it->second.node;
}

std::vector<NodeId> HyperTree::node_ids() const {
  std::vector<NodeId> ids;
  ids.reserve(records_.size());
  for (const auto& [k, _] : records_) ids.push_back(NodeId{k});
  return ids;
}

const std::vector<std::size_t>& HyperTree::branches_of(NodeId id) const {
  auto it = records_.find(id.value);
  if (it == records_.end()) throw Error(Errc::UnknownParent, "no node with id " + std::to_string(id.value));
  return it->second.outgoing;
}

std::optional<std::size_t> HyperTree::incoming_edge(NodeId id) const {
  auto it = records_.find(id.value);
  if (it == records_.end()) return std::nullopt;
  return it->second.incoming;
}

std::optional<NodeId> HyperTree::parent_of(NodeId id) const {
  auto e = incoming_edge(id);
  if (!e) return std::nullopt;
  return edges_[*e].parent;
}

std::size_t HyperTree::height() const {
  std::size_t h = 0;
  for (const auto& [_, r] : records_) h = std::max(h, r.node.depth);
  return h;
}

NodeId HyperTree::insert_node(std::string text, std::size_t depth, bool divisible, std::optional<NodeId> forced_id) {
  NodeId id = forced_id ? *forced_id : NodeId{next_id_};
  next_id_ = std::max(next_id_, id.value + 1);
  Record r;
  r.node = Node{id, std::move(text), depth, divisible};
  records_.emplace(id.value, std::move(r));
  return id;
}

std::size_t HyperTree::insert_edge(HyperEdge edge) {
  std::size_t index = edges_.size();
  records_.at(edge.parent.value).outgoing.push_back(index);
  for (NodeId c : edge.children) records_.at(c.value).incoming = index;
  edges_.push_back(std::move(edge));
  return index;
}

void HyperTree::check_attach(NodeId parent, const std::vector<std::string>& child_texts,
                             std::string_view rule_id) const {
  auto it = records_.find(parent.value);
  if (it == records_.end()) throw Error(Errc::UnknownParent, "no node with id " + std::to_string(parent.value));
  const Node& p = it->second.node;
  if (child_texts.empty()) throw Error(Errc::EmptyBranch, "branch under " + p.text + " has no children");
  if (!p.divisible) throw Error(Errc::ParentNotDivisible, p.text + " is not divisible");
  if (p.depth + 1 > limits_.max_depth)
    throw Error(Errc::DepthLimitExceeded,
                "children of " + p.text + " would exceed depth " + std::to_string(limits_.max_depth));
  if (child_texts.size() > limits_.max_children)
    throw Error(Errc::BranchTooWide, std::to_string(child_texts.size()) + " children exceed the cap of " +
                                         std::to_string(limits_.max_children));

  std::vector<std::string> lineage{text::normalize(p.text)};
  for (NodeId a : ancestors(*this, parent)) lineage.push_back(text::normalize(node(a).text));
  for (const auto& c : child_texts) {
    std::string norm = text::normalize(c);
    if (norm.empty()) throw Error(Errc::EmptyBranch, "child text is empty");
    if (std::find(lineage.begin(), lineage.end(), norm) != lineage.end())
      throw Error(Errc::CycleDetected, "child " + c + " repeats an ancestor of itself");
  }
  if (grammar_ && !grammar_->licenses(p.text, rule_id, child_texts))
    throw Error(Errc::RuleMismatch, "branch under " + p.text + " is not licensed by rule '" + std::string(rule_id) + "'");
}

std::size_t HyperTree::attach_branch(NodeId parent, const std::vector<std::string>& child_texts, std::string rule_id,
                                     std::optional<double> confidence) {
  check_attach(parent, child_texts, rule_id);
  const std::size_t depth = node(parent).depth + 1;
  HyperEdge edge;
  edge.parent = parent;
  edge.rule_id = std::move(rule_id);
  edge.branch_index = branch_count(parent);
  edge.confidence = confidence;
  for (const auto& c : child_texts) {
    std::string t = text::collapse(c);
    bool divisible = stamp(grammar_, t);
    edge.children.push_back(insert_node(std::move(t), depth, divisible, std::nullopt));
  }
  return insert_edge(std::move(edge));
}

void HyperTree::set_confidence(std::size_t edge_index, double confidence) {
  edges_.at(edge_index).confidence = std::clamp(confidence, 0.0, 1.0);
}

std::vector<std::pair<std::uint32_t, std::size_t>> HyperChain::selection_vector() const {
  std::vector<std::pair<std::uint32_t, std::size_t>> v;
  v.reserve(selection.size());
  for (const auto& [id, b] : selection) v.emplace_back(id.value, b);
  return v;
}

std::vector<NodeId> ancestors(const HyperTree& tree, NodeId id) {
  std::vector<NodeId> out;
  std::set<std::uint32_t> seen{id.value};
  for (auto p = tree.parent_of(id); p; p = tree.parent_of(*p)) {
    if (!seen.insert(p->value).second) break;
    out.push_back(*p);
  }
  return out;
}

HyperChain extract_chain(const HyperTree& source, const std::map<NodeId, std::size_t>& selection) {
  HyperChain chain{TreeAccess::blank(source.grammar(), source.limits()), {}, {}};
  const Node& root = source.node(source.root());
  TreeAccess::add_node(chain.tree, root.text, root.depth, root.divisible, root.id);
  TreeAccess::set_root(chain.tree, root.id);

  std::deque<NodeId> frontier{root.id};
  while (!frontier.empty()) {
    NodeId n = frontier.front();
    frontier.pop_front();
    auto sel = selection.find(n);
    if (sel == selection.end()) continue;
    const auto& branches = source.branches_of(n);
    auto edge_it = std::find_if(branches.begin(), branches.end(),
                                [&](std::size_t e) { return source.edges()[e].branch_index == sel->second; });
    if (edge_it == branches.end())
      throw Error(Errc::UnknownParent, "selection names missing branch " + std::to_string(sel->second) + " of node " +
                                           std::to_string(n.value));
    const HyperEdge& e = source.edges()[*edge_it];
    for (NodeId c : e.children) {
      const Node& cn = source.node(c);
      TreeAccess::add_node(chain.tree, cn.text, cn.depth, cn.divisible, cn.id);
      frontier.push_back(c);
    }
    TreeAccess::add_edge(chain.tree, e);
    chain.selection.emplace(n, sel->second);
    chain.source_edges.push_back(*edge_it);
  }
  return chain;
}

std::vector<HyperChain> map_to_hyperchains(const HyperTree& tree) {
  std::vector<std::map<NodeId, std::size_t>> selections;
  std::function<void(std::deque<NodeId>, std::map<NodeId, std::size_t>)> walk =
      [&](std::deque<NodeId> pending, std::map<NodeId, std::size_t> sel) {
        while (!pending.empty() && tree.is_leaf(pending.front())) pending.pop_front();
        if (pending.empty()) {
          selections.push_back(std::move(sel));
          return;
        }
        NodeId n = pending.front();
        pending.pop_front();
        for (std::size_t e : tree.branches_of(n)) {
          const HyperEdge& edge = tree.edges()[e];
          auto next_pending = pending;
          next_pending.insert(next_pending.end(), edge.children.begin(), edge.children.end());
          auto next_sel = sel;
          next_sel[n] = edge.branch_index;
          walk(std::move(next_pending), std::move(next_sel));
        }
      };
  walk({tree.root()}, {});

  std::sort(selections.begin(), selections.end(), [](const auto& a, const auto& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](const auto& x, const auto& y) {
      return std::pair(x.first.value, x.second) < std::pair(y.first.value, y.second);
    });
  });

  std::vector<HyperChain> chains;
  chains.reserve(selections.size());
  for (const auto& s : selections) chains.push_back(extract_chain(tree, s));
  return chains;
}

std::vector<Node> leaves(const HyperTree& tree) {
  std::vector<Node> out;
  std::function<void(NodeId)> visit = [&](NodeId n) {
    const auto& branches = tree.branches_of(n);
    if (branches.empty()) {
      out.push_back(tree.node(n));
      return;
    }
    for (std::size_t e : branches)
      for (NodeId c : tree.edges()[e].children) visit(c);
  };
  visit(tree.root());
  return out;
}

GeneratingReport check_generating(const HyperTree& tree, const TreeGrammar& grammar) {
  GeneratingReport report;
  auto flag = [&](int property, NodeId node, std::optional<std::size_t> edge, std::string detail) {
    switch (property) {
      case 0: report.acyclic = false; break;
      case 1: report.leaves_well_formed = false; break;
      case 2: report.expanded_nodes_divisible = false; break;
      default: report.branches_licensed = false; break;
    }
    report.violations.push_back({property, node, edge, std::move(detail)});
  };

  try {
    for (NodeId id : tree.node_ids()) {
      const Node& n = tree.node(id);
      std::string norm = text::normalize(n.text);
      for (NodeId a : ancestors(tree, id)) {
        if (a == id || text::normalize(tree.node(a).text) == norm) {
          flag(0, id, tree.incoming_edge(id), "node repeats ancestor text: " + n.text);
          break;
        }
      }
      if (tree.is_leaf(id)) {
        if (norm.empty() || text::unbracket(norm).empty()) flag(1, id, std::nullopt, "leaf has empty text");
      } else if (!grammar.is_divisible(n.text)) {
        flag(2, id, std::nullopt, "expanded node is not divisible: " + n.text);
      }
    }
    for (std::size_t i = 0; i < tree.edges().size(); ++i) {
      const HyperEdge& e = tree.edges()[i];
      std::vector<std::string> kids;
      for (NodeId c : e.children) kids.push_back(tree.node(c).text);
      const std::string& parent = tree.node(e.parent).text;
      bool ok = (!e.rule_id.empty() && grammar.licenses(parent, e.rule_id, kids)) || grammar.licenses(parent, "", kids);
      if (!ok) flag(3, e.parent, i, "no rule licenses the branch under " + parent);
    }
  } catch (const std::exception& ex) {
    flag(0, tree.root(), std::nullopt, std::string("structural failure: ") + ex.what());
  }
  return report;
}

nlohmann::json to_json(const HyperTree& tree) {
  nlohmann::json doc;
  doc["root"] = tree.root().value;
  auto& nodes = doc["nodes"] = nlohmann::json::array();
  for (NodeId id : tree.node_ids()) {
    const Node& n = tree.node(id);
    nodes.push_back({{"id", n.id.value}, {"text", n.text}, {"depth", n.depth}, {"divisible", n.divisible}});
  }
  auto& edges = doc["edges"] = nlohmann::json::array();
  for (const auto& e : tree.edges()) {
    nlohmann::json kids = nlohmann::json::array();
    for (NodeId c : e.children) kids.push_back(c.value);
    edges.push_back({{"parent", e.parent.value},
                     {"children", kids},
                     {"rule_id", e.rule_id},
                     {"branch_index", e.branch_index},
                     {"confidence", e.confidence ? nlohmann::json(*e.confidence) : nlohmann::json(nullptr)}});
  }
  return doc;
}

nlohmann::json to_json(const HyperChain& chain) {
  nlohmann::json doc = to_json(chain.tree);
  auto& sel = doc["selection"] = nlohmann::json::array();
  for (const auto& [id, b] : chain.selection) sel.push_back({id.value, b});
  doc["source_edges"] = chain.source_edges;
  return doc;
}

HyperTree tree_from_json(const nlohmann::json& doc, std::shared_ptr<const TreeGrammar> grammar, TreeLimits limits) {
  try {
    HyperTree t = TreeAccess::blank(std::move(grammar), limits);
    std::set<std::uint32_t> ids;
    for (const auto& n : doc.at("nodes")) {
      auto id = n.at("id").get<std::uint32_t>();
      if (!ids.insert(id).second) throw Error(Errc::SchemaError, "duplicate node id " + std::to_string(id));
      std::string text = n.at("text").get<std::string>();
      if (text::collapse(text).empty()) throw Error(Errc::SchemaError, "node " + std::to_string(id) + " has empty text");
      TreeAccess::add_node(t, std::move(text), n.at("depth").get<std::size_t>(), n.at("divisible").get<bool>(),
                           NodeId{id});
    }
    auto root = doc.at("root").get<std::uint32_t>();
    if (!ids.count(root)) throw Error(Errc::SchemaError, "root id not among nodes");
    TreeAccess::set_root(t, NodeId{root});

    std::set<std::uint32_t> has_parent;
    for (const auto& e : doc.at("edges")) {
      HyperEdge edge;
      edge.parent = NodeId{e.at("parent").get<std::uint32_t>()};
      if (!ids.count(edge.parent.value)) throw Error(Errc::SchemaError, "edge parent not among nodes");
      for (const auto& c : e.at("children")) {
        auto cid = c.get<std::uint32_t>();
        if (!ids.count(cid) || cid == root) throw Error(Errc::SchemaError, "bad child id " + std::to_string(cid));
        if (!has_parent.insert(cid).second)
          throw Error(Errc::SchemaError, "node " + std::to_string(cid) + " has two parents");
        if (t.node(NodeId{cid}).depth != t.node(edge.parent).depth + 1)
          throw Error(Errc::SchemaError, "depth mismatch at node " + std::to_string(cid));
        edge.children.push_back(NodeId{cid});
      }
      if (edge.children.empty()) throw Error(Errc::SchemaError, "edge with no children");
      edge.rule_id = e.value("rule_id", std::string{});
      edge.branch_index = e.at("branch_index").get<std::size_t>();
      if (e.contains("confidence") && !e["confidence"].is_null()) edge.confidence = e["confidence"].get<double>();
      TreeAccess::add_edge(t, std::move(edge));
    }
    if (has_parent.size() + 1 != ids.size()) throw Error(Errc::SchemaError, "unreachable nodes in tree document");
    return t;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::SchemaError, ex.what());
  }
}

HyperChain chain_from_json(const nlohmann::json& doc, std::shared_ptr<const TreeGrammar> grammar) {
  HyperChain chain{tree_from_json(doc, std::move(grammar)), {}, {}};
  try {
    for (const auto& s : doc.at("selection"))
      chain.selection.emplace(NodeId{s.at(0).get<std::uint32_t>()}, s.at(1).get<std::size_t>());
    chain.source_edges = doc.value("source_edges", std::vector<std::size_t>{});
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::SchemaError, ex.what());
  }
  for (NodeId id : chain.tree.node_ids())
    if (chain.tree.branch_count(id) > 1) throw Error(Errc::SchemaError, "hyperchain document contains branching");
  return chain;
}

std::string render_outline(const HyperTree& tree) {
  std::ostringstream os;
  std::function<void(NodeId, std::size_t)> visit = [&](NodeId n, std::size_t level) {
    os << std::string(level * 4, ' ') << tree.node(n).text << '\n';
    for (std::size_t e : tree.branches_of(n))
      for (NodeId c : tree.edges()[e].children) visit(c, level + 1);
  };
  visit(tree.root(), 0);
  return os.str();
}

HyperTree parse_outline(std::string_view text, std::shared_ptr<const TreeGrammar> grammar) {
  struct Item {
    std::string text;
    std::vector<std::size_t> kids;
  };
  std::vector<Item> items;
  std::vector<std::pair<std::size_t, std::size_t>> stack;  // (indent, item index)

  std::size_t line_no = 0;
  for (const auto& raw : text::split_lines(text)) {
    ++line_no;
    std::string content = text::collapse(raw);
    if (content.empty()) continue;
    std::size_t indent = 0;
    for (char c : raw) {
      if (c == ' ') indent += 1;
      else if (c == '\t') indent += 4;
      else break;
    }
    if (items.empty()) {
      items.push_back({content, {}});
      stack.emplace_back(indent, 0);
      continue;
    }
    while (!stack.empty() && stack.back().first >= indent) stack.pop_back();
    if (stack.empty()) throw Error(Errc::SyntaxError, "outline has more than one root", line_no);
    items.push_back({content, {}});
    items[stack.back().second].kids.push_back(items.size() - 1);
    stack.emplace_back(indent, items.size() - 1);
  }
  if (items.empty()) throw Error(Errc::EmptyQuery, "outline text is empty");

  HyperTree t = TreeAccess::blank(grammar, TreeLimits{});
  NodeId root = TreeAccess::add_node(t, items[0].text, 0, stamp(grammar, items[0].text));
  TreeAccess::set_root(t, root);
  std::function<void(std::size_t, NodeId, std::size_t)> build = [&](std::size_t item, NodeId id, std::size_t depth) {
    if (items[item].kids.empty()) return;
    HyperEdge edge;
    edge.parent = id;
    std::vector<std::pair<std::size_t, NodeId>> created;
    for (std::size_t k : items[item].kids) {
      NodeId c = TreeAccess::add_node(t, items[k].text, depth + 1, stamp(grammar, items[k].text));
      edge.children.push_back(c);
      created.emplace_back(k, c);
    }
    TreeAccess::add_edge(t, std::move(edge));
    for (auto [k, c] : created) build(k, c, depth + 1);
  };
  build(0, root, 0);
  return t;
}

}  // namespace htp
