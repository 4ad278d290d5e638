#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace htp {

struct NodeId {
  std::uint32_t value = 0;
  auto operator<=>(const NodeId&) const = default;
};

struct Node {
  NodeId id;
  std::string text;
  std::size_t depth = 0;
  bool divisible = false;
};

/// One branch: a parent mapped to an ordered set of children by one rule instance.
struct HyperEdge {
  NodeId parent;
  std::vector<NodeId> children;
  std::string rule_id;
  std::size_t branch_index = 0;
  std::optional<double> confidence;
};

/// Hooks consulted when nodes are stamped and branches attached. The rule
/// library provides the production implementation; a tree without a grammar
/// treats every node as divisible and every branch as licensed.
class TreeGrammar {
 public:
  virtual ~TreeGrammar() = default;
  virtual bool is_divisible(std::string_view node_text) const = 0;
  /// Divisibility of a root built from a raw query. Free-text queries stand
  /// for the grammar's root symbol, so grammars may override this.
  virtual bool root_divisible(std::string_view query) const { return is_divisible(query); }
  /// `rule_id` empty means "any rule of the grammar".
  virtual bool licenses(std::string_view parent_text, std::string_view rule_id,
                        std::span<const std::string> child_texts) const = 0;
};

struct TreeLimits {
  std::size_t max_depth = 32;
  std::size_t max_children = 16;
};

class HyperTree {
 public:
  explicit HyperTree(std::string_view query, std::shared_ptr<const TreeGrammar> grammar = nullptr,
                     TreeLimits limits = {});

  NodeId root() const noexcept { return root_; }
  bool contains(NodeId id) const { return records_.count(id.value) != 0; }
  const Node& node(NodeId id) const;
  std::vector<NodeId> node_ids() const;
  std::size_t size() const noexcept { return records_.size(); }

  const std::vector<HyperEdge>& edges() const noexcept { return edges_; }
  /// Edge indices leaving `id`, in branch order.
  const std::vector<std::size_t>& branches_of(NodeId id) const;
  std::size_t branch_count(NodeId id) const { return branches_of(id).size(); }
  std::optional<NodeId> parent_of(NodeId id) const;
  /// Edge index whose children list contains `id`.
  std::optional<std::size_t> incoming_edge(NodeId id) const;
  bool is_leaf(NodeId id) const { return branches_of(id).empty(); }
  std::size_t height() const;

  /// Adds one branch under `parent` and returns its edge index.
  std::size_t attach_branch(NodeId parent, const std::vector<std::string>& child_texts, std::string rule_id,
                            std::optional<double> confidence = std::nullopt);
  void set_confidence(std::size_t edge_index, double confidence);

  const TreeLimits& limits() const noexcept { return limits_; }
  const std::shared_ptr<const TreeGrammar>& grammar() const noexcept { return grammar_; }

 private:
  struct Record {
    Node node;
    std::optional<std::size_t> incoming;
    std::vector<std::size_t> outgoing;
  };

  HyperTree() = default;
  void check_attach(NodeId parent, const std::vector<std::string>& child_texts, std::string_view rule_id) const;
  NodeId insert_node(std::string text, std::size_t depth, bool divisible, std::optional<NodeId> forced_id);
  std::size_t insert_edge(HyperEdge edge);

  friend struct TreeAccess;

  std::map<std::uint32_t, Record> records_;
  std::vector<HyperEdge> edges_;
  NodeId root_{};
  std::uint32_t next_id_ = 0;
  std::shared_ptr<const TreeGrammar> grammar_;
  TreeLimits limits_{};
};

/// A hypertree without branching. Node ids and edge branch indices refer to
/// the source tree; `source_edges[i]` is the source index of `tree.edges()[i]`.
struct HyperChain {
  HyperTree tree;
  std::map<NodeId, std::size_t> selection;
  std::vector<std::size_t> source_edges;

  std::vector<std::pair<std::uint32_t, std::size_t>> selection_vector() const;
};

/// Every hyperchain of `tree`, one branch chosen at each branched node that is
/// reachable under the choices above it. Sorted lexicographically by selection vector.
std::vector<HyperChain> map_to_hyperchains(const HyperTree& tree);

/// Rebuilds the chain selected by `selection` from `source`. Nodes without an
/// entry in `selection` are treated as leaves of the chain.
HyperChain extract_chain(const HyperTree& source, const std::map<NodeId, std::size_t>& selection);

/// Depth-first, left-to-right leaf order.
std::vector<Node> leaves(const HyperTree& tree);
inline std::vector<Node> leaves(const HyperChain& chain) { return leaves(chain.tree); }

/// Ancestors of `id`, nearest first.
std::vector<NodeId> ancestors(const HyperTree& tree, NodeId id);

struct GeneratingViolation {
  int property = 0;  // 0 = acyclicity, 1..3 = generating properties
  NodeId node;
  std::optional<std::size_t> edge;
  std::string detail;
};

struct GeneratingReport {
  bool acyclic = true;
  bool leaves_well_formed = true;
  bool expanded_nodes_divisible = true;
  bool branches_licensed = true;
  std::vector<GeneratingViolation> violations;

  bool ok() const noexcept { return violations.empty(); }
};

/// Diagnostic check of acyclicity and the three generating properties; never throws.
GeneratingReport check_generating(const HyperTree& tree, const TreeGrammar& grammar);

// Serialization.

nlohmann::json to_json(const HyperTree& tree);
nlohmann::json to_json(const HyperChain& chain);
HyperTree tree_from_json(const nlohmann::json& doc, std::shared_ptr<const TreeGrammar> grammar = nullptr,
                         TreeLimits limits = {});
HyperChain chain_from_json(const nlohmann::json& doc, std::shared_ptr<const TreeGrammar> grammar = nullptr);

/// Bracketed outline text, 4-space indent per depth level, one node per line.
std::string render_outline(const HyperTree& tree);
inline std::string render_outline(const HyperChain& chain) { return render_outline(chain.tree); }

/// Parses indented outline text into a tree. Divisibility is stamped from
/// `grammar` when given; branches are not checked against it.
HyperTree parse_outline(std::string_view text, std::shared_ptr<const TreeGrammar> grammar = nullptr);

}  // namespace htp
