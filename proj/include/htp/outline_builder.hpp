#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "htp/hypertree.hpp"
#include "htp/model_gateway.hpp"
#include "htp/rule_library.hpp"
#include "json.hpp"

namespace htp {

enum class PruningKind { Width, Probability, LlmGuided };

struct PruningSpec {
  PruningKind kind = PruningKind::Width;
  std::size_t n = 2;

  /// "width:2", "prob:3", "llm:2". Throws ConfigError.
  static PruningSpec parse(std::string_view spec);
  std::string str() const;
  bool operator==(const PruningSpec&) const = default;
};

struct BuilderParams {
  std::size_t depth_K = 32;
  std::size_t width_W = 2;
  std::size_t rule_sample_P = 2;
  PruningKind pruning = PruningKind::Width;
  /// Route definite rules through ExpandNode so the model may adapt their
  /// bodies; replies are still checked against the rule.
  bool adapt_definite = false;
  /// Ask the model to rank applicable rules when there are more than P.
  bool model_ranked_rules = false;
  std::size_t max_children = 16;

  /// Throws ConfigError unless K, W, P >= 1.
  void validate() const;
  nlohmann::json to_json() const;
};

struct Attachment {
  std::size_t iteration = 0;
  std::uint32_t parent = 0;
  std::vector<std::string> children;
  std::string rule_id;
  std::optional<double> confidence;
};

struct ChainVisit {
  std::size_t chain = 0;  // index among the iteration's extracted chains
  std::vector<std::string> candidates;
  std::optional<std::uint32_t> selected;
  std::string selected_text;
  bool select_fallback = false;
  std::vector<std::string> rules;
  std::vector<std::size_t> attachments;  // indices into BuildTrace::attachments
  std::vector<std::string> warnings;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t chains = 0;  // m
  std::vector<std::size_t> kept;
  std::vector<std::optional<double>> scores;  // per extracted chain, probability pruning only
  bool filter_fallback = false;
  std::vector<ChainVisit> visits;
  std::size_t tree_height = 0;
  std::size_t tree_size = 0;
};

struct DecisionRecord {
  std::size_t chains = 0;  // chains in the final tree
  std::vector<std::size_t> considered;
  std::size_t chosen = 0;  // index into the final tree's chains
  bool model_called = false;
  bool fallback = false;
  std::string rationale;
};

struct BuildTrace {
  std::string query;
  std::string root_text;
  nlohmann::json params;
  std::vector<IterationRecord> iterations;
  std::vector<Attachment> attachments;
  std::optional<DecisionRecord> decision;
  std::vector<std::string> warnings;
  bool no_divisible_root = false;
  bool early_exit = false;
  bool completed = false;
  std::string error;
  Usage usage;
  nlohmann::json tree;     // final tree, set when the build completes
  nlohmann::json outline;  // decided chain
};

nlohmann::json to_json(const BuildTrace& trace);
/// Throws MalformedTrace.
BuildTrace trace_from_json(const nlohmann::json& doc);

/// Rebuilds a tree by re-attaching the recorded branches in order.
HyperTree replay_attachments(const BuildTrace& trace, std::shared_ptr<const TreeGrammar> grammar = nullptr);

struct BuildResult {
  HyperTree tree;
  HyperChain outline;
  BuildTrace trace;
};

/// Top-down construction: select a divisible leaf per kept chain, expand it
/// with up to P rules, prune chains to W, and finally decide one chain.
class OutlineBuilder {
 public:
  OutlineBuilder(std::shared_ptr<const RuleLibrary> library, ModelGateway& gateway, BuilderParams params = {});

  BuildResult build(std::string_view query);

  /// Trace of the last build; partial if build threw.
  const BuildTrace& trace() const noexcept { return trace_; }

  // Individual steps, usable on their own.

  /// Indices of the kept chains in canonical order. Probability scores are
  /// cached on the scored edges of `tree`.
  std::vector<std::size_t> select_chains(const std::vector<HyperChain>& chains, HyperTree& tree, std::size_t n,
                                         IterationRecord* record = nullptr);
  /// Throws NoDivisibleLeaf when the chain has no expandable leaf.
  NodeId select_node(const HyperChain& chain, ChainVisit* visit = nullptr,
                     const std::set<std::uint32_t>& excluded = {});
  std::vector<std::string> expand_node(const HyperChain& chain, const Node& node, const RuleMatch& match);
  std::size_t decide_outline(const std::vector<HyperChain>& chains, const std::vector<std::size_t>& considered,
                             DecisionRecord* record = nullptr);

  void set_query(std::string query) { query_ = std::move(query); }

 private:
  std::vector<RuleMatch> sample_rules(const Node& node, const HyperChain& chain);
  std::vector<NodeId> expandable_leaves(const HyperChain& chain, const std::set<std::uint32_t>& excluded) const;

  std::shared_ptr<const RuleLibrary> library_;
  std::shared_ptr<const LibraryGrammar> grammar_;
  ModelGateway& gateway_;
  BuilderParams params_;
  std::string query_;
  BuildTrace trace_;
};

/// "head -> body" text of a rule, for prompts.
std::string render_rule(const Rule& rule);

}  // namespace htp
