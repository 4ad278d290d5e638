#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "htp/hypertree.hpp"
#include "htp/knowledge_base.hpp"
#include "htp/model_gateway.hpp"
#include "htp/plan_formats.hpp"
#include "json.hpp"

namespace htp {

struct PipelineParams {
  std::size_t step_budget = 30;  // SolveSubtask calls per leaf
  std::size_t knowledge_cap = 50;  // rows per table in an excerpt
};

struct NodeRefinement {
  NodeId node;
  std::string text;
  std::string knowledge;
  std::string refinement;
};

struct LeafSolution {
  NodeId node;
  std::string subtask;
  std::string solution;
  std::vector<std::string> steps;  // scratch replies, in order
  bool submitted = false;          // ended with `I will submit:`
  bool failed = false;
  std::string failure;             // error code name when failed
};

struct PlanningOutcome {
  HyperChain outline;
  std::vector<NodeRefinement> refinements;  // non-leaf nodes, pre-order
  std::vector<LeafSolution> solutions;      // leaf order
  Usage usage;

  std::vector<const LeafSolution*> failed() const;
};

nlohmann::json to_json(const PlanningOutcome& o);

/// Refines every non-leaf node of `outline` with a knowledge excerpt, then
/// solves the leaves in order, each with the results of the earlier ones. A
/// leaf that does not finish within the step budget, or whose reply cannot be
/// used, is marked failed and the next leaf is solved. Backend errors
/// (BackendUnavailable, TranscriptMiss) propagate.
PlanningOutcome self_guided_plan(const HyperChain& outline, std::string_view query, const KnowledgeBase& knowledge,
                                 ModelGateway& gateway, const PipelineParams& params = {});

/// The solution a reply finishes with, if it finishes the subtask.
std::optional<std::string> finished_solution(const std::vector<std::string>& steps);

struct FinalPlan {
  PlanFormat format = PlanFormat::BlocksPlan;
  bool delivered = false;
  std::string text;  // canonical rendering; reparses to `structured`
  std::optional<StructuredPlan> structured;
  std::string error;
  std::string raw;
  Usage usage;
};

nlohmann::json to_json(const FinalPlan& p);

/// One GeneratePlan request over the whole outcome. A reply that does not
/// parse under `format` after the re-prompt leaves the plan undelivered.
FinalPlan generate_plan(const PlanningOutcome& outcome, std::string_view query, PlanFormat format,
                        ModelGateway& gateway);

}  // namespace htp
