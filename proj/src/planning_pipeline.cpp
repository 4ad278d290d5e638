#include "htp/planning_pipeline.hpp"

#include "htp/common.hpp"

namespace htp {

namespace {

Usage delta(const Usage& after, const Usage& before) {
  return {after.prompt_tokens - before.prompt_tokens, after.completion_tokens - before.completion_tokens};
}

// Pre-order walk of a chain; each non-leaf has one branch.
void pre_order(const HyperTree& tree, NodeId id, std::vector<NodeId>& out) {
  out.push_back(id);
  for (std::size_t e : tree.branches_of(id))
    for (NodeId c : tree.edges()[e].children) pre_order(tree, c, out);
}

std::string context_of(const HyperTree& tree, NodeId id) {
  std::string ctx = tree.node(id).text;
  for (NodeId a : ancestors(tree, id)) ctx += "\n" + tree.node(a).text;
  return ctx;
}

std::string unquote(std::string s) {
  s = text::trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return text::trim(s);
}

std::string or_none(const std::string& s) { return s.empty() ? "(none)" : s; }

}  // namespace

std::vector<const LeafSolution*> PlanningOutcome::failed() const {
  std::vector<const LeafSolution*> out;
  for (const auto& s : solutions)
    if (s.failed) out.push_back(&s);
  return out;
}

std::optional<std::string> finished_solution(const std::vector<std::string>& steps) {
  if (steps.empty()) return std::nullopt;
  static const std::string submit = "i will submit:";
  for (const auto& line : text::split_lines(steps.back())) {
    std::string low = text::lower(line);
    auto at = low.find(submit);
    if (at != std::string::npos) return unquote(line.substr(at + submit.size()));
  }
  if (text::lower(steps.back()).find("the subtask is achieved") == std::string::npos) return std::nullopt;
  std::string joined;
  for (const auto& s : steps) joined += (joined.empty() ? "" : "\n") + s;
  return joined;
}

PlanningOutcome self_guided_plan(const HyperChain& outline, std::string_view query, const KnowledgeBase& knowledge,
                                 ModelGateway& gateway, const PipelineParams& params) {
  const Usage start = gateway.total_usage();
  const HyperTree& tree = outline.tree;
  PlanningOutcome out{outline, {}, {}, {}};
  const std::string outline_text = render_outline(tree);

  std::vector<NodeId> order;
  pre_order(tree, tree.root(), order);

  for (NodeId id : order) {
    if (tree.is_leaf(id)) continue;
    NodeRefinement r{id, tree.node(id).text, knowledge.excerpt(context_of(tree, id), params.knowledge_cap), ""};
    ModelRequest req;
    req.role = Role::RefineNode;
    req.slots = {{"query", std::string(query)}, {"outline", outline_text}, {"node", r.text}, {"knowledge", r.knowledge}};
    r.refinement = std::get<std::string>(gateway.complete(req).parsed);
    out.refinements.push_back(std::move(r));
  }
  std::string notes;
  for (const auto& r : out.refinements) notes += r.text + ": " + r.refinement + "\n";

  std::vector<NodeId> leaf_ids;
  for (NodeId id : order)
    if (tree.is_leaf(id)) leaf_ids.push_back(id);

  std::string previous;
  for (std::size_t k = 0; k < leaf_ids.size(); ++k) {
    NodeId id = leaf_ids[k];
    LeafSolution leaf{id, tree.node(id).text, "", {}, false, false, ""};
    const std::string excerpt = knowledge.excerpt(context_of(tree, id), params.knowledge_cap);
    for (std::size_t step = 0; step < params.step_budget; ++step) {
      std::string scratch;
      for (const auto& s : leaf.steps) scratch += s + "\n";
      ModelRequest req;
      req.role = Role::SolveSubtask;
      req.slots = {{"query", std::string(query)},
                   {"outline", outline_text},
                   {"notes", or_none(notes)},
                   {"previous", or_none(previous)},
                   {"knowledge", excerpt},
                   {"leaf_index", std::to_string(k + 1) + " of " + std::to_string(leaf_ids.size())},
                   {"subtask", leaf.subtask},
                   {"scratch", or_none(scratch)}};
      try {
        leaf.steps.push_back(std::get<std::string>(gateway.complete(req).parsed));
      } catch (const Error& e) {
        if (e.code() != Errc::ParseFailure && e.code() != Errc::PatternViolation) throw;
        leaf.failed = true;
        leaf.failure = std::string(to_string(e.code()));
        break;
      }
      if (auto done = finished_solution(leaf.steps)) {
        leaf.solution = *done;
        leaf.submitted = text::lower(leaf.steps.back()).find("i will submit:") != std::string::npos;
        break;
      }
    }
    if (!leaf.failed && leaf.solution.empty()) {
      leaf.failed = true;
      leaf.failure = std::string(to_string(Errc::StepBudgetExceeded));
    }
    if (!leaf.failed) previous += leaf.subtask + ": " + leaf.solution + "\n";
    out.solutions.push_back(std::move(leaf));
  }
  out.usage = delta(gateway.total_usage(), start);
  return out;
}

nlohmann::json to_json(const PlanningOutcome& o) {
  nlohmann::json refinements = nlohmann::json::array();
  for (const auto& r : o.refinements)
    refinements.push_back(
        {{"node", r.node.value}, {"text", r.text}, {"knowledge", r.knowledge}, {"refinement", r.refinement}});
  nlohmann::json solutions = nlohmann::json::array();
  for (const auto& s : o.solutions)
    solutions.push_back({{"node", s.node.value},
                         {"subtask", s.subtask},
                         {"solution", s.solution},
                         {"steps", s.steps},
                         {"submitted", s.submitted},
                         {"failed", s.failed},
                         {"failure", s.failure}});
  return {{"outline", render_outline(o.outline)},
          {"refinements", refinements},
          {"solutions", solutions},
          {"usage", {{"prompt_tokens", o.usage.prompt_tokens}, {"completion_tokens", o.usage.completion_tokens}}}};
}

FinalPlan generate_plan(const PlanningOutcome& outcome, std::string_view query, PlanFormat format,
                        ModelGateway& gateway) {
  const Usage start = gateway.total_usage();
  FinalPlan plan;
  plan.format = format;

  std::string worked, failed;
  for (std::size_t k = 0; k < outcome.solutions.size(); ++k) {
    const auto& s = outcome.solutions[k];
    worked += std::to_string(k + 1) + ". " + s.subtask + "\n";
    worked += s.failed ? "   (not completed)\n" : "   " + s.solution + "\n";
    if (s.failed) failed += s.subtask + " (" + s.failure + ")\n";
  }
  ModelRequest req;
  req.role = Role::GeneratePlan;
  req.slots = {{"query", std::string(query)},
               {"outcome", or_none(worked)},
               {"failed", or_none(failed)},
               {"format", format_instructions(format)}};
  req.validator = [format](const Payload& p) -> std::optional<std::string> {
    try {
      parse_plan(format, std::get<std::string>(p));
      return std::nullopt;
    } catch (const Error& e) {
      return std::string(e.what());
    }
  };
  try {
    auto c = gateway.complete(req);
    plan.raw = c.raw;
    plan.structured = parse_plan(format, std::get<std::string>(c.parsed));
    plan.text = render_plan(*plan.structured);
    plan.delivered = true;
  } catch (const Error& e) {
    if (e.code() != Errc::ParseFailure && e.code() != Errc::PatternViolation) throw;
    plan.error = e.what();
  }
  plan.usage = delta(gateway.total_usage(), start);
  return plan;
}

nlohmann::json to_json(const FinalPlan& p) {
  return {{"format", to_string(p.format)},
          {"delivered", p.delivered},
          {"text", p.text},
          {"structured", p.structured ? to_json(*p.structured) : nlohmann::json(nullptr)},
          {"error", p.error}};
}

}  // namespace htp
