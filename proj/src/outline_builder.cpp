#include "htp/outline_builder.hpp"

#include <algorithm>
#include <numeric>

#include "htp/common.hpp"

namespace htp {

namespace {

bool bracketed(std::string_view s) {
  std::string t = text::trim(s);
  return t.size() >= 2 && t.front() == '[' && t.back() == ']';
}

std::string render_branch(const HyperTree& tree, const HyperEdge& edge) {
  std::string out = tree.node(edge.parent).text + " ->";
  for (NodeId c : edge.children) out += " " + tree.node(c).text;
  return out;
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_double(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

PruningSpec PruningSpec::parse(std::string_view spec) {
  auto colon = spec.find(':');
  std::string kind = text::lower(text::trim(spec.substr(0, colon)));
  PruningSpec out;
  if (kind == "width") out.kind = PruningKind::Width;
  else if (kind == "prob" || kind == "probability") out.kind = PruningKind::Probability;
  else if (kind == "llm") out.kind = PruningKind::LlmGuided;
  else throw Error(Errc::ConfigError, "unknown pruning strategy '" + std::string(spec) + "'");
  if (colon == std::string_view::npos) throw Error(Errc::ConfigError, "pruning spec must be strategy:n");
  std::string n = text::trim(spec.substr(colon + 1));
  if (n.empty() || n.find_first_not_of("0123456789") != std::string::npos || std::stoul(n) == 0)
    throw Error(Errc::ConfigError, "pruning width must be a positive integer in '" + std::string(spec) + "'");
  out.n = std::stoul(n);
  return out;
}

std::string PruningSpec::str() const {
  const char* k = kind == PruningKind::Width ? "width" : kind == PruningKind::Probability ? "prob" : "llm";
  return std::string(k) + ":" + std::to_string(n);
}

void BuilderParams::validate() const {
  if (depth_K < 1) throw Error(Errc::ConfigError, "depth K must be >= 1");
  if (width_W < 1) throw Error(Errc::ConfigError, "width W must be >= 1");
  if (rule_sample_P < 1) throw Error(Errc::ConfigError, "rule sample P must be >= 1");
  if (max_children < 1) throw Error(Errc::ConfigError, "max children must be >= 1");
}

nlohmann::json BuilderParams::to_json() const {
  return {{"depth_K", depth_K},
          {"width_W", width_W},
          {"rule_sample_P", rule_sample_P},
          {"pruning", PruningSpec{pruning, width_W}.str()},
          {"adapt_definite", adapt_definite},
          {"model_ranked_rules", model_ranked_rules},
          {"max_children", max_children}};
}

std::string render_rule(const Rule& rule) {
  std::string out = rule.head.raw() + " -> ";
  if (!rule.body_description.empty()) return out + "{{" + rule.body_description + "}}";
  if (rule.indefinite) out += "{{";
  for (const auto& b : rule.body) out += b.raw();
  if (rule.indefinite) out += "}}";
  return out;
}

// Trace serialization.

nlohmann::json to_json(const BuildTrace& t) {
  nlohmann::json iterations = nlohmann::json::array();
  for (const auto& it : t.iterations) {
    nlohmann::json visits = nlohmann::json::array();
    for (const auto& v : it.visits) {
      visits.push_back({{"chain", v.chain},
                        {"candidates", v.candidates},
                        {"selected", v.selected ? nlohmann::json(*v.selected) : nlohmann::json(nullptr)},
                        {"selected_text", v.selected_text},
                        {"select_fallback", v.select_fallback},
                        {"rules", v.rules},
                        {"attachments", v.attachments},
                        {"warnings", v.warnings}});
    }
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& s : it.scores) scores.push_back(opt_json(s));
    iterations.push_back({{"iteration", it.iteration},
                          {"chains", it.chains},
                          {"kept", it.kept},
                          {"scores", scores},
                          {"filter_fallback", it.filter_fallback},
                          {"visits", visits},
                          {"tree_height", it.tree_height},
                          {"tree_size", it.tree_size}});
  }
  nlohmann::json attachments = nlohmann::json::array();
  for (const auto& a : t.attachments)
    attachments.push_back({{"iteration", a.iteration},
                           {"parent", a.parent},
                           {"children", a.children},
                           {"rule_id", a.rule_id},
                           {"confidence", opt_json(a.confidence)}});
  nlohmann::json decision = nullptr;
  if (t.decision)
    decision = {{"chains", t.decision->chains},
                {"considered", t.decision->considered},
                {"chosen", t.decision->chosen},
                {"model_called", t.decision->model_called},
                {"fallback", t.decision->fallback},
                {"rationale", t.decision->rationale}};
  return {{"query", t.query},
          {"root_text", t.root_text},
          {"params", t.params},
          {"iterations", iterations},
          {"attachments", attachments},
          {"decision", decision},
          {"warnings", t.warnings},
          {"no_divisible_root", t.no_divisible_root},
          {"early_exit", t.early_exit},
          {"completed", t.completed},
          {"error", t.error},
          {"usage", {{"prompt_tokens", t.usage.prompt_tokens}, {"completion_tokens", t.usage.completion_tokens}}},
          {"tree", t.tree},
          {"outline", t.outline}};
}

BuildTrace trace_from_json(const nlohmann::json& doc) {
  try {
    BuildTrace t;
    t.query = doc.at("query").get<std::string>();
    t.root_text = doc.at("root_text").get<std::string>();
    t.params = doc.at("params");
    for (const auto& it : doc.at("iterations")) {
      IterationRecord r;
      r.iteration = it.at("iteration").get<std::size_t>();
      r.chains = it.at("chains").get<std::size_t>();
      r.kept = it.at("kept").get<std::vector<std::size_t>>();
      for (const auto& s : it.at("scores")) r.scores.push_back(opt_double(s));
      r.filter_fallback = it.at("filter_fallback").get<bool>();
      r.tree_height = it.at("tree_height").get<std::size_t>();
      r.tree_size = it.at("tree_size").get<std::size_t>();
      for (const auto& v : it.at("visits")) {
        ChainVisit cv;
        cv.chain = v.at("chain").get<std::size_t>();
        cv.candidates = v.at("candidates").get<std::vector<std::string>>();
        if (!v.at("selected").is_null()) cv.selected = v.at("selected").get<std::uint32_t>();
        cv.selected_text = v.at("selected_text").get<std::string>();
        cv.select_fallback = v.at("select_fallback").get<bool>();
        cv.rules = v.at("rules").get<std::vector<std::string>>();
        cv.attachments = v.at("attachments").get<std::vector<std::size_t>>();
        cv.warnings = v.at("warnings").get<std::vector<std::string>>();
        r.visits.push_back(std::move(cv));
      }
      t.iterations.push_back(std::move(r));
    }
    for (const auto& a : doc.at("attachments")) {
      Attachment at;
      at.iteration = a.at("iteration").get<std::size_t>();
      at.parent = a.at("parent").get<std::uint32_t>();
      at.children = a.at("children").get<std::vector<std::string>>();
      at.rule_id = a.at("rule_id").get<std::string>();
      at.confidence = opt_double(a.at("confidence"));
      t.attachments.push_back(std::move(at));
    }
    if (!doc.at("decision").is_null()) {
      const auto& d = doc.at("decision");
      DecisionRecord r;
      r.chains = d.at("chains").get<std::size_t>();
      r.considered = d.at("considered").get<std::vector<std::size_t>>();
      r.chosen = d.at("chosen").get<std::size_t>();
      r.model_called = d.at("model_called").get<bool>();
      r.fallback = d.at("fallback").get<bool>();
      r.rationale = d.at("rationale").get<std::string>();
      t.decision = r;
    }
    t.warnings = doc.at("warnings").get<std::vector<std::string>>();
    t.no_divisible_root = doc.at("no_divisible_root").get<bool>();
    t.early_exit = doc.at("early_exit").get<bool>();
    t.completed = doc.at("completed").get<bool>();
    t.error = doc.at("error").get<std::string>();
    t.usage.prompt_tokens = doc.at("usage").at("prompt_tokens").get<std::uint64_t>();
    t.usage.completion_tokens = doc.at("usage").at("completion_tokens").get<std::uint64_t>();
    t.tree = doc.at("tree");
    t.outline = doc.at("outline");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedTrace, e.what());
  }
}

HyperTree replay_attachments(const BuildTrace& trace, std::shared_ptr<const TreeGrammar> grammar) {
  HyperTree tree(trace.root_text, std::move(grammar));
  for (const auto& a : trace.attachments) tree.attach_branch(NodeId{a.parent}, a.children, a.rule_id, a.confidence);
  return tree;
}

// Builder.

OutlineBuilder::OutlineBuilder(std::shared_ptr<const RuleLibrary> library, ModelGateway& gateway,
                               BuilderParams params)
    : library_(std::move(library)), gateway_(gateway), params_(params) {
  if (!library_) throw Error(Errc::ConfigError, "builder needs a rule library");
  params_.validate();
  grammar_ = std::make_shared<LibraryGrammar>(library_);
}

std::vector<NodeId> OutlineBuilder::expandable_leaves(const HyperChain& chain,
                                                      const std::set<std::uint32_t>& excluded) const {
  std::vector<NodeId> out;
  for (const Node& n : leaves(chain)) {
    if (!n.divisible || excluded.count(n.id.value)) continue;
    if (library_->rules_for(n.text).empty()) continue;
    out.push_back(n.id);
  }
  return out;
}

std::vector<std::size_t> OutlineBuilder::select_chains(const std::vector<HyperChain>& chains, HyperTree& tree,
                                                       std::size_t n, IterationRecord* record) {
  std::vector<std::size_t> all(chains.size());
  std::iota(all.begin(), all.end(), 0);
  if (chains.size() <= n) return all;
  auto width = [&] { return std::vector<std::size_t>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n)); };

  switch (params_.pruning) {
    case PruningKind::Width:
      return width();

    case PruningKind::Probability: {
      std::vector<double> scores(chains.size(), 0.0);
      if (record) record->scores.assign(chains.size(), std::nullopt);
      for (std::size_t i = 0; i < chains.size(); ++i) {
        const auto& src = chains[i].source_edges;
        if (src.empty()) continue;
        std::size_t newest = *std::max_element(src.begin(), src.end());
        const HyperEdge& edge = tree.edges()[newest];
        if (!edge.confidence) {
          ModelRequest req;
          req.role = Role::ScoreConfidence;
          req.slots = {{"query", query_}, {"chain", render_outline(chains[i].tree)}, {"branch", render_branch(tree, edge)}};
          double s = std::get<double>(gateway_.complete(req).parsed);
          tree.set_confidence(newest, s);
        }
        scores[i] = *tree.edges()[newest].confidence;
        if (record) record->scores[i] = scores[i];
      }
      std::vector<std::size_t> order = all;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
      order.resize(n);
      std::sort(order.begin(), order.end());
      return order;
    }

    case PruningKind::LlmGuided: {
      std::vector<std::string> renders;
      for (const auto& c : chains) renders.push_back(render_outline(c.tree));
      ModelRequest req;
      req.role = Role::FilterChains;
      req.candidates = renders;
      req.slots = {{"query", query_}, {"chains", numbered(renders)}, {"keep", std::to_string(n)}};
      try {
        auto kept = std::get<std::vector<std::size_t>>(gateway_.complete(req).parsed);
        if (kept.size() > n) kept.resize(n);
        std::sort(kept.begin(), kept.end());
        return kept;
      } catch (const Error& e) {
        if (e.code() != Errc::ParseFailure) throw;
        if (record) record->filter_fallback = true;
        trace_.warnings.push_back(std::string("chain filter reply unusable, kept the first chains: ") + e.what());
        return width();
      }
    }
  }
  return width();
}

NodeId OutlineBuilder::select_node(const HyperChain& chain, ChainVisit* visit,
                                   const std::set<std::uint32_t>& excluded) {
  auto candidates = expandable_leaves(chain, excluded);
  if (candidates.empty()) throw Error(Errc::NoDivisibleLeaf, "chain has no divisible leaf");
  std::vector<std::string> texts;
  for (NodeId id : candidates) texts.push_back(chain.tree.node(id).text);
  if (visit) visit->candidates = texts;
  if (candidates.size() == 1) return candidates.front();

  ModelRequest req;
  req.role = Role::SelectNode;
  req.candidates = texts;
  req.slots = {{"query", query_}, {"chain", render_outline(chain.tree)}};
  try {
    return candidates[std::get<std::size_t>(gateway_.complete(req).parsed)];
  } catch (const Error& e) {
    if (e.code() != Errc::ParseFailure) throw;
    if (visit) {
      visit->select_fallback = true;
      visit->warnings.push_back(std::string("node selection fell back to the leftmost leaf: ") + e.what());
    }
    return candidates.front();
  }
}

std::vector<std::string> OutlineBuilder::expand_node(const HyperChain& chain, const Node& node,
                                                     const RuleMatch& match) {
  const Rule& rule = *match.rule;
  if (!rule.indefinite && !params_.adapt_definite) {
    if (auto kids = rule.instantiate(match.bindings)) return *kids;
  }
  std::vector<std::string> forms;
  for (const auto& b : rule.body) forms.push_back(b.render(match.bindings));
  if (forms.empty()) forms.push_back("{{" + rule.body_description + "}}");

  ModelRequest req;
  req.role = Role::ExpandNode;
  req.slots = {{"query", query_},
               {"chain", render_outline(chain.tree)},
               {"node", node.text},
               {"rule", render_rule(rule)},
               {"forms", text::trim(numbered(forms))}};
  Bindings bindings = match.bindings;
  const Rule* r = &rule;
  const std::size_t cap = params_.max_children;
  req.validator = [r, bindings, cap](const Payload& p) -> std::optional<std::string> {
    const auto& kids = std::get<std::vector<std::string>>(p);
    if (kids.size() > cap) return "too many children";
    if (!r->licenses(bindings, kids)) return "children do not fit rule " + r->id;
    return std::nullopt;
  };
  return std::get<std::vector<std::string>>(gateway_.complete(req).parsed);
}

std::vector<RuleMatch> OutlineBuilder::sample_rules(const Node& node, const HyperChain&) {
  auto matches = library_->rules_for(node.text);
  const std::size_t P = params_.rule_sample_P;
  if (matches.size() <= P) return matches;
  if (params_.model_ranked_rules) {
    std::vector<std::string> rendered;
    for (const auto& m : matches) rendered.push_back(render_rule(*m.rule));
    ModelRequest req;
    req.role = Role::RetrieveRules;
    req.candidates = rendered;
    req.slots = {{"query", query_}, {"node", node.text}, {"keep", std::to_string(P)}};
    try {
      auto picked = std::get<std::vector<std::size_t>>(gateway_.complete(req).parsed);
      if (picked.size() > P) picked.resize(P);
      std::vector<RuleMatch> out;
      for (std::size_t i : picked) out.push_back(matches[i]);
      return out;
    } catch (const Error& e) {
      if (e.code() != Errc::ParseFailure) throw;
      trace_.warnings.push_back(std::string("rule ranking reply unusable, took rules in library order: ") + e.what());
    }
  }
  matches.resize(P);
  return matches;
}

std::size_t OutlineBuilder::decide_outline(const std::vector<HyperChain>& chains,
                                           const std::vector<std::size_t>& considered, DecisionRecord* record) {
  if (considered.empty()) throw Error(Errc::NoDivisibleLeaf, "no chains to decide between");
  if (record) {
    record->chains = chains.size();
    record->considered = considered;
  }
  if (considered.size() == 1) {
    if (record) record->chosen = considered.front();
    return considered.front();
  }
  std::vector<std::string> renders;
  for (std::size_t i : considered) renders.push_back(render_outline(chains[i].tree));
  ModelRequest req;
  req.role = Role::DecideOutline;
  req.candidates = renders;
  req.slots = {{"query", query_}, {"chains", numbered(renders)}};
  if (record) record->model_called = true;
  std::size_t chosen = considered.front();
  try {
    auto c = gateway_.complete(req);
    chosen = considered[std::get<std::size_t>(c.parsed)];
    if (record) record->rationale = c.raw;
  } catch (const Error& e) {
    if (e.code() != Errc::ParseFailure) throw;
    if (record) record->fallback = true;
    trace_.warnings.push_back(std::string("outline decision fell back to the first chain: ") + e.what());
  }
  if (record) record->chosen = chosen;
  return chosen;
}

BuildResult OutlineBuilder::build(std::string_view query) {
  trace_ = BuildTrace{};
  query_ = text::collapse(query);
  trace_.query = query_;
  trace_.params = params_.to_json();
  const Usage usage_before = gateway_.total_usage();
  auto finish_usage = [&] {
    Usage now = gateway_.total_usage();
    trace_.usage = Usage{now.prompt_tokens - usage_before.prompt_tokens,
                         now.completion_tokens - usage_before.completion_tokens};
  };

  std::string root_text = query_;
  bool divisible_root = grammar_->root_divisible(query_);
  if (divisible_root && !bracketed(query_)) root_text = *library_->root_symbol();
  trace_.root_text = root_text;

  TreeLimits limits{params_.depth_K, params_.max_children};
  HyperTree tree(root_text, grammar_, limits);

  if (!divisible_root) {
    trace_.no_divisible_root = true;
    trace_.warnings.push_back("query matches no divisible pattern; outline is the bare query");
    HyperChain only = map_to_hyperchains(tree).front();
    trace_.tree = to_json(tree);
    trace_.outline = to_json(only);
    trace_.decision = DecisionRecord{1, {0}, 0, false, false, {}};
    trace_.completed = true;
    finish_usage();
    return {std::move(tree), std::move(only), trace_};
  }

  try {
    std::set<std::uint32_t> failed;
    for (std::size_t d = 1; d <= params_.depth_K; ++d) {
      auto chains = map_to_hyperchains(tree);
      IterationRecord rec;
      rec.iteration = d;
      rec.chains = chains.size();
      rec.kept = select_chains(chains, tree, params_.width_W, &rec);

      std::set<std::uint32_t> handled = failed;
      bool any = false;
      for (std::size_t k : rec.kept) {
        const HyperChain& chain = chains[k];
        ChainVisit visit;
        visit.chain = k;
        if (expandable_leaves(chain, handled).empty()) {
          rec.visits.push_back(std::move(visit));
          continue;
        }
        any = true;
        NodeId target = select_node(chain, &visit, handled);
        const Node node = tree.node(target);
        visit.selected = target.value;
        visit.selected_text = node.text;
        handled.insert(target.value);

        bool attached = false;
        for (const auto& match : sample_rules(node, chain)) {
          visit.rules.push_back(match.rule->id);
          try {
            auto kids = expand_node(chain, node, match);
            tree.attach_branch(target, kids, match.rule->id);
            trace_.attachments.push_back(Attachment{d, target.value, kids, match.rule->id, std::nullopt});
            visit.attachments.push_back(trace_.attachments.size() - 1);
            attached = true;
          } catch (const Error& e) {
            switch (e.code()) {
              case Errc::ParseFailure:
              case Errc::PatternViolation:
              case Errc::CycleDetected:
              case Errc::RuleMismatch:
              case Errc::BranchTooWide:
              case Errc::DepthLimitExceeded:
              case Errc::EmptyBranch:
                visit.warnings.push_back(std::string("expansion with ") + match.rule->id + " failed: " + e.what());
                break;
              default:
                throw;
            }
          }
        }
        if (!attached) failed.insert(target.value);
        rec.visits.push_back(std::move(visit));
      }
      rec.tree_height = tree.height();
      rec.tree_size = tree.size();
      if (!any) {
        trace_.early_exit = true;
        break;
      }
      trace_.iterations.push_back(std::move(rec));
    }

    auto chains = map_to_hyperchains(tree);
    std::vector<std::size_t> considered = select_chains(chains, tree, params_.width_W, nullptr);
    // Every attachment is one edge, in order; copy the scores cached on them.
    for (std::size_t e = 0; e < trace_.attachments.size(); ++e)
      trace_.attachments[e].confidence = tree.edges()[e].confidence;
    DecisionRecord decision;
    std::size_t chosen = decide_outline(chains, considered, &decision);
    trace_.decision = decision;
    HyperChain outline = chains[chosen];
    trace_.tree = to_json(tree);
    trace_.outline = to_json(outline);
    trace_.completed = true;
    finish_usage();
    return {std::move(tree), std::move(outline), trace_};
  } catch (const Error& e) {
    trace_.error = e.what();
    trace_.tree = to_json(tree);
    finish_usage();
    throw;
  }
}

}  // namespace htp
