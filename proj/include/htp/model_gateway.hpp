#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "json.hpp"

namespace htp {

enum class Role {
  FilterChains,
  SelectNode,
  RetrieveRules,
  ExpandNode,
  DecideOutline,
  RefineNode,
  SolveSubtask,
  GeneratePlan,
  ScoreConfidence,
};

inline constexpr Role kAllRoles[] = {Role::FilterChains, Role::SelectNode,   Role::RetrieveRules,
                                     Role::ExpandNode,   Role::DecideOutline, Role::RefineNode,
                                     Role::SolveSubtask, Role::GeneratePlan, Role::ScoreConfidence};

std::string_view to_string(Role role);
std::optional<Role> role_from_string(std::string_view name);
/// Template used when a request names none ("select_node" for SelectNode).
std::string default_template_id(Role role);

using Slots = std::map<std::string, std::string>;

struct Usage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;

  Usage& operator+=(const Usage& o) {
    prompt_tokens += o.prompt_tokens;
    completion_tokens += o.completion_tokens;
    return *this;
  }
  bool operator==(const Usage&) const = default;
};

/// Role-specific parsed reply: a 0-based index (SelectNode, DecideOutline),
/// an index list (FilterChains, RetrieveRules), child texts (ExpandNode), a
/// score in [0,1] (ScoreConfidence) or free text (the remaining roles).
using Payload = std::variant<std::size_t, std::vector<std::size_t>, std::vector<std::string>, double, std::string>;

struct ModelRequest {
  Role role = Role::SelectNode;
  std::string template_id;  // empty selects default_template_id(role)
  Slots slots;
  /// Options for index-valued roles; rendered into the "candidates" slot when
  /// the caller has not filled it.
  std::vector<std::string> candidates;
  std::optional<int> retry_limit;
  /// Extra acceptance check on the parsed payload; returns a reason on rejection.
  std::function<std::optional<std::string>(const Payload&)> validator;
};

struct Completion {
  std::string raw;
  Payload parsed;
  Usage usage;  // summed over attempts
  double latency = 0.0;
  int attempts = 1;
  bool cached = false;
  std::string key;  // cache key of the accepted attempt
};

// Reply parsers. Each throws Error(ParseFailure) with a reason.
std::size_t parse_index_reply(std::string_view raw, const std::vector<std::string>& candidates);
std::vector<std::size_t> parse_index_list_reply(std::string_view raw, std::size_t count);
std::vector<std::string> parse_children_reply(std::string_view raw);
double parse_score_reply(std::string_view raw);
/// Plan text; a "[PLAN] ... [PLAN END]" block is cut out when present.
std::string parse_plan_reply(std::string_view raw);
Payload parse_reply(Role role, std::string_view raw, const std::vector<std::string>& candidates);

class TemplateStore {
 public:
  /// Templates compiled into the binary.
  static TemplateStore builtin();
  /// Built-in templates overridden by `<dir>/<id>.txt` files.
  static TemplateStore with_overrides(const std::string& dir);

  bool contains(const std::string& id) const { return templates_.count(id) != 0; }
  const std::string& get(const std::string& id) const;
  void put(std::string id, std::string text) { templates_[std::move(id)] = std::move(text); }
  /// Names of the `{{slot}}` markers in template `id`, deduplicated, in order.
  std::vector<std::string> slots_of(const std::string& id) const;
  /// Substitutes every `{{slot}}`. Throws MissingSlot or UnknownTemplate.
  std::string render(const std::string& id, const Slots& slots) const;

 private:
  std::map<std::string, std::string> templates_;
};

struct BackendCall {
  std::string key;
  Role role = Role::SelectNode;
  std::string template_id;
  std::string prompt;
  std::string model;
  double temperature = 0.0;
  int attempt = 0;
};

struct BackendReply {
  std::string raw;
  Usage usage;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendReply call(const BackendCall& call) = 0;
  virtual std::string kind() const = 0;
};

struct HttpConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "HTP_API_KEY";
  double timeout_s = 120.0;
};

/// OpenAI-style chat completion over HTTP. Throws BackendUnavailable on
/// transport errors, non-2xx status or a missing credential.
class HttpChatBackend : public Backend {
 public:
  explicit HttpChatBackend(HttpConfig cfg);
  BackendReply call(const BackendCall& call) override;
  std::string kind() const override { return "http-chat"; }

 private:
  HttpConfig cfg_;
};

struct TranscriptEntry {
  std::string key;  // may be empty: the entry then answers the next request of its role
  Role role = Role::SelectNode;
  std::string raw;
  Usage usage;
};

nlohmann::json to_json(const TranscriptEntry& e);
TranscriptEntry transcript_entry_from_json(const nlohmann::json& j, std::size_t line);
std::vector<TranscriptEntry> load_transcript(const std::string& path);

/// Answers only from a transcript. Keyed entries are looked up by cache key;
/// unkeyed entries are consumed in file order. A request that finds neither
/// throws TranscriptMiss.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(std::vector<TranscriptEntry> entries);
  static std::shared_ptr<ReplayBackend> from_file(const std::string& path);

  BackendReply call(const BackendCall& call) override;
  std::string kind() const override { return "replay"; }
  std::size_t remaining_unkeyed() const;

 private:
  std::unordered_map<std::string, TranscriptEntry> keyed_;
  std::deque<TranscriptEntry> queue_;
  mutable std::mutex mu_;
};

/// Forwards to `inner` and appends every reply to a JSONL transcript.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(std::shared_ptr<Backend> inner, std::string path, bool truncate = true);
  BackendReply call(const BackendCall& call) override;
  std::string kind() const override { return "recording"; }
  std::size_t recorded() const;

 private:
  std::shared_ptr<Backend> inner_;
  std::string path_;
  std::size_t count_ = 0;
  mutable std::mutex mu_;
};

/// Answers through a function; used for fixture generation and tests.
class CallbackBackend : public Backend {
 public:
  using Policy = std::function<BackendReply(const BackendCall&)>;
  explicit CallbackBackend(Policy policy) : policy_(std::move(policy)) {}
  BackendReply call(const BackendCall& call) override { return policy_(call); }
  std::string kind() const override { return "scripted"; }

 private:
  Policy policy_;
};

struct GatewayConfig {
  std::string model = "gpt-4o";
  double temperature = 0.0;
  int retry_limit = 1;
};

/// One model exchange as seen by the gateway, for traces and token accounting.
struct ExchangeRecord {
  Role role = Role::SelectNode;
  std::string key;
  int attempts = 0;
  bool cached = false;
  bool ok = false;
  Usage usage;
};

class ModelGateway {
 public:
  ModelGateway(std::shared_ptr<Backend> backend, TemplateStore templates = TemplateStore::builtin(),
               GatewayConfig cfg = {});

  /// Per-role override; other roles keep the default backend.
  void set_role_backend(Role role, std::shared_ptr<Backend> backend);

  /// Renders, calls, parses and validates. Failed parses are re-prompted with a
  /// format reminder up to the retry limit, then ParseFailure (or
  /// PatternViolation when the validator rejected the last attempt).
  Completion complete(const ModelRequest& request);

  /// Cache key of one attempt: role, template, slot hash, model, attempt.
  std::string cache_key(const ModelRequest& request, int attempt) const;
  std::string render_prompt(const ModelRequest& request, int attempt) const;

  const GatewayConfig& config() const noexcept { return cfg_; }
  const TemplateStore& templates() const noexcept { return templates_; }

  Usage total_usage() const;
  std::vector<ExchangeRecord> exchanges() const;

 private:
  Backend& backend_for(Role role) const;
  Slots effective_slots(const ModelRequest& request) const;

  std::shared_ptr<Backend> backend_;
  std::map<Role, std::shared_ptr<Backend>> overrides_;
  TemplateStore templates_;
  GatewayConfig cfg_;

  mutable std::mutex mu_;
  std::unordered_map<std::string, BackendReply> cache_;
  std::vector<ExchangeRecord> exchanges_;
};

/// Text appended to a re-prompt after an unusable reply.
std::string format_reminder(Role role);

/// Numbered list "1. a\n2. b" used for candidate slots.
std::string numbered(const std::vector<std::string>& items);

}  // namespace htp
