#include "htp/model_gateway.hpp"

#include <curl/curl.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "htp/common.hpp"

namespace htp {

namespace detail {
// Generated at build time from data/templates/*.txt.
const std::vector<std::pair<std::string_view, std::string_view>>& builtin_templates();
}  // namespace detail

namespace {

constexpr std::string_view kRoleNames[] = {"FilterChains", "SelectNode",   "RetrieveRules",
                                           "ExpandNode",   "DecideOutline", "RefineNode",
                                           "SolveSubtask", "GeneratePlan", "ScoreConfidence"};

[[noreturn]] void parse_fail(const std::string& why) { throw Error(Errc::ParseFailure, why); }

std::string first_line(std::string_view raw) {
  for (const auto& l : text::split_lines(raw)) {
    std::string t = text::trim(l);
    if (!t.empty()) return t;
  }
  return {};
}

std::optional<long> as_integer(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == ')')) s.pop_back();
  if (s.empty() || s.size() > 9) return std::nullopt;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
  return std::stol(s);
}

}  // namespace

std::string_view to_string(Role role) { return kRoleNames[static_cast<std::size_t>(role)]; }

std::optional<Role> role_from_string(std::string_view name) {
  for (Role r : kAllRoles)
    if (text::iequals(to_string(r), name)) return r;
  return std::nullopt;
}

std::string default_template_id(Role role) {
  std::string out;
  for (char c : to_string(role)) {
    if (std::isupper(static_cast<unsigned char>(c)) && !out.empty()) out.push_back('_');
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string numbered(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back('\n');
    out += std::to_string(i + 1) + ". " + items[i];
  }
  return out;
}

std::size_t parse_index_reply(std::string_view raw, const std::vector<std::string>& candidates) {
  std::string line = first_line(raw);
  if (line.empty()) parse_fail("empty reply");
  if (auto n = as_integer(line)) {
    if (*n >= 1 && static_cast<std::size_t>(*n) <= candidates.size()) return static_cast<std::size_t>(*n - 1);
    parse_fail("index " + line + " out of range 1.." + std::to_string(candidates.size()));
  }
  const std::string want = text::normalize(line);
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (text::normalize(candidates[i]) == want) return i;
  parse_fail("reply '" + line + "' is neither an index nor a candidate");
}

std::vector<std::size_t> parse_index_list_reply(std::string_view raw, std::size_t count) {
  std::string line = first_line(raw);
  for (char& c : line)
    if (c == ',' || c == ';') c = ' ';
  std::istringstream in(line);
  std::vector<std::size_t> out;
  std::string tok;
  while (in >> tok) {
    auto n = as_integer(tok);
    if (!n || *n < 1 || static_cast<std::size_t>(*n) > count)
      parse_fail("'" + tok + "' is not an index in 1.." + std::to_string(count));
    std::size_t idx = static_cast<std::size_t>(*n - 1);
    if (std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
  }
  if (out.empty()) parse_fail("no indices in reply");
  return out;
}

std::vector<std::string> parse_children_reply(std::string_view raw) {
  std::vector<std::string> out;
  for (const auto& l : text::split_lines(raw)) {
    std::string line = text::trim(l);
    if (line.empty()) continue;
    std::size_t i = 0;
    while (i < line.size()) {
      if (std::isspace(static_cast<unsigned char>(line[i]))) {
        ++i;
        continue;
      }
      if (line[i] != '[') parse_fail("line is not a bracketed node: '" + line + "'");
      auto close = line.find(']', i);
      if (close == std::string::npos) parse_fail("unbalanced bracket: '" + line + "'");
      std::string atom = text::collapse(std::string_view(line).substr(i, close - i + 1));
      if (text::trim(text::unbracket(atom)).empty()) parse_fail("empty node");
      out.push_back(atom);
      i = close + 1;
    }
  }
  if (out.empty()) parse_fail("no child nodes in reply");
  return out;
}

double parse_score_reply(std::string_view raw) {
  std::string line = first_line(raw);
  if (!line.empty() && line.back() == '%') line.pop_back();
  auto n = as_integer(line);
  if (!n || *n > 100) parse_fail("score must be an integer 0-100, got '" + line + "'");
  return static_cast<double>(*n) / 100.0;
}

std::string parse_plan_reply(std::string_view raw) {
  std::string s(raw);
  auto open = s.find("[PLAN]");
  if (open != std::string::npos) {
    auto close = s.find("[PLAN END]", open);
    if (close == std::string::npos) parse_fail("[PLAN] block is not closed");
    return s.substr(open, close + 10 - open);
  }
  std::string t = text::trim(s);
  if (t.empty()) parse_fail("empty plan");
  return t;
}

Payload parse_reply(Role role, std::string_view raw, const std::vector<std::string>& candidates) {
  switch (role) {
    case Role::SelectNode:
    case Role::DecideOutline:
      return parse_index_reply(raw, candidates);
    case Role::FilterChains:
    case Role::RetrieveRules:
      return parse_index_list_reply(raw, candidates.size());
    case Role::ExpandNode:
      return parse_children_reply(raw);
    case Role::ScoreConfidence:
      return parse_score_reply(raw);
    case Role::GeneratePlan:
      return parse_plan_reply(raw);
    case Role::RefineNode:
    case Role::SolveSubtask: {
      std::string t = text::trim(raw);
      if (t.empty()) parse_fail("empty reply");
      return t;
    }
  }
  parse_fail("unknown role");
}

std::string format_reminder(Role role) {
  switch (role) {
    case Role::SelectNode:
    case Role::DecideOutline:
      return "Answer with a single number from the list and nothing else.";
    case Role::FilterChains:
    case Role::RetrieveRules:
      return "Answer with comma-separated numbers from the list and nothing else.";
    case Role::ExpandNode:
      return "Answer with one bracketed node per line, for example [node text], and nothing else.";
    case Role::ScoreConfidence:
      return "Answer with a single integer between 0 and 100 and nothing else.";
    case Role::GeneratePlan:
      return "Answer with the final plan only, in exactly the required format.";
    case Role::RefineNode:
    case Role::SolveSubtask:
      return "Your previous answer was empty. Answer in plain text.";
  }
  return {};
}

// Templates.

TemplateStore TemplateStore::builtin() {
  TemplateStore t;
  for (const auto& [id, body] : detail::builtin_templates()) t.put(std::string(id), std::string(body));
  return t;
}

TemplateStore TemplateStore::with_overrides(const std::string& dir) {
  TemplateStore t = builtin();
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(Errc::IoFailure, "template directory not found: " + dir);
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    t.put(entry.path().stem().string(), text::read_file(entry.path().string()));
  }
  return t;
}

const std::string& TemplateStore::get(const std::string& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw Error(Errc::UnknownTemplate, "no template '" + id + "'");
  return it->second;
}

std::vector<std::string> TemplateStore::slots_of(const std::string& id) const {
  const std::string& body = get(id);
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = body.find("{{", pos)) != std::string::npos) {
    auto end = body.find("}}", pos + 2);
    if (end == std::string::npos) break;
    std::string name = text::trim(std::string_view(body).substr(pos + 2, end - pos - 2));
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    pos = end + 2;
  }
  return out;
}

std::string TemplateStore::render(const std::string& id, const Slots& slots) const {
  const std::string& body = get(id);
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    auto open = body.find("{{", pos);
    if (open == std::string::npos) break;
    auto close = body.find("}}", open + 2);
    if (close == std::string::npos) break;
    out.append(body, pos, open - pos);
    std::string name = text::trim(std::string_view(body).substr(open + 2, close - open - 2));
    auto it = slots.find(name);
    if (it == slots.end()) throw Error(Errc::MissingSlot, "template '" + id + "' needs slot '" + name + "'");
    out += it->second;
    pos = close + 2;
  }
  out.append(body, pos, std::string::npos);
  return out;
}

// HTTP backend.

namespace {

std::size_t collect(char* ptr, std::size_t size, std::size_t n, void* user) {
  static_cast<std::string*>(user)->append(ptr, size * n);
  return size * n;
}

struct CurlGlobal {
  CurlGlobal() { curl_global_init(CURL_GLOBAL_DEFAULT); }
  ~CurlGlobal() { curl_global_cleanup(); }
};

}  // namespace

HttpChatBackend::HttpChatBackend(HttpConfig cfg) : cfg_(std::move(cfg)) {
  static CurlGlobal init;
}

BackendReply HttpChatBackend::call(const BackendCall& c) {
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (!key || !*key) throw Error(Errc::BackendUnavailable, "environment variable " + cfg_.api_key_env + " is not set");

  nlohmann::json body{{"model", c.model},
                      {"temperature", c.temperature},
                      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", c.prompt}}})}};
  std::string payload = body.dump();
  std::string response;

  std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(), curl_easy_cleanup);
  if (!curl) throw Error(Errc::BackendUnavailable, "curl_easy_init failed");
  std::string auth = std::string("Authorization: Bearer ") + key;
  curl_slist* headers = curl_slist_append(nullptr, "Content-Type: application/json");
  headers = curl_slist_append(headers, auth.c_str());
  std::unique_ptr<curl_slist, decltype(&curl_slist_free_all)> header_guard(headers, curl_slist_free_all);

  curl_easy_setopt(curl.get(), CURLOPT_URL, cfg_.endpoint.c_str());
  curl_easy_setopt(curl.get(), CURLOPT_HTTPHEADER, headers);
  curl_easy_setopt(curl.get(), CURLOPT_POSTFIELDS, payload.c_str());
  curl_easy_setopt(curl.get(), CURLOPT_POSTFIELDSIZE, static_cast<long>(payload.size()));
  curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, collect);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &response);
  curl_easy_setopt(curl.get(), CURLOPT_TIMEOUT_MS, static_cast<long>(cfg_.timeout_s * 1000));
  curl_easy_setopt(curl.get(), CURLOPT_NOSIGNAL, 1L);

  CURLcode rc = curl_easy_perform(curl.get());
  if (rc != CURLE_OK) throw Error(Errc::BackendUnavailable, std::string("http request failed: ") + curl_easy_strerror(rc));
  long status = 0;
  curl_easy_getinfo(curl.get(), CURLINFO_RESPONSE_CODE, &status);
  if (status < 200 || status >= 300)
    throw Error(Errc::BackendUnavailable, "http status " + std::to_string(status) + ": " + response.substr(0, 200));

  auto doc = nlohmann::json::parse(response, nullptr, false);
  if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty())
    throw Error(Errc::BackendUnavailable, "unexpected response body");
  BackendReply reply;
  const auto& msg = doc["choices"][0]["message"];
  reply.raw = msg.value("content", "");
  if (doc.contains("usage")) {
    reply.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0ULL);
    reply.usage.completion_tokens = doc["usage"].value("completion_tokens", 0ULL);
  }
  return reply;
}

// Transcripts.

nlohmann::json to_json(const TranscriptEntry& e) {
  nlohmann::json j;
  if (!e.key.empty()) j["key"] = e.key;
  j["role"] = std::string(to_string(e.role));
  j["raw"] = e.raw;
  j["usage"] = {{"prompt_tokens", e.usage.prompt_tokens}, {"completion_tokens", e.usage.completion_tokens}};
  return j;
}

TranscriptEntry transcript_entry_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "transcript entry must be an object", line);
  TranscriptEntry e;
  if (j.contains("key") && !j["key"].is_null()) {
    if (!j["key"].is_string()) throw Error(Errc::SchemaError, "key must be a string", line);
    e.key = j["key"].get<std::string>();
  }
  if (!j.contains("role") || !j["role"].is_string()) throw Error(Errc::SchemaError, "missing role", line);
  auto role = role_from_string(j["role"].get<std::string>());
  if (!role) throw Error(Errc::SchemaError, "unknown role " + j["role"].get<std::string>(), line);
  e.role = *role;
  if (!j.contains("raw") || !j["raw"].is_string()) throw Error(Errc::SchemaError, "missing raw", line);
  e.raw = j["raw"].get<std::string>();
  if (j.contains("usage") && j["usage"].is_object()) {
    e.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0ULL);
    e.usage.completion_tokens = j["usage"].value("completion_tokens", 0ULL);
  }
  return e;
}

std::vector<TranscriptEntry> load_transcript(const std::string& path) {
  std::vector<TranscriptEntry> out;
  std::size_t n = 0;
  for (const auto& line : text::split_lines(text::read_file(path))) {
    ++n;
    if (text::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::SchemaError, "invalid JSON in " + path, n);
    out.push_back(transcript_entry_from_json(j, n));
  }
  return out;
}

ReplayBackend::ReplayBackend(std::vector<TranscriptEntry> entries) {
  for (auto& e : entries) {
    if (e.key.empty()) queue_.push_back(std::move(e));
    else keyed_.emplace(e.key, std::move(e));
  }
}

std::shared_ptr<ReplayBackend> ReplayBackend::from_file(const std::string& path) {
  return std::make_shared<ReplayBackend>(load_transcript(path));
}

BackendReply ReplayBackend::call(const BackendCall& c) {
  std::lock_guard lock(mu_);
  if (auto it = keyed_.find(c.key); it != keyed_.end()) return {it->second.raw, it->second.usage};
  if (!queue_.empty()) {
    if (queue_.front().role != c.role)
      throw Error(Errc::TranscriptMiss, "next transcript entry is for " + std::string(to_string(queue_.front().role)) +
                                            ", request is " + std::string(to_string(c.role)));
    TranscriptEntry e = std::move(queue_.front());
    queue_.pop_front();
    return {std::move(e.raw), e.usage};
  }
  throw Error(Errc::TranscriptMiss, "no transcript entry for " + std::string(to_string(c.role)) + " key " + c.key);
}

std::size_t ReplayBackend::remaining_unkeyed() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner, std::string path, bool truncate)
    : inner_(std::move(inner)), path_(std::move(path)) {
  std::filesystem::path p(path_);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path_, truncate ? std::ios::trunc : std::ios::app);
  if (!out) throw Error(Errc::IoFailure, "cannot open transcript " + path_);
}

BackendReply RecordingBackend::call(const BackendCall& c) {
  BackendReply reply = inner_->call(c);
  TranscriptEntry e{c.key, c.role, reply.raw, reply.usage};
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error(Errc::IoFailure, "cannot append to transcript " + path_);
  out << to_json(e).dump() << '\n';
  ++count_;
  return reply;
}

std::size_t RecordingBackend::recorded() const {
  std::lock_guard lock(mu_);
  return count_;
}

// Gateway.

ModelGateway::ModelGateway(std::shared_ptr<Backend> backend, TemplateStore templates, GatewayConfig cfg)
    : backend_(std::move(backend)), templates_(std::move(templates)), cfg_(std::move(cfg)) {
  if (!backend_) throw Error(Errc::ConfigError, "gateway needs a backend");
  if (cfg_.retry_limit < 0) throw Error(Errc::ConfigError, "retry_limit must be >= 0");
  if (cfg_.temperature < 0.0 || cfg_.temperature > 2.0) throw Error(Errc::ConfigError, "temperature must be in [0,2]");
}

void ModelGateway::set_role_backend(Role role, std::shared_ptr<Backend> backend) {
  overrides_[role] = std::move(backend);
}

Backend& ModelGateway::backend_for(Role role) const {
  auto it = overrides_.find(role);
  return it != overrides_.end() && it->second ? *it->second : *backend_;
}

Slots ModelGateway::effective_slots(const ModelRequest& request) const {
  Slots slots = request.slots;
  if (!request.candidates.empty() && !slots.count("candidates")) slots["candidates"] = numbered(request.candidates);
  return slots;
}

std::string ModelGateway::cache_key(const ModelRequest& request, int attempt) const {
  const std::string tid = request.template_id.empty() ? default_template_id(request.role) : request.template_id;
  nlohmann::json slots(effective_slots(request));
  std::string slot_hash = text::stable_hash(slots.dump());
  std::string material = std::string(to_string(request.role)) + '\x1f' + tid + '\x1f' + slot_hash + '\x1f' +
                         cfg_.model + '\x1f' + std::to_string(attempt);
  return default_template_id(request.role) + "-" + text::stable_hash(material);
}

std::string ModelGateway::render_prompt(const ModelRequest& request, int attempt) const {
  const std::string tid = request.template_id.empty() ? default_template_id(request.role) : request.template_id;
  std::string prompt = templates_.render(tid, effective_slots(request));
  if (attempt > 0) prompt += "\n\n" + format_reminder(request.role);
  return prompt;
}

Completion ModelGateway::complete(const ModelRequest& request) {
  const int retries = request.retry_limit.value_or(cfg_.retry_limit);
  const std::string tid = request.template_id.empty() ? default_template_id(request.role) : request.template_id;
  Backend& backend = backend_for(request.role);
  auto started = std::chrono::steady_clock::now();

  Completion out;
  ExchangeRecord record;
  record.role = request.role;
  std::string last_error;
  bool last_was_validator = false;

  for (int attempt = 0; attempt <= retries; ++attempt) {
    BackendCall call;
    call.key = cache_key(request, attempt);
    call.role = request.role;
    call.template_id = tid;
    call.prompt = render_prompt(request, attempt);
    call.model = cfg_.model;
    call.temperature = cfg_.temperature;
    call.attempt = attempt;

    BackendReply reply;
    bool hit = false;
    {
      std::lock_guard lock(mu_);
      if (auto it = cache_.find(call.key); it != cache_.end()) {
        reply = it->second;
        hit = true;
      }
    }
    if (!hit) {
      reply = backend.call(call);
      std::lock_guard lock(mu_);
      cache_.emplace(call.key, reply);
      out.usage += reply.usage;
    }
    record.attempts = attempt + 1;
    record.key = call.key;
    record.cached = hit;
    out.raw = reply.raw;
    out.key = call.key;
    out.attempts = attempt + 1;
    out.cached = hit;

    try {
      out.parsed = parse_reply(request.role, reply.raw, request.candidates);
    } catch (const Error& e) {
      last_error = e.what();
      last_was_validator = false;
      continue;
    }
    if (request.validator) {
      if (auto why = request.validator(out.parsed)) {
        last_error = *why;
        last_was_validator = true;
        continue;
      }
    }
    out.latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    record.ok = true;
    record.usage = out.usage;
    std::lock_guard lock(mu_);
    exchanges_.push_back(record);
    return out;
  }

  record.usage = out.usage;
  {
    std::lock_guard lock(mu_);
    exchanges_.push_back(record);
  }
  const std::string msg = std::string(to_string(request.role)) + " reply unusable after " +
                          std::to_string(retries + 1) + " attempt(s): " + last_error;
  throw Error(last_was_validator ? Errc::PatternViolation : Errc::ParseFailure, msg);
}

Usage ModelGateway::total_usage() const {
  std::lock_guard lock(mu_);
  Usage u;
  for (const auto& e : exchanges_) u += e.usage;
  return u;
}

std::vector<ExchangeRecord> ModelGateway::exchanges() const {
  std::lock_guard lock(mu_);
  return exchanges_;
}

}  // namespace htp
