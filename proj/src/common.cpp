#include "htp/common.hpp"

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace htp {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::EmptyQuery: return "EmptyQuery";
    case Errc::UnknownParent: return "UnknownParent";
    case Errc::ParentNotDivisible: return "ParentNotDivisible";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::EmptyBranch: return "EmptyBranch";
    case Errc::DepthLimitExceeded: return "DepthLimitExceeded";
    case Errc::BranchTooWide: return "BranchTooWide";
    case Errc::RuleMismatch: return "RuleMismatch";
    case Errc::NoDivisibleLeaf: return "NoDivisibleLeaf";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::MissingSection: return "MissingSection";
    case Errc::MissingSlot: return "MissingSlot";
    case Errc::UnknownTemplate: return "UnknownTemplate";
    case Errc::BackendUnavailable: return "BackendUnavailable";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::PatternViolation: return "PatternViolation";
    case Errc::TranscriptMiss: return "TranscriptMiss";
    case Errc::IoFailure: return "IoFailure";
    case Errc::PreconditionViolated: return "PreconditionViolated";
    case Errc::UnknownAction: return "UnknownAction";
    case Errc::UnknownBlock: return "UnknownBlock";
    case Errc::UnknownAtom: return "UnknownAtom";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::SchemaError: return "SchemaError";
    case Errc::FormatError: return "FormatError";
    case Errc::ConfigError: return "ConfigError";
    case Errc::MalformedTrace: return "MalformedTrace";
    case Errc::StepBudgetExceeded: return "StepBudgetExceeded";
  }
  return "Unknown";
}

namespace {

std::string decorate(Errc code, const std::string& message, std::optional<std::size_t> line) {
  std::ostringstream os;
  os << to_string(code);
  if (line) os << " (line " << *line << ")";
  os << ": " << message;
  return os.str();
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

namespace text {

std::string collapse(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string normalize(std::string_view s) { return lower(collapse(s)); }

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

bool starts_with_icase(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < s.size()) lines.emplace_back(s.substr(start));
      break;
    }
    std::string_view line = s.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = nl + 1;
  }
  return lines;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    parts.emplace_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string_view unbracket(std::string_view s) {
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') return s.substr(1, s.size() - 2);
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(Errc::IoFailure, "short write to " + path);
}

std::string stable_hash(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace text
}  // namespace htp
