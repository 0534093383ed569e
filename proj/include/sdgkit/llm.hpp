#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cctype>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "document.hpp"
#include "error.hpp"
#include "labels.hpp"
#include "rng.hpp"

namespace sdgkit {

// ---------------------------------------------------------------------------
// Response parsing

namespace detail {

inline bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }
/// Word character for boundary tests; non-ASCII bytes count as letters.
inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80; }

inline bool iequals_at(std::string_view text, std::size_t pos, std::string_view word) {
  if (pos + word.size() > text.size()) return false;
  for (std::size_t i = 0; i < word.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != word[i]) return false;
  return true;
}

/// Length of a label marker ("sdgs", "sdg", "goals", "goal") at pos, or 0.
inline std::size_t marker_at(std::string_view text, std::size_t pos) {
  if (pos > 0 && is_word_char(text[pos - 1])) return 0;
  for (std::string_view m : {"sdgs", "sdg", "goals", "goal"}) {
    if (!iequals_at(text, pos, m)) continue;
    const std::size_t end = pos + m.size();
    if (end < text.size() && is_alpha(text[end])) continue;
    return m.size();
  }
  return 0;
}

/// Skips characters allowed between a marker and its number.
inline std::size_t skip_marker_gap(std::string_view text, std::size_t i) {
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '-' || c == '#' || c == ':' || c == '(' || c == '_') {
      ++i;
    } else if (text.substr(i, 3) == "\xE2\x80\x93" || text.substr(i, 3) == "\xE2\x80\x94") {  // en/em dash
      i += 3;
    } else {
      break;
    }
  }
  return i;
}

/// Skips list separators (",", "&", "/", ";", "and", "or", whitespace) and an
/// optional repeated marker. Returns the position of the next digit, or npos.
inline std::size_t next_list_number(std::string_view text, std::size_t i) {
  bool moved = true;
  while (moved && i < text.size()) {
    moved = false;
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == ',' || c == '&' || c == '/' || c == ';' || c == '\n' || c == '\r') {
      ++i;
      moved = true;
    } else if (iequals_at(text, i, "and") && (i + 3 >= text.size() || !is_word_char(text[i + 3]))) {
      i += 3;
      moved = true;
    } else if (iequals_at(text, i, "or") && (i + 2 >= text.size() || !is_word_char(text[i + 2]))) {
      i += 2;
      moved = true;
    } else if (std::size_t m = marker_at(text, i); m > 0) {
      i = skip_marker_gap(text, i + m);
      moved = true;
    }
  }
  return (i < text.size() && is_digit(text[i])) ? i : std::string_view::npos;
}

}  // namespace detail

struct ParsedLabels {
  SdgLabelSet labels;
  bool is_na = false;
  /// Nonempty text that was neither "NA" nor yielded any label.
  bool warning = false;
};

/// Extracts SDG numbers attached to the markers SDG/SDGs/Goal/Goals
/// (case-insensitive, optional space, hyphen, '#' or ':'), distributing a
/// marker over a following list ("SDGs 3, 4 and 9"). Target suffixes such as
/// "7.2" count as goal 7. Numbers outside 1..17 are ignored. A response whose
/// letters are exactly "NA" parses to the empty set.
inline ParsedLabels parse_sdg_labels_detailed(std::string_view text) {
  ParsedLabels out;
  std::string letters;
  for (char c : text)
    if (detail::is_alpha(c)) letters += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (letters == "NA") {
    out.is_na = true;
    return out;
  }
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t m = detail::marker_at(text, i);
    if (m == 0) {
      ++i;
      continue;
    }
    std::size_t j = detail::skip_marker_gap(text, i + m);
    if (j >= text.size() || !detail::is_digit(text[j])) {
      i += m;
      continue;
    }
    while (true) {
      long long value = 0;
      std::size_t k = j;
      while (k < text.size() && detail::is_digit(text[k])) {
        if (value < 1000) value = value * 10 + (text[k] - '0');
        ++k;
      }
      const bool glued_word = k < text.size() && detail::is_alpha(text[k]);
      if (!glued_word && is_valid_sdg(value)) out.labels.insert(value);
      // target suffix: ".2", ".a"
      if (k + 1 < text.size() && text[k] == '.' && std::isalnum(static_cast<unsigned char>(text[k + 1]))) {
        k += 1;
        while (k < text.size() && std::isalnum(static_cast<unsigned char>(text[k]))) ++k;
      }
      i = k;
      const std::size_t next = detail::next_list_number(text, k);
      if (next == std::string_view::npos) break;
      j = next;
    }
  }
  const bool blank = std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  out.warning = out.labels.empty() && !blank;
  return out;
}

inline SdgLabelSet parse_sdg_labels(std::string_view text) { return parse_sdg_labels_detailed(text).labels; }

/// Prefix of text before the first standalone, case-insensitive "however";
/// the whole text when absent.
inline std::string strip_however(std::string_view text) {
  for (std::size_t i = 0; i + 7 <= text.size(); ++i) {
    if (!detail::iequals_at(text, i, "however")) continue;
    const bool left = i == 0 || !detail::is_word_char(text[i - 1]);
    const bool right = i + 7 == text.size() || !detail::is_word_char(text[i + 7]);
    if (left && right) return std::string(text.substr(0, i));
  }
  return std::string(text);
}

// ---------------------------------------------------------------------------
// Wire format and transport

enum class Role { system, user, assistant };

inline std::string to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

struct ChatMessage {
  Role role = Role::user;
  std::string content;
};

struct ChatOptions {
  std::string model_name = "gpt-3.5-turbo";
  double temperature = 0.0;
  std::optional<int> max_tokens;
};

/// Chat-completions request body: {model, temperature, max_tokens?, messages}.
inline std::string build_request_body(const std::vector<ChatMessage>& messages, const ChatOptions& options) {
  nlohmann::ordered_json j;
  j["model"] = options.model_name;
  j["temperature"] = options.temperature;
  if (options.max_tokens) j["max_tokens"] = *options.max_tokens;
  auto& msgs = j["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : messages) {
    if (m.role == Role::user && m.content.empty()) throw InputError("user message content must be nonempty");
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  return j.dump();
}

/// Reads choices[0].message.content; throws MalformedResponse naming the
/// first missing field.
inline std::string extract_content(std::string_view body) {
  auto malformed = [](const std::string& what) {
    return TransportError(TransportError::Kind::malformed_response, "malformed response: " + what);
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw malformed("body is not JSON");
  }
  if (!j.is_object() || !j.contains("choices")) throw malformed("missing field 'choices'");
  const auto& choices = j["choices"];
  if (!choices.is_array() || choices.empty()) throw malformed("missing field 'choices[0]'");
  if (!choices[0].is_object() || !choices[0].contains("message")) throw malformed("missing field 'choices[0].message'");
  const auto& msg = choices[0]["message"];
  if (!msg.is_object() || !msg.contains("content") || !msg["content"].is_string())
    throw malformed("missing field 'choices[0].message.content'");
  return msg["content"].get<std::string>();
}

struct HttpResponse {
  /// HTTP status; 0 for a connection failure or timeout.
  int status = 0;
  std::string body;
};

/// Sends one chat-completions request body. Implementations must be safe to
/// call from several threads.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& body) = 0;
};

/// Scripted in-process transport for tests.
class MockTransport : public Transport {
 public:
  using Handler = std::function<HttpResponse(const nlohmann::json& request, std::size_t call_index)>;

  explicit MockTransport(Handler handler) : handler_(std::move(handler)) {}

  HttpResponse post(const std::string& body) override {
    std::size_t index;
    {
      std::lock_guard lock(mutex_);
      index = requests_.size();
      requests_.push_back(nlohmann::json::parse(body));
    }
    return handler_(requests_copy(index), index);
  }

  std::size_t request_count() const {
    std::lock_guard lock(mutex_);
    return requests_.size();
  }

  std::vector<nlohmann::json> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

  /// A well-formed chat-completions response carrying `content`.
  static HttpResponse ok(const std::string& content) {
    nlohmann::json j = {{"id", "mock"}, {"object", "chat.completion"},
                        {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}, {"finish_reason", "stop"}}}}};
    return {200, j.dump()};
  }

 private:
  nlohmann::json requests_copy(std::size_t index) const {
    std::lock_guard lock(mutex_);
    return requests_[index];
  }

  Handler handler_;
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> requests_;
};

/// Token-bucket limiter wrapped around another transport.
class RateLimitedTransport : public Transport {
 public:
  RateLimitedTransport(Transport& inner, double requests_per_second, double burst)
      : inner_(inner), rate_(requests_per_second), capacity_(std::max(1.0, burst)), tokens_(capacity_),
        last_(std::chrono::steady_clock::now()) {}

  HttpResponse post(const std::string& body) override {
    acquire();
    return inner_.post(body);
  }

 private:
  void acquire() {
    if (rate_ <= 0) return;
    std::unique_lock lock(mutex_);
    while (true) {
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

  Transport& inner_;
  double rate_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mutex_;
};

struct RetryPolicy {
  int max_retries = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{20000};
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
};

struct ChatResult {
  std::string content;
  int retries = 0;
};

/// Sends one chat completion. Timeouts, 429 and 5xx are retried with
/// exponential backoff up to the policy's cap.
inline ChatResult chat_complete(const std::vector<ChatMessage>& messages, const ChatOptions& options, Transport& transport,
                                const RetryPolicy& retry = {}) {
  const std::string body = build_request_body(messages, options);
  int retries = 0;
  while (true) {
    const HttpResponse resp = transport.post(body);
    if (resp.status == 200) return {extract_content(resp.body), retries};
    if (resp.status == 401 || resp.status == 403)
      throw TransportError(TransportError::Kind::auth_failed, "authentication failed (HTTP " + std::to_string(resp.status) + ")");
    const bool transient = resp.status == 0 || resp.status == 408 || resp.status == 429 || resp.status >= 500;
    if (transient && retries < retry.max_retries) {
      auto delay = retry.base_delay * (1LL << std::min(retries, 20));
      retry.sleep(std::min<std::chrono::milliseconds>(delay, retry.max_delay));
      ++retries;
      continue;
    }
    if (resp.status == 429)
      throw TransportError(TransportError::Kind::rate_limited, "rate limited after " + std::to_string(retries) + " retries");
    throw TransportError(TransportError::Kind::transport_failed,
                         resp.status == 0 ? "connection failed after " + std::to_string(retries) + " retries"
                                          : "HTTP " + std::to_string(resp.status) + ": " + resp.body.substr(0, 200));
  }
}

// ---------------------------------------------------------------------------
// Protocols

enum class ProtocolKind { experiment1, experiment2, fewshot_tag };

inline std::string to_string(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::experiment1: return "experiment1";
    case ProtocolKind::experiment2: return "experiment2";
    case ProtocolKind::fewshot_tag: return "fewshot_tag";
  }
  return "";
}

inline ProtocolKind parse_protocol_kind(std::string_view s) {
  if (s == "experiment1") return ProtocolKind::experiment1;
  if (s == "experiment2") return ProtocolKind::experiment2;
  if (s == "fewshot_tag") return ProtocolKind::fewshot_tag;
  throw InputError("unknown protocol: '" + std::string(s) + "'");
}

/// How the two-step protocol cleans its first answer: a second API call, or
/// the local strip_however shortcut.
enum class Cleaning { remote, local };

inline constexpr std::string_view kInputSlot = "{input}";

inline constexpr std::string_view kPromptDirectContribution =
    "Does this text indicate direct contribution to any SDGs? If no SDG is directly relevant, just say NA.";
inline constexpr std::string_view kPromptBeforeHowever = "List the SDGs mentioned in this text before the word 'however'.";
inline constexpr std::string_view kPromptCompanyList =
    "Give a comma-delimited list of any SDG(s) this company's work contributes to. If no SDG is relevant just say NA.";

struct FewShotExample {
  std::string text;
  SdgLabelSet labels;
};

struct ProtocolSpec {
  ProtocolKind kind = ProtocolKind::experiment1;
  /// Templates containing the "{input}" slot, one per step.
  std::vector<std::string> prompts;
  double temperature = 0.0;
  std::optional<int> max_tokens;
  std::string model_name = "gpt-3.5-turbo";
  std::vector<FewShotExample> examples;
  SdgLabelSet tags;
  Cleaning cleaning = Cleaning::remote;
  /// Approximate token ceiling for a rendered few-shot prompt.
  std::size_t token_budget = 4096;

  static ProtocolSpec experiment1() {
    ProtocolSpec s;
    s.kind = ProtocolKind::experiment1;
    s.prompts = {std::string(kPromptDirectContribution) + "\n\n{input}", std::string(kPromptBeforeHowever) + "\n\n{input}"};
    return s;
  }

  static ProtocolSpec experiment2() {
    ProtocolSpec s;
    s.kind = ProtocolKind::experiment2;
    s.prompts = {std::string(kPromptCompanyList) + "\n\n{input}"};
    return s;
  }

  static ProtocolSpec fewshot_tag(std::vector<FewShotExample> examples, SdgLabelSet tags) {
    ProtocolSpec s;
    s.kind = ProtocolKind::fewshot_tag;
    s.prompts = {"Tag the text with the relevant tags from this list: {tags}.\n"
                 "Answer with a comma-separated list of tags.\n\n"
                 "Examples:\n{examples}\n"
                 "Text: {input}\nTags:"};
    s.examples = std::move(examples);
    s.tags = tags;
    return s;
  }

  static ProtocolSpec for_kind(ProtocolKind k) {
    switch (k) {
      case ProtocolKind::experiment1: return experiment1();
      case ProtocolKind::experiment2: return experiment2();
      case ProtocolKind::fewshot_tag: return fewshot_tag({}, {});
    }
    return experiment1();
  }

  void validate() const {
    const std::size_t want = kind == ProtocolKind::experiment1 ? 2 : 1;
    if (prompts.size() != want)
      throw InputError(to_string(kind) + " requires exactly " + std::to_string(want) + " prompt step(s)");
    for (const auto& p : prompts)
      if (p.find(kInputSlot) == std::string::npos) throw InputError("prompt template lacks the {input} slot");
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw InputError("temperature must be in [0,2]");
    if (kind == ProtocolKind::fewshot_tag && (examples.empty() || tags.empty()))
      throw InputError("fewshot_tag requires examples and a tag list");
  }
};

inline std::string tag_name(int sdg) { return "SDG" + std::to_string(sdg); }

inline std::string tag_list(const SdgLabelSet& s) {
  std::string out;
  for (int m : s.members()) {
    if (!out.empty()) out += ", ";
    out += tag_name(m);
  }
  return out;
}

/// Rough token estimate: one token per four bytes, rounded up.
inline std::size_t approx_tokens(std::string_view text) { return (text.size() + 3) / 4; }

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) s.replace(pos, from.size(), to);
  return s;
}

/// Substitutes {input} (and, for few-shot prompts, {tags} and {examples}) into step `step`.
inline std::string render_prompt(const ProtocolSpec& spec, std::size_t step, std::string_view input) {
  std::string t = spec.prompts.at(step);
  if (spec.kind == ProtocolKind::fewshot_tag) {
    std::string block;
    for (const auto& ex : spec.examples) block += "Text: " + ex.text + "\nTags: " + tag_list(ex.labels) + "\n\n";
    t = replace_all(std::move(t), "{tags}", tag_list(spec.tags));
    t = replace_all(std::move(t), "{examples}", block);
    // {input} last so input text containing braces is never re-expanded
    const auto pos = t.find(kInputSlot);
    t.replace(pos, kInputSlot.size(), input);
    if (approx_tokens(t) > spec.token_budget)
      throw InputError("few-shot prompt needs ~" + std::to_string(approx_tokens(t)) + " tokens, over the budget of " +
                       std::to_string(spec.token_budget) + "; reduce the number or length of examples");
    return t;
  }
  const auto pos = t.find(kInputSlot);
  t.replace(pos, kInputSlot.size(), input);
  return t;
}

// ---------------------------------------------------------------------------
// Records and cache

struct ExchangeStep {
  std::string request;
  std::string response;
  friend bool operator==(const ExchangeStep&, const ExchangeStep&) = default;
};

struct LlmRecord {
  std::string id;
  ProtocolKind kind = ProtocolKind::experiment1;
  std::string model_name;
  std::string cache_key;
  Cleaning cleaning = Cleaning::remote;
  std::vector<ExchangeStep> steps;
  SdgLabelSet labels;
  bool parse_warning = false;
  std::string timestamp;
  int retries = 0;
  std::optional<std::string> error;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["kind"] = to_string(kind);
    j["model_name"] = model_name;
    j["cache_key"] = cache_key;
    j["cleaning"] = cleaning == Cleaning::remote ? "remote" : "local";
    auto& st = j["steps"] = nlohmann::ordered_json::array();
    for (const auto& s : steps) st.push_back({{"request", s.request}, {"response", s.response}});
    j["labels"] = labels.members();
    j["parse_warning"] = parse_warning;
    j["timestamp"] = timestamp;
    j["retries"] = retries;
    if (error) j["error"] = *error;
    return j;
  }

  static LlmRecord from_json(const nlohmann::json& j) {
    LlmRecord r;
    r.id = j.at("id").get<std::string>();
    r.kind = parse_protocol_kind(j.at("kind").get<std::string>());
    r.model_name = j.at("model_name").get<std::string>();
    r.cache_key = j.at("cache_key").get<std::string>();
    r.cleaning = j.at("cleaning").get<std::string>() == "local" ? Cleaning::local : Cleaning::remote;
    for (const auto& s : j.at("steps")) r.steps.push_back({s.at("request").get<std::string>(), s.at("response").get<std::string>()});
    for (const auto& l : j.at("labels")) r.labels.insert(l.get<long long>());
    r.parse_warning = j.at("parse_warning").get<bool>();
    r.timestamp = j.at("timestamp").get<std::string>();
    r.retries = j.value("retries", 0);
    if (j.contains("error")) r.error = j.at("error").get<std::string>();
    return r;
  }

  std::string to_jsonl_line() const { return to_json().dump(); }

  friend bool operator==(const LlmRecord&, const LlmRecord&) = default;
};

/// The text the label parser reads for a record, after the cleaning its
/// protocol prescribes.
inline std::string cleaned_response(const LlmRecord& r) {
  if (r.steps.empty()) return {};
  if (r.kind == ProtocolKind::experiment1 && r.cleaning == Cleaning::local) return strip_however(r.steps.back().response);
  return r.steps.back().response;
}

inline SdgLabelSet recompute_labels(const LlmRecord& r) { return parse_sdg_labels(cleaned_response(r)); }

inline std::string cache_key(ProtocolKind kind, const std::string& model_name, const std::string& rendered_prompt) {
  std::string material = to_string(kind);
  material += '\x1f';
  material += model_name;
  material += '\x1f';
  material += rendered_prompt;
  return hex64(fnv1a64(material));
}

/// Append-only JSONL exchange cache keyed by cache_key. With an empty path
/// it lives in memory only.
class ResponseCache {
 public:
  ResponseCache() = default;

  explicit ResponseCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // created on first append
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        auto rec = LlmRecord::from_json(nlohmann::json::parse(line));
        entries_.insert_or_assign(rec.cache_key, std::move(rec));
      } catch (const std::exception& e) {
        throw InputError(path_ + ": line " + std::to_string(lineno) + ": bad cache record: " + e.what());
      }
    }
  }

  std::optional<LlmRecord> lookup(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void append(const LlmRecord& record) {
    std::lock_guard lock(mutex_);
    entries_.insert_or_assign(record.cache_key, record);
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw InputError("cannot append to cache file: " + path_);
    out << record.to_jsonl_line() << '\n';
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  std::string path_;
  std::map<std::string, LlmRecord> entries_;
  mutable std::mutex mutex_;
};

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunOptions {
  std::size_t parallelism = 4;
  /// Requests per second for the token bucket; 0 disables limiting.
  double requests_per_second = 0.0;
  RetryPolicy retry;
  /// Replay only: cache misses become per-record errors, nothing is sent.
  bool replay = false;
  std::function<std::string()> clock = utc_timestamp;
};

struct BatchResult {
  std::vector<LlmRecord> records;  // input order
  std::vector<std::string> failed_ids;
  std::size_t cache_hits = 0;
};

namespace detail {

inline LlmRecord execute_protocol(const ProtocolSpec& spec, const LabeledDocument& doc, Transport& transport,
                                  const RunOptions& options, const std::string& key) {
  LlmRecord rec;
  rec.id = doc.id;
  rec.kind = spec.kind;
  rec.model_name = spec.model_name;
  rec.cache_key = key;
  rec.cleaning = spec.cleaning;
  const ChatOptions chat{spec.model_name, spec.temperature, spec.max_tokens};
  const std::size_t steps = (spec.kind == ProtocolKind::experiment1 && spec.cleaning == Cleaning::remote) ? 2 : 1;
  std::string input = doc.text;
  for (std::size_t s = 0; s < steps; ++s) {
    const std::string prompt = render_prompt(spec, s, input);
    auto result = chat_complete({{Role::user, prompt}}, chat, transport, options.retry);
    rec.retries += result.retries;
    rec.steps.push_back({prompt, result.content});
    input = result.content;
  }
  const auto parsed = parse_sdg_labels_detailed(cleaned_response(rec));
  rec.labels = parsed.labels;
  rec.parse_warning = parsed.warning;
  rec.timestamp = options.clock();
  return rec;
}

}  // namespace detail

/// Runs a protocol over every input document, one record per input in input
/// order. Cached inputs are replayed without network traffic; failures are
/// recorded per input and do not abort the batch.
inline BatchResult run_protocol(const ProtocolSpec& spec, const Corpus& inputs, Transport* transport, ResponseCache& cache,
                                const RunOptions& options = {}) {
  spec.validate();
  if (!options.replay && transport == nullptr) throw InputError("a transport is required unless replaying");
  std::optional<RateLimitedTransport> limited;
  Transport* tx = transport;
  if (transport && options.requests_per_second > 0) {
    limited.emplace(*transport, options.requests_per_second, static_cast<double>(std::max<std::size_t>(1, options.parallelism)));
    tx = &*limited;
  }

  BatchResult result;
  result.records.resize(inputs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> hits{0};
  std::mutex error_mutex;
  std::exception_ptr fatal;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= inputs.size()) return;
      const auto& doc = inputs[i];
      LlmRecord rec;
      try {
        const std::string key = cache_key(spec.kind, spec.model_name, render_prompt(spec, 0, doc.text));
        if (auto cached = cache.lookup(key)) {
          rec = std::move(*cached);
          rec.id = doc.id;
          ++hits;
        } else if (options.replay) {
          throw TransportError(TransportError::Kind::not_cached, "no cached exchange for input");
        } else {
          rec = detail::execute_protocol(spec, doc, *tx, options, key);
          cache.append(rec);
        }
      } catch (const TransportError& e) {
        rec = LlmRecord{};
        rec.id = doc.id;
        rec.kind = spec.kind;
        rec.model_name = spec.model_name;
        rec.cleaning = spec.cleaning;
        rec.error = std::string(to_string(e.kind())) + ": " + e.what();
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        next = inputs.size();
        return;
      }
      result.records[i] = std::move(rec);
    }
  };

  const std::size_t nthreads = std::max<std::size_t>(1, std::min(options.parallelism, inputs.size()));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);
  result.cache_hits = hits;
  for (const auto& r : result.records)
    if (r.error) result.failed_ids.push_back(r.id);
  return result;
}

/// Loads LlmRecord JSONL (cache files or run outputs).
inline std::vector<LlmRecord> load_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open records file: " + path);
  std::vector<LlmRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(LlmRecord::from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw InputError(path + ": line " + std::to_string(lineno) + ": bad record: " + e.what());
    }
  }
  return out;
}

}  // namespace sdgkit
