#include "brain/feedback.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "brain/errors.hpp"
#include "hash.hpp"
#include "log.hpp"

namespace brain {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Prompt

namespace {

constexpr std::string_view kInstructions =
    "You are a helpful AI software engineer specializing in identifying buggy code segments given a "
    "bug report. Analyze the provided bug report and the JAVA code segment to determine if the code "
    "segment is responsible for causing the bug described in the bug report. You need to understand "
    "the functionality of the code segment and the details of the bug report to determine the "
    "relevance of the code segment to the bug report.\n"
    "\n"
    "There are two possible outputs: 'yes', 'no'.\n"
    "- 'yes': The code is responsible for the bug described in the bug report.\n"
    "- 'no': The code is NOT responsible for the bug described in the bug report.\n"
    "\n"
    "Provide your output in JSON format like this sample: {\"relevance\": \"yes\"}.\n"
    "\n"
    "Act like a rational software engineer and provide output. Avoid emotion and extra text other "
    "than JSON.";

constexpr std::string_view kUserHead = "Analyze the following bug report and code segment:\n\nBug Report: ";
constexpr std::string_view kUserMiddle = "\nCode Segment: ";
constexpr std::string_view kUserTail =
    "\n\nPlease determine if the code segment is responsible for the bug described in the bug report.";
constexpr std::string_view kSlotTruncated = "\n// ... [truncated to fit the prompt]";
constexpr std::string_view kRoleJoin = "\n\n";

std::string compose_user(std::string_view report, std::string_view segment) {
    std::string user;
    user.reserve(kUserHead.size() + report.size() + kUserMiddle.size() + segment.size() + kUserTail.size());
    user.append(kUserHead).append(report).append(kUserMiddle).append(segment).append(kUserTail);
    return user;
}

std::string truncate_utf8(std::string_view text, std::size_t limit) {
    std::size_t cut = std::min(limit, text.size());
    while (cut > 0 && cut < text.size() && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
    return std::string(text.substr(0, cut));
}

}  // namespace

std::string_view relevance_instructions() { return kInstructions; }

Prompt build_prompt(const BugReport& report, const CodeSegment& segment, bool supports_system_role,
                    std::size_t max_prompt_chars) {
    if (segment.body_text.empty()) throw ContractViolation("cannot build a prompt for an empty code segment");

    Prompt prompt;
    prompt.supports_system_role = supports_system_role;
    prompt.report_slot = report_text(report);
    prompt.segment_slot = segment.body_text;

    const std::size_t fixed = kInstructions.size() + (supports_system_role ? 0 : kRoleJoin.size()) +
                              kUserHead.size() + prompt.report_slot.size() + kUserMiddle.size() +
                              kUserTail.size();
    if (fixed + prompt.segment_slot.size() > max_prompt_chars) {
        const std::size_t room = max_prompt_chars > fixed + kSlotTruncated.size()
                                     ? max_prompt_chars - fixed - kSlotTruncated.size()
                                     : 0;
        prompt.segment_slot = truncate_utf8(prompt.segment_slot, room);
        prompt.segment_slot += kSlotTruncated;
    }

    std::string user = compose_user(prompt.report_slot, prompt.segment_slot);
    if (supports_system_role) {
        prompt.system_text = std::string(kInstructions);
        prompt.user_text = std::move(user);
    } else {
        prompt.user_text.reserve(kInstructions.size() + kRoleJoin.size() + user.size());
        prompt.user_text.append(kInstructions).append(kRoleJoin).append(user);
    }
    return prompt;
}

// ---------------------------------------------------------------------------
// Oracles

void OracleConfig::validate() const {
    if (mode == OracleMode::http) {
        if (endpoint_url.empty()) throw ConfigError("oracle.endpoint_url is required in http mode");
        if (model_name.empty()) throw ConfigError("oracle.model_name is required in http mode");
    }
    if (!(temperature >= 0.0)) throw ConfigError("oracle.temperature must be >= 0");
    if (max_output_tokens < 1) throw ConfigError("oracle.max_output_tokens must be positive");
    if (max_retries < 0) throw ConfigError("oracle.max_retries must be >= 0");
    if (max_concurrency < 1) throw ConfigError("oracle.max_concurrency must be positive");
    if (mock_threshold < 1) throw ConfigError("oracle.mock_threshold must be positive");
    if (request_timeout.count() <= 0) throw ConfigError("oracle.request_timeout must be positive");
    if (retry_backoff.count() < 0) throw ConfigError("oracle.retry_backoff_ms must be >= 0");
}

std::string MockOracle::complete(const Prompt& prompt) {
    const TokenStream report = preprocess(prompt.report_slot, Vocabulary::code);
    const TokenStream segment = preprocess(prompt.segment_slot, Vocabulary::code);
    const std::unordered_set<std::string> in_segment(segment.begin(), segment.end());
    std::unordered_set<std::string> shared;
    for (const auto& token : report) {
        if (in_segment.contains(token)) shared.insert(token);
    }
    const bool relevant = static_cast<int>(shared.size()) >= threshold_;
    return relevant ? R"({"relevance": "yes"})" : R"({"relevance": "no"})";
}

HttpOracle::HttpOracle(OracleConfig config) : config_(std::move(config)) {
    config_.mode = OracleMode::http;
    config_.validate();
    const std::string& url = config_.endpoint_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("oracle.endpoint_url must start with http:// or https://: " + url);
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("unsupported oracle endpoint scheme: " + scheme);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr) api_key_ = key;
}

std::string HttpOracle::request_body(const Prompt& prompt) const {
    json messages = json::array();
    if (prompt.supports_system_role && !prompt.system_text.empty()) {
        messages.push_back({{"role", "system"}, {"content", prompt.system_text}});
    }
    messages.push_back({{"role", "user"}, {"content", prompt.user_text}});
    json body = {{"model", config_.model_name},
                 {"messages", std::move(messages)},
                 {"temperature", config_.temperature},
                 {"max_tokens", config_.max_output_tokens}};
    return body.dump();
}

namespace {

std::string assistant_text(const std::string& body) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return body;
    auto choices = doc.find("choices");
    if (choices == doc.end() || !choices->is_array() || choices->empty()) return body;
    const json& first = (*choices)[0];
    if (auto message = first.find("message"); message != first.end() && message->is_object()) {
        if (auto content = message->find("content"); content != message->end() && content->is_string()) {
            return content->get<std::string>();
        }
    }
    if (auto text = first.find("text"); text != first.end() && text->is_string()) {
        return text->get<std::string>();
    }
    return body;
}

}  // namespace

std::string HttpOracle::complete(const Prompt& prompt) {
    const std::string body = request_body(prompt);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto timeout = config_.request_timeout;
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);

    std::string last_error;
    auto backoff = config_.retry_backoff;
    const int attempts = config_.max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(seconds.count(), static_cast<time_t>(micros.count()));
        client.set_read_timeout(seconds.count(), static_cast<time_t>(micros.count()));
        client.set_write_timeout(seconds.count(), static_cast<time_t>(micros.count()));
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
        } else if (res->status == 401 || res->status == 403) {
            throw OracleAuthError("oracle rejected credentials (HTTP " + std::to_string(res->status) +
                                  "); check " + config_.api_key_env);
        } else if (res->status >= 200 && res->status < 300) {
            return assistant_text(res->body);
        } else {
            last_error = "HTTP status " + std::to_string(res->status);
        }
        detail::log().debug("oracle attempt {}/{} failed: {}", attempt + 1, attempts, last_error);
    }
    throw OracleUnavailableError("oracle unavailable after " + std::to_string(attempts) +
                                 " attempt(s): " + last_error);
}

std::unique_ptr<RelevanceOracle> make_oracle(const OracleConfig& config) {
    config.validate();
    if (config.mode == OracleMode::mock) return std::make_unique<MockOracle>(config.mock_threshold);
    return std::make_unique<HttpOracle>(config);
}

std::string query_oracle(const Prompt& prompt, const OracleConfig& config) {
    return make_oracle(config)->complete(prompt);
}

// ---------------------------------------------------------------------------
// Verdicts

std::string_view to_string(VerdictSource source) {
    switch (source) {
        case VerdictSource::json: return "json";
        case VerdictSource::string_match: return "string_match";
        case VerdictSource::default_irrelevant: return "default_irrelevant";
    }
    return "unknown";
}

namespace {

std::string ascii_lower(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

std::optional<bool> json_verdict(std::string_view raw) {
    json doc = json::parse(raw.begin(), raw.end(), nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
    auto it = doc.find("relevance");
    if (it == doc.end() || !it->is_string()) return std::nullopt;
    const std::string value = ascii_lower(it->get<std::string>());
    if (value == "yes") return true;
    if (value == "no") return false;
    return std::nullopt;
}

std::optional<bool> first_yes_no(std::string_view raw) {
    std::size_t i = 0;
    while (i < raw.size()) {
        while (i < raw.size() && !is_word_char(raw[i])) ++i;
        const std::size_t start = i;
        while (i < raw.size() && is_word_char(raw[i])) ++i;
        const std::size_t length = i - start;
        if (length == 2 || length == 3) {
            const std::string word = ascii_lower(raw.substr(start, length));
            if (word == "yes") return true;
            if (word == "no") return false;
        }
    }
    return std::nullopt;
}

}  // namespace

RelevanceVerdict parse_verdict(std::string_view raw) {
    RelevanceVerdict verdict;
    verdict.raw_response = std::string(raw);
    try {
        if (auto v = json_verdict(raw)) {
            verdict.relevant = *v;
            verdict.source = VerdictSource::json;
            return verdict;
        }
    } catch (const std::exception&) {
        // Treated as unparseable; fall through to string matching.
    }
    if (auto v = first_yes_no(raw)) {
        verdict.relevant = *v;
        verdict.source = VerdictSource::string_match;
        return verdict;
    }
    verdict.relevant = false;
    verdict.source = VerdictSource::default_irrelevant;
    return verdict;
}

bool document_relevance(std::span<const RelevanceVerdict> verdicts) {
    bool relevant = false;
    for (const auto& v : verdicts) {
        if (v.segment_ref.doc_id != verdicts.front().segment_ref.doc_id) {
            throw ContractViolation("document_relevance: verdicts reference different documents (" +
                                    verdicts.front().segment_ref.doc_id + ", " + v.segment_ref.doc_id + ")");
        }
        relevant = relevant || v.relevant;
    }
    return relevant;
}

// ---------------------------------------------------------------------------
// Cache

VerdictCache::VerdictCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

std::string VerdictCache::key_for(const Prompt& prompt, std::string_view model_name) {
    std::string material;
    material.reserve(model_name.size() + prompt.system_text.size() + prompt.user_text.size() + 8);
    material.append(model_name).push_back('\0');
    material.push_back(prompt.supports_system_role ? '1' : '0');
    material.push_back('\0');
    material.append(prompt.system_text).push_back('\0');
    material.append(prompt.user_text);
    return detail::sha256_hex(material);
}

fs::path VerdictCache::entry_path(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<RelevanceVerdict> VerdictCache::get(const std::string& key) const {
    std::ifstream in(entry_path(key), std::ios::binary);
    if (!in) return std::nullopt;
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
    try {
        RelevanceVerdict verdict = parse_verdict(doc.at("raw_response").get<std::string>());
        const std::string source = doc.at("source").get<std::string>();
        if (source != to_string(verdict.source) || doc.at("relevant").get<bool>() != verdict.relevant) {
            return std::nullopt;  // written by an incompatible parser
        }
        return verdict;
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

void VerdictCache::put(const std::string& key, const RelevanceVerdict& verdict) const {
    const fs::path path = entry_path(key);
    fs::create_directories(path.parent_path());
    json doc = {{"raw_response", verdict.raw_response},
                {"relevant", verdict.relevant},
                {"source", std::string(to_string(verdict.source))}};
    std::ostringstream suffix;
    suffix << ".tmp" << std::hash<std::thread::id>{}(std::this_thread::get_id());
    const fs::path tmp = path.string() + suffix.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            detail::log().warn("cannot write verdict cache entry {}", tmp.string());
            return;
        }
        out << doc.dump();
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        detail::log().warn("cannot commit verdict cache entry {}: {}", path.string(), ec.message());
        fs::remove(tmp, ec);
    }
}

// ---------------------------------------------------------------------------
// Engine

FeedbackEngine::FeedbackEngine(RelevanceOracle& oracle, FeedbackOptions options,
                               std::shared_ptr<const VerdictCache> cache)
    : oracle_(oracle), options_(options), cache_(std::move(cache)) {
    if (options_.concurrency == 0) options_.concurrency = 1;
}

RelevanceVerdict FeedbackEngine::judge_one(const BugReport& report, const CodeSegment& segment,
                                           SegmentRef ref) {
    const Prompt prompt =
        build_prompt(report, segment, options_.supports_system_role, options_.max_prompt_chars);
    const std::string key = VerdictCache::key_for(prompt, oracle_.model_name());

    auto finish = [&](RelevanceVerdict verdict) {
        verdict.segment_ref = std::move(ref);
        return verdict;
    };
    {
        std::lock_guard lock(memo_mutex_);
        if (auto it = memo_.find(key); it != memo_.end()) return finish(it->second);
    }
    if (cache_) {
        if (auto cached = cache_->get(key)) {
            ++cache_hits_;
            std::lock_guard lock(memo_mutex_);
            memo_.emplace(key, *cached);
            return finish(std::move(*cached));
        }
    }
    ++oracle_calls_;
    RelevanceVerdict verdict = parse_verdict(oracle_.complete(prompt));
    if (cache_) cache_->put(key, verdict);
    {
        std::lock_guard lock(memo_mutex_);
        memo_.emplace(key, verdict);
    }
    return finish(std::move(verdict));
}

FeedbackResult FeedbackEngine::judge(const BugReport& report, std::span<const CandidateSegments> candidates) {
    struct Task {
        std::size_t doc;
        std::size_t segment;
    };
    std::vector<Task> tasks;
    FeedbackResult result;
    result.verdicts.resize(candidates.size());
    for (std::size_t d = 0; d < candidates.size(); ++d) {
        std::size_t count = candidates[d].segments.size();
        if (options_.max_segments_per_doc > 0) count = std::min(count, options_.max_segments_per_doc);
        result.verdicts[d].resize(count);
        for (std::size_t s = 0; s < count; ++s) tasks.push_back(Task{d, s});
    }

    std::vector<std::exception_ptr> failures(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++) {
            const auto& [d, s] = tasks[t];
            const CandidateSegments& candidate = candidates[d];
            try {
                result.verdicts[d][s] = judge_one(report, candidate.segments[s], SegmentRef{candidate.doc_id, s});
            } catch (const OracleAuthError& e) {
                failures[t] = std::make_exception_ptr(OracleAuthError(e.what(), candidate.doc_id, s));
            } catch (const OracleUnavailableError& e) {
                failures[t] = std::make_exception_ptr(
                    OracleUnavailableError(std::string(e.what()) + " [segment " + candidate.doc_id + "#" +
                                               std::to_string(s) + "]",
                                           candidate.doc_id, s));
            } catch (...) {
                failures[t] = std::current_exception();
            }
        }
    };

    const std::size_t workers = std::min(options_.concurrency, tasks.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (!failures[t]) continue;
        bool oracle_failure = false;
        try {
            std::rethrow_exception(failures[t]);
        } catch (const OracleAuthError&) {
            if (!options_.best_effort) throw;
            oracle_failure = true;
        } catch (const OracleUnavailableError&) {
            if (!options_.best_effort) throw;
            oracle_failure = true;
        }
        if (oracle_failure) {
            const auto& [d, s] = tasks[t];
            RelevanceVerdict& verdict = result.verdicts[d][s];
            verdict = RelevanceVerdict{};
            verdict.segment_ref = SegmentRef{candidates[d].doc_id, s};
            result.degraded = true;
        }
    }

    result.relevant.reserve(candidates.size());
    for (const auto& verdicts : result.verdicts) {
        result.relevant.push_back(!verdicts.empty() && document_relevance(verdicts));
    }
    return result;
}

}  // namespace brain
