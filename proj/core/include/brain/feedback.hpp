#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "brain/corpus.hpp"
#include "brain/segmenter.hpp"

namespace brain {

// ---------------------------------------------------------------------------
// Prompt

/// Chat-style prompt asking whether a code segment causes a reported bug.
struct Prompt {
    std::string system_text;  // empty when the model has no system role
    std::string user_text;
    bool supports_system_role = true;
    // Values substituted into the template slots (after any truncation).
    std::string report_slot;
    std::string segment_slot;
};

inline constexpr std::size_t kDefaultPromptBudget = 32000;

/// Fixed instruction block of the relevance prompt.
std::string_view relevance_instructions();

/// Fills the relevance template. Without a system role the instructions are
/// prepended to the user block. If system + user text exceeds max_prompt_chars,
/// only the code segment slot is shortened.
Prompt build_prompt(const BugReport& report, const CodeSegment& segment,
                    bool supports_system_role, std::size_t max_prompt_chars = kDefaultPromptBudget);

// ---------------------------------------------------------------------------
// Oracle

enum class OracleMode { http, mock };

struct OracleConfig {
    OracleMode mode = OracleMode::mock;
    std::string endpoint_url;  // e.g. http://localhost:8000/v1/chat/completions
    std::string model_name = "mock";
    double temperature = 0.0;
    int max_output_tokens = 64;
    std::chrono::milliseconds request_timeout{60000};
    int max_retries = 3;
    std::chrono::milliseconds retry_backoff{500};  // doubled after every failed attempt
    int max_concurrency = 4;
    int mock_threshold = 3;  // shared distinct tokens needed for a mock "yes"
    bool supports_system_role = true;
    std::string api_key_env = "BRAIN_ORACLE_API_KEY";

    /// Throws ConfigError when http mode lacks endpoint/model or numbers are out of range.
    void validate() const;
};

/// Something that answers a relevance prompt with free text. Implementations are thread-safe.
class RelevanceOracle {
  public:
    virtual ~RelevanceOracle() = default;
    virtual std::string complete(const Prompt& prompt) = 0;
    virtual std::string model_name() const = 0;
};

/// Offline oracle: answers yes iff report and segment share at least
/// `threshold` distinct code-vocabulary tokens.
class MockOracle final : public RelevanceOracle {
  public:
    explicit MockOracle(int threshold = 3) : threshold_(threshold) {}
    std::string complete(const Prompt& prompt) override;
    std::string model_name() const override { return "mock"; }

  private:
    int threshold_;
};

/// Chat-completion client. Retries timeouts, network failures and non-2xx
/// statuses up to max_retries with exponential backoff; 401/403 fail immediately.
class HttpOracle final : public RelevanceOracle {
  public:
    explicit HttpOracle(OracleConfig config);
    std::string complete(const Prompt& prompt) override;
    std::string model_name() const override { return config_.model_name; }

    /// Request body sent for a prompt (exposed for tests and diagnostics).
    std::string request_body(const Prompt& prompt) const;

  private:
    OracleConfig config_;
    std::string scheme_host_port_;
    std::string path_;
    std::string api_key_;
};

std::unique_ptr<RelevanceOracle> make_oracle(const OracleConfig& config);

/// One-shot convenience wrapper around make_oracle(config)->complete(prompt).
std::string query_oracle(const Prompt& prompt, const OracleConfig& config);

// ---------------------------------------------------------------------------
// Verdicts

struct SegmentRef {
    std::string doc_id;
    std::size_t segment_index = 0;
};

enum class VerdictSource { json, string_match, default_irrelevant };

std::string_view to_string(VerdictSource source);

struct RelevanceVerdict {
    SegmentRef segment_ref;
    bool relevant = false;
    VerdictSource source = VerdictSource::default_irrelevant;
    std::string raw_response;
};

/// Total: every input yields a verdict.
///  1. A JSON object with "relevance" equal to yes/no (any case) -> json.
///  2. Otherwise the first standalone "yes" or "no" word (any case) -> string_match.
///  3. Otherwise irrelevant -> default_irrelevant.
RelevanceVerdict parse_verdict(std::string_view raw);

/// OR over segment verdicts; false for none. Throws ContractViolation when doc ids differ.
bool document_relevance(std::span<const RelevanceVerdict> verdicts);

// ---------------------------------------------------------------------------
// Cache

/// Content-addressed on-disk store of oracle responses, keyed by hash(model, prompt).
/// Writes go through a temporary file and an atomic rename, so concurrent use is safe.
class VerdictCache {
  public:
    explicit VerdictCache(std::filesystem::path dir);

    static std::string key_for(const Prompt& prompt, std::string_view model_name);

    std::optional<RelevanceVerdict> get(const std::string& key) const;
    void put(const std::string& key, const RelevanceVerdict& verdict) const;

    const std::filesystem::path& dir() const noexcept { return dir_; }

  private:
    std::filesystem::path entry_path(const std::string& key) const;
    std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Judging candidates

struct FeedbackOptions {
    bool supports_system_role = true;
    std::size_t max_prompt_chars = kDefaultPromptBudget;
    std::size_t max_segments_per_doc = 0;  // 0 = unlimited
    std::size_t concurrency = 4;
    bool best_effort = false;  // unjudged segments become irrelevant instead of failing
};

struct CandidateSegments {
    std::string doc_id;
    std::vector<CodeSegment> segments;
};

struct FeedbackResult {
    std::vector<std::vector<RelevanceVerdict>> verdicts;  // parallel to the candidates
    std::vector<bool> relevant;                          // document_relevance per candidate
    bool degraded = false;
};

/// Runs the oracle over every (report, segment) pair of a candidate list.
///
/// Calls run concurrently up to options.concurrency; results come back in
/// candidate order regardless of completion order. Responses are memoized in
/// memory and, when a cache is given, on disk.
class FeedbackEngine {
  public:
    FeedbackEngine(RelevanceOracle& oracle, FeedbackOptions options,
                   std::shared_ptr<const VerdictCache> cache = nullptr);

    FeedbackResult judge(const BugReport& report, std::span<const CandidateSegments> candidates);

    std::size_t oracle_calls() const noexcept { return oracle_calls_.load(); }
    std::size_t cache_hits() const noexcept { return cache_hits_.load(); }
    const FeedbackOptions& options() const noexcept { return options_; }

  private:
    RelevanceVerdict judge_one(const BugReport& report, const CodeSegment& segment, SegmentRef ref);

    RelevanceOracle& oracle_;
    FeedbackOptions options_;
    std::shared_ptr<const VerdictCache> cache_;
    std::mutex memo_mutex_;
    std::unordered_map<std::string, RelevanceVerdict> memo_;
    std::atomic<std::size_t> oracle_calls_{0};
    std::atomic<std::size_t> cache_hits_{0};
};

}  // namespace brain
