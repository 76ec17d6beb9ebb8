#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "brain/feedback.hpp"
#include "brain/index.hpp"
#include "brain/segmenter.hpp"

namespace brain {

enum class Mode { full, no_expansion, no_rescoring, no_expansion_no_rescoring, baseline_vsm };

std::string_view to_string(Mode mode);
/// Throws ConfigError for an unknown name.
Mode parse_mode(std::string_view name);
/// Comma-separated list of mode names.
std::vector<Mode> parse_modes(std::string_view names);

struct RetrievalConfig {
    std::size_t top_k = 50;
    Bm25Params bm25;
};

struct ExpansionConfig {
    double damping = 0.85;
    int max_iter = 100;
    double eps = 1e-6;
    std::size_t top_terms = 10;
};

struct RankingConfig {
    std::size_t result_k = 10;
    Mode mode = Mode::full;
};

struct FeedbackConfig {
    std::size_t max_segments_per_doc = 0;  // 0 = unlimited
    std::size_t max_prompt_chars = kDefaultPromptBudget;
    bool best_effort = false;
};

/// Everything a run needs. Loaded from a JSON object with flat dotted keys
/// ("retrieval.top_k": 50); command-line overrides use the same keys.
struct PipelineConfig {
    std::filesystem::path corpus_root;
    std::filesystem::path index_dir = "index";
    std::filesystem::path cache_dir;  // empty: no on-disk verdict cache
    RetrievalConfig retrieval;
    SegmenterOptions segmenter;
    FeedbackConfig feedback;
    ExpansionConfig expansion;
    RankingConfig ranking;
    OracleConfig oracle;
    std::size_t jobs = 1;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
};

/// Every key accepted by apply_setting, in documentation order.
std::vector<std::string_view> config_keys();

/// Sets one dotted key. The value is parsed as JSON when possible, otherwise
/// taken as a bare string ("oracle.mode=mock" and "oracle.mode=\"mock\"" agree).
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value);

/// Applies a JSON object of dotted keys on top of the current values.
void apply_json(PipelineConfig& config, std::string_view json_text);

/// Defaults overlaid with the file. Relative paths resolve against the file's directory.
PipelineConfig load_config(const std::filesystem::path& file);

}  // namespace brain
