#include "brain/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <functional>
#include <iterator>
#include <type_traits>

#include "brain/errors.hpp"

namespace brain {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::array<std::pair<Mode, std::string_view>, 5> kModeNames = {{
    {Mode::full, "full"},
    {Mode::no_expansion, "no_expansion"},
    {Mode::no_rescoring, "no_rescoring"},
    {Mode::no_expansion_no_rescoring, "no_expansion_no_rescoring"},
    {Mode::baseline_vsm, "baseline_vsm"},
}};

std::string trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(" \t");
    return std::string(text.substr(first, last - first + 1));
}

template <typename T>
T number(const json& value, std::string_view key) {
    if (!value.is_number()) throw ConfigError(std::string(key) + " must be a number");
    if constexpr (std::is_integral_v<T>) {
        if (!value.is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
            if (value.get<long long>() < 0) throw ConfigError(std::string(key) + " must not be negative");
        }
    }
    return value.get<T>();
}

std::string text(const json& value, std::string_view key) {
    if (!value.is_string()) throw ConfigError(std::string(key) + " must be a string");
    return value.get<std::string>();
}

bool boolean(const json& value, std::string_view key) {
    if (!value.is_boolean()) throw ConfigError(std::string(key) + " must be true or false");
    return value.get<bool>();
}

using Setter = std::function<void(PipelineConfig&, const json&, std::string_view)>;

const std::vector<std::pair<std::string_view, Setter>>& setters() {
    static const std::vector<std::pair<std::string_view, Setter>> table = {
        {"corpus_root", [](auto& c, const json& v, auto k) { c.corpus_root = text(v, k); }},
        {"index_dir", [](auto& c, const json& v, auto k) { c.index_dir = text(v, k); }},
        {"cache_dir", [](auto& c, const json& v, auto k) { c.cache_dir = text(v, k); }},
        {"jobs", [](auto& c, const json& v, auto k) { c.jobs = number<std::size_t>(v, k); }},
        {"retrieval.top_k", [](auto& c, const json& v, auto k) { c.retrieval.top_k = number<std::size_t>(v, k); }},
        {"retrieval.bm25_k1", [](auto& c, const json& v, auto k) { c.retrieval.bm25.k1 = number<double>(v, k); }},
        {"retrieval.bm25_b", [](auto& c, const json& v, auto k) { c.retrieval.bm25.b = number<double>(v, k); }},
        {"segmenter.max_segment_chars",
         [](auto& c, const json& v, auto k) { c.segmenter.max_segment_chars = number<std::size_t>(v, k); }},
        {"feedback.max_segments_per_doc",
         [](auto& c, const json& v, auto k) { c.feedback.max_segments_per_doc = number<std::size_t>(v, k); }},
        {"feedback.max_prompt_chars",
         [](auto& c, const json& v, auto k) { c.feedback.max_prompt_chars = number<std::size_t>(v, k); }},
        {"feedback.best_effort", [](auto& c, const json& v, auto k) { c.feedback.best_effort = boolean(v, k); }},
        {"expansion.damping", [](auto& c, const json& v, auto k) { c.expansion.damping = number<double>(v, k); }},
        {"expansion.max_iter", [](auto& c, const json& v, auto k) { c.expansion.max_iter = number<int>(v, k); }},
        {"expansion.eps", [](auto& c, const json& v, auto k) { c.expansion.eps = number<double>(v, k); }},
        {"expansion.top_terms",
         [](auto& c, const json& v, auto k) { c.expansion.top_terms = number<std::size_t>(v, k); }},
        {"ranking.result_k", [](auto& c, const json& v, auto k) { c.ranking.result_k = number<std::size_t>(v, k); }},
        {"ranking.mode", [](auto& c, const json& v, auto k) { c.ranking.mode = parse_mode(text(v, k)); }},
        {"oracle.mode",
         [](auto& c, const json& v, auto k) {
             const std::string mode = text(v, k);
             if (mode == "mock") {
                 c.oracle.mode = OracleMode::mock;
             } else if (mode == "http") {
                 c.oracle.mode = OracleMode::http;
             } else {
                 throw ConfigError("oracle.mode must be 'mock' or 'http', got '" + mode + "'");
             }
         }},
        {"oracle.endpoint_url", [](auto& c, const json& v, auto k) { c.oracle.endpoint_url = text(v, k); }},
        {"oracle.model_name", [](auto& c, const json& v, auto k) { c.oracle.model_name = text(v, k); }},
        {"oracle.temperature", [](auto& c, const json& v, auto k) { c.oracle.temperature = number<double>(v, k); }},
        {"oracle.max_output_tokens",
         [](auto& c, const json& v, auto k) { c.oracle.max_output_tokens = number<int>(v, k); }},
        {"oracle.request_timeout_ms",
         [](auto& c, const json& v, auto k) {
             c.oracle.request_timeout = std::chrono::milliseconds(number<long long>(v, k));
         }},
        {"oracle.max_retries", [](auto& c, const json& v, auto k) { c.oracle.max_retries = number<int>(v, k); }},
        {"oracle.retry_backoff_ms",
         [](auto& c, const json& v, auto k) {
             c.oracle.retry_backoff = std::chrono::milliseconds(number<long long>(v, k));
         }},
        {"oracle.max_concurrency",
         [](auto& c, const json& v, auto k) { c.oracle.max_concurrency = number<int>(v, k); }},
        {"oracle.mock_threshold", [](auto& c, const json& v, auto k) { c.oracle.mock_threshold = number<int>(v, k); }},
        {"oracle.supports_system_role",
         [](auto& c, const json& v, auto k) { c.oracle.supports_system_role = boolean(v, k); }},
        {"oracle.api_key_env", [](auto& c, const json& v, auto k) { c.oracle.api_key_env = text(v, k); }},
    };
    return table;
}

void apply_value(PipelineConfig& config, std::string_view key, const json& value) {
    for (const auto& [name, setter] : setters()) {
        if (name == key) {
            setter(config, value, key);
            return;
        }
    }
    throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

}  // namespace

std::string_view to_string(Mode mode) {
    for (const auto& [m, name] : kModeNames) {
        if (m == mode) return name;
    }
    return "unknown";
}

Mode parse_mode(std::string_view name) {
    for (const auto& [m, n] : kModeNames) {
        if (n == name) return m;
    }
    std::string valid;
    for (const auto& [m, n] : kModeNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
    throw ConfigError("unknown mode '" + std::string(name) + "' (expected one of: " + valid + ")");
}

std::vector<Mode> parse_modes(std::string_view names) {
    std::vector<Mode> modes;
    std::size_t pos = 0;
    while (pos <= names.size()) {
        auto end = names.find(',', pos);
        if (end == std::string_view::npos) end = names.size();
        const std::string name = trim(names.substr(pos, end - pos));
        if (!name.empty()) {
            const Mode mode = parse_mode(name);
            if (std::find(modes.begin(), modes.end(), mode) == modes.end()) modes.push_back(mode);
        }
        pos = end + 1;
    }
    if (modes.empty()) throw ConfigError("no modes given");
    return modes;
}

void PipelineConfig::validate() const {
    if (retrieval.top_k == 0) throw ConfigError("retrieval.top_k must be positive");
    if (!(retrieval.bm25.k1 > 0.0)) throw ConfigError("retrieval.bm25_k1 must be positive");
    if (!(retrieval.bm25.b > 0.0 && retrieval.bm25.b <= 1.0)) throw ConfigError("retrieval.bm25_b must be in (0, 1]");
    if (!(expansion.damping > 0.0 && expansion.damping < 1.0)) throw ConfigError("expansion.damping must be in (0, 1)");
    if (expansion.max_iter < 1) throw ConfigError("expansion.max_iter must be positive");
    if (!(expansion.eps > 0.0)) throw ConfigError("expansion.eps must be positive");
    if (expansion.top_terms == 0) throw ConfigError("expansion.top_terms must be positive");
    if (ranking.result_k == 0) throw ConfigError("ranking.result_k must be positive");
    if (segmenter.max_segment_chars == 0) throw ConfigError("segmenter.max_segment_chars must be positive");
    if (feedback.max_prompt_chars == 0) throw ConfigError("feedback.max_prompt_chars must be positive");
    if (jobs == 0) throw ConfigError("jobs must be positive");
    oracle.validate();
}

std::vector<std::string_view> config_keys() {
    std::vector<std::string_view> keys;
    for (const auto& [name, setter] : setters()) keys.push_back(name);
    return keys;
}

void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value) {
    json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded() || parsed.is_object() || parsed.is_array()) parsed = std::string(value);
    apply_value(config, trim(key), parsed);
}

namespace {

void apply_object(PipelineConfig& config, const json& object, const std::string& prefix) {
    for (const auto& [key, value] : object.items()) {
        const std::string name = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object()) {
            apply_object(config, value, name);
        } else {
            apply_value(config, name, value);
        }
    }
}

}  // namespace

void apply_json(PipelineConfig& config, std::string_view json_text) {
    json doc = json::parse(json_text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ConfigError("configuration must be a JSON object");
    }
    apply_object(config, doc, "");
}

PipelineConfig load_config(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + file.string());
    const std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    PipelineConfig config;
    try {
        apply_json(config, content);
    } catch (const ConfigError& e) {
        throw ConfigError(file.string() + ": " + e.what());
    }
    const fs::path base = file.parent_path();
    for (fs::path* path : {&config.corpus_root, &config.index_dir, &config.cache_dir}) {
        if (!path->empty() && path->is_relative()) *path = base / *path;
    }
    return config;
}

}  // namespace brain
