#include "brain/corpus.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>
#include <unordered_set>

#include "brain/errors.hpp"
#include "hash.hpp"
#include "log.hpp"

namespace brain {

namespace resources {
extern const std::string_view kStopwordsEn;
extern const std::string_view kJavaKeywords;
}  // namespace resources

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct WordList {
    std::unordered_set<std::string> words;
    std::string header;
};

WordList parse_word_list(std::string_view text) {
    WordList list;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (list.header.empty()) {
                line.remove_prefix(1);
                while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
                list.header = std::string(line);
            }
            continue;
        }
        list.words.emplace(line);
    }
    return list;
}

const WordList& stop_words() {
    static const WordList list = parse_word_list(resources::kStopwordsEn);
    return list;
}

const WordList& java_keywords() {
    static const WordList list = parse_word_list(resources::kJavaKeywords);
    return list;
}

enum class CharClass { lower, upper, digit, other };

constexpr CharClass classify(char c) noexcept {
    if (c >= 'a' && c <= 'z') return CharClass::lower;
    if (c >= 'A' && c <= 'Z') return CharClass::upper;
    if (c >= '0' && c <= '9') return CharClass::digit;
    return CharClass::other;
}

// Splits an alphanumeric run at camel humps, acronym ends and letter/digit changes.
template <typename Emit>
void split_identifier(std::string_view word, Emit&& emit) {
    std::size_t start = 0;
    for (std::size_t i = 1; i < word.size(); ++i) {
        const CharClass prev = classify(word[i - 1]);
        const CharClass cur = classify(word[i]);
        bool boundary = false;
        if ((prev == CharClass::digit) != (cur == CharClass::digit)) {
            boundary = true;
        } else if (prev == CharClass::lower && cur == CharClass::upper) {
            boundary = true;
        } else if (prev == CharClass::upper && cur == CharClass::upper && i + 1 < word.size() &&
                   classify(word[i + 1]) == CharClass::lower) {
            boundary = true;  // end of an acronym: HTTP|Server
        }
        if (boundary) {
            emit(word.substr(start, i - start));
            start = i;
        }
    }
    emit(word.substr(start));
}

std::string read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IngestError("cannot read source file: " + file.string());
    std::string content{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (in.bad()) throw IngestError("error while reading source file: " + file.string());
    return content;
}

const json* find_field(const json& record, const char* name) {
    auto it = record.find(name);
    return it == record.end() ? nullptr : &*it;
}

std::string required_string(const json& record, const char* name, std::string_view where,
                            std::size_t line, bool non_empty) {
    const json* value = find_field(record, name);
    if (value == nullptr) {
        throw DatasetError(std::string(where) + ": missing field '" + name + "'", line);
    }
    if (!value->is_string()) {
        throw DatasetError(std::string(where) + ": field '" + name + "' must be a string", line);
    }
    std::string text = value->get<std::string>();
    if (non_empty && text.empty()) {
        throw DatasetError(std::string(where) + ": field '" + name + "' must not be empty", line);
    }
    return text;
}

}  // namespace

bool is_stop_word(std::string_view lowercase_word) {
    return stop_words().words.contains(std::string(lowercase_word));
}

bool is_java_keyword(std::string_view lowercase_word) {
    return java_keywords().words.contains(std::string(lowercase_word));
}

std::string_view stop_list_version() { return stop_words().header; }

TokenStream preprocess(std::string_view text, Vocabulary vocabulary) {
    TokenStream tokens;
    const auto& stops = stop_words().words;
    const auto& keywords = java_keywords().words;
    std::string piece;
    auto emit = [&](std::string_view raw) {
        if (raw.size() < 2) return;
        piece.assign(raw);
        for (char& c : piece) {
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        }
        if (stops.contains(piece)) return;
        if (vocabulary == Vocabulary::code && keywords.contains(piece)) return;
        tokens.push_back(piece);
    };

    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && classify(text[i]) == CharClass::other) ++i;
        const std::size_t start = i;
        while (i < text.size() && classify(text[i]) != CharClass::other) ++i;
        if (i > start) split_identifier(text.substr(start, i - start), emit);
    }
    return tokens;
}

std::string make_doc_id(std::string_view system, std::string_view version, std::string_view path) {
    std::string key;
    key.reserve(system.size() + version.size() + path.size() + 2);
    key.append(system).push_back('\0');
    key.append(version).push_back('\0');
    key.append(path);
    return detail::sha256_hex(key).substr(0, 16);
}

std::string normalize_path(std::string_view path) {
    std::string out;
    out.reserve(path.size());
    for (char c : path) {
        if (c == '\\') c = '/';
        if (c == '/' && !out.empty() && out.back() == '/') continue;
        out.push_back(c);
    }
    while (out.starts_with("./")) out.erase(0, 2);
    return out;
}

bool is_valid_relative_path(std::string_view path) {
    if (path.empty() || path.front() == '/' || path.back() == '/') return false;
    if (path.size() >= 2 && path[1] == ':') return false;  // drive letter
    std::size_t pos = 0;
    while (pos <= path.size()) {
        std::size_t end = path.find('/', pos);
        if (end == std::string_view::npos) end = path.size();
        const std::string_view part = path.substr(pos, end - pos);
        if (part.empty() || part == "." || part == "..") return false;
        pos = end + 1;
    }
    return true;
}

std::vector<SourceDocument> ingest_snapshot(const fs::path& root, std::string_view system,
                                            std::string_view version, const IngestOptions& options) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw IngestError("snapshot root is missing or not a directory: " + root.string());
    }

    std::vector<fs::path> files;
    fs::recursive_directory_iterator it(root, fs::directory_options::none, ec);
    if (ec) throw IngestError("cannot read snapshot root " + root.string() + ": " + ec.message());
    for (const fs::recursive_directory_iterator end; it != end; it.increment(ec)) {
        if (ec) throw IngestError("cannot read snapshot root " + root.string() + ": " + ec.message());
        if (!it->is_regular_file(ec)) continue;
        const std::string ext = it->path().extension().string();
        if (std::find(options.extensions.begin(), options.extensions.end(), ext) ==
            options.extensions.end()) {
            continue;
        }
        files.push_back(it->path());
    }

    std::vector<SourceDocument> docs;
    docs.reserve(files.size());
    for (const auto& file : files) {
        std::string content = read_file(file);
        std::string path = normalize_path(fs::relative(file, root).generic_string());
        if (content.empty()) {
            detail::log().debug("skipping empty file {}", path);
            continue;
        }
        SourceDocument doc;
        doc.doc_id = make_doc_id(system, version, path);
        doc.path = std::move(path);
        doc.system = std::string(system);
        doc.version = std::string(version);
        doc.content = std::move(content);
        docs.push_back(std::move(doc));
    }
    if (docs.empty()) {
        throw EmptyCorpusError("no matching non-empty source files under " + root.string());
    }
    std::sort(docs.begin(), docs.end(),
              [](const SourceDocument& a, const SourceDocument& b) { return a.path < b.path; });
    return docs;
}

std::vector<BugReport> parse_bug_reports(std::istream& in, std::string_view source_name) {
    std::vector<BugReport> reports;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        const std::string where = std::string(source_name) + ":" + std::to_string(line_no);
        json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (record.is_discarded() || !record.is_object()) {
            throw DatasetError(where + ": malformed record (expected a JSON object)", line_no);
        }

        BugReport report;
        report.bug_id = required_string(record, "bug_id", where, line_no, true);
        report.system = required_string(record, "system", where, line_no, true);
        report.version = required_string(record, "version", where, line_no, true);
        report.title = required_string(record, "title", where, line_no, true);
        if (const json* description = find_field(record, "description");
            description != nullptr && !description->is_null()) {
            if (!description->is_string()) {
                throw DatasetError(where + ": field 'description' must be a string", line_no);
            }
            report.description = description->get<std::string>();
        }

        const json* fixed = find_field(record, "fixed_files");
        if (fixed == nullptr) throw DatasetError(where + ": missing field 'fixed_files'", line_no);
        if (!fixed->is_array()) {
            throw DatasetError(where + ": field 'fixed_files' must be an array", line_no);
        }
        for (const json& entry : *fixed) {
            if (!entry.is_string()) {
                throw DatasetError(where + ": fixed_files entries must be strings", line_no);
            }
            std::string path = normalize_path(entry.get<std::string>());
            if (!is_valid_relative_path(path)) {
                throw DatasetError(where + ": invalid relative path in fixed_files: '" +
                                       entry.get<std::string>() + "'",
                                   line_no);
            }
            report.fixed_files.push_back(std::move(path));
        }
        std::sort(report.fixed_files.begin(), report.fixed_files.end());
        report.fixed_files.erase(std::unique(report.fixed_files.begin(), report.fixed_files.end()),
                                 report.fixed_files.end());

        if (!seen.insert(report.bug_id).second) {
            throw DatasetError(where + ": duplicate bug_id '" + report.bug_id + "'", line_no);
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

std::vector<BugReport> load_bug_reports(const fs::path& dataset) {
    std::ifstream in(dataset, std::ios::binary);
    if (!in) throw DatasetError("cannot open dataset: " + dataset.string(), 0);
    return parse_bug_reports(in, dataset.string());
}

std::string report_text(const BugReport& report) {
    if (report.description.empty()) return report.title;
    return report.title + "\n\n" + report.description;
}

}  // namespace brain
