#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace brain {

/// An indexed source file of one (system, version) snapshot.
struct SourceDocument {
    std::string doc_id;
    std::string path;  // repo-relative, '/' separated
    std::string system;
    std::string version;
    std::string content;
};

/// A bug report used as a query. fixed_files is the ground truth, sorted and unique.
struct BugReport {
    std::string bug_id;
    std::string system;
    std::string version;
    std::string title;
    std::string description;
    std::vector<std::string> fixed_files;
};

/// Ordered lowercase terms. Never contains stop words, uppercase, or non [a-z0-9] characters.
using TokenStream = std::vector<std::string>;

/// Selects which stop lists apply. Code additionally removes Java reserved words.
enum class Vocabulary { prose, code };

/// Tokenizes text for indexing and querying.
///
/// Splits on every character outside [A-Za-z0-9], then on camel-case humps
/// (including acronym runs: "HTTPServer" gives "http", "server") and on
/// letter/digit boundaries. Pieces are lowercased; pieces shorter than two
/// characters and stop words are dropped. Order is preserved.
TokenStream preprocess(std::string_view text, Vocabulary vocabulary = Vocabulary::prose);

bool is_stop_word(std::string_view lowercase_word);
bool is_java_keyword(std::string_view lowercase_word);

/// First comment line of the bundled stop list, e.g. "brain stop list: english, version 1".
std::string_view stop_list_version();

/// Deterministic id derived from (system, version, path).
std::string make_doc_id(std::string_view system, std::string_view version, std::string_view path);

/// Converts separators to '/' and strips leading "./". Used for corpus paths and ground truth alike.
std::string normalize_path(std::string_view path);

/// True for a non-empty relative path without "." or ".." components.
bool is_valid_relative_path(std::string_view path);

struct IngestOptions {
    std::vector<std::string> extensions{".java"};
};

/// Reads every file under root whose extension matches. Result is sorted by path,
/// so it does not depend on directory enumeration order. Empty files are skipped.
std::vector<SourceDocument> ingest_snapshot(const std::filesystem::path& root,
                                            std::string_view system,
                                            std::string_view version,
                                            const IngestOptions& options = {});

/// Loads a line-delimited JSON bug dataset. Blank lines are ignored.
std::vector<BugReport> load_bug_reports(const std::filesystem::path& dataset);
std::vector<BugReport> parse_bug_reports(std::istream& in, std::string_view source_name);

/// "title\n\ndescription", or just the title when the description is empty.
std::string report_text(const BugReport& report);

}  // namespace brain
