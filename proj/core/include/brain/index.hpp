#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "brain/corpus.hpp"

namespace brain {

/// Okapi BM25 saturation and length-normalization parameters (Lucene defaults).
struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// IDF(t) = ln(1 + (N - df + 0.5) / (df + 0.5)). Never negative.
double bm25_idf(std::size_t doc_count, std::size_t document_frequency);

struct DocMeta {
    std::string doc_id;
    std::string path;
    std::string system;
    std::string version;
};

struct Query {
    TokenStream tokens;
    std::optional<std::string> system_filter;
    std::optional<std::string> version_filter;
    std::size_t k = 50;
};

struct SearchHit {
    std::string doc_id;
    std::string path;
    double score = 0.0;
};

/// In-memory term -> postings store with BM25 scoring.
///
/// Immutable after build(); concurrent reads are safe. Documents keep their
/// original content so candidates can be segmented without the corpus on disk.
class InvertedIndex {
  public:
    struct Posting {
        std::uint32_t doc = 0;  // document ordinal
        std::uint32_t tf = 0;
    };

    /// Content is tokenized with Vocabulary::code. Documents whose token stream
    /// is empty are skipped with a warning. Throws IndexBuildError when nothing
    /// remains or doc ids collide.
    static InvertedIndex build(std::span<const SourceDocument> docs, Bm25Params params = {});

    /// Sum over query tokens (duplicates count again) of IDF * saturated tf.
    /// Throws LookupError for an unknown doc id.
    double bm25_score(const TokenStream& query_tokens, std::string_view doc_id) const;

    /// Top-k documents passing the filters, by score descending, then path, then doc id.
    /// Zero-score documents are excluded. Throws QueryError for an empty token list.
    std::vector<SearchHit> search(const Query& query) const;

    std::size_t doc_count() const noexcept { return docs_.size(); }
    double avg_doc_length() const noexcept { return avg_doc_length_; }
    const Bm25Params& params() const noexcept { return params_; }
    std::size_t term_count() const noexcept { return postings_.size(); }

    bool contains(std::string_view doc_id) const;
    const DocMeta& meta(std::string_view doc_id) const;
    std::size_t doc_length(std::string_view doc_id) const;
    const std::string& content(std::string_view doc_id) const;
    SourceDocument document(std::string_view doc_id) const;
    std::size_t document_frequency(std::string_view term) const;
    std::span<const Posting> postings(std::string_view term) const;

    /// Doc ids in internal (system, version, path) order.
    std::vector<std::string> doc_ids() const;

    /// Snapshot: "BRAINIDX" magic, format version, then the portable-binary body.
    void save(std::ostream& out) const;
    void save(const std::filesystem::path& file) const;
    static InvertedIndex load(std::istream& in);
    static InvertedIndex load(const std::filesystem::path& file);

    static constexpr std::string_view kMagic = "BRAINIDX";
    static constexpr std::uint32_t kFormatVersion = 1;

  private:
    struct DocRecord {
        DocMeta meta;
        std::uint32_t length = 0;
        std::string content;
    };

    std::uint32_t ordinal(std::string_view doc_id) const;
    double term_weight(std::uint32_t tf, std::uint32_t doc_length, std::size_t df) const;
    void finish();

    Bm25Params params_;
    std::vector<DocRecord> docs_;
    std::map<std::string, std::vector<Posting>, std::less<>> postings_;
    std::unordered_map<std::string, std::uint32_t> ordinal_by_id_;
    double avg_doc_length_ = 0.0;
};

InvertedIndex build_index(std::span<const SourceDocument> docs, Bm25Params params = {});

/// Snapshot files of a whole index directory, keyed by (system, version).
class IndexCatalog {
  public:
    IndexCatalog() = default;

    /// <dir>/<system>/<version>.brainidx
    static std::filesystem::path snapshot_path(const std::filesystem::path& dir,
                                               std::string_view system,
                                               std::string_view version);

    /// Loads every snapshot below dir. A missing directory gives an empty catalog.
    static IndexCatalog load_directory(const std::filesystem::path& dir);

    void add(std::string system, std::string version, InvertedIndex index);

    /// nullptr when no index exists for the pair.
    const InvertedIndex* find(std::string_view system, std::string_view version) const;
    std::size_t size() const noexcept { return indexes_.size(); }

  private:
    std::map<std::pair<std::string, std::string>, InvertedIndex> indexes_;
};

}  // namespace brain
