#include "brain/index.hpp"

#include <cereal/archives/portable_binary.hpp>
#include <cereal/types/string.hpp>
#include <cereal/types/utility.hpp>
#include <cereal/types/vector.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <tuple>
#include <unordered_map>

#include "brain/errors.hpp"
#include "log.hpp"

namespace brain {

namespace fs = std::filesystem;

double bm25_idf(std::size_t doc_count, std::size_t document_frequency) {
    const double n = static_cast<double>(doc_count);
    const double df = static_cast<double>(document_frequency);
    return std::max(0.0, std::log(1.0 + (n - df + 0.5) / (df + 0.5)));
}

InvertedIndex InvertedIndex::build(std::span<const SourceDocument> docs, Bm25Params params) {
    if (docs.empty()) throw IndexBuildError("cannot build an index from zero documents");

    std::vector<const SourceDocument*> order;
    order.reserve(docs.size());
    for (const auto& doc : docs) order.push_back(&doc);
    std::sort(order.begin(), order.end(), [](const SourceDocument* a, const SourceDocument* b) {
        return std::tie(a->system, a->version, a->path, a->doc_id) <
               std::tie(b->system, b->version, b->path, b->doc_id);
    });

    InvertedIndex index;
    index.params_ = params;
    for (const SourceDocument* doc : order) {
        TokenStream tokens = preprocess(doc->content, Vocabulary::code);
        if (tokens.empty()) {
            detail::log().warn("document {} ({}) has no indexable terms; skipped", doc->path,
                               doc->doc_id);
            continue;
        }
        if (index.ordinal_by_id_.contains(doc->doc_id)) {
            throw IndexBuildError("duplicate doc_id " + doc->doc_id + " (" + doc->path + ")");
        }
        const auto ord = static_cast<std::uint32_t>(index.docs_.size());
        index.ordinal_by_id_.emplace(doc->doc_id, ord);

        std::unordered_map<std::string_view, std::uint32_t> tf;
        for (const auto& token : tokens) ++tf[token];
        for (const auto& [term, count] : tf) {
            auto it = index.postings_.find(term);
            if (it == index.postings_.end()) {
                it = index.postings_.emplace(std::string(term), std::vector<Posting>{}).first;
            }
            it->second.push_back(Posting{ord, count});
        }

        DocRecord record;
        record.meta = DocMeta{doc->doc_id, doc->path, doc->system, doc->version};
        record.length = static_cast<std::uint32_t>(tokens.size());
        record.content = doc->content;
        index.docs_.push_back(std::move(record));
    }
    if (index.docs_.empty()) {
        throw IndexBuildError("no document has indexable terms");
    }
    index.finish();
    return index;
}

InvertedIndex build_index(std::span<const SourceDocument> docs, Bm25Params params) {
    return InvertedIndex::build(docs, params);
}

void InvertedIndex::finish() {
    double total = 0.0;
    for (const auto& doc : docs_) total += doc.length;
    avg_doc_length_ = total / static_cast<double>(docs_.size());
    if (ordinal_by_id_.size() != docs_.size()) {
        ordinal_by_id_.clear();
        for (std::uint32_t i = 0; i < docs_.size(); ++i) ordinal_by_id_.emplace(docs_[i].meta.doc_id, i);
    }
}

std::uint32_t InvertedIndex::ordinal(std::string_view doc_id) const {
    auto it = ordinal_by_id_.find(std::string(doc_id));
    if (it == ordinal_by_id_.end()) throw LookupError("unknown doc_id: " + std::string(doc_id));
    return it->second;
}

double InvertedIndex::term_weight(std::uint32_t tf, std::uint32_t doc_length, std::size_t df) const {
    const double f = static_cast<double>(tf);
    const double norm = 1.0 - params_.b + params_.b * static_cast<double>(doc_length) / avg_doc_length_;
    return bm25_idf(docs_.size(), df) * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
}

double InvertedIndex::bm25_score(const TokenStream& query_tokens, std::string_view doc_id) const {
    const std::uint32_t ord = ordinal(doc_id);
    const std::uint32_t length = docs_[ord].length;
    double score = 0.0;
    for (const auto& token : query_tokens) {
        auto it = postings_.find(token);
        if (it == postings_.end()) continue;
        const auto& list = it->second;
        auto pos = std::lower_bound(list.begin(), list.end(), ord,
                                    [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        if (pos == list.end() || pos->doc != ord) continue;
        score += term_weight(pos->tf, length, list.size());
    }
    return score;
}

std::vector<SearchHit> InvertedIndex::search(const Query& query) const {
    if (query.tokens.empty()) throw QueryError("query has no searchable terms");
    if (query.k == 0) throw QueryError("k must be at least 1");

    std::vector<double> scores(docs_.size(), 0.0);
    for (const auto& token : query.tokens) {
        auto it = postings_.find(token);
        if (it == postings_.end()) continue;
        const std::size_t df = it->second.size();
        for (const Posting& p : it->second) {
            scores[p.doc] += term_weight(p.tf, docs_[p.doc].length, df);
        }
    }

    std::vector<std::uint32_t> hits;
    for (std::uint32_t d = 0; d < docs_.size(); ++d) {
        if (scores[d] <= 0.0) continue;
        const DocMeta& meta = docs_[d].meta;
        if (query.system_filter && meta.system != *query.system_filter) continue;
        if (query.version_filter && meta.version != *query.version_filter) continue;
        hits.push_back(d);
    }

    auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        const DocMeta& ma = docs_[a].meta;
        const DocMeta& mb = docs_[b].meta;
        if (ma.path != mb.path) return ma.path < mb.path;
        return ma.doc_id < mb.doc_id;
    };
    const std::size_t k = std::min(query.k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);

    std::vector<SearchHit> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const DocMeta& meta = docs_[hits[i]].meta;
        out.push_back(SearchHit{meta.doc_id, meta.path, scores[hits[i]]});
    }
    return out;
}

bool InvertedIndex::contains(std::string_view doc_id) const {
    return ordinal_by_id_.contains(std::string(doc_id));
}

const DocMeta& InvertedIndex::meta(std::string_view doc_id) const { return docs_[ordinal(doc_id)].meta; }

std::size_t InvertedIndex::doc_length(std::string_view doc_id) const {
    return docs_[ordinal(doc_id)].length;
}

const std::string& InvertedIndex::content(std::string_view doc_id) const {
    return docs_[ordinal(doc_id)].content;
}

SourceDocument InvertedIndex::document(std::string_view doc_id) const {
    const DocRecord& record = docs_[ordinal(doc_id)];
    return SourceDocument{record.meta.doc_id, record.meta.path, record.meta.system,
                          record.meta.version, record.content};
}

std::size_t InvertedIndex::document_frequency(std::string_view term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

std::span<const InvertedIndex::Posting> InvertedIndex::postings(std::string_view term) const {
    auto it = postings_.find(term);
    if (it == postings_.end()) return {};
    return it->second;
}

std::vector<std::string> InvertedIndex::doc_ids() const {
    std::vector<std::string> ids;
    ids.reserve(docs_.size());
    for (const auto& doc : docs_) ids.push_back(doc.meta.doc_id);
    return ids;
}

// ---------------------------------------------------------------------------
// Snapshot

namespace {

struct SnapshotDoc {
    std::string doc_id, path, system, version, content;
    std::uint32_t length = 0;

    template <class Archive>
    void serialize(Archive& ar) {
        ar(doc_id, path, system, version, length, content);
    }
};

struct SnapshotTerm {
    std::string term;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> postings;

    template <class Archive>
    void serialize(Archive& ar) {
        ar(term, postings);
    }
};

}  // namespace

void InvertedIndex::save(std::ostream& out) const {
    out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
    cereal::PortableBinaryOutputArchive ar(out);
    ar(kFormatVersion);
    ar(params_.k1, params_.b);
    ar(static_cast<std::uint64_t>(docs_.size()), avg_doc_length_);

    std::vector<SnapshotDoc> docs;
    docs.reserve(docs_.size());
    for (const auto& d : docs_) {
        docs.push_back({d.meta.doc_id, d.meta.path, d.meta.system, d.meta.version, d.content, d.length});
    }
    ar(docs);

    std::vector<SnapshotTerm> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, list] : postings_) {
        SnapshotTerm t{term, {}};
        t.postings.reserve(list.size());
        for (const auto& p : list) t.postings.emplace_back(p.doc, p.tf);
        terms.push_back(std::move(t));
    }
    ar(terms);
    if (!out) throw SnapshotError("failed to write index snapshot");
}

void InvertedIndex::save(const fs::path& file) const {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw SnapshotError("cannot write index snapshot: " + tmp.string());
        save(out);
    }
    fs::rename(tmp, file);
}

InvertedIndex InvertedIndex::load(std::istream& in) {
    std::string magic(kMagic.size(), '\0');
    in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
    if (!in || magic != kMagic) throw SnapshotError("not an index snapshot (bad magic)");

    InvertedIndex index;
    try {
        cereal::PortableBinaryInputArchive ar(in);
        std::uint32_t version = 0;
        ar(version);
        if (version != kFormatVersion) {
            throw SnapshotError("unsupported snapshot format version " + std::to_string(version));
        }
        ar(index.params_.k1, index.params_.b);
        std::uint64_t doc_count = 0;
        double avg = 0.0;
        ar(doc_count, avg);

        std::vector<SnapshotDoc> docs;
        ar(docs);
        if (docs.size() != doc_count || docs.empty()) {
            throw SnapshotError("snapshot document count mismatch");
        }
        for (auto& d : docs) {
            index.docs_.push_back(DocRecord{DocMeta{std::move(d.doc_id), std::move(d.path),
                                                    std::move(d.system), std::move(d.version)},
                                            d.length, std::move(d.content)});
        }

        std::vector<SnapshotTerm> terms;
        ar(terms);
        for (auto& t : terms) {
            std::vector<Posting> list;
            list.reserve(t.postings.size());
            for (const auto& [doc, tf] : t.postings) {
                if (doc >= index.docs_.size()) throw SnapshotError("posting references unknown document");
                list.push_back(Posting{doc, tf});
            }
            index.postings_.emplace(std::move(t.term), std::move(list));
        }
        index.finish();
        if (index.avg_doc_length_ != avg) throw SnapshotError("snapshot corpus statistics mismatch");
    } catch (const cereal::Exception& e) {
        throw SnapshotError(std::string("truncated or corrupt index snapshot: ") + e.what());
    }
    return index;
}

InvertedIndex InvertedIndex::load(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw SnapshotError("cannot open index snapshot: " + file.string());
    try {
        return load(in);
    } catch (const SnapshotError& e) {
        throw SnapshotError(file.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Catalog

fs::path IndexCatalog::snapshot_path(const fs::path& dir, std::string_view system,
                                     std::string_view version) {
    return dir / std::string(system) / (std::string(version) + ".brainidx");
}

IndexCatalog IndexCatalog::load_directory(const fs::path& dir) {
    IndexCatalog catalog;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) return catalog;
    std::vector<fs::path> files;
    for (const auto& system_entry : fs::directory_iterator(dir)) {
        if (!system_entry.is_directory()) continue;
        for (const auto& entry : fs::directory_iterator(system_entry.path())) {
            if (entry.is_regular_file() && entry.path().extension() == ".brainidx") {
                files.push_back(entry.path());
            }
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        catalog.add(file.parent_path().filename().string(), file.stem().string(),
                    InvertedIndex::load(file));
    }
    return catalog;
}

void IndexCatalog::add(std::string system, std::string version, InvertedIndex index) {
    indexes_.insert_or_assign({std::move(system), std::move(version)}, std::move(index));
}

const InvertedIndex* IndexCatalog::find(std::string_view system, std::string_view version) const {
    auto it = indexes_.find({std::string(system), std::string(version)});
    return it == indexes_.end() ? nullptr : &it->second;
}

}  // namespace brain
