#include "brain/ranker.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iterator>

#include "brain/errors.hpp"
#include "brain/segmenter.hpp"

namespace brain {

using ordered_json = nlohmann::ordered_json;

std::vector<std::pair<std::string, double>> rerank(const InvertedIndex& index,
                                                    std::span<const std::string> candidates,
                                                    const ExpandedQuery& query) {
    if (query.combined.empty()) throw QueryError("rerank: expanded query is empty");
    std::vector<std::pair<std::string, double>> out;
    out.reserve(candidates.size());
    for (const auto& id : candidates) out.emplace_back(id, index.bm25_score(query.combined, id));
    return out;
}

std::vector<double> softmax(std::span<const double> scores) {
    if (scores.empty()) throw DomainError("softmax of an empty list");
    const double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> out(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - top);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

std::vector<double> rescore(std::span<const double> soft, std::span<const int> relevance) {
    if (soft.size() != relevance.size()) {
        throw ContractViolation("rescore: " + std::to_string(soft.size()) + " scores but " +
                                std::to_string(relevance.size()) + " relevance flags");
    }
    std::vector<double> out(soft.size());
    for (std::size_t i = 0; i < soft.size(); ++i) out[i] = soft[i] * static_cast<double>(relevance[i]);
    return out;
}

RankedResult finalize(std::vector<ScoredDocument> scored, std::size_t k) {
    std::sort(scored.begin(), scored.end(), [](const ScoredDocument& a, const ScoredDocument& b) {
        if (a.final_score != b.final_score) return a.final_score > b.final_score;
        if (a.bm25_expanded != b.bm25_expanded) return a.bm25_expanded > b.bm25_expanded;
        if (a.initial_rank != b.initial_rank) return a.initial_rank < b.initial_rank;
        return a.path < b.path;
    });
    if (scored.size() > k) scored.resize(k);
    RankedResult result;
    result.documents = std::move(scored);
    return result;
}

namespace {

bool uses_expansion(Mode mode) { return mode == Mode::full || mode == Mode::no_rescoring; }
bool uses_rescoring(Mode mode) { return mode == Mode::full || mode == Mode::no_expansion; }
bool uses_feedback(Mode mode) { return uses_expansion(mode) || uses_rescoring(mode); }

}  // namespace

LocalizeOutcome localize(const BugReport& report, const InvertedIndex& index, const PipelineConfig& config,
                         Mode mode, FeedbackEngine* feedback) {
    LocalizeOutcome outcome;
    RankedResult& result = outcome.result;
    LocalizeTrace& trace = outcome.trace;
    result.bug_id = report.bug_id;
    result.mode = mode;

    trace.base_query = report_tokens(report);
    if (trace.base_query.empty()) {
        result.diagnostic = "bug report has no searchable terms";
        return outcome;
    }

    Query first_pass;
    first_pass.tokens = trace.base_query;
    first_pass.system_filter = report.system;
    first_pass.version_filter = report.version;
    first_pass.k = config.retrieval.top_k;
    trace.candidates = index.search(first_pass);
    if (trace.candidates.empty()) {
        result.diagnostic = "no candidate documents matched the query";
        return outcome;
    }
    const std::size_t n = trace.candidates.size();

    if (mode == Mode::baseline_vsm) {
        std::vector<double> z;
        z.reserve(n);
        for (const auto& hit : trace.candidates) z.push_back(hit.score);
        const std::vector<double> soft = softmax(z);
        for (std::size_t i = 0; i < n && i < config.ranking.result_k; ++i) {
            const SearchHit& hit = trace.candidates[i];
            result.documents.push_back(ScoredDocument{hit.doc_id, hit.path, hit.score, soft[i], 0, hit.score, i + 1});
        }
        return outcome;
    }

    std::vector<int> relevance(n, 0);
    if (uses_feedback(mode)) {
        if (feedback == nullptr) {
            throw ContractViolation(std::string("mode ") + std::string(to_string(mode)) +
                                    " needs a feedback engine");
        }
        std::vector<CandidateSegments> segments;
        segments.reserve(n);
        for (const auto& hit : trace.candidates) {
            segments.push_back(CandidateSegments{hit.doc_id, segment_document(index.document(hit.doc_id), config.segmenter)});
        }
        FeedbackResult judged = feedback->judge(report, segments);
        result.degraded = judged.degraded;
        for (std::size_t i = 0; i < n; ++i) relevance[i] = judged.relevant[i] ? 1 : 0;
        trace.verdicts = std::move(judged.verdicts);
        trace.relevant = std::move(judged.relevant);
    }

    ExpandedQuery query = expand_query(trace.base_query, {});
    if (uses_expansion(mode)) {
        std::vector<TokenStream> phrases;
        for (std::size_t i = 0; i < n; ++i) {
            if (relevance[i] == 0) continue;
            auto doc_phrases = signatures_to_phrases(extract_signatures(index.document(trace.candidates[i].doc_id)));
            std::move(doc_phrases.begin(), doc_phrases.end(), std::back_inserter(phrases));
        }
        if (!phrases.empty()) {
            TermGraph graph = build_term_graph(phrases);
            PageRankScores scores = pagerank(graph, PageRankOptions{config.expansion.damping, config.expansion.max_iter,
                                                                    config.expansion.eps});
            const std::vector<std::string> terms = select_terms(scores, config.expansion.top_terms);
            query = expand_query(trace.base_query, terms);
            trace.term_graph = std::move(graph);
            trace.term_scores = std::move(scores);
        }
    }
    trace.expansion_terms = query.expansion_terms;

    std::vector<std::string> ids;
    ids.reserve(n);
    for (const auto& hit : trace.candidates) ids.push_back(hit.doc_id);
    const auto reranked = rerank(index, ids, query);
    std::vector<double> z;
    z.reserve(n);
    for (const auto& entry : reranked) z.push_back(entry.second);
    const std::vector<double> soft = softmax(z);
    const std::vector<int> gate = uses_rescoring(mode) ? relevance : std::vector<int>(n, 1);
    const std::vector<double> final_scores = rescore(soft, gate);

    std::vector<ScoredDocument> scored;
    scored.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        scored.push_back(ScoredDocument{ids[i], trace.candidates[i].path, z[i], soft[i], relevance[i], final_scores[i],
                                        i + 1});
    }
    RankedResult ranked = finalize(std::move(scored), config.ranking.result_k);
    result.documents = std::move(ranked.documents);
    return outcome;
}

LocalizeOutcome localize(const BugReport& report, const InvertedIndex& index, const PipelineConfig& config,
                         FeedbackEngine* feedback) {
    return localize(report, index, config, config.ranking.mode, feedback);
}

namespace {

ordered_json result_json(const RankedResult& result) {
    ordered_json doc;
    doc["bug_id"] = result.bug_id;
    doc["mode"] = std::string(to_string(result.mode));
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < result.documents.size(); ++i) {
        const ScoredDocument& d = result.documents[i];
        ordered_json row;
        row["rank"] = i + 1;
        row["path"] = d.path;
        row["final_score"] = d.final_score;
        row["relevance"] = d.relevance;
        row["bm25_expanded"] = d.bm25_expanded;
        rows.push_back(std::move(row));
    }
    doc["results"] = std::move(rows);
    if (result.degraded) doc["degraded"] = true;
    if (!result.diagnostic.empty()) doc["diagnostic"] = result.diagnostic;
    return doc;
}

}  // namespace

std::string to_json(const RankedResult& result) { return result_json(result).dump(-1, ' ', false, ordered_json::error_handler_t::replace); }

std::string to_explained_json(const LocalizeOutcome& outcome) {
    ordered_json doc = result_json(outcome.result);
    const LocalizeTrace& trace = outcome.trace;
    ordered_json explain;
    explain["base_query"] = trace.base_query;
    ordered_json candidates = ordered_json::array();
    for (std::size_t i = 0; i < trace.candidates.size(); ++i) {
        const SearchHit& hit = trace.candidates[i];
        ordered_json row;
        row["initial_rank"] = i + 1;
        row["doc_id"] = hit.doc_id;
        row["path"] = hit.path;
        row["bm25"] = hit.score;
        if (i < trace.relevant.size()) row["relevant"] = static_cast<bool>(trace.relevant[i]);
        if (i < trace.verdicts.size()) {
            ordered_json verdicts = ordered_json::array();
            for (const auto& v : trace.verdicts[i]) {
                verdicts.push_back(ordered_json{{"segment", v.segment_ref.segment_index},
                                                {"relevant", v.relevant},
                                                {"source", std::string(to_string(v.source))},
                                                {"raw_response", v.raw_response}});
            }
            row["verdicts"] = std::move(verdicts);
        }
        candidates.push_back(std::move(row));
    }
    explain["candidates"] = std::move(candidates);
    explain["expansion_terms"] = trace.expansion_terms;
    doc["explain"] = std::move(explain);
    return doc.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

}  // namespace brain
