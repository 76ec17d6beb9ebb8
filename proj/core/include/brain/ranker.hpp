#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "brain/config.hpp"
#include "brain/corpus.hpp"
#include "brain/expansion.hpp"
#include "brain/feedback.hpp"
#include "brain/index.hpp"

namespace brain {

struct ScoredDocument {
    std::string doc_id;
    std::string path;
    double bm25_expanded = 0.0;  // z_i
    double softmax_score = 0.0;
    int relevance = 0;  // r_i
    double final_score = 0.0;
    std::size_t initial_rank = 0;  // 1-based rank in the first retrieval
};

struct RankedResult {
    std::string bug_id;
    Mode mode = Mode::full;
    std::vector<ScoredDocument> documents;
    bool degraded = false;    // some segments defaulted to irrelevant after oracle failures
    std::string diagnostic;   // set when the result is empty for a reason
};

/// BM25 of the (expanded) query against each candidate, using full-index statistics.
/// Every candidate is kept, zero scores included. Throws LookupError for unknown ids
/// and QueryError when the combined query is empty.
std::vector<std::pair<std::string, double>> rerank(const InvertedIndex& index,
                                                    std::span<const std::string> candidates,
                                                    const ExpandedQuery& query);

/// Max-shifted softmax. Throws DomainError for an empty list.
std::vector<double> softmax(std::span<const double> scores);

/// Element-wise soft[i] * rel[i]. Throws ContractViolation on length mismatch.
std::vector<double> rescore(std::span<const double> soft, std::span<const int> relevance);

/// Sorts by final score, then expanded BM25 (descending), then initial rank,
/// then path, and keeps the first k. bug_id and mode are left to the caller.
RankedResult finalize(std::vector<ScoredDocument> scored, std::size_t k = 10);

/// Intermediate artifacts of one localization, reported by --explain.
struct LocalizeTrace {
    std::vector<SearchHit> candidates;
    std::vector<std::vector<RelevanceVerdict>> verdicts;  // parallel to candidates; empty if not judged
    std::vector<bool> relevant;
    TokenStream base_query;
    std::vector<std::string> expansion_terms;
    std::optional<TermGraph> term_graph;
    std::optional<PageRankScores> term_scores;
};

struct LocalizeOutcome {
    RankedResult result;
    LocalizeTrace trace;
};

/// Runs retrieval, feedback, expansion, reranking and rescoring for one report.
///
/// Modes: full; no_expansion (rerank with the base query); no_rescoring (rank
/// by expanded-query BM25 without relevance gating); no_expansion_no_rescoring;
/// baseline_vsm (first-pass retrieval truncated to result_k). The feedback
/// engine is only consulted by modes that need verdicts and may be null for the
/// others. Oracle failures propagate unless the engine runs best-effort.
LocalizeOutcome localize(const BugReport& report, const InvertedIndex& index,
                         const PipelineConfig& config, Mode mode, FeedbackEngine* feedback);

/// Shorthand using config.ranking.mode.
LocalizeOutcome localize(const BugReport& report, const InvertedIndex& index,
                         const PipelineConfig& config, FeedbackEngine* feedback);

/// {"bug_id", "mode", "results": [{"rank","path","final_score","relevance","bm25_expanded"}]}
/// plus "degraded"/"diagnostic" when set. Single line, no trailing newline.
std::string to_json(const RankedResult& result);

/// to_json(result) with an "explain" object holding the trace.
std::string to_explained_json(const LocalizeOutcome& outcome);

}  // namespace brain
