#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "brain/corpus.hpp"

namespace brain {

/// Undirected, unweighted co-occurrence graph over signature terms.
class TermGraph {
  public:
    /// Links consecutive tokens of each phrase. Self loops are skipped and
    /// repeated edges collapse.
    static TermGraph from_phrases(std::span<const TokenStream> phrases);

    void add_vertex(const std::string& term);
    void add_edge(const std::string& a, const std::string& b);

    const std::set<std::string>& vertices() const noexcept { return vertices_; }
    const std::set<std::string>& neighbors(const std::string& term) const;
    std::size_t degree(const std::string& term) const { return neighbors(term).size(); }
    std::size_t vertex_count() const noexcept { return vertices_.size(); }
    std::size_t edge_count() const noexcept { return edge_count_; }
    bool empty() const noexcept { return vertices_.empty(); }

    /// Edges as (a, b) with a < b, sorted.
    std::vector<std::pair<std::string, std::string>> edges() const;

  private:
    std::set<std::string> vertices_;
    std::map<std::string, std::set<std::string>> adjacency_;
    std::size_t edge_count_ = 0;
};

TermGraph build_term_graph(std::span<const TokenStream> phrases);

struct PageRankOptions {
    double damping = 0.85;
    int max_iter = 100;
    double eps = 1e-6;  // L1 change that counts as converged
};

struct PageRankScores {
    std::map<std::string, double> scores;
    int iterations_run = 0;
    bool converged = false;
};

/// Power iteration of PR(v) = (1-d)/N + d * sum_{u ~ v} PR(u)/deg(u), from the
/// uniform vector. Isolated vertices spread their mass uniformly, so the scores
/// remain a probability distribution. Throws DomainError for an empty graph.
PageRankScores pagerank(const TermGraph& graph, const PageRankOptions& options = {});

/// Top-n terms by score, ties in lexicographic order. Scores equal to 12
/// significant decimal places count as ties.
std::vector<std::string> select_terms(const PageRankScores& scores, std::size_t n = 10);

struct ExpandedQuery {
    TokenStream base_tokens;
    std::vector<std::string> expansion_terms;  // only the terms actually appended
    TokenStream combined;
};

/// combined = preprocess(title + description) followed by each term that is
/// not already in the base, once.
ExpandedQuery expand_query(const BugReport& report, std::span<const std::string> terms);
ExpandedQuery expand_query(TokenStream base_tokens, std::span<const std::string> terms);

/// Query tokens of a report: preprocess(title + "\n" + description, code vocabulary).
TokenStream report_tokens(const BugReport& report);

/// Structured-text dump of a term graph and its scores, for inspection.
std::string dump_term_graph(const TermGraph& graph, const PageRankScores& scores);

}  // namespace brain
