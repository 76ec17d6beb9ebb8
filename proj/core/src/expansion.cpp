#include "brain/expansion.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "brain/errors.hpp"

namespace brain {

TermGraph TermGraph::from_phrases(std::span<const TokenStream> phrases) {
    TermGraph graph;
    for (const auto& phrase : phrases) {
        for (std::size_t i = 0; i < phrase.size(); ++i) {
            graph.add_vertex(phrase[i]);
            if (i > 0) graph.add_edge(phrase[i - 1], phrase[i]);
        }
    }
    return graph;
}

void TermGraph::add_vertex(const std::string& term) {
    if (vertices_.insert(term).second) adjacency_[term];
}

void TermGraph::add_edge(const std::string& a, const std::string& b) {
    add_vertex(a);
    add_vertex(b);
    if (a == b) return;
    if (adjacency_[a].insert(b).second) {
        adjacency_[b].insert(a);
        ++edge_count_;
    }
}

const std::set<std::string>& TermGraph::neighbors(const std::string& term) const {
    auto it = adjacency_.find(term);
    if (it == adjacency_.end()) throw LookupError("term not in graph: " + term);
    return it->second;
}

std::vector<std::pair<std::string, std::string>> TermGraph::edges() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(edge_count_);
    for (const auto& [term, nbrs] : adjacency_) {
        for (const auto& other : nbrs) {
            if (term < other) out.emplace_back(term, other);
        }
    }
    return out;
}

TermGraph build_term_graph(std::span<const TokenStream> phrases) { return TermGraph::from_phrases(phrases); }

PageRankScores pagerank(const TermGraph& graph, const PageRankOptions& options) {
    if (graph.empty()) throw DomainError("pagerank of an empty graph");
    if (!(options.damping > 0.0 && options.damping < 1.0)) throw DomainError("damping must be in (0, 1)");

    const std::vector<std::string> terms(graph.vertices().begin(), graph.vertices().end());
    const std::size_t n = terms.size();
    std::vector<std::vector<std::size_t>> nbrs(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& other : graph.neighbors(terms[i])) {
            auto pos = std::lower_bound(terms.begin(), terms.end(), other);
            nbrs[i].push_back(static_cast<std::size_t>(pos - terms.begin()));
        }
    }

    const double d = options.damping;
    const double nn = static_cast<double>(n);
    std::vector<double> rank(n, 1.0 / nn);
    std::vector<double> next(n);
    std::vector<double> share(n);

    PageRankScores result;
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        double dangling = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (nbrs[j].empty()) {
                dangling += rank[j];
                share[j] = 0.0;
            } else {
                share[j] = rank[j] / static_cast<double>(nbrs[j].size());
            }
        }
        const double base = (1.0 - d) / nn + d * dangling / nn;
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double incoming = 0.0;
            for (std::size_t j : nbrs[i]) incoming += share[j];
            next[i] = base + d * incoming;
            delta += std::abs(next[i] - rank[i]);
        }
        rank.swap(next);
        result.iterations_run = iter;
        if (delta < options.eps) {
            result.converged = true;
            break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) result.scores.emplace(terms[i], rank[i]);
    return result;
}

std::vector<std::string> select_terms(const PageRankScores& scores, std::size_t n) {
    struct Entry {
        long long key;
        const std::string* term;
    };
    std::vector<Entry> entries;
    entries.reserve(scores.scores.size());
    for (const auto& [term, score] : scores.scores) {
        entries.push_back(Entry{std::llround(score * 1e12), &term});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.key != b.key) return a.key > b.key;
        return *a.term < *b.term;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < entries.size() && i < n; ++i) out.push_back(*entries[i].term);
    return out;
}

TokenStream report_tokens(const BugReport& report) {
    return preprocess(report.title + "\n" + report.description, Vocabulary::code);
}

ExpandedQuery expand_query(TokenStream base_tokens, std::span<const std::string> terms) {
    ExpandedQuery query;
    query.base_tokens = std::move(base_tokens);
    query.combined = query.base_tokens;
    std::unordered_set<std::string> present(query.base_tokens.begin(), query.base_tokens.end());
    for (const auto& term : terms) {
        if (!present.insert(term).second) continue;
        query.expansion_terms.push_back(term);
        query.combined.push_back(term);
    }
    return query;
}

ExpandedQuery expand_query(const BugReport& report, std::span<const std::string> terms) {
    return expand_query(report_tokens(report), terms);
}

std::string dump_term_graph(const TermGraph& graph, const PageRankScores& scores) {
    nlohmann::ordered_json doc;
    doc["vertices"] = graph.vertices();
    nlohmann::ordered_json edges = nlohmann::ordered_json::array();
    for (const auto& [a, b] : graph.edges()) edges.push_back({a, b});
    doc["edges"] = std::move(edges);
    doc["scores"] = scores.scores;
    doc["iterations"] = scores.iterations_run;
    doc["converged"] = scores.converged;
    return doc.dump(2) + "\n";
}

}  // namespace brain
