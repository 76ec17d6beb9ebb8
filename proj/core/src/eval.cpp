#include "brain/eval.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "brain/errors.hpp"
#include "brain/ranker.hpp"

namespace brain {

using ordered_json = nlohmann::ordered_json;

GroundTruth ground_truth(const BugReport& report) {
    GroundTruth truth;
    truth.bug_id = report.bug_id;
    for (const auto& path : report.fixed_files) truth.relevant_paths.insert(normalize_path(path));
    return truth;
}

double average_precision(std::span<const std::string> ranked, const GroundTruth& truth, std::size_t k) {
    if (truth.relevant_paths.empty()) throw DomainError("average_precision: empty ground truth");
    if (k == 0) throw DomainError("average_precision: K must be at least 1");
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        if (!truth.relevant_paths.contains(ranked[i])) continue;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
    return sum / static_cast<double>(truth.relevant_paths.size());
}

std::optional<std::size_t> first_relevant_rank(std::span<const std::string> ranked, const GroundTruth& truth) {
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (truth.relevant_paths.contains(ranked[i])) return i + 1;
    }
    return std::nullopt;
}

double reciprocal_rank(std::span<const std::string> ranked, const GroundTruth& truth) {
    if (truth.relevant_paths.empty()) throw DomainError("reciprocal_rank: empty ground truth");
    const auto rank = first_relevant_rank(ranked, truth);
    return rank ? 1.0 / static_cast<double>(*rank) : 0.0;
}

int hit_at_k(std::span<const std::string> ranked, const GroundTruth& truth, std::size_t k) {
    for (std::size_t i = 0; i < ranked.size() && i < k; ++i) {
        if (truth.relevant_paths.contains(ranked[i])) return 1;
    }
    return 0;
}

ModeMetrics aggregate(std::span<const BugRow> rows) {
    ModeMetrics m;
    m.queries = rows.size();
    if (rows.empty()) return m;
    for (const auto& row : rows) {
        m.map += row.average_precision;
        m.mrr += row.reciprocal_rank;
        if (row.first_rank) {
            m.hit_at_1 += *row.first_rank <= 1 ? 1.0 : 0.0;
            m.hit_at_5 += *row.first_rank <= 5 ? 1.0 : 0.0;
            m.hit_at_10 += *row.first_rank <= 10 ? 1.0 : 0.0;
        }
    }
    const double q = static_cast<double>(rows.size());
    m.map /= q;
    m.mrr /= q;
    m.hit_at_1 /= q;
    m.hit_at_5 /= q;
    m.hit_at_10 /= q;
    return m;
}

namespace {

struct BugOutcome {
    std::vector<BugRow> rows;
    std::optional<SkippedBug> skipped;
    std::optional<SkippedBug> error;
};

class PathSets {
  public:
    const std::unordered_set<std::string>& of(const InvertedIndex& index) {
        auto it = sets_.find(&index);
        if (it != sets_.end()) return it->second;
        std::unordered_set<std::string> paths;
        for (const auto& id : index.doc_ids()) paths.insert(index.meta(id).path);
        return sets_.emplace(&index, std::move(paths)).first->second;
    }

  private:
    std::unordered_map<const InvertedIndex*, std::unordered_set<std::string>> sets_;
};

BugOutcome evaluate_bug(const BugReport& bug, const InvertedIndex* index,
                        const std::unordered_set<std::string>* paths, const PipelineConfig& config,
                        std::span<const Mode> modes, FeedbackEngine* feedback) {
    BugOutcome out;
    if (index == nullptr) {
        out.error = SkippedBug{bug.bug_id, "no index for " + bug.system + "/" + bug.version};
        return out;
    }
    const GroundTruth truth = ground_truth(bug);
    const bool linked = std::any_of(truth.relevant_paths.begin(), truth.relevant_paths.end(),
                                    [&](const std::string& p) { return paths->contains(p); });
    if (!linked) {
        out.skipped = SkippedBug{bug.bug_id, "ground truth not found in corpus"};
        return out;
    }
    try {
        for (Mode mode : modes) {
            const LocalizeOutcome outcome = localize(bug, *index, config, mode, feedback);
            std::vector<std::string> ranked;
            ranked.reserve(outcome.result.documents.size());
            for (const auto& d : outcome.result.documents) ranked.push_back(d.path);

            BugRow row;
            row.bug_id = bug.bug_id;
            row.mode = mode;
            row.average_precision = average_precision(ranked, truth, config.ranking.result_k);
            row.reciprocal_rank = reciprocal_rank(ranked, truth);
            row.first_rank = first_relevant_rank(ranked, truth);
            row.truth_in_candidates = std::any_of(outcome.trace.candidates.begin(), outcome.trace.candidates.end(),
                                                  [&](const SearchHit& h) { return truth.relevant_paths.contains(h.path); });
            row.degraded = outcome.result.degraded;
            out.rows.push_back(row);
        }
    } catch (const Error& e) {
        out.rows.clear();
        out.error = SkippedBug{bug.bug_id, e.what()};
    }
    return out;
}

}  // namespace

EvalReport evaluate(std::span<const BugReport> dataset, const IndexCatalog& indexes, const PipelineConfig& config,
                    std::span<const Mode> modes, FeedbackEngine* feedback, std::size_t jobs) {
    EvalReport report;
    report.dataset_size = dataset.size();
    report.modes.assign(modes.begin(), modes.end());

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return dataset[a].bug_id < dataset[b].bug_id; });

    // Index lookups and path sets are resolved up front so workers only read shared state.
    PathSets path_sets;
    std::vector<const InvertedIndex*> bug_index(dataset.size(), nullptr);
    std::vector<const std::unordered_set<std::string>*> bug_paths(dataset.size(), nullptr);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        bug_index[i] = indexes.find(dataset[i].system, dataset[i].version);
        if (bug_index[i] != nullptr) bug_paths[i] = &path_sets.of(*bug_index[i]);
    }

    std::vector<BugOutcome> outcomes(dataset.size());
    std::vector<std::exception_ptr> failures(dataset.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t n = next++; n < order.size(); n = next++) {
            const std::size_t i = order[n];
            try {
                outcomes[n] = evaluate_bug(dataset[i], bug_index[i], bug_paths[i], config, modes, feedback);
            } catch (...) {
                failures[n] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, order.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (const auto& failure : failures) {
        if (failure) std::rethrow_exception(failure);
    }

    for (auto& outcome : outcomes) {
        if (outcome.skipped) report.skipped.push_back(*outcome.skipped);
        if (outcome.error) report.errors.push_back(*outcome.error);
        std::move(outcome.rows.begin(), outcome.rows.end(), std::back_inserter(report.rows));
    }

    for (Mode mode : report.modes) {
        std::vector<BugRow> all;
        std::vector<BugRow> filtered;
        for (const auto& row : report.rows) {
            if (row.mode != mode) continue;
            all.push_back(row);
            if (row.truth_in_candidates) filtered.push_back(row);
        }
        report.all[mode] = aggregate(all);
        report.filtered[mode] = aggregate(filtered);
    }
    return report;
}

namespace {

ordered_json metrics_json(Mode mode, std::string_view subset, const ModeMetrics& m) {
    return ordered_json{{"mode", std::string(to_string(mode))},
                        {"subset", std::string(subset)},
                        {"queries", m.queries},
                        {"map", m.map},
                        {"mrr", m.mrr},
                        {"hit_at_1", m.hit_at_1},
                        {"hit_at_5", m.hit_at_5},
                        {"hit_at_10", m.hit_at_10}};
}

ordered_json skipped_json(const std::vector<SkippedBug>& bugs) {
    ordered_json out = ordered_json::array();
    for (const auto& b : bugs) out.push_back(ordered_json{{"bug_id", b.bug_id}, {"reason", b.reason}});
    return out;
}

}  // namespace

std::string to_json(const EvalReport& report) {
    ordered_json doc;
    doc["dataset_size"] = report.dataset_size;
    ordered_json modes = ordered_json::array();
    for (Mode mode : report.modes) modes.push_back(std::string(to_string(mode)));
    doc["modes"] = std::move(modes);
    ordered_json metrics = ordered_json::array();
    for (Mode mode : report.modes) {
        metrics.push_back(metrics_json(mode, "all", report.all.at(mode)));
        metrics.push_back(metrics_json(mode, "filtered", report.filtered.at(mode)));
    }
    doc["metrics"] = std::move(metrics);
    ordered_json bugs = ordered_json::array();
    for (const auto& row : report.rows) {
        ordered_json r;
        r["bug_id"] = row.bug_id;
        r["mode"] = std::string(to_string(row.mode));
        r["average_precision"] = row.average_precision;
        r["reciprocal_rank"] = row.reciprocal_rank;
        r["first_rank"] = row.first_rank ? ordered_json(*row.first_rank) : ordered_json(nullptr);
        r["truth_in_candidates"] = row.truth_in_candidates;
        r["degraded"] = row.degraded;
        bugs.push_back(std::move(r));
    }
    doc["bugs"] = std::move(bugs);
    doc["skipped"] = skipped_json(report.skipped);
    doc["errors"] = skipped_json(report.errors);
    return doc.dump(2, ' ', false, ordered_json::error_handler_t::replace) + "\n";
}

std::string summary_csv(const EvalReport& report) {
    std::string out = "mode,subset,queries,map,mrr,hit_at_1,hit_at_5,hit_at_10\n";
    for (Mode mode : report.modes) {
        for (const auto& [subset, table] : {std::pair{"all", &report.all}, std::pair{"filtered", &report.filtered}}) {
            const ModeMetrics& m = table->at(mode);
            out += fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", to_string(mode), subset, m.queries,
                               m.map, m.mrr, m.hit_at_1, m.hit_at_5, m.hit_at_10);
        }
    }
    return out;
}

std::string per_bug_csv(const EvalReport& report) {
    std::string out = "bug_id,mode,average_precision,reciprocal_rank,first_rank,truth_in_candidates,degraded\n";
    for (const auto& row : report.rows) {
        out += fmt::format("{},{},{:.6f},{:.6f},{},{},{}\n", row.bug_id, to_string(row.mode), row.average_precision,
                           row.reciprocal_rank, row.first_rank ? std::to_string(*row.first_rank) : std::string(),
                           row.truth_in_candidates ? 1 : 0, row.degraded ? 1 : 0);
    }
    return out;
}

std::string summary_table(const EvalReport& report) {
    std::string out = fmt::format("{:<28} {:<9} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}\n", "mode", "subset", "queries",
                                  "MAP", "MRR", "HIT@1", "HIT@5", "HIT@10");
    for (Mode mode : report.modes) {
        for (const auto& [subset, table] : {std::pair{"all", &report.all}, std::pair{"filtered", &report.filtered}}) {
            const ModeMetrics& m = table->at(mode);
            out += fmt::format("{:<28} {:<9} {:>7} {:>7.3f} {:>7.3f} {:>7.3f} {:>7.3f} {:>7.3f}\n", to_string(mode),
                               subset, m.queries, m.map, m.mrr, m.hit_at_1, m.hit_at_5, m.hit_at_10);
        }
    }
    out += fmt::format("evaluated {} of {} bug(s); skipped {}; errors {}\n",
                       report.rows.empty() || report.modes.empty() ? 0 : report.rows.size() / report.modes.size(),
                       report.dataset_size, report.skipped.size(), report.errors.size());
    return out;
}

}  // namespace brain
