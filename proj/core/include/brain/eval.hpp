#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "brain/config.hpp"
#include "brain/corpus.hpp"
#include "brain/feedback.hpp"
#include "brain/index.hpp"

namespace brain {

struct GroundTruth {
    std::string bug_id;
    std::set<std::string> relevant_paths;  // normalized with normalize_path
};

GroundTruth ground_truth(const BugReport& report);

/// (1/|D|) * sum_{k<=K} P_k * B_k. Throws DomainError for empty truth or K == 0.
double average_precision(std::span<const std::string> ranked, const GroundTruth& truth, std::size_t k);

/// 1 / rank of the first relevant path; 0 when none is present.
double reciprocal_rank(std::span<const std::string> ranked, const GroundTruth& truth);

/// 1 iff one of the first k paths is relevant.
int hit_at_k(std::span<const std::string> ranked, const GroundTruth& truth, std::size_t k);

std::optional<std::size_t> first_relevant_rank(std::span<const std::string> ranked, const GroundTruth& truth);

struct ModeMetrics {
    std::size_t queries = 0;
    double map = 0.0;
    double mrr = 0.0;
    double hit_at_1 = 0.0;
    double hit_at_5 = 0.0;
    double hit_at_10 = 0.0;
};

struct BugRow {
    std::string bug_id;
    Mode mode = Mode::full;
    double average_precision = 0.0;
    double reciprocal_rank = 0.0;
    std::optional<std::size_t> first_rank;
    bool truth_in_candidates = false;  // ground truth among the first-pass candidates
    bool degraded = false;
};

struct SkippedBug {
    std::string bug_id;
    std::string reason;
};

struct EvalReport {
    std::size_t dataset_size = 0;
    std::vector<Mode> modes;
    std::map<Mode, ModeMetrics> all;       // every evaluated bug
    std::map<Mode, ModeMetrics> filtered;  // bugs whose truth is in the first-pass candidates
    std::vector<BugRow> rows;              // sorted by (bug_id, mode order)
    std::vector<SkippedBug> skipped;       // ground truth not in the corpus
    std::vector<SkippedBug> errors;        // missing index or failed localization

    bool partial() const noexcept { return !skipped.empty() || !errors.empty(); }
};

/// Localizes every bug in every mode and aggregates MAP, MRR and HIT@{1,5,10}.
/// AP uses K = config.ranking.result_k. Bugs are processed by up to `jobs`
/// threads; the report does not depend on the thread count.
EvalReport evaluate(std::span<const BugReport> dataset, const IndexCatalog& indexes,
                    const PipelineConfig& config, std::span<const Mode> modes,
                    FeedbackEngine* feedback, std::size_t jobs = 1);

/// Means over rows; what evaluate uses per mode.
ModeMetrics aggregate(std::span<const BugRow> rows);

std::string to_json(const EvalReport& report);
/// mode,subset,queries,map,mrr,hit_at_1,hit_at_5,hit_at_10
std::string summary_csv(const EvalReport& report);
/// bug_id,mode,average_precision,reciprocal_rank,first_rank,truth_in_candidates,degraded
std::string per_bug_csv(const EvalReport& report);
/// Aligned human-readable summary table.
std::string summary_table(const EvalReport& report);

}  // namespace brain
