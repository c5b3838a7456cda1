#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spqa/corpus.hpp"
#include "spqa/pipeline.hpp"
#include "spqa/sparse_index.hpp"

namespace spqa {

using QuestionId = DocId;
/// question id -> retrieved list
using Rankings = std::map<QuestionId, RankedList>;
/// question id -> its single relevant passage
using GoldMap = std::map<QuestionId, DocId>;

/// 1-based position of `gold` among the first `depth` entries, if present.
std::optional<std::size_t> gold_rank(const RankedList& ranking, DocId gold,
                                     std::size_t depth = static_cast<std::size_t>(-1));

/// Percentage of questions whose gold passage appears in the top k. Every
/// question must have both a ranking and a gold passage.
double precision_at_k(const Rankings& rankings, const GoldMap& gold, std::size_t k);

/// Percentage mean of 1/rank(gold) over questions, 0 when the gold passage is
/// missing from the first `depth` results. With one relevant passage per
/// question this is mean reciprocal rank.
double mean_average_precision(const Rankings& rankings, const GoldMap& gold, std::size_t depth = 100);

/// Distinct token types shared by the two texts.
std::size_t lexical_overlap(const TokenizedText& question, const TokenizedText& passage);

struct QuestionOutcome {
    QuestionId id = 0;
    std::optional<std::size_t> gold_rank;
    std::size_t overlap = 0;
};

struct EvalResult {
    std::map<std::size_t, double> p_at_k;
    double map_score = 0.0;
    std::vector<QuestionOutcome> per_question;
};

inline constexpr std::size_t kMaxOverlapBucket = 10;

struct OverlapBucket {
    std::size_t count = 0;
    std::optional<double> p_at_1;
};

struct OverlapBucketReport {
    std::array<OverlapBucket, kMaxOverlapBucket + 1> buckets{};

    std::size_t total() const;
};

/// Groups questions by lexical overlap with their gold passage (0..10; larger
/// overlaps are left out) and reports P@1 per group.
OverlapBucketReport overlap_buckets(std::span<const QuestionOutcome> outcomes);

struct EvalConfig {
    std::vector<std::size_t> ks{1, 5, 10};
    std::size_t map_depth = 100;

    void validate() const;
    bool operator==(const EvalConfig&) const = default;
};

/// Metrics over precomputed rankings.
EvalResult evaluate(const Rankings& rankings, const GoldMap& gold, const EvalConfig& config);

struct EvalRun {
    std::string method;
    EvalResult result;
    OverlapBucketReport buckets;
};

/// Retrieves every question of `questions` with `method` and scores the
/// rankings against each pair's own passage. Overlap is measured between the
/// preprocessed question and the preprocessed gold passage.
EvalRun run_evaluation(const Pipeline& pipeline, std::span<const QAPair> questions, Method method,
                       const EvalConfig& config);

/// Bucket report for one method on the given pairs.
OverlapBucketReport overlap_bucket_eval(const Pipeline& pipeline, std::span<const QAPair> questions,
                                        Method method);

// --- reports ---------------------------------------------------------------------

std::string report_json(const EvalRun& run);
/// Aligned-column summary: one row per run, P@K columns then mAP.
std::string report_table(std::span<const EvalRun> runs);
/// X,count,p_at_1 with one row per bucket 0..10; empty buckets leave p_at_1 blank.
std::string buckets_csv(const OverlapBucketReport& report);
std::string buckets_json(const OverlapBucketReport& report);

} // namespace spqa
