#pragma once

#include <array>
#include <span>
#include <string>

#include "spqa/corpus.hpp"

namespace spqa {

/// Upper bounds (inclusive, in words) of the answer-length histogram; the last
/// bucket is open-ended.
inline constexpr std::array<std::size_t, 5> kLengthBounds{100, 300, 500, 700, 1000};

struct SplitStats {
    std::string name;
    std::size_t pairs = 0;
    double avg_answer_words = 0.0;
    double avg_question_words = 0.0;
    double avg_sentences = 0.0;
    /// Distinct words over questions and answers, before stop-word removal.
    std::size_t vocabulary = 0;
    std::array<std::size_t, kLengthBounds.size() + 1> length_buckets{};
};

SplitStats split_stats(std::string name, std::span<const QAPair> pairs, const Tokenizer& tokenizer);

/// Merges per-split statistics into an "all" row (vocabulary is recomputed).
SplitStats combined_stats(std::span<const QAPair> all_pairs, const Tokenizer& tokenizer);

/// Dataset summary table followed by the answer-length distribution (%).
std::string format_stats(std::span<const SplitStats> splits, const SplitStats& all);

} // namespace spqa
