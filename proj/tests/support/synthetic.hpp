#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spqa/corpus.hpp"

namespace spqa::synth {

/// Deterministic pronounceable pseudo-word for index n; distinct n give
/// distinct words.
std::string pseudo_word(std::size_t n);

struct SyntheticCorpus {
    std::vector<QAPair> pairs;
    /// Pairs whose question reuses words of its own passage.
    std::vector<DocId> high_overlap;
    /// Pairs whose question shares no word with its own passage.
    std::vector<DocId> zero_overlap;
    /// Extra pairs that exist only to attract lexical matches.
    std::vector<DocId> decoys;
};

struct SeparableOptions {
    std::size_t pairs = 50;
    /// Every other pair (odd positions) asks in a disjoint vocabulary when true.
    bool mix_zero_overlap = true;
    std::size_t min_sentences = 6;
    std::size_t max_sentences = 9;
    std::size_t filler_vocab = 24;
    DocId first_id = 1000;
    std::uint64_t seed = 7;
};

/// Topic-disjoint QA pairs: each pair owns a topic vocabulary; passages mix
/// topic sentences with sentences drawn from a shared filler vocabulary.
SyntheticCorpus separable_corpus(const SeparableOptions& options = {});

/// Pairs whose question shares no token with the gold passage. Each decoy
/// passage repeats words of several questions, so every sparse scorer ranks a
/// decoy above the gold passage.
SyntheticCorpus lexical_gap_corpus(std::size_t pairs, std::size_t decoys, std::uint64_t seed);

/// Passages of many long sentences (hundreds of words each passage).
SyntheticCorpus long_passage_corpus(std::size_t pairs, std::size_t long_share_percent, std::uint64_t seed);

/// Writes pairs as JSONL in the dataset format.
void write_jsonl(const std::filesystem::path& path, std::span<const QAPair> pairs);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

} // namespace spqa::synth
