#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spqa/corpus.hpp"
#include "spqa/sparse_index.hpp"

namespace spqa {

/// A passage reduced to its K most question-relevant sentences, kept in their
/// original order.
struct CondensedPassage {
    DocId doc_id = 0;
    std::vector<std::string> kept_sentences;
    /// Zero-based positions of the kept sentences in the split passage. Not
    /// persisted; empty after load_condensed.
    std::vector<std::size_t> kept_positions;
    std::optional<DocId> guide_id;

    /// Kept sentences joined by single spaces.
    std::string text() const;

    bool operator==(const CondensedPassage& o) const {
        return doc_id == o.doc_id && kept_sentences == o.kept_sentences && guide_id == o.guide_id;
    }
};

struct CondenserConfig {
    std::size_t k = 5;
    Bm25Params bm25{};
};

/// Stage-one sentence retriever. Sentences are scored with BM25 against the
/// guide question using statistics from the passage's own sentences only.
/// Ties go to the earlier sentence, so a guide that matches nothing keeps the
/// first K sentences. Throws DataError on an empty passage.
CondensedPassage condense(std::string_view passage, const TokenizedText& guide,
                          const Preprocessor& prep, const CondenserConfig& config = {});

/// Without a guide question the first K sentences are kept.
CondensedPassage condense_unguided(std::string_view passage, std::size_t k);

/// Condenses every answer against its own question. Output order follows the
/// input; errors are rethrown naming the offending pair id.
std::vector<CondensedPassage> condense_corpus(std::span<const QAPair> pairs, const Preprocessor& prep,
                                              const CondenserConfig& config = {});

/// JSONL: {"index": int, "guide": int|null, "sentences": [string, ...]}
void save_condensed(const std::filesystem::path& path, std::span<const CondensedPassage> passages);
std::vector<CondensedPassage> load_condensed(const std::filesystem::path& path);

} // namespace spqa
