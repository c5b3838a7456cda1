#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spqa/corpus.hpp"

namespace spqa {

struct Bm25Params {
    double k = 1.2;
    double b = 0.75;

    void validate() const;
    bool operator==(const Bm25Params&) const = default;
};

/// Jelinek-Mercer interpolation weight: the share of the collection model.
struct LmParams {
    double alpha = 0.1;

    void validate() const;
    bool operator==(const LmParams&) const = default;
};

struct ScoredDoc {
    DocId doc_id = 0;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

/// Descending by score, ties by ascending doc id.
using RankedList = std::vector<ScoredDoc>;

/// Orders two results the way every ranking in this library does.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

/// Sorts `scored` and truncates it to the best `k`.
void top_k(std::vector<ScoredDoc>& scored, std::size_t k);

enum class SparseScorer { bm25, tfidf_cos, lm };

/// Term -> weight, ordered by term so dot products sum in a fixed order.
using SparseVector = std::map<std::string, double>;

/// Smoothed IDF: ln((N - df + 0.5) / (df + 0.5) + 1).
double idf(std::uint64_t n, std::uint64_t df);

/// cosine(u, v); 0 when either vector has zero norm.
double cosine(const SparseVector& u, const SparseVector& v);

/// Immutable inverted index with per-document forward lists, document lengths
/// and collection term frequencies.
///
/// Binary layout (all integers little-endian):
///   "SPQI" | u32 version | u64 N | f64 d_avg
///   N x (u64 doc_id, u64 doc_len)                       -- insertion order
///   u64 term_count
///   term_count x (varint len, UTF-8 term, varint df,
///                 df x (varint doc_id delta, varint tf)) -- terms sorted, doc ids ascending
class InvertedIndex {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    struct Posting {
        DocId doc_id;
        std::uint32_t tf;
    };

    InvertedIndex() = default;

    /// Throws DataError on duplicate source ids.
    static InvertedIndex build(std::span<const TokenizedText> docs);

    std::uint64_t doc_count() const noexcept { return doc_ids_.size(); }
    double avg_doc_len() const noexcept { return avg_len_; }
    std::uint64_t total_tokens() const noexcept { return total_tokens_; }
    std::size_t term_count() const noexcept { return terms_.size(); }
    const std::vector<DocId>& doc_ids() const noexcept { return doc_ids_; }

    bool contains(DocId doc) const { return slot_.count(doc) != 0; }
    std::uint64_t doc_len(DocId doc) const;
    std::uint64_t df(std::string_view term) const;
    std::uint64_t collection_tf(std::string_view term) const;
    std::uint32_t tf(std::string_view term, DocId doc) const;
    std::span<const Posting> postings(std::string_view term) const;
    const std::vector<std::string>& terms() const noexcept { return terms_; }

    double idf(std::string_view term) const { return spqa::idf(doc_count(), df(term)); }

    double bm25_score(const Bm25Params& params, const TokenizedText& query, DocId doc) const;
    double lm_score(const LmParams& params, const TokenizedText& query, DocId doc) const;
    SparseVector tfidf_vector(const TokenizedText& text) const;
    /// TF-IDF vector of an indexed document, rebuilt from the forward list.
    SparseVector doc_tfidf_vector(DocId doc) const;
    double tfidf_cosine(const TokenizedText& query, DocId doc) const;

    /// Scores every document and keeps the best k (k >= 1).
    RankedList rank(SparseScorer scorer, const TokenizedText& query, std::size_t k,
                    const Bm25Params& bm25 = {}, const LmParams& lm = {}) const;

    std::string serialize() const;
    static InvertedIndex deserialize(std::string_view bytes);
    void save(const std::filesystem::path& path) const;
    static InvertedIndex load(const std::filesystem::path& path);

private:
    std::size_t slot_of(DocId doc) const;
    std::optional<std::uint32_t> term_id(std::string_view term) const;
    void finalize();

    std::vector<DocId> doc_ids_;
    std::vector<std::uint64_t> doc_len_;
    std::unordered_map<DocId, std::size_t> slot_;
    std::vector<std::string> terms_;
    std::unordered_map<std::string, std::uint32_t> term_ids_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<std::uint64_t> collection_tf_;
    // forward lists: per slot, (term id, tf) sorted by term id
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> forward_;
    std::uint64_t total_tokens_ = 0;
    double avg_len_ = 0.0;
};

std::string_view to_string(SparseScorer s);

} // namespace spqa
