#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "spqa/condenser.hpp"
#include "spqa/corpus.hpp"
#include "spqa/dense_encoder.hpp"
#include "spqa/sparse_index.hpp"

namespace spqa {

enum class Method { bm25, tfidf_cos, lm, dense, two_stage };

std::string_view to_string(Method m);
/// Accepts bm25, tfidf-cos, lm, dense, two-stage; throws UsageError otherwise.
Method parse_method(std::string_view name);
std::optional<SparseScorer> sparse_scorer(Method m);
inline bool is_dense(Method m) { return m == Method::dense || m == Method::two_stage; }

/// Flat document-vector store searched by exhaustive cosine.
///
/// File layout (little-endian):
///   "SPQV" | u32 version | u64 count | u32 d
///   count x (u64 doc_id, d x f32)
class EmbeddingStore {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    EmbeddingStore() = default;
    explicit EmbeddingStore(std::size_t dim);

    /// Appends one vector; throws DataError on a duplicate id or wrong size.
    void add(DocId id, std::span<const float> vec);
    void add(DocId id, const Eigen::VectorXd& vec);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ids_.size(); }
    const std::vector<DocId>& ids() const noexcept { return ids_; }
    std::span<const float> row(std::size_t slot) const;

    /// Top-k by cosine(query, stored), ties by ascending doc id.
    RankedList search(const Eigen::VectorXd& query, std::size_t k) const;

    std::string serialize() const;
    static EmbeddingStore deserialize(std::string_view bytes);
    void save(const std::filesystem::path& path) const;
    static EmbeddingStore load(const std::filesystem::path& path);

    bool operator==(const EmbeddingStore&) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<DocId> ids_;
    std::unordered_set<DocId> id_set_;
    std::vector<float> data_;
};

/// Loads vectors produced outside this library (e.g. by a pretrained
/// transformer) in the store format.
EmbeddingStore import_external_embeddings(const std::filesystem::path& path);

struct PipelineConfig {
    std::size_t condenser_k = 5;
    Method method = Method::two_stage;
    std::size_t top_k = 10;
    Bm25Params bm25{};
    LmParams lm{};
    std::size_t max_tokens = kDefaultMaxTokens;
    /// Apply the stop-word filter to the dense encoder's input as well.
    bool stopwords_for_dense = true;
    /// Build fails when more corpus tokens than this are unknown to the model.
    double max_oov_rate = 0.5;

    void validate() const;
    bool operator==(const PipelineConfig&) const = default;
};

/// The two-stage retrieval system plus its sparse baselines, all sharing one
/// preprocessing path. Immutable once built.
class Pipeline {
public:
    /// Preprocesses and indexes `pairs`, condenses every passage against its
    /// own question, and (with a model) encodes condensed and full passages.
    static Pipeline build(std::span<const QAPair> pairs, Preprocessor prep, const EncoderModel* model,
                          const PipelineConfig& config);

    /// Same as build but reuses an index and condensed corpus loaded from disk.
    static Pipeline assemble(std::span<const QAPair> pairs, Preprocessor prep, InvertedIndex index,
                             std::vector<CondensedPassage> condensed, const EncoderModel* model,
                             const PipelineConfig& config);

    /// Preprocesses `question` and ranks the collection with `method`. Throws
    /// DataError if nothing usable is left of the question.
    RankedList retrieve(std::string_view question, Method method, std::size_t top_k) const;
    RankedList retrieve(std::string_view question) const {
        return retrieve(question, config_.method, config_.top_k);
    }

    /// Replaces the vectors searched by `target` (dense or two-stage).
    void set_store(Method target, EmbeddingStore store);

    const InvertedIndex& index() const noexcept { return index_; }
    const EmbeddingStore& store(Method m) const;
    const std::vector<CondensedPassage>& condensed() const noexcept { return condensed_; }
    const Preprocessor& preprocessor() const noexcept { return prep_; }
    const PipelineConfig& config() const noexcept { return config_; }
    const EncoderModel* model() const noexcept { return model_.get(); }
    /// Preprocessed full passage of an indexed document.
    const TokenizedText& passage_tokens(DocId doc) const;

    /// Token ids the dense encoder sees for `text` (stop-word policy applied,
    /// unknown tokens dropped).
    std::vector<TokenId> dense_ids(std::string_view text) const;

private:
    Pipeline() = default;
    void encode_stores();

    PipelineConfig config_;
    Preprocessor prep_;
    InvertedIndex index_;
    std::vector<CondensedPassage> condensed_;
    std::vector<TokenizedText> passages_;
    std::vector<std::string> answers_;
    std::unordered_map<DocId, std::size_t> slot_;
    std::shared_ptr<const EncoderModel> model_;
    EmbeddingStore full_store_;
    EmbeddingStore condensed_store_;
};

/// Preprocessed (question, condensed passage) id pairs for MNR training.
std::vector<MnrPair> make_training_pairs(std::span<const QAPair> pairs,
                                         std::span<const CondensedPassage> condensed,
                                         const Preprocessor& prep, const Vocabulary& vocab,
                                         bool stopwords_for_dense = true);

/// Vocabulary over every question and passage token of `pairs` after
/// preprocessing.
Vocabulary build_vocabulary(std::span<const QAPair> pairs, const Preprocessor& prep,
                            bool stopwords_for_dense = true);

} // namespace spqa
