#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spqa/corpus.hpp"

namespace spqa {

using EmbeddingMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Bag-of-embeddings sentence encoder: a V x d token table read through mean
/// pooling. Similarities are `scale * cosine`.
///
/// File layout (little-endian):
///   "SPQE" | u32 version | u64 V | u32 d | f64 scale
///   V*d f32 embeddings, row-major
///   V x (u32 byte length, UTF-8 token)
///
/// Weights are stored at single precision; a model produced by `train` or
/// `EncoderModel::initialize` already holds float-representable values, so it
/// survives a save/load cycle unchanged.
struct EncoderModel {
    static constexpr std::uint32_t kFormatVersion = 1;

    Vocabulary vocab;
    EmbeddingMatrix embeddings; // V x d
    double scale = 20.0;
    std::uint64_t rng_seed = 0;

    std::size_t dim() const noexcept { return static_cast<std::size_t>(embeddings.cols()); }
    std::size_t vocab_size() const noexcept { return static_cast<std::size_t>(embeddings.rows()); }

    /// Uniform init in [-0.5/d, 0.5/d], drawn row-major from `seed`.
    static EncoderModel initialize(Vocabulary vocab, std::size_t dim, double scale, std::uint64_t seed);

    void validate() const;

    std::string serialize() const;
    static EncoderModel deserialize(std::string_view bytes);
    void save(const std::filesystem::path& path) const;
    static EncoderModel load(const std::filesystem::path& path);
};

inline constexpr std::size_t kDefaultMaxTokens = 256;

/// Mean of the embedding rows of the first `max_tokens` ids. Throws UsageError
/// on an empty list and DataError on an id outside the vocabulary.
Eigen::VectorXd encode(const EncoderModel& model, std::span<const TokenId> ids,
                       std::size_t max_tokens = kDefaultMaxTokens);

/// cosine(a, b), or 0 if either side has zero norm.
double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// One positive (question, passage) pair; every other passage in the batch is
/// a negative for this question.
struct MnrPair {
    std::vector<TokenId> question;
    std::vector<TokenId> passage;
};

void validate_batch(const EncoderModel& model, std::span<const MnrPair> batch);

/// S[i][j] = scale * cosine(encode(question_i), encode(passage_j)).
Eigen::MatrixXd sim_matrix(const EncoderModel& model, std::span<const MnrPair> batch,
                           std::size_t max_tokens = kDefaultMaxTokens);

/// Multiple-negatives ranking loss, averaged over rows:
/// -(1/K) * sum_i (S[i][i] - logsumexp_j S[i][j]).
double mnr_loss(const Eigen::MatrixXd& sim);

struct MnrGradients {
    double loss = 0.0;
    /// d loss / d embedding row, for every row the batch touches.
    std::map<TokenId, Eigen::VectorXd> rows;
};

/// Analytic gradient of mnr_loss(sim_matrix(model, batch)) with respect to the
/// embedding table.
MnrGradients mnr_gradients(const EncoderModel& model, std::span<const MnrPair> batch,
                           std::size_t max_tokens = kDefaultMaxTokens);

struct TrainConfig {
    std::size_t epochs = 15;
    std::size_t batch_size = 32;
    double learning_rate = 0.05;
    std::size_t max_tokens = kDefaultMaxTokens;
    std::size_t dim = 64;
    double scale = 20.0;
    std::uint64_t init_seed = 0;
    std::uint64_t shuffle_seed = 0;

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

struct TrainResult {
    EncoderModel model;
    /// Mean batch loss per epoch.
    std::vector<double> loss_history;
};

/// Mini-batch SGD on the MNR loss. Pairs are reshuffled each epoch; a trailing
/// batch of one pair is skipped because it has no negatives.
TrainResult train(std::span<const MnrPair> pairs, Vocabulary vocab, const TrainConfig& config);

} // namespace spqa
