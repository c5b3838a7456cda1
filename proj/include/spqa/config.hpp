#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "spqa/dense_encoder.hpp"
#include "spqa/evalkit.hpp"
#include "spqa/pipeline.hpp"
#include "spqa/sparse_index.hpp"

namespace spqa {

struct PathsConfig {
    std::filesystem::path train;
    std::filesystem::path dev;
    std::filesystem::path test;
    std::filesystem::path stopwords = "out/stopwords.txt";
    std::filesystem::path condensed = "out/condensed.jsonl";
    std::filesystem::path index = "out/index.spqi";
    std::filesystem::path model = "out/model.spqe";
    std::filesystem::path store = "out/store.spqv";
    std::filesystem::path loss_csv = "out/loss.csv";
    std::filesystem::path reports = "out/reports";
    /// Optional vectors produced elsewhere; replaces the dense store when set.
    std::filesystem::path external_store;

    bool operator==(const PathsConfig&) const = default;
};

/// Everything an experiment needs, read from a TOML-style file:
///
///     seed = 42
///     [paths]        train, dev, test, stopwords, condensed, index, model,
///                    store, loss_csv, reports, external_store
///     [preprocess]   stopwords (M), tokenizer, stopwords_for_dense
///     [condenser]    k
///     [bm25]         k, b
///     [lm]           alpha
///     [train]        epochs, batch_size, learning_rate, max_tokens, dim, scale
///     [retrieval]    method, top_k, max_oov_rate
///     [eval]         k (list), map_depth, split
///
/// Relative paths are resolved against the config file's directory.
struct AppConfig {
    PathsConfig paths;
    std::size_t stopword_count = 100;
    std::string tokenizer = "whitespace";
    bool stopwords_for_dense = true;
    std::size_t condenser_k = 5;
    Bm25Params bm25{};
    LmParams lm{};
    TrainConfig train{};
    Method method = Method::two_stage;
    std::size_t top_k = 10;
    double max_oov_rate = 0.5;
    EvalConfig eval{};
    std::string eval_split = "test";
    std::uint64_t seed = 42;

    /// Re-checks every numeric constraint of the owning modules.
    void validate() const;

    PipelineConfig pipeline() const;
    /// Training settings with both seeds derived from `seed`.
    TrainConfig train_config() const;

    std::string to_toml() const;
    static AppConfig parse(std::string_view text, const std::filesystem::path& base_dir = {});
    static AppConfig load(const std::filesystem::path& path);

    bool operator==(const AppConfig&) const = default;
};

} // namespace spqa
