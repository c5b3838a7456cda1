#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "spqa/config.hpp"
#include "spqa/evalkit.hpp"
#include "spqa/pipeline.hpp"

namespace spqa::app {

/// The dataset splits named in a config. `collection` is every pair of every
/// split, in train/dev/test order; it is the set of passages retrieved from.
struct Experiment {
    std::vector<QAPair> train;
    std::vector<QAPair> dev;
    std::vector<QAPair> test;
    std::vector<QAPair> collection;

    const std::vector<QAPair>& split(std::string_view name) const;
};

Experiment load_experiment(const AppConfig& config);

/// Writes the stop-word list, condensed corpus and sparse index. Returns the
/// corpus statistics block.
std::string cmd_index(const AppConfig& config);

/// Trains the encoder on the train split, then writes the model, the
/// per-epoch loss CSV and the condensed-passage embedding store. Returns the
/// loss history.
std::vector<double> cmd_train(const AppConfig& config);

/// Rebuilds the retrieval system from the artifacts on disk.
Pipeline load_pipeline(const AppConfig& config, const Experiment& experiment, Method method);

RankedList cmd_query(const AppConfig& config, std::string_view question, Method method, std::size_t top_k);

/// One {"rank", "doc_id", "score"} object per line.
std::string query_jsonl(const RankedList& results);

/// Evaluates `method` on the configured split and writes
/// <reports>/<split>_<method>.{json,txt} plus the overlap bucket CSV/JSON.
EvalRun cmd_eval(const AppConfig& config, Method method);

/// Writes only the lexical-overlap bucket report.
OverlapBucketReport cmd_analyze_overlap(const AppConfig& config, Method method);

std::string format_buckets(const OverlapBucketReport& report);

} // namespace spqa::app
