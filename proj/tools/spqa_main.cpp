// spqa: index, train, query and evaluate a two-stage QA retrieval system.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spqa/app.hpp"
#include "spqa/config.hpp"
#include "spqa/error.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct Options {
    std::string config_path = "spqa.toml";
    std::optional<std::uint64_t> seed;
    std::optional<std::string> method;
    std::string question;
    std::optional<std::size_t> top_k;
    std::optional<std::string> split;
};

spqa::AppConfig effective_config(const Options& opt) {
    auto config = spqa::AppConfig::load(opt.config_path);
    if (opt.seed) config.seed = *opt.seed;
    if (opt.method) config.method = spqa::parse_method(*opt.method);
    if (opt.top_k) config.top_k = *opt.top_k;
    if (opt.split) config.eval_split = *opt.split;
    config.validate();
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Two-stage question answering retrieval: BM25 sentence condensation + dense bi-encoder"};
    cli.require_subcommand(1);
    Options opt;
    cli.add_option("--config", opt.config_path, "Experiment config file")->capture_default_str();
    cli.add_option("--seed", opt.seed, "Override the config seed");
    cli.add_option("--method", opt.method, "bm25 | tfidf-cos | lm | dense | two-stage")
        ->check(CLI::IsMember({"bm25", "tfidf-cos", "lm", "dense", "two-stage"}));

    auto* index = cli.add_subcommand("index", "Extract stop-words, condense passages, build the sparse index");
    auto* train = cli.add_subcommand("train", "Train the dense encoder with the MNR loss");
    auto* query = cli.add_subcommand("query", "Retrieve passages for one question (JSONL on stdout)");
    query->add_option("question", opt.question, "Question text")->required();
    query->add_option("--top-k", opt.top_k, "Number of results");
    auto* eval = cli.add_subcommand("eval", "Evaluate a method: P@K, mAP and overlap buckets");
    eval->add_option("--split", opt.split, "train | dev | test");
    auto* overlap = cli.add_subcommand("analyze-overlap", "P@1 per lexical-overlap bucket (X = 0..10)");
    overlap->add_option("--split", opt.split, "train | dev | test");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        const auto config = effective_config(opt);
        if (index->parsed()) {
            std::cout << spqa::app::cmd_index(config);
        } else if (train->parsed()) {
            const auto history = spqa::app::cmd_train(config);
            std::cout << "trained " << history.size() << " epochs";
            if (!history.empty()) std::cout << ", first loss " << history.front() << ", last loss " << history.back();
            std::cout << "\nmodel: " << config.paths.model.string() << "\n";
        } else if (query->parsed()) {
            std::cout << spqa::app::query_jsonl(
                spqa::app::cmd_query(config, opt.question, config.method, config.top_k));
        } else if (eval->parsed()) {
            const auto run = spqa::app::cmd_eval(config, config.method);
            std::cout << spqa::report_table(std::span(&run, 1));
        } else if (overlap->parsed()) {
            std::cout << spqa::app::format_buckets(spqa::app::cmd_analyze_overlap(config, config.method));
        }
        return kOk;
    } catch (const spqa::UsageError& e) {
        std::cerr << "spqa: " << e.what() << '\n';
        return kUsage;
    } catch (const spqa::DataError& e) {
        std::cerr << "spqa: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "spqa: internal error: " << e.what() << '\n';
        return kInternal;
    }
}
