#include "spqa/app.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spqa/binary_io.hpp"
#include "spqa/condenser.hpp"
#include "spqa/error.hpp"
#include "spqa/stats.hpp"

namespace spqa::app {

namespace fs = std::filesystem;

namespace {

Preprocessor make_preprocessor(const AppConfig& config, StopwordSet stopwords) {
    return Preprocessor(make_tokenizer(config.tokenizer), std::move(stopwords));
}

Preprocessor load_preprocessor(const AppConfig& config) {
    return make_preprocessor(config, load_stopwords(config.paths.stopwords));
}

fs::path report_path(const AppConfig& config, Method method, std::string_view suffix) {
    return config.paths.reports / (config.eval_split + "_" + std::string(to_string(method)) + std::string(suffix));
}

} // namespace

const std::vector<QAPair>& Experiment::split(std::string_view name) const {
    if (name == "train") return train;
    if (name == "dev") return dev;
    if (name == "test") return test;
    throw UsageError("unknown split \"" + std::string(name) + "\"");
}

Experiment load_experiment(const AppConfig& config) {
    Experiment e;
    if (!config.paths.train.empty()) e.train = load_jsonl(config.paths.train);
    if (!config.paths.dev.empty()) e.dev = load_jsonl(config.paths.dev);
    if (!config.paths.test.empty()) e.test = load_jsonl(config.paths.test);
    for (const auto* split : {&e.train, &e.dev, &e.test}) {
        e.collection.insert(e.collection.end(), split->begin(), split->end());
    }
    if (e.collection.empty()) throw DataError("no QA pairs: set paths.train, paths.dev or paths.test");
    return e;
}

std::string cmd_index(const AppConfig& config) {
    const auto e = load_experiment(config);
    const auto tokenizer = make_tokenizer(config.tokenizer);

    const auto& source = e.train.empty() ? e.collection : e.train;
    const Preprocessor raw(tokenizer, {});
    std::vector<TokenizedText> docs;
    docs.reserve(2 * source.size());
    for (const auto& p : source) {
        docs.push_back(raw.unfiltered(p.question, p.id));
        docs.push_back(raw.unfiltered(p.answer, p.id));
    }
    auto stopwords = extract_stopwords(docs, config.stopword_count);
    const auto prep = make_preprocessor(config, stopwords);

    std::vector<TokenizedText> passages;
    passages.reserve(e.collection.size());
    for (const auto& p : e.collection) passages.push_back(prep(p.answer, p.id));
    const auto index = InvertedIndex::build(passages);
    const auto condensed =
        condense_corpus(e.collection, prep, CondenserConfig{config.condenser_k, config.bm25});

    save_stopwords(config.paths.stopwords, stopwords);
    save_condensed(config.paths.condensed, condensed);
    index.save(config.paths.index);

    std::vector<SplitStats> splits;
    if (!config.paths.train.empty()) splits.push_back(split_stats("Train", e.train, *tokenizer));
    if (!config.paths.dev.empty()) splits.push_back(split_stats("Dev", e.dev, *tokenizer));
    if (!config.paths.test.empty()) splits.push_back(split_stats("Test", e.test, *tokenizer));
    auto all = combined_stats(e.collection, *tokenizer);
    all.name = "All";
    return format_stats(splits, all);
}

std::vector<double> cmd_train(const AppConfig& config) {
    const auto e = load_experiment(config);
    if (e.train.empty()) throw DataError("training needs paths.train");
    const auto prep = load_preprocessor(config);
    auto condensed = load_condensed(config.paths.condensed);

    auto vocab = build_vocabulary(e.collection, prep, config.stopwords_for_dense);
    auto pairs = make_training_pairs(e.train, condensed, prep, vocab, config.stopwords_for_dense);
    if (pairs.empty()) throw DataError("no usable training pairs after preprocessing");
    auto result = train(pairs, std::move(vocab), config.train_config());
    result.model.save(config.paths.model);

    std::ostringstream csv;
    csv << "epoch,mean_loss\n";
    for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", result.loss_history[i]);
        csv << (i + 1) << ',' << buf << '\n';
    }
    io::write_file(config.paths.loss_csv, csv.str());

    auto pipeline = Pipeline::assemble(e.collection, prep, InvertedIndex::load(config.paths.index),
                                       std::move(condensed), &result.model, config.pipeline());
    pipeline.store(Method::two_stage).save(config.paths.store);
    return result.loss_history;
}

Pipeline load_pipeline(const AppConfig& config, const Experiment& experiment, Method method) {
    auto prep = load_preprocessor(config);
    auto index = InvertedIndex::load(config.paths.index);
    auto condensed = load_condensed(config.paths.condensed);
    std::optional<EncoderModel> model;
    if (is_dense(method)) model = EncoderModel::load(config.paths.model);
    auto pipeline = Pipeline::assemble(experiment.collection, std::move(prep), std::move(index),
                                       std::move(condensed), model ? &*model : nullptr, config.pipeline());
    if (method == Method::two_stage && fs::exists(config.paths.store)) {
        pipeline.set_store(Method::two_stage, EmbeddingStore::load(config.paths.store));
    }
    if (is_dense(method) && !config.paths.external_store.empty()) {
        pipeline.set_store(method, import_external_embeddings(config.paths.external_store));
    }
    return pipeline;
}

RankedList cmd_query(const AppConfig& config, std::string_view question, Method method, std::size_t top_k) {
    const auto e = load_experiment(config);
    return load_pipeline(config, e, method).retrieve(question, method, top_k);
}

std::string query_jsonl(const RankedList& results) {
    std::string out;
    for (std::size_t i = 0; i < results.size(); ++i) {
        nlohmann::ordered_json j;
        j["rank"] = i + 1;
        j["doc_id"] = results[i].doc_id;
        j["score"] = results[i].score;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

EvalRun cmd_eval(const AppConfig& config, Method method) {
    const auto e = load_experiment(config);
    const auto& questions = e.split(config.eval_split);
    if (questions.empty()) throw DataError("split \"" + config.eval_split + "\" has no questions");
    const auto pipeline = load_pipeline(config, e, method);
    auto run = run_evaluation(pipeline, questions, method, config.eval);
    io::write_file(report_path(config, method, ".json"), report_json(run));
    io::write_file(report_path(config, method, ".txt"), report_table(std::span(&run, 1)));
    io::write_file(report_path(config, method, "_overlap.csv"), buckets_csv(run.buckets));
    io::write_file(report_path(config, method, "_overlap.json"), buckets_json(run.buckets));
    return run;
}

OverlapBucketReport cmd_analyze_overlap(const AppConfig& config, Method method) {
    const auto e = load_experiment(config);
    const auto& questions = e.split(config.eval_split);
    if (questions.empty()) throw DataError("split \"" + config.eval_split + "\" has no questions");
    const auto report = overlap_bucket_eval(load_pipeline(config, e, method), questions, method);
    io::write_file(report_path(config, method, "_overlap.csv"), buckets_csv(report));
    io::write_file(report_path(config, method, "_overlap.json"), buckets_json(report));
    return report;
}

std::string format_buckets(const OverlapBucketReport& report) {
    std::ostringstream o;
    o << "  X    count     P@1\n";
    for (std::size_t x = 0; x <= kMaxOverlapBucket; ++x) {
        const auto& b = report.buckets[x];
        char line[64];
        if (b.p_at_1) {
            std::snprintf(line, sizeof line, "%3zu %8zu %7.2f\n", x, b.count, *b.p_at_1);
        } else {
            std::snprintf(line, sizeof line, "%3zu %8zu %7s\n", x, b.count, "-");
        }
        o << line;
    }
    return o.str();
}

} // namespace spqa::app
