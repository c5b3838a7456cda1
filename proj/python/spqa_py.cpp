#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spqa/app.hpp"
#include "spqa/condenser.hpp"
#include "spqa/config.hpp"
#include "spqa/error.hpp"
#include "spqa/evalkit.hpp"
#include "spqa/pipeline.hpp"

namespace py = pybind11;
using namespace spqa;

namespace {

Preprocessor make_preprocessor(const std::vector<std::string>& stopwords) {
    StopwordSet set;
    set.words.insert(stopwords.begin(), stopwords.end());
    set.cutoff = set.words.size();
    return Preprocessor(make_tokenizer("whitespace"), std::move(set));
}

std::vector<std::pair<DocId, double>> as_tuples(const RankedList& list) {
    std::vector<std::pair<DocId, double>> out;
    out.reserve(list.size());
    for (const auto& r : list) out.emplace_back(r.doc_id, r.score);
    return out;
}

Rankings as_rankings(const std::map<QuestionId, std::vector<DocId>>& ranked) {
    Rankings out;
    for (const auto& [q, docs] : ranked) {
        RankedList list;
        for (std::size_t i = 0; i < docs.size(); ++i) list.push_back({docs[i], -static_cast<double>(i)});
        out.emplace(q, std::move(list));
    }
    return out;
}

py::dict eval_dict(const EvalRun& run) {
    py::dict d;
    d["method"] = run.method;
    d["p_at_k"] = run.result.p_at_k;
    d["map"] = run.result.map_score;
    py::list buckets;
    for (std::size_t x = 0; x < run.buckets.buckets.size(); ++x) {
        const auto& b = run.buckets.buckets[x];
        buckets.append(py::make_tuple(x, b.count, b.p_at_1));
    }
    d["overlap_buckets"] = buckets;
    return d;
}

} // namespace

PYBIND11_MODULE(_spqa, m) {
    m.doc() = "Sparse, dense and two-stage passage retrieval for question answering.";

    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

    py::class_<QAPair>(m, "QAPair")
        .def(py::init([](DocId id, std::string question, std::string answer) {
                 return QAPair{id, std::move(question), std::move(answer), std::nullopt};
             }),
             py::arg("id"), py::arg("question"), py::arg("answer"))
        .def_readwrite("id", &QAPair::id)
        .def_readwrite("question", &QAPair::question)
        .def_readwrite("answer", &QAPair::answer)
        .def_readwrite("link", &QAPair::link)
        .def("__repr__", [](const QAPair& p) { return "<QAPair " + std::to_string(p.id) + ">"; });

    m.def("load_jsonl", &load_jsonl, py::arg("path"));
    m.def("normalize", &normalize, py::arg("text"));
    m.def("split_sentences", &split_sentences, py::arg("passage"));
    m.def(
        "tokenize",
        [](std::string_view text, const std::vector<std::string>& stopwords) {
            return make_preprocessor(stopwords)(text).tokens;
        },
        py::arg("text"), py::arg("stopwords") = std::vector<std::string>{});

    m.def(
        "condense",
        [](std::string_view passage, std::string_view question, std::size_t k,
           const std::vector<std::string>& stopwords) {
            const auto prep = make_preprocessor(stopwords);
            const auto c = condense(passage, prep(question), prep, {k});
            return py::make_tuple(c.kept_sentences, c.kept_positions);
        },
        py::arg("passage"), py::arg("question"), py::arg("k") = 5,
        py::arg("stopwords") = std::vector<std::string>{},
        "Top-k sentences of `passage` by BM25 against `question`, in passage order.");

    m.def("mnr_loss", &mnr_loss, py::arg("sim"), "Multiple-negatives ranking loss of a K x K score matrix.");

    m.def(
        "precision_at_k",
        [](const std::map<QuestionId, std::vector<DocId>>& ranked, const GoldMap& gold, std::size_t k) {
            return precision_at_k(as_rankings(ranked), gold, k);
        },
        py::arg("rankings"), py::arg("gold"), py::arg("k"));
    m.def(
        "mean_average_precision",
        [](const std::map<QuestionId, std::vector<DocId>>& ranked, const GoldMap& gold, std::size_t depth) {
            return mean_average_precision(as_rankings(ranked), gold, depth);
        },
        py::arg("rankings"), py::arg("gold"), py::arg("depth") = 100);

    py::class_<EncoderModel, std::shared_ptr<EncoderModel>>(m, "EncoderModel")
        .def_static("load", [](const std::filesystem::path& p) { return std::make_shared<EncoderModel>(EncoderModel::load(p)); })
        .def("save", &EncoderModel::save)
        .def_property_readonly("dim", &EncoderModel::dim)
        .def_property_readonly("vocab_size", &EncoderModel::vocab_size)
        .def_readonly("scale", &EncoderModel::scale)
        .def_property_readonly("vocabulary", [](const EncoderModel& e) { return e.vocab.tokens(); })
        .def_property_readonly("embeddings", [](const EncoderModel& e) { return e.embeddings; })
        .def(
            "encode",
            [](const EncoderModel& e, const std::vector<std::string>& tokens) {
                return encode(e, e.vocab.encode(TokenizedText{tokens, 0}));
            },
            py::arg("tokens"), "Mean of the token vectors; unknown tokens are skipped.");

    m.def(
        "train_encoder",
        [](const std::vector<QAPair>& pairs, std::size_t dim, std::size_t epochs, std::size_t batch_size,
           double learning_rate, std::uint64_t seed, std::size_t condenser_k,
           const std::vector<std::string>& stopwords) {
            const auto prep = make_preprocessor(stopwords);
            const auto condensed = condense_corpus(pairs, prep, {condenser_k});
            auto vocab = build_vocabulary(pairs, prep);
            const auto training = make_training_pairs(pairs, condensed, prep, vocab);
            TrainConfig cfg;
            cfg.dim = dim;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.learning_rate = learning_rate;
            cfg.init_seed = seed;
            cfg.shuffle_seed = seed ^ 0x9E3779B97F4A7C15ULL;
            py::gil_scoped_release release;
            auto result = train(training, std::move(vocab), cfg);
            return std::make_pair(std::make_shared<EncoderModel>(std::move(result.model)), result.loss_history);
        },
        py::arg("pairs"), py::arg("dim") = 64, py::arg("epochs") = 15, py::arg("batch_size") = 32,
        py::arg("learning_rate") = 0.05, py::arg("seed") = 42, py::arg("condenser_k") = 5,
        py::arg("stopwords") = std::vector<std::string>{},
        "Trains on (question, condensed passage) pairs. Returns (model, per-epoch loss).");

    py::class_<Pipeline, std::shared_ptr<Pipeline>>(m, "Pipeline")
        .def(py::init([](const std::vector<QAPair>& pairs, const EncoderModel* model,
                         const std::vector<std::string>& stopwords, std::size_t condenser_k) {
                 PipelineConfig cfg;
                 cfg.condenser_k = condenser_k;
                 auto p = Pipeline::build(pairs, make_preprocessor(stopwords), model, cfg);
                 return std::make_shared<Pipeline>(std::move(p));
             }),
             py::arg("pairs"), py::arg("model") = nullptr, py::arg("stopwords") = std::vector<std::string>{},
             py::arg("condenser_k") = 5)
        .def(
            "retrieve",
            [](const Pipeline& p, std::string_view question, std::string_view method, std::size_t top_k) {
                return as_tuples(p.retrieve(question, parse_method(method), top_k));
            },
            py::arg("question"), py::arg("method") = "two-stage", py::arg("top_k") = 10,
            "List of (doc_id, score), best first.")
        .def(
            "evaluate",
            [](const Pipeline& p, const std::vector<QAPair>& questions, std::string_view method,
               std::vector<std::size_t> ks) {
                return eval_dict(run_evaluation(p, questions, parse_method(method), {std::move(ks), 100}));
            },
            py::arg("questions"), py::arg("method") = "two-stage", py::arg("ks") = std::vector<std::size_t>{1, 5, 10})
        .def_property_readonly("size", [](const Pipeline& p) { return p.index().doc_count(); })
        .def(
            "condensed",
            [](const Pipeline& p, DocId doc) {
                for (const auto& c : p.condensed()) {
                    if (c.doc_id == doc) return c.text();
                }
                throw DataError("unknown document " + std::to_string(doc));
            },
            py::arg("doc_id"));

    // Config-driven commands, the same ones the command-line tool runs.
    py::class_<AppConfig>(m, "Config")
        .def_static("load", &AppConfig::load, py::arg("path"))
        .def_static("parse", &AppConfig::parse, py::arg("text"), py::arg("base_dir") = std::filesystem::path{})
        .def("to_toml", &AppConfig::to_toml)
        .def_readwrite("seed", &AppConfig::seed)
        .def_readwrite("condenser_k", &AppConfig::condenser_k)
        .def_readwrite("top_k", &AppConfig::top_k);

    m.def("cmd_index", &app::cmd_index, py::arg("config"), "Returns the corpus statistics block.");
    m.def("cmd_train", &app::cmd_train, py::arg("config"), "Returns the per-epoch loss.");
    m.def(
        "cmd_eval",
        [](const AppConfig& c, std::string_view method) { return eval_dict(app::cmd_eval(c, parse_method(method))); },
        py::arg("config"), py::arg("method") = "two-stage");
    m.def(
        "cmd_query",
        [](const AppConfig& c, std::string_view question, std::string_view method, std::size_t top_k) {
            return as_tuples(app::cmd_query(c, question, parse_method(method), top_k));
        },
        py::arg("config"), py::arg("question"), py::arg("method") = "two-stage", py::arg("top_k") = 10);
}
