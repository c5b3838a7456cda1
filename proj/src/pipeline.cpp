#include "spqa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

#include "spqa/binary_io.hpp"
#include "spqa/error.hpp"

namespace spqa {

namespace {

constexpr std::string_view kStoreMagic = "SPQV";

} // namespace

std::string_view to_string(Method m) {
    switch (m) {
    case Method::bm25: return "bm25";
    case Method::tfidf_cos: return "tfidf-cos";
    case Method::lm: return "lm";
    case Method::dense: return "dense";
    case Method::two_stage: return "two-stage";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (auto m : {Method::bm25, Method::tfidf_cos, Method::lm, Method::dense, Method::two_stage}) {
        if (to_string(m) == name) return m;
    }
    throw UsageError("unknown method \"" + std::string(name) +
                     "\" (expected bm25, tfidf-cos, lm, dense or two-stage)");
}

std::optional<SparseScorer> sparse_scorer(Method m) {
    switch (m) {
    case Method::bm25: return SparseScorer::bm25;
    case Method::tfidf_cos: return SparseScorer::tfidf_cos;
    case Method::lm: return SparseScorer::lm;
    default: return std::nullopt;
    }
}

// --- EmbeddingStore -------------------------------------------------------------

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw UsageError("embedding store dimension must be at least 1");
}

void EmbeddingStore::add(DocId id, std::span<const float> vec) {
    if (vec.size() != dim_) {
        throw DataError("embedding store: vector for doc " + std::to_string(id) + " has dimension " +
                        std::to_string(vec.size()) + ", expected " + std::to_string(dim_));
    }
    if (!id_set_.insert(id).second) throw DataError("embedding store: duplicate doc id " + std::to_string(id));
    ids_.push_back(id);
    data_.insert(data_.end(), vec.begin(), vec.end());
}

void EmbeddingStore::add(DocId id, const Eigen::VectorXd& vec) {
    std::vector<float> f(static_cast<std::size_t>(vec.size()));
    for (Eigen::Index i = 0; i < vec.size(); ++i) f[static_cast<std::size_t>(i)] = static_cast<float>(vec[i]);
    add(id, f);
}

std::span<const float> EmbeddingStore::row(std::size_t slot) const {
    return std::span<const float>(data_).subspan(slot * dim_, dim_);
}

RankedList EmbeddingStore::search(const Eigen::VectorXd& query, std::size_t k) const {
    if (k == 0) throw UsageError("search: K must be at least 1");
    if (static_cast<std::size_t>(query.size()) != dim_) {
        throw DataError("query dimension " + std::to_string(query.size()) + " does not match store dimension " +
                        std::to_string(dim_));
    }
    RankedList scored;
    scored.reserve(ids_.size());
    for (std::size_t s = 0; s < ids_.size(); ++s) {
        auto r = row(s);
        Eigen::VectorXd v(static_cast<Eigen::Index>(dim_));
        for (std::size_t i = 0; i < dim_; ++i) v[static_cast<Eigen::Index>(i)] = r[i];
        scored.push_back({ids_[s], cosine(query, v)});
    }
    top_k(scored, k);
    return scored;
}

std::string EmbeddingStore::serialize() const {
    io::ByteWriter w;
    w.bytes(kStoreMagic);
    w.u32(kFormatVersion);
    w.u64(ids_.size());
    w.u32(static_cast<std::uint32_t>(dim_));
    for (std::size_t s = 0; s < ids_.size(); ++s) {
        w.u64(ids_[s]);
        for (float x : row(s)) w.f32(x);
    }
    return w.data();
}

EmbeddingStore EmbeddingStore::deserialize(std::string_view bytes) {
    io::ByteReader r(bytes, "embedding store");
    r.expect_header(kStoreMagic, kFormatVersion);
    const auto count = r.u64();
    const auto d = r.u32();
    if (d == 0) r.fail("dimension is zero");
    const std::uint64_t record = 8 + static_cast<std::uint64_t>(d) * 4;
    if (count > r.remaining() / record) r.fail("truncated: header promises " + std::to_string(count) + " records");
    EmbeddingStore store(d);
    store.ids_.reserve(count);
    store.data_.reserve(count * d);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto id = r.u64();
        if (!store.id_set_.insert(id).second) r.fail("duplicate doc id " + std::to_string(id));
        store.ids_.push_back(id);
        for (std::uint32_t k = 0; k < d; ++k) {
            const float x = r.f32();
            if (!std::isfinite(x)) r.fail("non-finite value for doc " + std::to_string(id));
            store.data_.push_back(x);
        }
    }
    if (!r.at_end()) r.fail("trailing bytes");
    return store;
}

void EmbeddingStore::save(const std::filesystem::path& path) const { io::write_file(path, serialize()); }

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
    return deserialize(io::read_file(path));
}

EmbeddingStore import_external_embeddings(const std::filesystem::path& path) { return EmbeddingStore::load(path); }

// --- Pipeline -------------------------------------------------------------------------

void PipelineConfig::validate() const {
    if (condenser_k == 0) throw UsageError("condenser K must be at least 1");
    if (top_k == 0) throw UsageError("top_k must be at least 1");
    if (max_tokens == 0) throw UsageError("max_tokens must be at least 1");
    if (!(max_oov_rate >= 0.0 && max_oov_rate <= 1.0)) throw UsageError("max_oov_rate must lie in [0, 1]");
    bm25.validate();
    lm.validate();
}

Pipeline Pipeline::build(std::span<const QAPair> pairs, Preprocessor prep, const EncoderModel* model,
                         const PipelineConfig& config) {
    config.validate();
    if (pairs.empty()) throw UsageError("pipeline: no QA pairs");
    std::vector<TokenizedText> docs;
    docs.reserve(pairs.size());
    for (const auto& p : pairs) docs.push_back(prep(p.answer, p.id));
    auto index = InvertedIndex::build(docs);
    auto condensed = condense_corpus(pairs, prep, CondenserConfig{config.condenser_k, config.bm25});
    return assemble(pairs, std::move(prep), std::move(index), std::move(condensed), model, config);
}

Pipeline Pipeline::assemble(std::span<const QAPair> pairs, Preprocessor prep, InvertedIndex index,
                            std::vector<CondensedPassage> condensed, const EncoderModel* model,
                            const PipelineConfig& config) {
    config.validate();
    if (pairs.empty()) throw UsageError("pipeline: no QA pairs");
    if (index.doc_count() != pairs.size() || condensed.size() != pairs.size()) {
        throw DataError("pipeline: index/condensed corpus size does not match the dataset (" +
                        std::to_string(index.doc_count()) + "/" + std::to_string(condensed.size()) + " vs " +
                        std::to_string(pairs.size()) + ")");
    }
    Pipeline p;
    p.config_ = config;
    p.prep_ = std::move(prep);
    p.index_ = std::move(index);
    p.condensed_ = std::move(condensed);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& pair = pairs[i];
        if (!p.index_.contains(pair.id)) {
            throw DataError("pipeline: document " + std::to_string(pair.id) + " missing from index");
        }
        if (p.condensed_[i].doc_id != pair.id) {
            throw DataError("pipeline: condensed corpus out of order at document " + std::to_string(pair.id));
        }
        p.slot_.emplace(pair.id, i);
        p.passages_.push_back(p.prep_(pair.answer, pair.id));
        p.answers_.push_back(normalize(pair.answer));
    }
    if (model) {
        p.model_ = std::make_shared<const EncoderModel>(*model);
        p.encode_stores();
    }
    return p;
}

std::vector<TokenId> Pipeline::dense_ids(std::string_view text) const {
    if (!model_) throw UsageError("no encoder model loaded");
    auto tokens = config_.stopwords_for_dense ? prep_(text) : prep_.unfiltered(text);
    return model_->vocab.encode(tokens);
}

void Pipeline::encode_stores() {
    full_store_ = EmbeddingStore(model_->dim());
    condensed_store_ = EmbeddingStore(model_->dim());
    std::size_t total = 0, known = 0;
    auto add = [&](DocId id, const std::string& text, EmbeddingStore& store) {
        auto tokens = config_.stopwords_for_dense ? prep_(text) : prep_.unfiltered(text);
        auto ids = model_->vocab.encode(tokens);
        total += tokens.tokens.size();
        known += ids.size();
        if (ids.empty()) {
            throw DataError("vocabulary mismatch: passage " + std::to_string(id) +
                            " has no token known to the model");
        }
        store.add(id, encode(*model_, ids, config_.max_tokens));
    };
    for (std::size_t i = 0; i < condensed_.size(); ++i) {
        add(condensed_[i].doc_id, condensed_[i].text(), condensed_store_);
        add(condensed_[i].doc_id, answers_[i], full_store_);
    }
    const double oov = total ? 1.0 - static_cast<double>(known) / static_cast<double>(total) : 0.0;
    if (oov > config_.max_oov_rate) {
        char pct[32];
        std::snprintf(pct, sizeof pct, "%.2f%%", oov * 100.0);
        throw DataError(std::string("vocabulary mismatch: ") + pct + " of corpus tokens are unknown to the model");
    }
}

RankedList Pipeline::retrieve(std::string_view question, Method method, std::size_t top_k) const {
    if (top_k == 0) throw UsageError("top_k must be at least 1");
    if (auto scorer = sparse_scorer(method)) {
        auto q = prep_(question);
        if (q.tokens.empty()) throw DataError("question is empty after preprocessing");
        return index_.rank(*scorer, q, top_k, config_.bm25, config_.lm);
    }
    const auto& s = store(method);
    if (!model_) throw UsageError("method " + std::string(to_string(method)) + " needs an encoder model");
    auto ids = dense_ids(question);
    if (ids.empty()) throw DataError("question has no token known to the encoder after preprocessing");
    return s.search(encode(*model_, ids, config_.max_tokens), top_k);
}

void Pipeline::set_store(Method target, EmbeddingStore store) {
    if (!is_dense(target)) throw UsageError("only dense methods use an embedding store");
    if (model_ && store.dim() != model_->dim()) {
        throw DataError("embedding store dimension " + std::to_string(store.dim()) +
                        " does not match the encoder dimension " + std::to_string(model_->dim()));
    }
    (target == Method::dense ? full_store_ : condensed_store_) = std::move(store);
}

const EmbeddingStore& Pipeline::store(Method m) const {
    if (m == Method::dense) return full_store_;
    if (m == Method::two_stage) return condensed_store_;
    throw UsageError("method " + std::string(to_string(m)) + " has no embedding store");
}

const TokenizedText& Pipeline::passage_tokens(DocId doc) const {
    auto it = slot_.find(doc);
    if (it == slot_.end()) throw DataError("unknown document id " + std::to_string(doc));
    return passages_[it->second];
}

std::vector<MnrPair> make_training_pairs(std::span<const QAPair> pairs,
                                         std::span<const CondensedPassage> condensed,
                                         const Preprocessor& prep, const Vocabulary& vocab,
                                         bool stopwords_for_dense) {
    std::unordered_map<DocId, const CondensedPassage*> by_id;
    for (const auto& c : condensed) by_id.emplace(c.doc_id, &c);
    auto ids_of = [&](std::string_view text) {
        return vocab.encode(stopwords_for_dense ? prep(text) : prep.unfiltered(text));
    };
    std::vector<MnrPair> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        auto it = by_id.find(p.id);
        if (it == by_id.end()) throw DataError("no condensed passage for pair " + std::to_string(p.id));
        MnrPair mp{ids_of(p.question), ids_of(it->second->text())};
        if (mp.question.empty() || mp.passage.empty()) continue;
        out.push_back(std::move(mp));
    }
    return out;
}

Vocabulary build_vocabulary(std::span<const QAPair> pairs, const Preprocessor& prep, bool stopwords_for_dense) {
    std::vector<TokenizedText> texts;
    texts.reserve(2 * pairs.size());
    for (const auto& p : pairs) {
        texts.push_back(stopwords_for_dense ? prep(p.question) : prep.unfiltered(p.question));
        texts.push_back(stopwords_for_dense ? prep(p.answer) : prep.unfiltered(p.answer));
    }
    return Vocabulary::from_texts(texts);
}

} // namespace spqa
