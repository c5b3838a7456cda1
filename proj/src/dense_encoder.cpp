#include "spqa/dense_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "spqa/binary_io.hpp"
#include "spqa/error.hpp"

namespace spqa {

namespace {

constexpr std::string_view kMagic = "SPQE";

std::span<const TokenId> truncated(std::span<const TokenId> ids, std::size_t max_tokens) {
    return ids.first(std::min(ids.size(), max_tokens));
}

void snap_to_float(EmbeddingMatrix& m) { m = m.cast<float>().cast<double>(); }

} // namespace

// --- model ------------------------------------------------------------------------

EncoderModel EncoderModel::initialize(Vocabulary vocab, std::size_t dim, double scale, std::uint64_t seed) {
    if (dim == 0) throw UsageError("embedding dimension must be at least 1");
    if (!(scale > 0.0)) throw UsageError("similarity scale must be positive");
    EncoderModel m;
    m.scale = scale;
    m.rng_seed = seed;
    m.embeddings.resize(static_cast<Eigen::Index>(vocab.size()), static_cast<Eigen::Index>(dim));
    m.vocab = std::move(vocab);
    const double bound = 0.5 / static_cast<double>(dim);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < m.embeddings.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.embeddings.cols(); ++c) m.embeddings(r, c) = dist(rng);
    }
    snap_to_float(m.embeddings);
    return m;
}

void EncoderModel::validate() const {
    if (embeddings.cols() < 1) throw DataError("model: embedding dimension must be at least 1");
    if (static_cast<std::size_t>(embeddings.rows()) != vocab.size()) {
        throw DataError("model: embedding rows do not match vocabulary size");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) throw DataError("model: scale must be positive");
    if (!embeddings.allFinite()) throw DataError("model: non-finite embedding value");
}

std::string EncoderModel::serialize() const {
    io::ByteWriter w;
    w.bytes(kMagic);
    w.u32(kFormatVersion);
    w.u64(vocab_size());
    w.u32(static_cast<std::uint32_t>(dim()));
    w.f64(scale);
    for (Eigen::Index r = 0; r < embeddings.rows(); ++r) {
        for (Eigen::Index c = 0; c < embeddings.cols(); ++c) w.f32(static_cast<float>(embeddings(r, c)));
    }
    for (const auto& tok : vocab.tokens()) w.u32_string(tok);
    return w.data();
}

EncoderModel EncoderModel::deserialize(std::string_view bytes) {
    io::ByteReader r(bytes, "model file");
    r.expect_header(kMagic, kFormatVersion);
    const auto v = r.u64();
    const auto d = r.u32();
    EncoderModel m;
    m.scale = r.f64();
    if (d == 0) r.fail("dimension is zero");
    if (v > r.remaining() / (static_cast<std::uint64_t>(d) * sizeof(float))) r.fail("embedding table truncated");
    m.embeddings.resize(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(d));
    for (Eigen::Index row = 0; row < m.embeddings.rows(); ++row) {
        for (Eigen::Index c = 0; c < m.embeddings.cols(); ++c) m.embeddings(row, c) = r.f32();
    }
    std::vector<std::string> tokens;
    tokens.reserve(v);
    for (std::uint64_t i = 0; i < v; ++i) tokens.push_back(r.u32_string());
    if (!r.at_end()) r.fail("trailing bytes");
    m.vocab = Vocabulary(std::move(tokens));
    m.validate();
    return m;
}

void EncoderModel::save(const std::filesystem::path& path) const { io::write_file(path, serialize()); }

EncoderModel EncoderModel::load(const std::filesystem::path& path) { return deserialize(io::read_file(path)); }

// --- encoding and similarity ----------------------------------------------------------

Eigen::VectorXd encode(const EncoderModel& model, std::span<const TokenId> ids, std::size_t max_tokens) {
    auto used = truncated(ids, max_tokens);
    if (used.empty()) throw UsageError("encode: empty token list");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.dim()));
    for (auto id : used) {
        if (id >= model.vocab_size()) throw DataError("encode: token id " + std::to_string(id) + " out of range");
        sum += model.embeddings.row(id).transpose();
    }
    return sum / static_cast<double>(used.size());
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.squaredNorm();
    const double nb = b.squaredNorm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / std::sqrt(na * nb);
}

void validate_batch(const EncoderModel& model, std::span<const MnrPair> batch) {
    if (batch.empty()) throw UsageError("MNR batch must hold at least one pair");
    const auto v = model.vocab_size();
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& p = batch[i];
        if (p.question.empty() || p.passage.empty()) {
            throw UsageError("MNR batch pair " + std::to_string(i) + " has an empty side");
        }
        auto oob = [v](TokenId t) { return t >= v; };
        if (std::any_of(p.question.begin(), p.question.end(), oob) ||
            std::any_of(p.passage.begin(), p.passage.end(), oob)) {
            throw DataError("MNR batch pair " + std::to_string(i) + " has a token id outside the vocabulary");
        }
    }
}

namespace {

struct EncodedBatch {
    std::vector<Eigen::VectorXd> questions;
    std::vector<Eigen::VectorXd> passages;
};

EncodedBatch encode_batch(const EncoderModel& model, std::span<const MnrPair> batch, std::size_t max_tokens) {
    EncodedBatch out;
    out.questions.reserve(batch.size());
    out.passages.reserve(batch.size());
    for (const auto& p : batch) {
        out.questions.push_back(encode(model, p.question, max_tokens));
        out.passages.push_back(encode(model, p.passage, max_tokens));
    }
    return out;
}

Eigen::MatrixXd similarities(const EncodedBatch& enc, double scale) {
    const auto k = static_cast<Eigen::Index>(enc.questions.size());
    Eigen::MatrixXd s(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            s(i, j) = scale * cosine(enc.questions[static_cast<std::size_t>(i)], enc.passages[static_cast<std::size_t>(j)]);
        }
    }
    return s;
}

double logsumexp(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    const double m = row.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((row.array() - m).exp().sum());
}

} // namespace

Eigen::MatrixXd sim_matrix(const EncoderModel& model, std::span<const MnrPair> batch, std::size_t max_tokens) {
    validate_batch(model, batch);
    return similarities(encode_batch(model, batch, max_tokens), model.scale);
}

double mnr_loss(const Eigen::MatrixXd& sim) {
    if (sim.rows() == 0 || sim.rows() != sim.cols()) throw UsageError("mnr_loss: need a non-empty square matrix");
    double total = 0.0;
    for (Eigen::Index i = 0; i < sim.rows(); ++i) total += logsumexp(sim.row(i)) - sim(i, i);
    return total / static_cast<double>(sim.rows());
}

MnrGradients mnr_gradients(const EncoderModel& model, std::span<const MnrPair> batch, std::size_t max_tokens) {
    validate_batch(model, batch);
    const auto enc = encode_batch(model, batch, max_tokens);
    const auto sim = similarities(enc, model.scale);
    const auto k = sim.rows();
    const auto d = static_cast<Eigen::Index>(model.dim());

    MnrGradients out;
    out.loss = mnr_loss(sim);

    // dL/dS = (softmax_row(S) - I) / K
    Eigen::MatrixXd g(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double lse = logsumexp(sim.row(i));
        for (Eigen::Index j = 0; j < k; ++j) g(i, j) = std::exp(sim(i, j) - lse);
        g(i, i) -= 1.0;
    }
    g /= static_cast<double>(k);

    std::vector<Eigen::VectorXd> grad_q(static_cast<std::size_t>(k), Eigen::VectorXd::Zero(d));
    std::vector<Eigen::VectorXd> grad_p(static_cast<std::size_t>(k), Eigen::VectorXd::Zero(d));
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto& u = enc.questions[static_cast<std::size_t>(i)];
        const double nu = u.norm();
        if (nu == 0.0) continue;
        for (Eigen::Index j = 0; j < k; ++j) {
            const auto& v = enc.passages[static_cast<std::size_t>(j)];
            const double nv = v.norm();
            if (nv == 0.0) continue;
            const double c = u.dot(v) / (nu * nv);
            const double w = model.scale * g(i, j);
            // d cos / du = v / (|u||v|) - cos * u / |u|^2, symmetric in v
            grad_q[static_cast<std::size_t>(i)] += w * (v / (nu * nv) - c * u / (nu * nu));
            grad_p[static_cast<std::size_t>(j)] += w * (u / (nu * nv) - c * v / (nv * nv));
        }
    }

    auto scatter = [&](std::span<const TokenId> ids, const Eigen::VectorXd& grad) {
        auto used = truncated(ids, max_tokens);
        const Eigen::VectorXd share = grad / static_cast<double>(used.size());
        for (auto id : used) {
            auto [it, inserted] = out.rows.try_emplace(id, share);
            if (!inserted) it->second += share;
        }
    };
    for (std::size_t i = 0; i < batch.size(); ++i) {
        scatter(batch[i].question, grad_q[i]);
        scatter(batch[i].passage, grad_p[i]);
    }
    return out;
}

// --- training ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (batch_size == 0) throw UsageError("batch_size must be positive");
    if (max_tokens == 0) throw UsageError("max_tokens must be positive");
    if (dim == 0) throw UsageError("dim must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw UsageError("learning_rate must be non-negative");
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) throw UsageError("scale must be positive");
}

TrainResult train(std::span<const MnrPair> pairs, Vocabulary vocab, const TrainConfig& config) {
    config.validate();
    if (pairs.empty()) throw UsageError("train: no training pairs");

    TrainResult result{EncoderModel::initialize(std::move(vocab), config.dim, config.scale, config.init_seed), {}};
    auto& model = result.model;
    validate_batch(model, pairs);

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(config.shuffle_seed);
    std::vector<MnrPair> batch;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const auto end = std::min(order.size(), start + config.batch_size);
            if (end - start < 2) continue;
            batch.clear();
            for (auto idx = start; idx < end; ++idx) batch.push_back(pairs[order[idx]]);
            auto grads = mnr_gradients(model, batch, config.max_tokens);
            for (const auto& [row, g] : grads.rows) {
                model.embeddings.row(row) -= config.learning_rate * g.transpose();
            }
            loss_sum += grads.loss;
            ++batches;
        }
        result.loss_history.push_back(batches ? loss_sum / static_cast<double>(batches) : 0.0);
    }
    snap_to_float(model.embeddings);
    return result;
}

} // namespace spqa
