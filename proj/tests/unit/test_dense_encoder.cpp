#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "spqa/dense_encoder.hpp"
#include "spqa/error.hpp"
#include "synthetic.hpp"

using namespace spqa;

namespace {

Vocabulary numbered_vocab(std::size_t v) {
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < v; ++i) tokens.push_back(synth::pseudo_word(i));
    std::sort(tokens.begin(), tokens.end());
    return Vocabulary(tokens);
}

EncoderModel random_model(std::size_t v, std::size_t d, double scale, std::uint64_t seed) {
    auto m = EncoderModel::initialize(numbered_vocab(v), d, scale, seed);
    std::mt19937_64 rng(seed ^ 0xabcdef);
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < m.embeddings.size(); ++i) m.embeddings.data()[i] = n(rng);
    return m;
}

std::vector<MnrPair> random_batch(std::size_t k, std::size_t v, std::mt19937_64& rng) {
    std::vector<MnrPair> batch(k);
    for (auto& p : batch) {
        for (std::size_t i = 0, n = 1 + rng() % 5; i < n; ++i) p.question.push_back(static_cast<TokenId>(rng() % v));
        for (std::size_t i = 0, n = 1 + rng() % 8; i < n; ++i) p.passage.push_back(static_cast<TokenId>(rng() % v));
    }
    return batch;
}

// Loss evaluated with plain loops straight from the definition.
double naive_loss(const EncoderModel& m, const std::vector<MnrPair>& batch) {
    const auto d = m.dim();
    auto mean = [&](const std::vector<TokenId>& ids) {
        std::vector<double> out(d, 0.0);
        for (auto id : ids)
            for (std::size_t c = 0; c < d; ++c) out[c] += m.embeddings(id, static_cast<Eigen::Index>(c));
        for (auto& x : out) x /= static_cast<double>(ids.size());
        return out;
    };
    auto cos = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double dot = 0, na = 0, nb = 0;
        for (std::size_t c = 0; c < d; ++c) {
            dot += a[c] * b[c];
            na += a[c] * a[c];
            nb += b[c] * b[c];
        }
        return dot / std::sqrt(na * nb);
    };
    const std::size_t k = batch.size();
    double total = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto u = mean(batch[i].question);
        double denom = 0, pos = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double s = m.scale * cos(u, mean(batch[j].passage));
            denom += std::exp(s);
            if (i == j) pos = s;
        }
        total += pos - std::log(denom);
    }
    return -total / static_cast<double>(k);
}

double max_fd_error(const EncoderModel& model, const std::vector<MnrPair>& batch, std::size_t samples,
                    std::mt19937_64& rng) {
    const auto g = mnr_gradients(model, batch);
    EncoderModel probe = model;
    double worst = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const auto row = static_cast<TokenId>(rng() % model.vocab_size());
        const auto col = static_cast<Eigen::Index>(rng() % model.dim());
        const double keep = probe.embeddings(row, col);
        const double h = 1e-5;
        probe.embeddings(row, col) = keep + h;
        const double up = naive_loss(probe, batch);
        probe.embeddings(row, col) = keep - h;
        const double down = naive_loss(probe, batch);
        probe.embeddings(row, col) = keep;
        const double numeric = (up - down) / (2 * h);
        const auto it = g.rows.find(row);
        const double analytic = it == g.rows.end() ? 0.0 : it->second(col);
        worst = std::max(worst, std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic)));
    }
    return worst;
}

} // namespace

TEST(Encode, MeanOfRows) {
    auto m = random_model(5, 3, 20, 1);
    const std::vector<TokenId> one{2};
    EXPECT_EQ(encode(m, one), Eigen::VectorXd(m.embeddings.row(2).transpose()));
    const std::vector<TokenId> two{1, 4};
    const Eigen::VectorXd expected = (m.embeddings.row(1) + m.embeddings.row(4)).transpose() / 2.0;
    EXPECT_TRUE(encode(m, two).isApprox(expected, 1e-15));
    const std::vector<TokenId> swapped{4, 1};
    EXPECT_TRUE(encode(m, swapped).isApprox(encode(m, two), 1e-15));
}

TEST(Encode, TruncatesAndValidates) {
    auto m = random_model(5, 3, 20, 2);
    const std::vector<TokenId> ids{0, 1, 2, 3};
    const std::vector<TokenId> head{0, 1};
    EXPECT_EQ(encode(m, ids, 2), encode(m, head));
    EXPECT_THROW(encode(m, std::vector<TokenId>{}), UsageError);
    EXPECT_THROW(encode(m, std::vector<TokenId>{7}), DataError);
}

TEST(Encode, PositiveHomogeneity) {
    auto m = random_model(20, 6, 20, 3);
    std::mt19937_64 rng(3);
    const auto batch = random_batch(5, 20, rng);
    const double before = mnr_loss(sim_matrix(m, batch));
    auto scaled = m;
    scaled.embeddings *= 8.0; // exact in binary floating point
    for (const auto& p : batch) EXPECT_EQ(encode(scaled, p.question), 8.0 * encode(m, p.question));
    EXPECT_NEAR(mnr_loss(sim_matrix(scaled, batch)), before, 1e-12);
    scaled.embeddings = m.embeddings * 3.3;
    EXPECT_NEAR(mnr_loss(sim_matrix(scaled, batch)), before, 1e-12);
}

TEST(SimMatrix, Examples) {
    auto m = random_model(10, 4, 20, 4);
    std::vector<MnrPair> single{{{1, 2}, {3}}};
    const auto s1 = sim_matrix(m, single);
    ASSERT_EQ(s1.rows(), 1);
    EXPECT_NEAR(s1(0, 0), 20 * cosine(encode(m, single[0].question), encode(m, single[0].passage)), 1e-12);

    m.scale = 1.0;
    std::vector<MnrPair> self{{{1, 2, 5}, {9}}, {{0}, {5, 2, 1}}};
    EXPECT_NEAR(sim_matrix(m, self)(0, 1), 1.0, 1e-12);
}

TEST(SimMatrix, MatchesPerPairCosine) {
    auto m = random_model(30, 5, 7.5, 5);
    std::mt19937_64 rng(5);
    const auto batch = random_batch(6, 30, rng);
    const auto s = sim_matrix(m, batch);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            const auto u = encode(m, batch[i].question), v = encode(m, batch[j].passage);
            EXPECT_NEAR(s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 7.5 * u.dot(v) / (u.norm() * v.norm()), 1e-12);
        }
    }
}

TEST(SimMatrix, ZeroNormGivesZero) {
    auto m = random_model(4, 3, 20, 6);
    m.embeddings.row(0).setZero();
    std::vector<MnrPair> batch{{{0}, {1}}, {{2}, {3}}};
    const auto s = sim_matrix(m, batch);
    EXPECT_EQ(s(0, 0), 0.0);
    EXPECT_EQ(s(0, 1), 0.0);
    EXPECT_NE(s(1, 1), 0.0);
}

TEST(MnrLoss, Anchors) {
    EXPECT_EQ(mnr_loss(Eigen::MatrixXd::Constant(1, 1, 3.7)), 0.0);
    EXPECT_NEAR(mnr_loss(Eigen::MatrixXd::Constant(2, 2, 0.4)), std::log(2.0), 1e-15);
    EXPECT_NEAR(mnr_loss(Eigen::MatrixXd::Identity(2, 2)), std::log(std::exp(1.0) + 1.0) - 1.0, 1e-15);
    EXPECT_NEAR(mnr_loss(Eigen::MatrixXd::Identity(2, 2)), 0.31326, 1e-5);
}

TEST(MnrLoss, PositiveAndShiftInvariant) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int t = 0; t < 500; ++t) {
        const int k = 2 + static_cast<int>(rng() % 6);
        Eigen::MatrixXd s(k, k);
        for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = u(rng);
        const double loss = mnr_loss(s);
        EXPECT_GT(loss, 0.0);
        Eigen::MatrixXd shifted = s;
        shifted.row(static_cast<Eigen::Index>(rng() % k)).array() += u(rng) * 5;
        EXPECT_NEAR(mnr_loss(shifted), loss, 1e-12);
    }
    // huge entries do not overflow
    EXPECT_TRUE(std::isfinite(mnr_loss(Eigen::MatrixXd::Constant(3, 3, 1e6))));
}

TEST(MnrGradients, SingletonBatchIsFlat) {
    auto m = random_model(10, 4, 20, 9);
    std::vector<MnrPair> one{{{1, 2}, {3, 4}}};
    const auto g = mnr_gradients(m, one);
    EXPECT_EQ(g.loss, 0.0);
    for (const auto& [row, grad] : g.rows) EXPECT_TRUE(grad.isZero(0.0)) << row;
}

TEST(MnrGradients, MatchesFiniteDifferences) {
    std::mt19937_64 rng(10);
    for (double scale : {1.0, 20.0}) {
        for (int instance = 0; instance < 10; ++instance) {
            auto m = random_model(50, 8, scale, 100 + instance);
            const auto batch = random_batch(4, 50, rng);
            EXPECT_LT(max_fd_error(m, batch, 120, rng), 1e-4) << "scale " << scale << " instance " << instance;
            EXPECT_NEAR(mnr_gradients(m, batch).loss, naive_loss(m, batch), 1e-12);
        }
    }
}

TEST(MnrGradients, TouchedRowsCoverFiniteDifferenceSupport) {
    std::mt19937_64 rng(12);
    auto m = random_model(50, 8, 20, 12);
    const auto batch = random_batch(4, 50, rng);
    const auto g = mnr_gradients(m, batch);
    std::set<TokenId> used;
    for (const auto& p : batch) {
        used.insert(p.question.begin(), p.question.end());
        used.insert(p.passage.begin(), p.passage.end());
    }
    for (const auto& [row, grad] : g.rows) EXPECT_TRUE(used.count(row)) << row;
}

TEST(MnrGradients, DuplicatePairsActAsFalseNegatives) {
    std::mt19937_64 rng(13);
    auto m = random_model(50, 8, 20, 13);
    auto batch = random_batch(3, 50, rng);
    const auto base = mnr_gradients(m, batch);
    auto dup = batch;
    dup.push_back(batch[0]);
    const auto with_dup = mnr_gradients(m, dup);
    EXPECT_LT(max_fd_error(m, dup, 100, rng), 1e-4);
    double delta = 0;
    for (const auto& [row, grad] : base.rows) {
        const auto it = with_dup.rows.find(row);
        ASSERT_NE(it, with_dup.rows.end());
        delta = std::max(delta, (grad - it->second).cwiseAbs().maxCoeff());
    }
    EXPECT_GT(delta, 1e-6);
}

TEST(Initialize, RangeAndDeterminism) {
    const auto a = EncoderModel::initialize(numbered_vocab(40), 16, 20, 77);
    const auto b = EncoderModel::initialize(numbered_vocab(40), 16, 20, 77);
    EXPECT_EQ(a.embeddings, b.embeddings);
    EXPECT_LE(a.embeddings.cwiseAbs().maxCoeff(), 0.5 / 16);
    for (Eigen::Index i = 0; i < a.embeddings.size(); ++i) {
        const double x = a.embeddings.data()[i];
        EXPECT_EQ(static_cast<double>(static_cast<float>(x)), x);
    }
    const auto c = EncoderModel::initialize(numbered_vocab(40), 16, 20, 78);
    EXPECT_NE(a.embeddings, c.embeddings);
}

TEST(Train, LossDecreasesOnSeparablePairs) {
    std::vector<MnrPair> pairs;
    const std::size_t topics = 50, words = 6;
    for (std::size_t t = 0; t < topics; ++t) {
        MnrPair p;
        for (std::size_t w = 0; w < 3; ++w) p.question.push_back(static_cast<TokenId>(t * words + w));
        for (std::size_t w = 0; w < words; ++w) p.passage.push_back(static_cast<TokenId>(t * words + w));
        pairs.push_back(p);
    }
    TrainConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 30;
    cfg.init_seed = 1;
    cfg.shuffle_seed = 2;
    const auto r = train(pairs, numbered_vocab(topics * words), cfg);
    ASSERT_EQ(r.loss_history.size(), 30u);
    EXPECT_LT(r.loss_history.back(), r.loss_history.front());

    const auto again = train(pairs, numbered_vocab(topics * words), cfg);
    EXPECT_EQ(again.model.embeddings, r.model.embeddings);
    EXPECT_EQ(again.loss_history, r.loss_history);
}

TEST(Train, ZeroLearningRateKeepsInitialization) {
    std::mt19937_64 rng(14);
    const auto pairs = random_batch(10, 30, rng);
    TrainConfig cfg;
    cfg.dim = 8;
    cfg.epochs = 3;
    cfg.batch_size = 4;
    cfg.learning_rate = 0;
    cfg.init_seed = 5;
    const auto r = train(pairs, numbered_vocab(30), cfg);
    EXPECT_EQ(r.model.embeddings, EncoderModel::initialize(numbered_vocab(30), 8, 20, 5).embeddings);
}

TEST(Train, Errors) {
    TrainConfig cfg;
    EXPECT_THROW(train({}, numbered_vocab(3), cfg), UsageError);
    std::vector<MnrPair> bad{{{0}, {9}}};
    EXPECT_THROW(train(bad, numbered_vocab(3), cfg), DataError);
    cfg.batch_size = 0;
    EXPECT_THROW(cfg.validate(), UsageError);
}

TEST(ModelFile, RoundTripIsBitStable) {
    auto m = EncoderModel::initialize(numbered_vocab(25), 6, 12.5, 3);
    const auto bytes = m.serialize();
    EXPECT_EQ(bytes.substr(0, 4), "SPQE");
    const auto back = EncoderModel::deserialize(bytes);
    EXPECT_EQ(back.embeddings, m.embeddings);
    EXPECT_EQ(back.vocab, m.vocab);
    EXPECT_EQ(back.scale, 12.5);
    EXPECT_EQ(back.serialize(), bytes);
    EXPECT_THROW(EncoderModel::deserialize(bytes.substr(0, bytes.size() - 2)), DataError);
    auto bad = bytes;
    bad[1] = 'X';
    EXPECT_THROW(EncoderModel::deserialize(bad), DataError);
}
