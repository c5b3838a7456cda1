#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "spqa/condenser.hpp"
#include "spqa/error.hpp"
#include "synthetic.hpp"

using namespace spqa;

namespace {

// Per-sentence BM25 evaluated from raw counts, with the passage's sentences
// as the collection.
std::vector<double> naive_sentence_scores(const std::vector<std::vector<std::string>>& sentences,
                                          const std::vector<std::string>& guide) {
    const double n = static_cast<double>(sentences.size());
    double len_sum = 0;
    for (const auto& s : sentences) len_sum += static_cast<double>(s.size());
    const double avg = len_sum / n;
    std::set<std::string> distinct(guide.begin(), guide.end());
    std::vector<double> scores;
    for (const auto& s : sentences) {
        double score = 0;
        for (const auto& t : distinct) {
            const double f = static_cast<double>(std::count(s.begin(), s.end(), t));
            if (f == 0) continue;
            double df = 0;
            for (const auto& o : sentences) df += std::find(o.begin(), o.end(), t) != o.end() ? 1 : 0;
            const double w = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
            score += w * f * 2.2 / (f + 1.2 * (0.25 + 0.75 * static_cast<double>(s.size()) / avg));
        }
        scores.push_back(score);
    }
    return scores;
}

std::vector<std::size_t> naive_top(const std::vector<double>& scores, std::size_t k) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    order.resize(std::min(k, order.size()));
    std::sort(order.begin(), order.end());
    return order;
}

std::size_t token_count(const Preprocessor& prep, std::string_view text) { return prep.unfiltered(text).tokens.size(); }

} // namespace

TEST(Condense, ShortPassageUnchanged) {
    const Preprocessor prep;
    const std::string passage = "first one here. second one here. third one here.";
    const auto c = condense(passage, prep("anything at all"), prep, {5});
    EXPECT_EQ(c.text(), normalize(passage));
    EXPECT_EQ(c.kept_positions, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Condense, KeepsMatchingSentencesInOrder) {
    const Preprocessor prep;
    const std::string passage =
        "alpha beta gamma. delta epsilon kidney. zeta eta theta. iota kappa lambda. mu nu stone. xi omicron pi. rho sigma tau.";
    const auto c = condense(passage, prep("kidney stone"), prep, {2});
    EXPECT_EQ(c.kept_sentences, (std::vector<std::string>{"delta epsilon kidney.", "mu nu stone."}));
    EXPECT_EQ(c.kept_positions, (std::vector<std::size_t>{1, 4}));
}

TEST(Condense, NoMatchKeepsFirstK) {
    const Preprocessor prep;
    const auto c = condense("one two three. four five six. seven eight nine.", prep("zzz"), prep, {2});
    EXPECT_EQ(c.kept_positions, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(condense_unguided("one two three. four five six. seven eight nine.", 2).kept_positions,
              (std::vector<std::size_t>{0, 1}));
}

TEST(Condense, Errors) {
    const Preprocessor prep;
    EXPECT_THROW(condense("   ", prep("q"), prep, {2}), DataError);
    EXPECT_THROW(condense("a b.", prep("q"), prep, {0}), UsageError);
}

TEST(Condense, PureAndShrinking) {
    const auto corpus = synth::long_passage_corpus(30, 60, 4);
    const Preprocessor prep;
    for (const auto& p : corpus.pairs) {
        const auto a = condense(p.answer, prep(p.question), prep, {5});
        const auto b = condense(p.answer, prep(p.question), prep, {5});
        EXPECT_EQ(a, b);
        EXPECT_EQ(a.kept_positions, b.kept_positions);
        EXPECT_LE(token_count(prep, a.text()), token_count(prep, p.answer));
        EXPECT_LE(a.kept_sentences.size(), 5u);
        const auto source = normalize(p.answer);
        for (const auto& s : a.kept_sentences) EXPECT_NE(source.find(s), std::string::npos);
        const auto all = condense(p.answer, prep(p.question), prep, {100});
        EXPECT_EQ(all.text(), source);
    }
}

TEST(Condense, SelectionEqualsBruteForce) {
    std::mt19937_64 rng(31);
    const Preprocessor prep;
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 12;
        std::vector<std::vector<std::string>> words(n);
        std::string passage;
        for (auto& s : words) {
            const std::size_t len = 2 + rng() % 6;
            for (std::size_t w = 0; w < len; ++w) {
                s.push_back(synth::pseudo_word(rng() % 15));
                if (!passage.empty()) passage.push_back(' ');
                passage += s.back();
            }
            passage.push_back('.');
        }
        std::vector<std::string> guide;
        for (int g = 0; g < 3; ++g) guide.push_back(synth::pseudo_word(rng() % 20));
        const std::size_t k = 1 + rng() % 6;
        const auto c = condense(passage, {guide, 0}, prep, {k});
        EXPECT_EQ(c.kept_positions, naive_top(naive_sentence_scores(words, guide), k)) << passage;
    }
}

TEST(CondenseCorpus, OrderGuideAndIdentity) {
    const Preprocessor prep;
    const std::vector<QAPair> pairs{{7, "q one", "short. answer here.", {}}, {3, "q two", "also short one.", {}}};
    const auto out = condense_corpus(pairs, prep, {5});
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].doc_id, 7u);
    EXPECT_EQ(out[1].doc_id, 3u);
    EXPECT_EQ(out[0].guide_id, 7u);
    EXPECT_EQ(out[0].text(), "short. answer here.");
    EXPECT_EQ(out[1].text(), "also short one.");

    const std::vector<QAPair> single{{1, "q", "x y.", {}}};
    EXPECT_EQ(condense_corpus(single, prep).at(0).guide_id, 1u);
}

TEST(CondenseCorpus, ErrorsNameThePair) {
    const Preprocessor prep;
    const std::vector<QAPair> pairs{{1, "q", "fine text.", {}}, {42, "q", " ", {}}};
    try {
        condense_corpus(pairs, prep);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("pair 42"), std::string::npos);
    }
}

TEST(CondenseCorpus, BringsLongPassagesUnderTheEncoderLength) {
    const auto corpus = synth::long_passage_corpus(40, 70, 9);
    const Preprocessor prep;
    std::size_t over_before = 0, over_after = 0;
    const auto condensed = condense_corpus(corpus.pairs, prep, {5});
    for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
        over_before += token_count(prep, corpus.pairs[i].answer) > 300;
        over_after += token_count(prep, condensed[i].text()) > 256;
    }
    EXPECT_GT(over_before * 100, 65 * corpus.pairs.size());
    EXPECT_EQ(over_after, 0u);
}

TEST(CondensedPersistence, RoundTrip) {
    const auto dir = synth::temp_dir("condensed");
    std::vector<CondensedPassage> items(2);
    items[0] = {5, {"a b.", "c \"quoted\" d."}, {0, 1}, 5};
    items[1] = {6, {"ư ơ."}, {0}, std::nullopt};
    save_condensed(dir / "c.jsonl", items);
    const auto back = load_condensed(dir / "c.jsonl");
    EXPECT_EQ(back, items);
    EXPECT_FALSE(back[1].guide_id);
    std::filesystem::remove_all(dir);
}
