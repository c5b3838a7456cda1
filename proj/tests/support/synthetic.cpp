#include "synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>

#include <unistd.h>

#include <nlohmann/json.hpp>

namespace spqa::synth {

namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

class WordPool {
public:
    explicit WordPool(std::size_t& counter, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) words_.push_back(pseudo_word(counter++));
    }
    const std::string& pick(std::mt19937_64& rng) const {
        return words_[std::uniform_int_distribution<std::size_t>(0, words_.size() - 1)(rng)];
    }
    std::vector<std::string> distinct(std::mt19937_64& rng, std::size_t n) const {
        auto copy = words_;
        std::shuffle(copy.begin(), copy.end(), rng);
        copy.resize(std::min(n, copy.size()));
        return copy;
    }
    const std::vector<std::string>& words() const { return words_; }

private:
    std::vector<std::string> words_;
};

std::string sentence(std::vector<std::string> words, char terminator) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out.push_back(' ');
        out += w;
    }
    if (!out.empty()) out[0] = static_cast<char>(out[0] - 'a' + 'A');
    out.push_back(terminator);
    return out;
}

std::string random_sentence(const WordPool& pool, std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    const auto n = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    std::vector<std::string> words;
    for (std::size_t i = 0; i < n; ++i) words.push_back(pool.pick(rng));
    return sentence(std::move(words), '.');
}

std::string join(const std::vector<std::string>& sentences) {
    std::string out;
    for (const auto& s : sentences) {
        if (!out.empty()) out.push_back(' ');
        out += s;
    }
    return out;
}

} // namespace

std::string pseudo_word(std::size_t n) {
    const auto syllables = kConsonants.size() * kVowels.size();
    std::string w;
    for (int k = 0; k < 3; ++k) {
        const auto s = n % syllables;
        n /= syllables;
        w.push_back(kConsonants[s / kVowels.size()]);
        w.push_back(kVowels[s % kVowels.size()]);
    }
    while (n > 0) {
        w.push_back(kVowels[n % kVowels.size()]);
        n /= kVowels.size();
    }
    return w;
}

SyntheticCorpus separable_corpus(const SeparableOptions& options) {
    std::mt19937_64 rng(options.seed);
    std::size_t counter = 0;
    const WordPool filler(counter, options.filler_vocab);
    SyntheticCorpus out;
    for (std::size_t i = 0; i < options.pairs; ++i) {
        const WordPool topic(counter, 10);
        const WordPool dialect(counter, 6);
        const auto n = std::uniform_int_distribution<std::size_t>(options.min_sentences, options.max_sentences)(rng);
        const auto n_topic = std::max<std::size_t>(3, n / 2);
        std::vector<std::string> sentences;
        for (std::size_t s = 0; s < n; ++s) {
            sentences.push_back(random_sentence(s < n_topic ? topic : filler, rng, 5, 8));
        }
        std::shuffle(sentences.begin() + 1, sentences.end(), rng);

        QAPair p;
        p.id = options.first_id + i;
        const bool zero = options.mix_zero_overlap && i % 2 == 1;
        p.question = sentence(zero ? dialect.distinct(rng, 5) : topic.distinct(rng, 5), '?');
        p.answer = join(sentences);
        (zero ? out.zero_overlap : out.high_overlap).push_back(p.id);
        out.pairs.push_back(std::move(p));
    }
    return out;
}

SyntheticCorpus lexical_gap_corpus(std::size_t pairs, std::size_t decoys, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::size_t counter = 0;
    const WordPool filler(counter, 16);
    std::vector<WordPool> question_pools;
    SyntheticCorpus out;
    for (std::size_t i = 0; i < pairs; ++i) {
        question_pools.emplace_back(counter, 4);
        const WordPool topic(counter, 10);
        std::vector<std::string> sentences;
        const auto n = std::uniform_int_distribution<std::size_t>(4, 6)(rng);
        for (std::size_t s = 0; s < n; ++s) sentences.push_back(random_sentence(s + 1 < n ? topic : filler, rng, 5, 8));
        QAPair p;
        p.id = 1 + i;
        p.question = sentence(question_pools.back().words(), '?');
        p.answer = join(sentences);
        out.zero_overlap.push_back(p.id);
        out.pairs.push_back(std::move(p));
    }
    for (std::size_t j = 0; j < decoys; ++j) {
        const WordPool own(counter, 8);
        const WordPool asks(counter, 4);
        std::vector<std::string> sentences;
        for (std::size_t i = j; i < pairs; i += decoys) {
            auto words = question_pools[i].words();
            for (int k = 0; k < 3; ++k) words.push_back(own.pick(rng));
            std::shuffle(words.begin(), words.end(), rng);
            sentences.push_back(sentence(std::move(words), '.'));
        }
        sentences.push_back(random_sentence(own, rng, 5, 7));
        QAPair p;
        p.id = 1 + pairs + j;
        p.question = sentence(asks.words(), '?');
        p.answer = join(sentences);
        out.decoys.push_back(p.id);
        out.pairs.push_back(std::move(p));
    }
    return out;
}

SyntheticCorpus long_passage_corpus(std::size_t pairs, std::size_t long_share_percent, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::size_t counter = 0;
    const WordPool filler(counter, 40);
    SyntheticCorpus out;
    for (std::size_t i = 0; i < pairs; ++i) {
        const WordPool topic(counter, 12);
        const bool is_long = i * 100 < pairs * long_share_percent;
        const auto n = is_long ? std::uniform_int_distribution<std::size_t>(14, 18)(rng)
                               : std::uniform_int_distribution<std::size_t>(2, 4)(rng);
        std::vector<std::string> sentences;
        for (std::size_t s = 0; s < n; ++s) {
            const bool on_topic = s % 3 == 0;
            sentences.push_back(is_long ? random_sentence(on_topic ? topic : filler, rng, 24, 32)
                                        : random_sentence(on_topic ? topic : filler, rng, 6, 10));
        }
        QAPair p;
        p.id = i;
        p.question = sentence(topic.distinct(rng, 6), '?');
        p.answer = join(sentences);
        out.high_overlap.push_back(p.id);
        out.pairs.push_back(std::move(p));
    }
    return out;
}

void write_jsonl(const std::filesystem::path& path, std::span<const QAPair> pairs) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["index"] = p.id;
        j["question"] = p.question;
        j["answer"] = p.answer;
        if (p.link) j["link"] = *p.link;
        out << j.dump() << '\n';
    }
}

std::filesystem::path temp_dir(const std::string& tag) {
    static std::atomic<int> seq{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("spqa-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(seq++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace spqa::synth
