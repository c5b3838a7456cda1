#include "spqa/stats.hpp"

#include <cstdio>
#include <set>
#include <sstream>

namespace spqa {

namespace {

std::string fmt(const char* f, double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string pad_right(std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

std::string pad_left(const std::string& s, std::size_t w) {
    return s.size() < w ? std::string(w - s.size(), ' ') + s : s;
}

} // namespace

SplitStats split_stats(std::string name, std::span<const QAPair> pairs, const Tokenizer& tokenizer) {
    SplitStats s;
    s.name = std::move(name);
    s.pairs = pairs.size();
    std::set<std::string> vocab;
    double answer_words = 0, question_words = 0, sentences = 0;
    for (const auto& p : pairs) {
        const auto answer = normalize(p.answer);
        const auto question = normalize(p.question);
        const auto aw = word_count(answer);
        answer_words += static_cast<double>(aw);
        question_words += static_cast<double>(word_count(question));
        sentences += static_cast<double>(split_sentences(answer).size());
        std::size_t bucket = 0;
        while (bucket < kLengthBounds.size() && aw > kLengthBounds[bucket]) ++bucket;
        ++s.length_buckets[bucket];
        for (auto& t : tokenizer.split(answer)) vocab.insert(std::move(t));
        for (auto& t : tokenizer.split(question)) vocab.insert(std::move(t));
    }
    if (s.pairs) {
        const auto n = static_cast<double>(s.pairs);
        s.avg_answer_words = answer_words / n;
        s.avg_question_words = question_words / n;
        s.avg_sentences = sentences / n;
    }
    s.vocabulary = vocab.size();
    return s;
}

SplitStats combined_stats(std::span<const QAPair> all_pairs, const Tokenizer& tokenizer) {
    return split_stats("all", all_pairs, tokenizer);
}

std::string format_stats(std::span<const SplitStats> splits, const SplitStats& all) {
    std::ostringstream o;
    constexpr std::size_t label_w = 28, col_w = 10;
    o << pad_right("Dataset", label_w) << pad_left("Value", col_w) << '\n';
    for (const auto& s : splits) o << pad_right(s.name, label_w) << pad_left(std::to_string(s.pairs), col_w) << '\n';
    o << pad_right("Average length answer", label_w) << pad_left(fmt("%.2f", all.avg_answer_words), col_w) << '\n';
    o << pad_right("Average length question", label_w) << pad_left(fmt("%.2f", all.avg_question_words), col_w)
      << '\n';
    o << pad_right("Vocabulary (word)", label_w) << pad_left(std::to_string(all.vocabulary), col_w) << '\n';
    o << pad_right("Average number of sentences", label_w) << pad_left(fmt("%.2f", all.avg_sentences), col_w)
      << "\n\n";

    static const char* labels[] = {"<= 100", "101 - 300", "301 - 500", "501 - 700", "701 - 1000", "> 1000"};
    o << pad_right("Answer length (%)", 18);
    for (const auto& s : splits) o << pad_left(s.name, col_w);
    o << pad_left(all.name, col_w) << '\n';
    for (std::size_t b = 0; b < std::size(labels); ++b) {
        o << pad_right(labels[b], 18);
        auto pct = [&](const SplitStats& s) {
            return s.pairs ? fmt("%.2f", 100.0 * static_cast<double>(s.length_buckets[b]) / static_cast<double>(s.pairs))
                           : std::string("-");
        };
        for (const auto& s : splits) o << pad_left(pct(s), col_w);
        o << pad_left(pct(all), col_w) << '\n';
    }
    return o.str();
}

} // namespace spqa
