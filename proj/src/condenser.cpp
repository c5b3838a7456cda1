#include "spqa/condenser.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "spqa/error.hpp"

namespace spqa {

namespace {

CondensedPassage keep(std::vector<std::string> sentences, std::vector<std::size_t> positions) {
    std::sort(positions.begin(), positions.end());
    CondensedPassage out;
    out.kept_positions = std::move(positions);
    for (auto p : out.kept_positions) out.kept_sentences.push_back(std::move(sentences[p]));
    return out;
}

std::vector<std::string> split_or_throw(std::string_view passage) {
    auto sentences = split_sentences(normalize(passage));
    if (sentences.empty()) throw DataError("condense: empty passage");
    return sentences;
}

} // namespace

std::string CondensedPassage::text() const {
    std::string out;
    for (const auto& s : kept_sentences) {
        if (!out.empty()) out.push_back(' ');
        out += s;
    }
    return out;
}

CondensedPassage condense(std::string_view passage, const TokenizedText& guide, const Preprocessor& prep,
                          const CondenserConfig& config) {
    if (config.k == 0) throw UsageError("condense: K must be at least 1");
    auto sentences = split_or_throw(passage);

    std::vector<TokenizedText> sentence_tokens;
    sentence_tokens.reserve(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) sentence_tokens.push_back(prep(sentences[i], i));
    const auto mini = InvertedIndex::build(sentence_tokens);

    std::vector<ScoredDoc> scored;
    scored.reserve(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        scored.push_back({i, mini.bm25_score(config.bm25, guide, i)});
    }
    top_k(scored, config.k);

    std::vector<std::size_t> positions;
    for (const auto& s : scored) positions.push_back(static_cast<std::size_t>(s.doc_id));
    return keep(std::move(sentences), std::move(positions));
}

CondensedPassage condense_unguided(std::string_view passage, std::size_t k) {
    if (k == 0) throw UsageError("condense: K must be at least 1");
    auto sentences = split_or_throw(passage);
    std::vector<std::size_t> positions(std::min(k, sentences.size()));
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    return keep(std::move(sentences), std::move(positions));
}

std::vector<CondensedPassage> condense_corpus(std::span<const QAPair> pairs, const Preprocessor& prep,
                                              const CondenserConfig& config) {
    std::vector<CondensedPassage> out;
    out.reserve(pairs.size());
    for (const auto& pair : pairs) {
        try {
            auto c = condense(pair.answer, prep(pair.question, pair.id), prep, config);
            c.doc_id = pair.id;
            c.guide_id = pair.id;
            out.push_back(std::move(c));
        } catch (const std::exception& e) {
            throw DataError("pair " + std::to_string(pair.id) + ": " + e.what());
        }
    }
    return out;
}

void save_condensed(const std::filesystem::path& path, std::span<const CondensedPassage> passages) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& p : passages) {
        nlohmann::ordered_json j;
        j["index"] = p.doc_id;
        j["guide"] = p.guide_id ? nlohmann::ordered_json(*p.guide_id) : nlohmann::ordered_json(nullptr);
        j["sentences"] = p.kept_sentences;
        out << j.dump() << '\n';
    }
}

std::vector<CondensedPassage> load_condensed(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open condensed corpus " + path.string());
    std::vector<CondensedPassage> out;
    std::unordered_set<DocId> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto where = path.string() + ":" + std::to_string(lineno) + ": ";
        try {
            auto j = nlohmann::json::parse(line);
            CondensedPassage p;
            p.doc_id = j.at("index").get<DocId>();
            if (const auto& g = j.at("guide"); !g.is_null()) p.guide_id = g.get<DocId>();
            p.kept_sentences = j.at("sentences").get<std::vector<std::string>>();
            if (!ids.insert(p.doc_id).second) throw DataError("duplicate index");
            out.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where + e.what());
        } catch (const DataError& e) {
            throw DataError(where + e.what());
        }
    }
    return out;
}

} // namespace spqa
