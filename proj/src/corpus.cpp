#include "spqa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "spqa/error.hpp"

namespace spqa {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one UTF-8 sequence starting at s[i]; advances i. Malformed input
// yields U+FFFD and consumes one byte.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
    auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++i;
        return kReplacement;
    }
    if (i + len > s.size()) {
        ++i;
        return kReplacement;
    }
    for (int k = 1; k < len; ++k) {
        auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return kReplacement;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr char32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++i;
        return kReplacement;
    }
    i += len;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_space(char32_t c) {
    return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
           (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F ||
           c == 0x205F || c == 0x3000;
}

bool is_control(char32_t c) { return c < 0x20 || (c >= 0x7F && c <= 0x9F); }

// Simple case folding for the scripts that matter here: Latin (including the
// Vietnamese letters in Latin Extended Additional), Greek and Cyrillic.
char32_t to_lower(char32_t c) {
    if (c < 0x80) return (c >= 'A' && c <= 'Z') ? c + 32 : c;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
    if (c >= 0x100 && c <= 0x137) return (c % 2 == 0) ? c + 1 : c;
    if (c >= 0x139 && c <= 0x148) return (c % 2 == 1) ? c + 1 : c;
    if (c >= 0x14A && c <= 0x177) return (c % 2 == 0) ? c + 1 : c;
    if (c == 0x178) return 0xFF;
    if (c >= 0x179 && c <= 0x17E) return (c % 2 == 1) ? c + 1 : c;
    if (c == 0x1A0 || c == 0x1AF) return c + 1; // Ơ, Ư
    if (c >= 0x1E00 && c <= 0x1EFF) return (c % 2 == 0) ? c + 1 : c;
    if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 32;
    if (c >= 0x410 && c <= 0x42F) return c + 32;
    if (c >= 0x400 && c <= 0x40F) return c + 80;
    return c;
}

bool is_punct(char32_t c) {
    if (c < 0x80) {
        return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
               (c >= 0x7B && c <= 0x7E);
    }
    return c == 0xA1 || c == 0xAB || c == 0xBB || c == 0xBF || (c >= 0x2010 && c <= 0x2027) ||
           (c >= 0x2030 && c <= 0x205E) || (c >= 0x3001 && c <= 0x3003) ||
           (c >= 0x3008 && c <= 0x3011);
}

std::vector<char32_t> decode_all(std::string_view s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) out.push_back(decode_utf8(s, i));
    return out;
}

double smoothed_idf(double n, double df) { return std::log((n - df + 0.5) / (df + 0.5) + 1.0); }

std::string_view trim_spaces(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
}

} // namespace

// --- Vocabulary ---------------------------------------------------------------

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    ids_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (tokens_[i].empty()) throw DataError("vocabulary: empty token at id " + std::to_string(i));
        if (!ids_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
            throw DataError("vocabulary: duplicate token \"" + tokens_[i] + "\"");
        }
    }
}

Vocabulary Vocabulary::from_texts(std::span<const TokenizedText> texts) {
    std::set<std::string> seen;
    for (const auto& t : texts) seen.insert(t.tokens.begin(), t.tokens.end());
    return Vocabulary(std::vector<std::string>(seen.begin(), seen.end()));
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

std::vector<TokenId> Vocabulary::encode(const TokenizedText& text) const {
    std::vector<TokenId> out;
    out.reserve(text.tokens.size());
    for (const auto& tok : text.tokens) {
        if (auto id = find(tok)) out.push_back(*id);
    }
    return out;
}

// --- normalization and tokenization --------------------------------------------

std::string normalize(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (std::size_t i = 0; i < text.size();) {
        char32_t c = decode_utf8(text, i);
        if (is_space(c)) {
            pending_space = true;
            continue;
        }
        if (is_control(c) || c == kReplacement) continue;
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        append_utf8(out, to_lower(c));
    }
    return out;
}

std::vector<std::string> WhitespaceTokenizer::split(std::string_view normalized) const {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < normalized.size()) {
        auto end = normalized.find(' ', pos);
        if (end == std::string_view::npos) end = normalized.size();
        auto word = decode_all(normalized.substr(pos, end - pos));
        std::size_t lo = 0, hi = word.size();
        while (lo < hi && is_punct(word[lo])) ++lo;
        while (hi > lo && is_punct(word[hi - 1])) --hi;
        if (lo < hi) {
            std::string tok;
            for (std::size_t k = lo; k < hi; ++k) append_utf8(tok, word[k]);
            out.push_back(std::move(tok));
        }
        pos = end + 1;
    }
    return out;
}

std::shared_ptr<const Tokenizer> make_tokenizer(std::string_view name) {
    if (name == "whitespace") return std::make_shared<WhitespaceTokenizer>();
    throw UsageError("unknown tokenizer \"" + std::string(name) + "\"");
}

TokenizedText tokenize(std::string_view normalized, const Tokenizer& tokenizer,
                       const StopwordSet& stopwords, DocId source_id) {
    TokenizedText out{tokenizer.split(normalized), source_id};
    if (!stopwords.empty()) {
        std::erase_if(out.tokens, [&](const std::string& t) { return stopwords.contains(t); });
    }
    return out;
}

StopwordSet extract_stopwords(std::span<const TokenizedText> docs, std::size_t m) {
    StopwordSet result;
    result.cutoff = m;
    if (m == 0) return result;
    if (docs.empty()) throw UsageError("extract_stopwords: no documents");

    std::map<std::string, std::size_t> df;
    for (const auto& doc : docs) {
        std::unordered_set<std::string_view> seen(doc.tokens.begin(), doc.tokens.end());
        for (auto t : seen) ++df[std::string(t)];
    }
    const auto n = static_cast<double>(docs.size());
    std::vector<std::pair<double, std::string>> ranked;
    ranked.reserve(df.size());
    for (auto& [term, count] : df) ranked.emplace_back(smoothed_idf(n, static_cast<double>(count)), term);
    std::sort(ranked.begin(), ranked.end());
    ranked.resize(std::min(m, ranked.size()));
    for (auto& [_, term] : ranked) result.words.insert(std::move(term));
    return result;
}

std::size_t word_count(std::string_view normalized) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : normalized) {
        if (c == ' ') {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

std::vector<std::string> split_sentences(std::string_view passage) {
    std::vector<std::string_view> fragments;
    std::size_t start = 0;
    for (std::size_t i = 0; i < passage.size(); ++i) {
        char c = passage[i];
        bool terminator = c == '.' || c == '?' || c == '!' || c == ';';
        if (terminator && (i + 1 == passage.size() || passage[i + 1] == ' ')) {
            fragments.push_back(passage.substr(start, i + 1 - start));
            start = i + 1;
        }
    }
    if (start < passage.size()) fragments.push_back(passage.substr(start));

    std::vector<std::string> out;
    std::string carry;
    for (auto frag : fragments) {
        frag = trim_spaces(frag);
        if (frag.empty()) continue;
        if (word_count(frag) < 2) {
            if (!out.empty()) {
                out.back().append(" ").append(frag);
            } else {
                if (!carry.empty()) carry.push_back(' ');
                carry.append(frag);
            }
            continue;
        }
        if (carry.empty()) {
            out.emplace_back(frag);
        } else {
            out.push_back(std::move(carry).append(" ").append(frag));
            carry.clear();
        }
    }
    if (!carry.empty()) out.push_back(std::move(carry));
    return out;
}

// --- Preprocessor ---------------------------------------------------------------

Preprocessor::Preprocessor() : tokenizer_(std::make_shared<WhitespaceTokenizer>()) {}

Preprocessor::Preprocessor(std::shared_ptr<const Tokenizer> tokenizer, StopwordSet stopwords)
    : tokenizer_(std::move(tokenizer)), stopwords_(std::move(stopwords)) {
    if (!tokenizer_) throw UsageError("Preprocessor: null tokenizer");
}

TokenizedText Preprocessor::operator()(std::string_view raw, DocId source_id) const {
    return tokenize(normalize(raw), *tokenizer_, stopwords_, source_id);
}

TokenizedText Preprocessor::unfiltered(std::string_view raw, DocId source_id) const {
    return tokenize(normalize(raw), *tokenizer_, StopwordSet{}, source_id);
}

// --- persistence ----------------------------------------------------------------

std::vector<QAPair> parse_jsonl(std::istream& in, const std::string& source_name) {
    std::vector<QAPair> pairs;
    std::unordered_set<DocId> ids;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) -> void {
        throw DataError(source_name + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (trim_spaces(normalize(line)).empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object()) fail("expected a JSON object");
        for (const char* key : {"index", "question", "answer"}) {
            if (!obj.contains(key)) fail(std::string("missing \"") + key + "\"");
        }
        const auto& index = obj["index"];
        if (!index.is_number_integer() ||
            (!index.is_number_unsigned() && index.get<std::int64_t>() < 0)) {
            fail("\"index\" must be a non-negative integer");
        }
        if (!obj["question"].is_string() || !obj["answer"].is_string()) {
            fail("\"question\" and \"answer\" must be strings");
        }
        QAPair pair;
        pair.id = index.get<DocId>();
        pair.question = obj["question"].get<std::string>();
        pair.answer = obj["answer"].get<std::string>();
        if (auto it = obj.find("link"); it != obj.end() && !it->is_null()) {
            if (!it->is_string()) fail("\"link\" must be a string");
            pair.link = it->get<std::string>();
        }
        if (normalize(pair.question).empty()) fail("empty question");
        if (normalize(pair.answer).empty()) fail("empty answer");
        if (!ids.insert(pair.id).second) fail("duplicate index " + std::to_string(pair.id));
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

std::vector<QAPair> load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset " + path.string());
    return parse_jsonl(in, path.string());
}

void save_stopwords(const std::filesystem::path& path, const StopwordSet& stopwords) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& w : stopwords.words) out << w << '\n';
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open stop-word file " + path.string());
    StopwordSet set;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) set.words.insert(line);
    }
    set.cutoff = set.words.size();
    return set;
}

} // namespace spqa
