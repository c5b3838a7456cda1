#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace spqa {

using DocId = std::uint64_t;
using TokenId = std::uint32_t;

/// One (question, answer passage) record. `id` is the dataset's "index" field.
struct QAPair {
    DocId id = 0;
    std::string question;
    std::string answer;
    std::optional<std::string> link;
};

struct TokenizedText {
    std::vector<std::string> tokens;
    DocId source_id = 0;
};

struct StopwordSet {
    std::set<std::string> words;
    std::size_t cutoff = 0;

    bool contains(std::string_view w) const { return words.find(std::string(w)) != words.end(); }
    bool empty() const noexcept { return words.empty(); }
};

/// Dense token <-> id mapping. Ids are assigned in the order tokens are given;
/// `from_texts` sorts them so the mapping is independent of input order.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> tokens);

    static Vocabulary from_texts(std::span<const TokenizedText> texts);

    std::optional<TokenId> find(std::string_view token) const;
    const std::string& token(TokenId id) const { return tokens_.at(id); }
    std::size_t size() const noexcept { return tokens_.size(); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    /// Maps tokens to ids, dropping out-of-vocabulary tokens.
    std::vector<TokenId> encode(const TokenizedText& text) const;

    bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> ids_;
};

// --- text normalization -----------------------------------------------------

/// Lowercases, maps whitespace to single spaces, drops control characters and
/// U+FFFD (also substituted for invalid UTF-8), and trims.
std::string normalize(std::string_view text);

/// Word splitter applied to normalized text. Implementations must not emit
/// empty tokens.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::string> split(std::string_view normalized) const = 0;
    virtual std::string_view name() const = 0;
};

/// Splits on spaces and strips punctuation from both token edges.
class WhitespaceTokenizer final : public Tokenizer {
public:
    std::vector<std::string> split(std::string_view normalized) const override;
    std::string_view name() const override { return "whitespace"; }
};

/// Looks up a tokenizer by its configured name; throws UsageError if unknown.
std::shared_ptr<const Tokenizer> make_tokenizer(std::string_view name);

TokenizedText tokenize(std::string_view normalized, const Tokenizer& tokenizer,
                       const StopwordSet& stopwords, DocId source_id = 0);

inline TokenizedText tokenize(std::string_view normalized, const StopwordSet& stopwords = {},
                              DocId source_id = 0) {
    return tokenize(normalized, WhitespaceTokenizer{}, stopwords, source_id);
}

/// The M terms with the lowest smoothed IDF over `docs`, ties broken
/// lexicographically. M larger than the vocabulary returns every term.
StopwordSet extract_stopwords(std::span<const TokenizedText> docs, std::size_t m);

/// Splits after '.', '?', '!' or ';' when followed by a space or the end of
/// text. Fragments of fewer than two words are glued onto the previous
/// sentence (or the next one, at the start of the passage). Joining the result
/// with single spaces reproduces the normalized input.
std::vector<std::string> split_sentences(std::string_view passage);

/// Number of space-separated words; used for length statistics.
std::size_t word_count(std::string_view normalized);

// --- preprocessing ----------------------------------------------------------

/// The single preprocessing path shared by every retrieval method:
/// normalize, split into words, drop stop-words.
class Preprocessor {
public:
    Preprocessor();
    Preprocessor(std::shared_ptr<const Tokenizer> tokenizer, StopwordSet stopwords);

    TokenizedText operator()(std::string_view raw, DocId source_id = 0) const;
    /// Same as operator() but keeps stop-words; used to extract them.
    TokenizedText unfiltered(std::string_view raw, DocId source_id = 0) const;

    const StopwordSet& stopwords() const noexcept { return stopwords_; }
    const Tokenizer& tokenizer() const noexcept { return *tokenizer_; }

private:
    std::shared_ptr<const Tokenizer> tokenizer_;
    StopwordSet stopwords_;
};

// --- persistence ------------------------------------------------------------

/// Reads a JSONL dataset: {"index": int, "question": str, "answer": str,
/// "link": str (optional)} per line. Blank lines are skipped. Errors name the
/// 1-based line number.
std::vector<QAPair> load_jsonl(const std::filesystem::path& path);
std::vector<QAPair> parse_jsonl(std::istream& in, const std::string& source_name);

void save_stopwords(const std::filesystem::path& path, const StopwordSet& stopwords);
StopwordSet load_stopwords(const std::filesystem::path& path);

} // namespace spqa
