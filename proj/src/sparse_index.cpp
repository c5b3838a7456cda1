#include "spqa/sparse_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "spqa/binary_io.hpp"
#include "spqa/error.hpp"

namespace spqa {

namespace {

constexpr std::string_view kMagic = "SPQI";

std::vector<std::string_view> distinct_terms(const TokenizedText& query) {
    std::vector<std::string_view> out;
    std::unordered_set<std::string_view> seen;
    for (const auto& t : query.tokens) {
        if (seen.insert(t).second) out.push_back(t);
    }
    return out;
}

} // namespace

void Bm25Params::validate() const {
    if (!(k > 0.0) || !std::isfinite(k)) throw UsageError("bm25 k must be positive");
    if (!(b >= 0.0 && b <= 1.0)) throw UsageError("bm25 b must lie in [0, 1]");
}

void LmParams::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("lm alpha must lie in [0, 1]");
}

std::string_view to_string(SparseScorer s) {
    switch (s) {
    case SparseScorer::bm25: return "bm25";
    case SparseScorer::tfidf_cos: return "tfidf-cos";
    case SparseScorer::lm: return "lm";
    }
    return "?";
}

void top_k(std::vector<ScoredDoc>& scored, std::size_t k) {
    k = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                      ranks_before);
    scored.resize(k);
}

double idf(std::uint64_t n, std::uint64_t df) {
    auto nn = static_cast<double>(n);
    auto d = static_cast<double>(df);
    return std::log((nn - d + 0.5) / (d + 0.5) + 1.0);
}

double cosine(const SparseVector& u, const SparseVector& v) {
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (const auto& [_, w] : u) nu += w * w;
    for (const auto& [_, w] : v) nv += w * w;
    if (nu == 0.0 || nv == 0.0) return 0.0;
    auto a = u.begin();
    auto b = v.begin();
    while (a != u.end() && b != v.end()) {
        if (a->first < b->first) {
            ++a;
        } else if (b->first < a->first) {
            ++b;
        } else {
            dot += a->second * b->second;
            ++a;
            ++b;
        }
    }
    return dot / std::sqrt(nu * nv);
}

// --- construction ---------------------------------------------------------------

InvertedIndex InvertedIndex::build(std::span<const TokenizedText> docs) {
    InvertedIndex idx;
    std::map<std::string, std::vector<Posting>> by_term;
    idx.doc_ids_.reserve(docs.size());
    idx.doc_len_.reserve(docs.size());
    std::unordered_set<DocId> seen;
    for (const auto& doc : docs) {
        if (!seen.insert(doc.source_id).second) {
            throw DataError("build_index: duplicate document id " + std::to_string(doc.source_id));
        }
        idx.doc_ids_.push_back(doc.source_id);
        idx.doc_len_.push_back(doc.tokens.size());
        std::map<std::string_view, std::uint32_t> counts;
        for (const auto& t : doc.tokens) ++counts[t];
        for (auto [term, tf] : counts) by_term[std::string(term)].push_back({doc.source_id, tf});
    }
    idx.terms_.reserve(by_term.size());
    idx.postings_.reserve(by_term.size());
    for (auto& [term, list] : by_term) {
        std::sort(list.begin(), list.end(),
                  [](const Posting& a, const Posting& b) { return a.doc_id < b.doc_id; });
        idx.terms_.push_back(term);
        idx.postings_.push_back(std::move(list));
    }
    idx.finalize();
    return idx;
}

void InvertedIndex::finalize() {
    slot_.clear();
    slot_.reserve(doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) slot_.emplace(doc_ids_[i], i);

    term_ids_.clear();
    term_ids_.reserve(terms_.size());
    collection_tf_.assign(terms_.size(), 0);
    forward_.assign(doc_ids_.size(), {});
    for (std::uint32_t t = 0; t < terms_.size(); ++t) {
        term_ids_.emplace(terms_[t], t);
        for (const auto& p : postings_[t]) {
            collection_tf_[t] += p.tf;
            forward_[slot_.at(p.doc_id)].emplace_back(t, p.tf);
        }
    }
    total_tokens_ = 0;
    for (auto len : doc_len_) total_tokens_ += len;
    avg_len_ = doc_ids_.empty() ? 0.0
                                : static_cast<double>(total_tokens_) / static_cast<double>(doc_ids_.size());
}

// --- lookups ----------------------------------------------------------------------

std::size_t InvertedIndex::slot_of(DocId doc) const {
    auto it = slot_.find(doc);
    if (it == slot_.end()) throw DataError("unknown document id " + std::to_string(doc));
    return it->second;
}

std::optional<std::uint32_t> InvertedIndex::term_id(std::string_view term) const {
    auto it = term_ids_.find(std::string(term));
    if (it == term_ids_.end()) return std::nullopt;
    return it->second;
}

std::uint64_t InvertedIndex::doc_len(DocId doc) const { return doc_len_[slot_of(doc)]; }

std::uint64_t InvertedIndex::df(std::string_view term) const {
    auto t = term_id(term);
    return t ? postings_[*t].size() : 0;
}

std::uint64_t InvertedIndex::collection_tf(std::string_view term) const {
    auto t = term_id(term);
    return t ? collection_tf_[*t] : 0;
}

std::span<const InvertedIndex::Posting> InvertedIndex::postings(std::string_view term) const {
    auto t = term_id(term);
    if (!t) return {};
    return postings_[*t];
}

std::uint32_t InvertedIndex::tf(std::string_view term, DocId doc) const {
    auto list = postings(term);
    auto it = std::lower_bound(list.begin(), list.end(), doc,
                               [](const Posting& p, DocId d) { return p.doc_id < d; });
    return (it != list.end() && it->doc_id == doc) ? it->tf : 0;
}

// --- scorers ------------------------------------------------------------------------

double InvertedIndex::bm25_score(const Bm25Params& params, const TokenizedText& query, DocId doc) const {
    const auto len = static_cast<double>(doc_len(doc));
    double score = 0.0;
    for (auto term : distinct_terms(query)) {
        const double f = tf(term, doc);
        if (f == 0.0) continue;
        const double norm = params.k * (1.0 - params.b + params.b * len / avg_len_);
        score += idf(term) * f * (params.k + 1.0) / (f + norm);
    }
    return score;
}

double InvertedIndex::lm_score(const LmParams& params, const TokenizedText& query, DocId doc) const {
    const auto len = static_cast<double>(doc_len(doc));
    if (total_tokens_ == 0) throw UsageError("lm_score: collection has no tokens");
    const auto total = static_cast<double>(total_tokens_);
    double score = 0.0;
    for (const auto& term : query.tokens) {
        const double p_doc = len > 0.0 ? tf(term, doc) / len : 0.0;
        const double p_coll = static_cast<double>(collection_tf(term)) / total;
        const double p = (1.0 - params.alpha) * p_doc + params.alpha * p_coll;
        if (p <= 0.0) return -std::numeric_limits<double>::infinity();
        score += std::log(p);
    }
    return score;
}

SparseVector InvertedIndex::tfidf_vector(const TokenizedText& text) const {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& t : text.tokens) ++counts[t];
    SparseVector out;
    for (const auto& [term, tf] : counts) out.emplace(term, static_cast<double>(tf) * idf(term));
    return out;
}

SparseVector InvertedIndex::doc_tfidf_vector(DocId doc) const {
    SparseVector out;
    const auto n = doc_count();
    for (auto [t, f] : forward_[slot_of(doc)]) {
        out.emplace_hint(out.end(), terms_[t], static_cast<double>(f) * spqa::idf(n, postings_[t].size()));
    }
    return out;
}

double InvertedIndex::tfidf_cosine(const TokenizedText& query, DocId doc) const {
    return cosine(tfidf_vector(query), doc_tfidf_vector(doc));
}

RankedList InvertedIndex::rank(SparseScorer scorer, const TokenizedText& query, std::size_t k,
                               const Bm25Params& bm25, const LmParams& lm) const {
    if (k == 0) throw UsageError("rank: K must be at least 1");
    RankedList scored;
    scored.reserve(doc_ids_.size());
    SparseVector qvec;
    if (scorer == SparseScorer::tfidf_cos) qvec = tfidf_vector(query);
    for (DocId doc : doc_ids_) {
        double s = 0.0;
        switch (scorer) {
        case SparseScorer::bm25: s = bm25_score(bm25, query, doc); break;
        case SparseScorer::tfidf_cos: s = cosine(qvec, doc_tfidf_vector(doc)); break;
        case SparseScorer::lm: s = lm_score(lm, query, doc); break;
        }
        scored.push_back({doc, s});
    }
    top_k(scored, k);
    return scored;
}

// --- persistence ----------------------------------------------------------------------

std::string InvertedIndex::serialize() const {
    io::ByteWriter w;
    w.bytes(kMagic);
    w.u32(kFormatVersion);
    w.u64(doc_count());
    w.f64(avg_len_);
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        w.u64(doc_ids_[i]);
        w.u64(doc_len_[i]);
    }
    w.u64(terms_.size());
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        w.varint_string(terms_[t]);
        w.varint(postings_[t].size());
        DocId prev = 0;
        for (const auto& p : postings_[t]) {
            w.varint(p.doc_id - prev);
            w.varint(p.tf);
            prev = p.doc_id;
        }
    }
    return w.data();
}

InvertedIndex InvertedIndex::deserialize(std::string_view bytes) {
    io::ByteReader r(bytes, "index file");
    r.expect_header(kMagic, kFormatVersion);
    InvertedIndex idx;
    const auto n = r.u64();
    const double stored_avg = r.f64();
    if (n > r.remaining() / 16) r.fail("document table truncated");
    idx.doc_ids_.reserve(n);
    idx.doc_len_.reserve(n);
    std::unordered_map<DocId, std::uint64_t> observed_len;
    for (std::uint64_t i = 0; i < n; ++i) {
        idx.doc_ids_.push_back(r.u64());
        idx.doc_len_.push_back(r.u64());
        if (!observed_len.emplace(idx.doc_ids_.back(), 0).second) r.fail("duplicate document id");
    }
    const auto term_count = r.u64();
    if (term_count > r.remaining()) r.fail("term table truncated");
    for (std::uint64_t t = 0; t < term_count; ++t) {
        auto term = r.varint_string();
        if (term.empty() || (!idx.terms_.empty() && !(idx.terms_.back() < term))) {
            r.fail("terms not strictly ascending at record " + std::to_string(t));
        }
        const auto df = r.varint();
        if (df == 0 || df > n) r.fail("bad document frequency for \"" + term + "\"");
        std::vector<Posting> list;
        list.reserve(df);
        DocId doc = 0;
        for (std::uint64_t k = 0; k < df; ++k) {
            const auto delta = r.varint();
            if (k > 0 && delta == 0) r.fail("postings not ascending for \"" + term + "\"");
            doc += delta;
            const auto tf = r.varint();
            auto it = observed_len.find(doc);
            if (it == observed_len.end()) r.fail("posting references unknown document");
            if (tf == 0 || tf > std::numeric_limits<std::uint32_t>::max()) r.fail("bad term frequency");
            it->second += tf;
            list.push_back({doc, static_cast<std::uint32_t>(tf)});
        }
        idx.terms_.push_back(std::move(term));
        idx.postings_.push_back(std::move(list));
    }
    if (!r.at_end()) r.fail("trailing bytes");
    for (std::size_t i = 0; i < idx.doc_ids_.size(); ++i) {
        if (observed_len[idx.doc_ids_[i]] != idx.doc_len_[i]) r.fail("document length mismatch");
    }
    idx.finalize();
    if (std::bit_cast<std::uint64_t>(idx.avg_len_) != std::bit_cast<std::uint64_t>(stored_avg)) {
        r.fail("stored average length disagrees with document table");
    }
    return idx;
}

void InvertedIndex::save(const std::filesystem::path& path) const { io::write_file(path, serialize()); }

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) {
    return deserialize(io::read_file(path));
}

} // namespace spqa
