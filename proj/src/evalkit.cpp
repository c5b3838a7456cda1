#include "spqa/evalkit.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spqa/error.hpp"

namespace spqa {

namespace {

void check_aligned(const Rankings& rankings, const GoldMap& gold) {
    for (const auto& [q, _] : gold) {
        if (!rankings.count(q)) throw DataError("no ranking for question " + std::to_string(q));
    }
    for (const auto& [q, _] : rankings) {
        if (!gold.count(q)) throw DataError("no gold passage for question " + std::to_string(q));
    }
    if (gold.empty()) throw UsageError("evaluation needs at least one question");
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace

std::optional<std::size_t> gold_rank(const RankedList& ranking, DocId gold, std::size_t depth) {
    const auto n = std::min(depth, ranking.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (ranking[i].doc_id == gold) return i + 1;
    }
    return std::nullopt;
}

double precision_at_k(const Rankings& rankings, const GoldMap& gold, std::size_t k) {
    if (k == 0) throw UsageError("P@K needs K >= 1");
    check_aligned(rankings, gold);
    std::size_t hits = 0;
    for (const auto& [q, doc] : gold) {
        if (gold_rank(rankings.at(q), doc, k)) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(gold.size());
}

double mean_average_precision(const Rankings& rankings, const GoldMap& gold, std::size_t depth) {
    if (depth == 0) throw UsageError("mAP depth must be at least 1");
    check_aligned(rankings, gold);
    double sum = 0.0;
    for (const auto& [q, doc] : gold) {
        if (auto r = gold_rank(rankings.at(q), doc, depth)) sum += 1.0 / static_cast<double>(*r);
    }
    return 100.0 * sum / static_cast<double>(gold.size());
}

std::size_t lexical_overlap(const TokenizedText& question, const TokenizedText& passage) {
    std::set<std::string_view> q(question.tokens.begin(), question.tokens.end());
    std::set<std::string_view> p(passage.tokens.begin(), passage.tokens.end());
    std::size_t n = 0;
    for (auto t : q) n += p.count(t);
    return n;
}

std::size_t OverlapBucketReport::total() const {
    std::size_t n = 0;
    for (const auto& b : buckets) n += b.count;
    return n;
}

OverlapBucketReport overlap_buckets(std::span<const QuestionOutcome> outcomes) {
    OverlapBucketReport report;
    std::array<std::size_t, kMaxOverlapBucket + 1> hits{};
    for (const auto& o : outcomes) {
        if (o.overlap > kMaxOverlapBucket) continue;
        ++report.buckets[o.overlap].count;
        if (o.gold_rank == std::size_t{1}) ++hits[o.overlap];
    }
    for (std::size_t x = 0; x <= kMaxOverlapBucket; ++x) {
        auto& b = report.buckets[x];
        if (b.count) b.p_at_1 = 100.0 * static_cast<double>(hits[x]) / static_cast<double>(b.count);
    }
    return report;
}

void EvalConfig::validate() const {
    if (ks.empty()) throw UsageError("eval needs at least one K");
    for (auto k : ks) {
        if (k == 0) throw UsageError("eval K values must be at least 1");
    }
    if (map_depth == 0) throw UsageError("mAP depth must be at least 1");
}

EvalResult evaluate(const Rankings& rankings, const GoldMap& gold, const EvalConfig& config) {
    config.validate();
    EvalResult r;
    for (auto k : config.ks) r.p_at_k[k] = precision_at_k(rankings, gold, k);
    r.map_score = mean_average_precision(rankings, gold, config.map_depth);
    for (const auto& [q, doc] : gold) r.per_question.push_back({q, gold_rank(rankings.at(q), doc), 0});
    return r;
}

namespace {

std::size_t retrieval_depth(const EvalConfig& config) {
    return std::max(config.map_depth, *std::max_element(config.ks.begin(), config.ks.end()));
}

} // namespace

EvalRun run_evaluation(const Pipeline& pipeline, std::span<const QAPair> questions, Method method,
                       const EvalConfig& config) {
    config.validate();
    const auto depth = retrieval_depth(config);
    Rankings rankings;
    GoldMap gold;
    std::map<QuestionId, std::size_t> overlap;
    for (const auto& q : questions) {
        if (!pipeline.index().contains(q.id)) {
            throw DataError("gold passage of question " + std::to_string(q.id) + " is not in the collection");
        }
        rankings[q.id] = pipeline.retrieve(q.question, method, depth);
        gold[q.id] = q.id;
        overlap[q.id] = lexical_overlap(pipeline.preprocessor()(q.question), pipeline.passage_tokens(q.id));
    }
    EvalRun run{std::string(to_string(method)), evaluate(rankings, gold, config), {}};
    for (auto& o : run.result.per_question) o.overlap = overlap.at(o.id);
    run.buckets = overlap_buckets(run.result.per_question);
    return run;
}

OverlapBucketReport overlap_bucket_eval(const Pipeline& pipeline, std::span<const QAPair> questions,
                                        Method method) {
    return run_evaluation(pipeline, questions, method, EvalConfig{{1}, 1}).buckets;
}

// --- reports -----------------------------------------------------------------------

std::string report_json(const EvalRun& run) {
    nlohmann::ordered_json j;
    j["method"] = run.method;
    j["questions"] = run.result.per_question.size();
    nlohmann::ordered_json pk = nlohmann::ordered_json::object();
    for (const auto& [k, v] : run.result.p_at_k) pk[std::to_string(k)] = v;
    j["p_at_k"] = pk;
    j["map"] = run.result.map_score;
    auto per = nlohmann::ordered_json::array();
    for (const auto& o : run.result.per_question) {
        nlohmann::ordered_json e;
        e["id"] = o.id;
        e["gold_rank"] = o.gold_rank ? nlohmann::ordered_json(*o.gold_rank) : nlohmann::ordered_json(nullptr);
        e["overlap"] = o.overlap;
        per.push_back(std::move(e));
    }
    j["per_question"] = std::move(per);
    return j.dump(2) + "\n";
}

std::string report_table(std::span<const EvalRun> runs) {
    std::set<std::size_t> ks;
    std::size_t name_w = 5;
    for (const auto& r : runs) {
        for (const auto& [k, _] : r.result.p_at_k) ks.insert(k);
        name_w = std::max(name_w, r.method.size());
    }
    std::ostringstream out;
    auto cell = [&](const std::string& s, std::size_t w, bool left) {
        if (left) {
            out << s << std::string(w > s.size() ? w - s.size() : 0, ' ');
        } else {
            out << std::string(w > s.size() ? w - s.size() : 0, ' ') << s;
        }
    };
    cell("Model", name_w, true);
    for (auto k : ks) cell("P@" + std::to_string(k), 9, false);
    cell("mAP", 9, false);
    out << '\n';
    for (const auto& r : runs) {
        cell(r.method, name_w, true);
        for (auto k : ks) {
            auto it = r.result.p_at_k.find(k);
            cell(it == r.result.p_at_k.end() ? "-" : fixed2(it->second), 9, false);
        }
        cell(fixed2(r.result.map_score), 9, false);
        out << '\n';
    }
    return out.str();
}

std::string buckets_csv(const OverlapBucketReport& report) {
    std::ostringstream out;
    out << "X,count,p_at_1\n";
    for (std::size_t x = 0; x <= kMaxOverlapBucket; ++x) {
        const auto& b = report.buckets[x];
        out << x << ',' << b.count << ',';
        if (b.p_at_1) out << fixed2(*b.p_at_1);
        out << '\n';
    }
    return out.str();
}

std::string buckets_json(const OverlapBucketReport& report) {
    auto arr = nlohmann::ordered_json::array();
    for (std::size_t x = 0; x <= kMaxOverlapBucket; ++x) {
        const auto& b = report.buckets[x];
        nlohmann::ordered_json e;
        e["X"] = x;
        e["count"] = b.count;
        e["p_at_1"] = b.p_at_1 ? nlohmann::ordered_json(*b.p_at_1) : nlohmann::ordered_json(nullptr);
        arr.push_back(std::move(e));
    }
    return arr.dump(2) + "\n";
}

} // namespace spqa
