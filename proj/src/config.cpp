#include "spqa/config.hpp"

#include <cerrno>
#include <charconv>
#include <map>
#include <sstream>
#include <variant>

#include "spqa/binary_io.hpp"
#include "spqa/error.hpp"

namespace spqa {

namespace {

using IntList = std::vector<std::int64_t>;
using Value = std::variant<std::string, std::int64_t, double, bool, IntList>;

struct Entry {
    Value value;
    std::size_t line = 0;
};

// "section.key" -> value
using Table = std::map<std::string, Entry>;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

[[noreturn]] void syntax(std::size_t line, const std::string& msg) {
    throw UsageError("config line " + std::to_string(line) + ": " + msg);
}

// Drops a trailing "# comment" that is not inside a string.
std::string_view strip_comment(std::string_view s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && in_str) {
            ++i;
        } else if (s[i] == '"') {
            in_str = !in_str;
        } else if (s[i] == '#' && !in_str) {
            return s.substr(0, i);
        }
    }
    return s;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<double> parse_double(std::string_view s) {
    std::string buf(s);
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(buf.c_str(), &end);
    if (buf.empty() || end != buf.c_str() + buf.size() || errno == ERANGE) return std::nullopt;
    return v;
}

Value parse_value(std::string_view s, std::size_t line) {
    if (s.empty()) syntax(line, "missing value");
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"') syntax(line, "unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < s.size(); ++i) {
            char c = s[i];
            if (c == '\\') {
                if (i + 2 >= s.size()) syntax(line, "dangling escape");
                char e = s[++i];
                switch (e) {
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                default: syntax(line, std::string("unsupported escape \\") + e);
                }
            } else if (c == '"') {
                syntax(line, "unexpected quote inside string");
            } else {
                out.push_back(c);
            }
        }
        return out;
    }
    if (s == "true") return true;
    if (s == "false") return false;
    if (s.front() == '[') {
        if (s.back() != ']') syntax(line, "unterminated list");
        IntList list;
        auto body = trim(s.substr(1, s.size() - 2));
        while (!body.empty()) {
            auto comma = body.find(',');
            auto item = trim(body.substr(0, comma));
            if (item.empty()) {
                if (comma == std::string_view::npos) break;
                syntax(line, "empty list element");
            }
            auto v = parse_int(item);
            if (!v) syntax(line, "lists may only hold integers");
            list.push_back(*v);
            if (comma == std::string_view::npos) break;
            body = trim(body.substr(comma + 1));
        }
        return list;
    }
    if (auto i = parse_int(s)) return *i;
    if (auto d = parse_double(s)) return *d;
    syntax(line, "cannot parse value \"" + std::string(s) + "\"");
}

Table parse_table(std::string_view text) {
    Table table;
    std::string section;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto raw = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++lineno;
        auto line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') syntax(lineno, "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty()) syntax(lineno, "empty section name");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) syntax(lineno, "expected key = value");
        auto key = std::string(trim(line.substr(0, eq)));
        if (key.empty()) syntax(lineno, "empty key");
        auto full = section.empty() ? key : section + "." + key;
        if (table.count(full)) syntax(lineno, "duplicate key " + full);
        table.emplace(full, Entry{parse_value(trim(line.substr(eq + 1)), lineno), lineno});
    }
    return table;
}

class Reader {
public:
    Reader(Table table, std::filesystem::path base) : table_(std::move(table)), base_(std::move(base)) {}

    void string(const std::string& key, std::string& out) {
        if (auto* e = take(key)) out = as<std::string>(key, *e);
    }
    void path(const std::string& key, std::filesystem::path& out) {
        if (auto* e = take(key)) out = as<std::string>(key, *e);
    }
    void boolean(const std::string& key, bool& out) {
        if (auto* e = take(key)) out = as<bool>(key, *e);
    }
    void real(const std::string& key, double& out) {
        if (auto* e = take(key)) {
            if (auto* i = std::get_if<std::int64_t>(&e->value)) {
                out = static_cast<double>(*i);
            } else {
                out = as<double>(key, *e);
            }
        }
    }
    template <typename T>
    void count(const std::string& key, T& out) {
        if (auto* e = take(key)) {
            auto v = as<std::int64_t>(key, *e);
            if (v < 0) syntax(e->line, key + " must be non-negative");
            out = static_cast<T>(v);
        }
    }
    void counts(const std::string& key, std::vector<std::size_t>& out) {
        if (auto* e = take(key)) {
            out.clear();
            for (auto v : as<IntList>(key, *e)) {
                if (v < 0) syntax(e->line, key + " entries must be non-negative");
                out.push_back(static_cast<std::size_t>(v));
            }
        }
    }

    void reject_leftovers() const {
        if (!table_.empty()) {
            const auto& [key, e] = *table_.begin();
            syntax(e.line, "unknown key " + key);
        }
    }

private:
    Entry* take(const std::string& key) {
        auto it = table_.find(key);
        if (it == table_.end()) return nullptr;
        taken_ = it->second;
        table_.erase(it);
        return &taken_;
    }

    template <typename T>
    static const T& as(const std::string& key, const Entry& e) {
        if (auto* v = std::get_if<T>(&e.value)) return *v;
        syntax(e.line, "wrong type for " + key);
    }

    Table table_;
    Entry taken_;
    std::filesystem::path base_;
};

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out.push_back(c);
        }
    }
    return out + "\"";
}

std::string real(double v) {
    // Shortest text that parses back to the same double.
    char buf[40];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, end);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

} // namespace

void AppConfig::validate() const {
    if (stopword_count > 1'000'000) throw UsageError("preprocess.stopwords is unreasonably large");
    make_tokenizer(tokenizer);
    pipeline().validate();
    train.validate();
    eval.validate();
    if (eval_split != "train" && eval_split != "dev" && eval_split != "test") {
        throw UsageError("eval.split must be train, dev or test");
    }
}

PipelineConfig AppConfig::pipeline() const {
    PipelineConfig p;
    p.condenser_k = condenser_k;
    p.method = method;
    p.top_k = top_k;
    p.bm25 = bm25;
    p.lm = lm;
    p.max_tokens = train.max_tokens;
    p.stopwords_for_dense = stopwords_for_dense;
    p.max_oov_rate = max_oov_rate;
    return p;
}

TrainConfig AppConfig::train_config() const {
    TrainConfig t = train;
    t.init_seed = seed;
    t.shuffle_seed = seed ^ 0x9E3779B97F4A7C15ULL;
    return t;
}

AppConfig AppConfig::parse(std::string_view text, const std::filesystem::path& base_dir) {
    AppConfig c;
    Reader r(parse_table(text), base_dir);
    r.count("seed", c.seed);

    auto& p = c.paths;
    r.path("paths.train", p.train);
    r.path("paths.dev", p.dev);
    r.path("paths.test", p.test);
    r.path("paths.stopwords", p.stopwords);
    r.path("paths.condensed", p.condensed);
    r.path("paths.index", p.index);
    r.path("paths.model", p.model);
    r.path("paths.store", p.store);
    r.path("paths.loss_csv", p.loss_csv);
    r.path("paths.reports", p.reports);
    r.path("paths.external_store", p.external_store);

    r.count("preprocess.stopwords", c.stopword_count);
    r.string("preprocess.tokenizer", c.tokenizer);
    r.boolean("preprocess.stopwords_for_dense", c.stopwords_for_dense);
    r.count("condenser.k", c.condenser_k);
    r.real("bm25.k", c.bm25.k);
    r.real("bm25.b", c.bm25.b);
    r.real("lm.alpha", c.lm.alpha);
    r.count("train.epochs", c.train.epochs);
    r.count("train.batch_size", c.train.batch_size);
    r.real("train.learning_rate", c.train.learning_rate);
    r.count("train.max_tokens", c.train.max_tokens);
    r.count("train.dim", c.train.dim);
    r.real("train.scale", c.train.scale);
    std::string method(to_string(c.method));
    r.string("retrieval.method", method);
    c.method = parse_method(method);
    r.count("retrieval.top_k", c.top_k);
    r.real("retrieval.max_oov_rate", c.max_oov_rate);
    r.counts("eval.k", c.eval.ks);
    r.count("eval.map_depth", c.eval.map_depth);
    r.string("eval.split", c.eval_split);
    r.reject_leftovers();

    if (!base_dir.empty()) {
        for (auto* path : {&p.train, &p.dev, &p.test, &p.stopwords, &p.condensed, &p.index, &p.model, &p.store,
                           &p.loss_csv, &p.reports, &p.external_store}) {
            if (!path->empty() && path->is_relative()) *path = (base_dir / *path).lexically_normal();
        }
    }
    c.validate();
    return c;
}

AppConfig AppConfig::load(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const DataError&) {
        throw DataError("cannot open config " + path.string());
    }
    auto base = std::filesystem::absolute(path).parent_path();
    return parse(text, base);
}

std::string AppConfig::to_toml() const {
    std::ostringstream o;
    o << "seed = " << seed << "\n\n[paths]\n";
    auto path_line = [&](const char* key, const std::filesystem::path& v) {
        o << key << " = " << quote(v.generic_string()) << '\n';
    };
    path_line("train", paths.train);
    path_line("dev", paths.dev);
    path_line("test", paths.test);
    path_line("stopwords", paths.stopwords);
    path_line("condensed", paths.condensed);
    path_line("index", paths.index);
    path_line("model", paths.model);
    path_line("store", paths.store);
    path_line("loss_csv", paths.loss_csv);
    path_line("reports", paths.reports);
    path_line("external_store", paths.external_store);
    o << "\n[preprocess]\nstopwords = " << stopword_count << "\ntokenizer = " << quote(tokenizer)
      << "\nstopwords_for_dense = " << (stopwords_for_dense ? "true" : "false") << '\n';
    o << "\n[condenser]\nk = " << condenser_k << '\n';
    o << "\n[bm25]\nk = " << real(bm25.k) << "\nb = " << real(bm25.b) << '\n';
    o << "\n[lm]\nalpha = " << real(lm.alpha) << '\n';
    o << "\n[train]\nepochs = " << train.epochs << "\nbatch_size = " << train.batch_size
      << "\nlearning_rate = " << real(train.learning_rate) << "\nmax_tokens = " << train.max_tokens
      << "\ndim = " << train.dim << "\nscale = " << real(train.scale) << '\n';
    o << "\n[retrieval]\nmethod = " << quote(std::string(to_string(method))) << "\ntop_k = " << top_k
      << "\nmax_oov_rate = " << real(max_oov_rate) << '\n';
    o << "\n[eval]\nk = [";
    for (std::size_t i = 0; i < eval.ks.size(); ++i) o << (i ? ", " : "") << eval.ks[i];
    o << "]\nmap_depth = " << eval.map_depth << "\nsplit = " << quote(eval_split) << '\n';
    return o.str();
}

} // namespace spqa
