#include "causalci/bayesnet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "causalci/numstat.hpp"
#include "causalci/rng.hpp"

namespace causalci {

// --- network --------------------------------------------------------------

DiscreteBayesNet::DiscreteBayesNet(std::string name, std::vector<BnNode> nodes, double row_tol)
    : name_(std::move(name)), nodes_(std::move(nodes)), dag_(nodes_.size()) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const BnNode& node = nodes_[i];
        if (node.states.empty()) throw BifValidationError("variable " + node.name + " has no states");
        for (std::size_t p : node.parents) {
            if (p >= nodes_.size()) throw BifValidationError("variable " + node.name + " has an unknown parent");
            try {
                dag_.add_edge(p, i);
            } catch (const std::invalid_argument&) {
                throw BifValidationError("parents of " + node.name + " create a cycle (via " + nodes_[p].name + ")");
            }
        }
        const std::size_t expected = parent_configurations(i) * node.states.size();
        if (node.cpt.size() != expected) {
            throw BifValidationError("CPT of " + node.name + " has " + std::to_string(node.cpt.size()) +
                                     " entries, expected " + std::to_string(expected));
        }
        for (std::size_t c = 0; c < parent_configurations(i); ++c) {
            double sum = 0.0;
            for (double p : cpt_row(i, c)) {
                if (!(p >= 0.0) || !std::isfinite(p)) throw BifValidationError("CPT of " + node.name + " has an invalid probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > row_tol) {
                throw BifValidationError("CPT row " + std::to_string(c) + " of " + node.name + " sums to " + std::to_string(sum));
            }
        }
    }
}

std::size_t DiscreteBayesNet::parent_configurations(std::size_t i) const {
    std::size_t n = 1;
    for (std::size_t p : nodes_.at(i).parents) n *= nodes_[p].states.size();
    return n;
}

std::span<const double> DiscreteBayesNet::cpt_row(std::size_t node, std::size_t config) const {
    const BnNode& nd = nodes_.at(node);
    const std::size_t k = nd.states.size();
    return std::span<const double>(nd.cpt).subspan(config * k, k);
}

std::vector<std::string> DiscreteBayesNet::names() const {
    std::vector<std::string> out;
    for (const auto& n : nodes_) out.push_back(n.name);
    return out;
}

std::vector<int> DiscreteBayesNet::cardinalities() const {
    std::vector<int> out;
    for (const auto& n : nodes_) out.push_back(static_cast<int>(n.states.size()));
    return out;
}

// --- BIF lexer ------------------------------------------------------------

BifParseError::BifParseError(const std::string& what, int line, int column)
    : std::runtime_error("BIF " + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

namespace {

struct Token {
    enum Kind { Word, Punct, Quoted, End } kind = End;
    std::string text;
    int line = 0;
    int column = 0;
};

bool is_punct(char c) {
    return c == '{' || c == '}' || c == '(' || c == ')' || c == '[' || c == ']' || c == ';' || c == ',' || c == '|';
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    int line = 1;
    int col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < text.size(); ++k, ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
        } else if (text.substr(i, 2) == "//") {
            while (i < text.size() && text[i] != '\n') advance(1);
        } else if (text.substr(i, 2) == "/*") {
            const int l = line, cc = col;
            const std::size_t end = text.find("*/", i + 2);
            if (end == std::string_view::npos) throw BifParseError("unterminated comment", l, cc);
            advance(end + 2 - i);
        } else if (c == '"') {
            Token t{Token::Quoted, {}, line, col};
            advance(1);
            while (i < text.size() && text[i] != '"') {
                t.text.push_back(text[i]);
                advance(1);
            }
            if (i >= text.size()) throw BifParseError("unterminated string", t.line, t.column);
            advance(1);
            out.push_back(std::move(t));
        } else if (is_punct(c)) {
            out.push_back({Token::Punct, std::string(1, c), line, col});
            advance(1);
        } else {
            Token t{Token::Word, {}, line, col};
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && !is_punct(text[i]) &&
                   text[i] != '"' && text.substr(i, 2) != "//" && text.substr(i, 2) != "/*") {
                t.text.push_back(text[i]);
                advance(1);
            }
            out.push_back(std::move(t));
        }
    }
    out.push_back({Token::End, "", line, col});
    return out;
}

struct RawVariable {
    std::string name;
    std::vector<std::string> states;
    int line, column;
};

struct RawRow {
    std::vector<std::string> config;  // empty for "table"/"default"
    bool is_table = false;
    bool is_default = false;
    std::vector<double> values;
    int line, column;
};

struct RawProbability {
    std::string child;
    std::vector<std::string> parents;
    std::vector<RawRow> rows;
    int line, column;
};

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    void parse(std::string& net_name, std::vector<RawVariable>& vars, std::vector<RawProbability>& probs) {
        while (peek().kind != Token::End) {
            const Token& t = peek();
            if (t.kind == Token::Word && t.text == "network") {
                next();
                net_name = name_token("network name");
                skip_block();
            } else if (t.kind == Token::Word && t.text == "variable") {
                vars.push_back(parse_variable());
            } else if (t.kind == Token::Word && t.text == "probability") {
                probs.push_back(parse_probability());
            } else {
                fail("expected 'network', 'variable' or 'probability', got '" + t.text + "'", t);
            }
        }
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (t.kind != Token::End) ++pos_;
        return t;
    }
    [[noreturn]] static void fail(const std::string& what, const Token& at) { throw BifParseError(what, at.line, at.column); }

    void expect(std::string_view punct) {
        const Token& t = next();
        if (t.kind != Token::Punct || t.text != punct) {
            fail("expected '" + std::string(punct) + "', got '" + (t.kind == Token::End ? "end of input" : t.text) + "'", t);
        }
    }
    bool accept(std::string_view punct) {
        if (peek().kind == Token::Punct && peek().text == punct) {
            next();
            return true;
        }
        return false;
    }
    std::string name_token(const char* what) {
        const Token& t = next();
        if (t.kind != Token::Word && t.kind != Token::Quoted) fail(std::string("expected ") + what, t);
        return t.text;
    }
    double number_token() {
        const Token& t = next();
        double v = 0.0;
        if (t.kind != Token::Word) fail("expected a probability value", t);
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{} || ptr != t.text.data() + t.text.size()) fail("invalid number '" + t.text + "'", t);
        return v;
    }

    // Skips a balanced { ... } block (used for network/property content).
    void skip_block() {
        expect("{");
        int depth = 1;
        while (depth > 0) {
            const Token& t = next();
            if (t.kind == Token::End) fail("unterminated block", t);
            if (t.kind == Token::Punct && t.text == "{") ++depth;
            if (t.kind == Token::Punct && t.text == "}") --depth;
        }
    }

    void skip_statement() {
        while (true) {
            const Token& t = next();
            if (t.kind == Token::End) fail("unterminated statement", t);
            if (t.kind == Token::Punct && t.text == ";") return;
        }
    }

    RawVariable parse_variable() {
        const Token& kw = next();
        RawVariable v{name_token("variable name"), {}, kw.line, kw.column};
        expect("{");
        bool typed = false;
        while (!accept("}")) {
            const Token& t = next();
            if (t.kind == Token::Word && t.text == "type") {
                const Token& kind = next();
                if (kind.kind != Token::Word || kind.text != "discrete") fail("only discrete variables are supported", kind);
                expect("[");
                const Token& nt = next();
                int n = 0;
                auto [ptr, ec] = std::from_chars(nt.text.data(), nt.text.data() + nt.text.size(), n);
                if (ec != std::errc{} || ptr != nt.text.data() + nt.text.size() || n < 1) fail("invalid state count", nt);
                expect("]");
                expect("{");
                do {
                    v.states.push_back(name_token("state name"));
                } while (accept(","));
                expect("}");
                expect(";");
                if (static_cast<int>(v.states.size()) != n) {
                    fail("variable " + v.name + " declares " + std::to_string(n) + " states but lists " +
                             std::to_string(v.states.size()),
                         nt);
                }
                typed = true;
            } else if (t.kind == Token::Word && t.text == "property") {
                skip_statement();
            } else {
                fail("unexpected '" + t.text + "' in variable block", t);
            }
        }
        if (!typed) throw BifParseError("variable " + v.name + " has no type", v.line, v.column);
        return v;
    }

    std::vector<double> values_until_semicolon() {
        std::vector<double> vals;
        while (!accept(";")) {
            vals.push_back(number_token());
            accept(",");
        }
        return vals;
    }

    RawProbability parse_probability() {
        const Token& kw = next();
        RawProbability p;
        p.line = kw.line;
        p.column = kw.column;
        expect("(");
        p.child = name_token("variable name");
        if (accept("|")) {
            do {
                p.parents.push_back(name_token("parent name"));
            } while (accept(","));
        }
        expect(")");
        expect("{");
        while (!accept("}")) {
            const Token& t = peek();
            RawRow row;
            row.line = t.line;
            row.column = t.column;
            if (t.kind == Token::Word && t.text == "table") {
                next();
                row.is_table = true;
            } else if (t.kind == Token::Word && t.text == "default") {
                next();
                row.is_default = true;
            } else if (t.kind == Token::Word && t.text == "property") {
                next();
                skip_statement();
                continue;
            } else if (t.kind == Token::Punct && t.text == "(") {
                next();
                do {
                    row.config.push_back(name_token("parent state"));
                } while (accept(","));
                expect(")");
            } else {
                fail("unexpected '" + t.text + "' in probability block", t);
            }
            row.values = values_until_semicolon();
            p.rows.push_back(std::move(row));
        }
        return p;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace

DiscreteBayesNet parse_bif(std::string_view text) {
    std::string net_name = "unknown";
    std::vector<RawVariable> vars;
    std::vector<RawProbability> probs;
    Parser(tokenize(text)).parse(net_name, vars, probs);

    std::map<std::string, std::size_t, std::less<>> index;
    std::vector<BnNode> nodes;
    for (auto& v : vars) {
        if (!index.emplace(v.name, nodes.size()).second) {
            throw BifParseError("duplicate variable " + v.name, v.line, v.column);
        }
        nodes.push_back(BnNode{v.name, v.states, {}, {}});
    }
    std::vector<bool> has_probability(nodes.size(), false);

    auto lookup = [&](const std::string& name, int line, int col) {
        auto it = index.find(name);
        if (it == index.end()) throw BifParseError("undeclared variable " + name, line, col);
        return it->second;
    };

    for (const auto& p : probs) {
        const std::size_t child = lookup(p.child, p.line, p.column);
        if (has_probability[child]) throw BifParseError("second probability block for " + p.child, p.line, p.column);
        has_probability[child] = true;
        BnNode& node = nodes[child];
        for (const auto& par : p.parents) node.parents.push_back(lookup(par, p.line, p.column));

        const std::size_t k = node.states.size();
        std::size_t configs = 1;
        for (std::size_t par : node.parents) configs *= nodes[par].states.size();
        std::vector<std::optional<std::vector<double>>> rows(configs);
        std::optional<std::vector<double>> default_row;

        for (const auto& r : p.rows) {
            if (r.is_table) {
                if (r.values.size() != configs * k) {
                    throw BifParseError("table for " + p.child + " has " + std::to_string(r.values.size()) +
                                            " values, expected " + std::to_string(configs * k),
                                        r.line, r.column);
                }
                // Node state slowest, parent configurations fastest.
                for (std::size_t c = 0; c < configs; ++c) {
                    std::vector<double> row(k);
                    for (std::size_t s = 0; s < k; ++s) row[s] = r.values[s * configs + c];
                    rows[c] = std::move(row);
                }
                continue;
            }
            if (r.values.size() != k) {
                throw BifParseError("row for " + p.child + " has " + std::to_string(r.values.size()) + " values, expected " +
                                        std::to_string(k),
                                    r.line, r.column);
            }
            if (r.is_default) {
                default_row = r.values;
                continue;
            }
            if (r.config.size() != node.parents.size()) {
                throw BifParseError("parent configuration of " + p.child + " has the wrong arity", r.line, r.column);
            }
            std::size_t c = 0;
            for (std::size_t q = 0; q < node.parents.size(); ++q) {
                const BnNode& parent = nodes[node.parents[q]];
                auto it = std::find(parent.states.begin(), parent.states.end(), r.config[q]);
                if (it == parent.states.end()) {
                    throw BifParseError("unknown state '" + r.config[q] + "' of " + parent.name, r.line, r.column);
                }
                c = c * parent.states.size() + static_cast<std::size_t>(it - parent.states.begin());
            }
            rows[c] = r.values;
        }
        node.cpt.reserve(configs * k);
        for (std::size_t c = 0; c < configs; ++c) {
            const auto& row = rows[c] ? rows[c] : default_row;
            if (!row) throw BifValidationError("CPT of " + p.child + " misses parent configuration " + std::to_string(c));
            node.cpt.insert(node.cpt.end(), row->begin(), row->end());
        }
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!has_probability[i]) throw BifValidationError("variable " + nodes[i].name + " has no probability block");
    }
    return DiscreteBayesNet(net_name, std::move(nodes));
}

namespace {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

std::string write_bif(const DiscreteBayesNet& net) {
    std::ostringstream out;
    out << "network " << net.name() << " {\n}\n";
    for (const auto& n : net.nodes()) {
        out << "variable " << n.name << " {\n  type discrete [ " << n.states.size() << " ] { ";
        for (std::size_t s = 0; s < n.states.size(); ++s) out << (s ? ", " : "") << n.states[s];
        out << " };\n}\n";
    }
    for (std::size_t i = 0; i < net.size(); ++i) {
        const BnNode& n = net.node(i);
        out << "probability ( " << n.name;
        for (std::size_t q = 0; q < n.parents.size(); ++q) out << (q ? ", " : " | ") << net.node(n.parents[q]).name;
        out << " ) {\n";
        const std::size_t configs = net.parent_configurations(i);
        for (std::size_t c = 0; c < configs; ++c) {
            if (n.parents.empty()) {
                out << "  table ";
            } else {
                // Decode c with the last parent fastest.
                std::vector<std::size_t> states(n.parents.size());
                std::size_t rest = c;
                for (std::size_t q = n.parents.size(); q-- > 0;) {
                    const std::size_t card = net.cardinality(n.parents[q]);
                    states[q] = rest % card;
                    rest /= card;
                }
                out << "  (";
                for (std::size_t q = 0; q < states.size(); ++q) out << (q ? ", " : "") << net.node(n.parents[q]).states[states[q]];
                out << ") ";
            }
            const auto row = net.cpt_row(i, c);
            for (std::size_t s = 0; s < row.size(); ++s) out << (s ? ", " : "") << format_double(row[s]);
            out << ";\n";
        }
        out << "}\n";
    }
    return out.str();
}

// --- sampling -------------------------------------------------------------

Dataset forward_sample(const DiscreteBayesNet& net, std::size_t n, std::uint64_t seed) {
    Dataset data(net.names(), net.cardinalities());
    data.seed = seed;
    data.reserve(n);
    const auto order = net.dag().topological_order();
    std::vector<int> record(net.size());
    for (std::size_t r = 0; r < n; ++r) {
        SplitMix64 rng = make_stream(seed, {static_cast<std::uint64_t>(r)});
        for (std::size_t v : order) {
            std::size_t config = 0;
            for (std::size_t p : net.node(v).parents) config = config * net.cardinality(p) + static_cast<std::size_t>(record[p]);
            record[v] = static_cast<int>(numstat::categorical_sample(net.cpt_row(v, config), rng));
        }
        data.add_row(record);
    }
    return data;
}

// --- tiling ---------------------------------------------------------------

DiscreteBayesNet tile_network(const DiscreteBayesNet& net, int copies, int links_per_tile, std::uint64_t seed,
                              std::string name) {
    if (copies < 1) throw std::invalid_argument("tile_network: copies must be >= 1");
    if (links_per_tile < 0) throw std::invalid_argument("tile_network: links_per_tile must be >= 0");
    const std::size_t base = net.size();
    std::vector<BnNode> nodes;
    for (int t = 0; t < copies; ++t) {
        for (const auto& n : net.nodes()) {
            BnNode copy = n;
            copy.name += "_" + std::to_string(t + 1);
            for (auto& p : copy.parents) p += base * static_cast<std::size_t>(t);
            nodes.push_back(std::move(copy));
        }
    }
    SplitMix64 rng(seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    for (int t = 0; t + 1 < copies; ++t) {
        int added = 0;
        int attempts = 0;
        while (added < links_per_tile) {
            if (++attempts > 10000) throw std::runtime_error("tile_network: could not place inter-tile links");
            const std::size_t from = base * static_cast<std::size_t>(t) + pick(base);
            const std::size_t to = base * static_cast<std::size_t>(t + 1) + pick(base);
            BnNode& child = nodes[to];
            if (std::find(child.parents.begin(), child.parents.end(), from) != child.parents.end()) continue;
            if (child.parents.size() >= 3) continue;

            // New parent appended last, so it is the fastest-varying index.
            const std::size_t k = child.states.size();
            const std::size_t kp = nodes[from].states.size();
            const std::size_t old_configs = child.cpt.size() / k;
            std::vector<double> cpt;
            cpt.reserve(old_configs * kp * k);
            for (std::size_t c = 0; c < old_configs; ++c) {
                const std::span<const double> row(child.cpt.data() + c * k, k);
                for (std::size_t s = 0; s < kp; ++s) {
                    if (s == 0) {
                        cpt.insert(cpt.end(), row.begin(), row.end());
                        continue;
                    }
                    const auto noise = numstat::dirichlet_sample_symmetric(k, 1.0, rng);
                    for (std::size_t j = 0; j < k; ++j) cpt.push_back(0.5 * row[j] + 0.5 * noise[j]);
                }
            }
            child.cpt = std::move(cpt);
            child.parents.push_back(from);
            ++added;
        }
    }
    return DiscreteBayesNet(std::move(name), std::move(nodes), 1e-9);
}

}  // namespace causalci
