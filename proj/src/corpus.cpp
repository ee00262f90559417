#include "docdate/corpus.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "docdate/rng.hpp"

namespace docdate {

using nlohmann::json;

namespace {

const std::array<std::string, 5> kLabelNames = {"AFTER", "BEFORE", "SIMULTANEOUS", "INCLUDES", "IS_INCLUDED"};

std::string where_prefix(const std::string& where) { return where.empty() ? "" : where + ": "; }

std::string line_prefix(int line_no) {
    return line_no > 0 ? "line " + std::to_string(line_no) + ": " : "";
}

}  // namespace

const std::string& temporal_label_name(TemporalLabel l) {
    return kLabelNames[static_cast<std::size_t>(l)];
}

TemporalLabel temporal_label_from(const std::string& name) {
    for (std::size_t i = 0; i < kLabelNames.size(); ++i)
        if (kLabelNames[i] == name) return static_cast<TemporalLabel>(i);
    throw ParseError("unknown temporal label \"" + name + "\"");
}

void validate_document(const Document& d, const std::string& where) {
    const std::string p = where_prefix(where);
    const int n = d.n_tokens();
    if (n < 1) throw ParseError(p + "tokens: document must have at least one token");
    for (std::size_t i = 0; i < d.dep_edges.size(); ++i) {
        const DepEdge& e = d.dep_edges[i];
        if (e.head < 0 || e.head >= n || e.dependent < 0 || e.dependent >= n)
            throw ParseError(p + "dep_edges[" + std::to_string(i) + "]: token index out of range [0, " +
                             std::to_string(n) + ")");
    }
    const int t = static_cast<int>(d.temporal_nodes.size());
    for (std::size_t i = 0; i < d.temporal_nodes.size(); ++i) {
        const TemporalNode& nd = d.temporal_nodes[i];
        if (nd.token_idx < 0 || nd.token_idx >= n)
            throw ParseError(p + "temporal_nodes[" + std::to_string(i) + "]: idx out of range [0, " +
                             std::to_string(n) + ")");
    }
    for (std::size_t i = 0; i < d.temporal_edges.size(); ++i) {
        const TemporalEdge& e = d.temporal_edges[i];
        for (const NodeRef* r : {&e.src, &e.dst}) {
            if (!r->is_dct && (r->idx < 0 || r->idx >= t))
                throw ParseError(p + "temporal_edges[" + std::to_string(i) + "]: node ref " +
                                 std::to_string(r->idx) + " out of range [0, " + std::to_string(t) + ")");
        }
    }
}

namespace {

NodeRef parse_ref(const json& j, const std::string& field) {
    if (j.is_string()) {
        if (j.get<std::string>() == "DCT") return NodeRef::dct();
        throw ParseError(field + ": node ref string must be \"DCT\", got \"" + j.get<std::string>() + "\"");
    }
    if (j.is_number_integer()) return NodeRef::node(j.get<int>());
    throw ParseError(field + ": node ref must be an integer or \"DCT\"");
}

json ref_to_json(const NodeRef& r) {
    if (r.is_dct) return json("DCT");
    return json(r.idx);
}

}  // namespace

Document parse_document(const std::string& line, int line_no) {
    const std::string p = line_prefix(line_no);
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(p + "malformed record: " + e.what());
    }
    if (!j.is_object()) throw ParseError(p + "record is not an object");

    static const std::set<std::string> kFields = {"id",             "tokens",         "dep_edges",
                                                  "temporal_nodes", "temporal_edges", "year"};
    for (const auto& [key, _] : j.items())
        if (!kFields.count(key)) throw ParseError(p + "unknown field \"" + key + "\"");
    for (const auto& f : kFields)
        if (!j.contains(f)) throw ParseError(p + "missing field \"" + f + "\"");

    Document d;
    try {
        if (!j["id"].is_string()) throw ParseError(p + "id: must be a string");
        d.id = j["id"].get<std::string>();
        if (!j["tokens"].is_array()) throw ParseError(p + "tokens: must be an array");
        for (const auto& t : j["tokens"]) {
            if (!t.is_string()) throw ParseError(p + "tokens: entries must be strings");
            d.tokens.push_back(t.get<std::string>());
        }
        if (!j["dep_edges"].is_array()) throw ParseError(p + "dep_edges: must be an array");
        for (std::size_t i = 0; i < j["dep_edges"].size(); ++i) {
            const auto& e = j["dep_edges"][i];
            const std::string f = "dep_edges[" + std::to_string(i) + "]";
            if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
                !e[2].is_string())
                throw ParseError(p + f + ": expected [int, int, string]");
            d.dep_edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<std::string>()});
        }
        if (!j["temporal_nodes"].is_array()) throw ParseError(p + "temporal_nodes: must be an array");
        for (std::size_t i = 0; i < j["temporal_nodes"].size(); ++i) {
            const auto& nd = j["temporal_nodes"][i];
            const std::string f = "temporal_nodes[" + std::to_string(i) + "]";
            if (!nd.is_object() || nd.size() != 2 || !nd.contains("idx") || !nd.contains("kind") ||
                !nd["idx"].is_number_integer() || !nd["kind"].is_string())
                throw ParseError(p + f + ": expected {idx: int, kind: \"event\"|\"time\"}");
            const std::string kind = nd["kind"].get<std::string>();
            if (kind != "event" && kind != "time")
                throw ParseError(p + f + ": kind must be \"event\" or \"time\", got \"" + kind + "\"");
            d.temporal_nodes.push_back(
                {nd["idx"].get<int>(), kind == "event" ? NodeKind::Event : NodeKind::Time});
        }
        if (!j["temporal_edges"].is_array()) throw ParseError(p + "temporal_edges: must be an array");
        for (std::size_t i = 0; i < j["temporal_edges"].size(); ++i) {
            const auto& e = j["temporal_edges"][i];
            const std::string f = "temporal_edges[" + std::to_string(i) + "]";
            if (!e.is_array() || e.size() != 3 || !e[2].is_string())
                throw ParseError(p + f + ": expected [ref, ref, label]");
            TemporalEdge te;
            te.src = parse_ref(e[0], p + f);
            te.dst = parse_ref(e[1], p + f);
            try {
                te.label = temporal_label_from(e[2].get<std::string>());
            } catch (const ParseError& err) {
                throw ParseError(p + f + ": " + err.what());
            }
            d.temporal_edges.push_back(te);
        }
        if (!j["year"].is_number_integer()) throw ParseError(p + "year: must be an integer");
        d.year = j["year"].get<int>();
    } catch (const json::exception& e) {
        throw ParseError(p + "malformed record: " + e.what());
    }

    validate_document(d, line_no > 0 ? "line " + std::to_string(line_no) : "");
    return d;
}

std::string serialize_document(const Document& d) {
    json j;
    j["id"] = d.id;
    j["tokens"] = d.tokens;
    j["year"] = d.year;
    j["dep_edges"] = json::array();
    for (const auto& e : d.dep_edges) j["dep_edges"].push_back(json::array({e.head, e.dependent, e.relation}));
    j["temporal_nodes"] = json::array();
    for (const auto& n : d.temporal_nodes)
        j["temporal_nodes"].push_back(
            json{{"idx", n.token_idx}, {"kind", n.kind == NodeKind::Event ? "event" : "time"}});
    j["temporal_edges"] = json::array();
    for (const auto& e : d.temporal_edges)
        j["temporal_edges"].push_back(json::array({ref_to_json(e.src), ref_to_json(e.dst),
                                                   temporal_label_name(e.label)}));
    return j.dump();
}

std::vector<Document> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file: " + path);
    std::vector<Document> docs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        docs.push_back(parse_document(line, line_no));
    }
    return docs;
}

void write_corpus(const std::string& path, const std::vector<Document>& docs) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write corpus file: " + path);
    for (const auto& d : docs) out << serialize_document(d) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

// ---- embeddings ----

std::int64_t EmbeddingTable::index_of(const std::string& word) const {
    auto it = vocab.find(word);
    return it == vocab.end() ? -1 : it->second;
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw ParseError(path + ": empty embedding file");
    std::int64_t v = 0, k = 0;
    {
        std::istringstream hs(header);
        std::string extra;
        if (!(hs >> v >> k) || (hs >> extra) || v < 1 || k < 1)
            throw ParseError(path + ": header must be \"V k\" with positive integers, got \"" + header + "\"");
    }
    EmbeddingTable table;
    table.matrix = Tensor::zeros({v, k});
    table.unk = Tensor::zeros({1, k});
    table.pad = Tensor::zeros({1, k});
    std::string line;
    for (std::int64_t r = 0; r < v; ++r) {
        if (!std::getline(in, line))
            throw ParseError(path + ": expected " + std::to_string(v) + " rows, got " + std::to_string(r));
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) throw ParseError(path + ": row " + std::to_string(r + 1) + ": missing word");
        if (table.vocab.count(word))
            throw ParseError(path + ": duplicate word \"" + word + "\" at row " + std::to_string(r + 1));
        for (std::int64_t c = 0; c < k; ++c) {
            double x;
            if (!(ls >> x))
                throw ParseError(path + ": row " + std::to_string(r + 1) + " (\"" + word + "\"): expected " +
                                 std::to_string(k) + " values");
            table.matrix.at(r, c) = x;
        }
        std::string extra;
        if (ls >> extra)
            throw ParseError(path + ": row " + std::to_string(r + 1) + " (\"" + word + "\"): expected " +
                             std::to_string(k) + " values, found more");
        table.vocab.emplace(word, r);
    }
    return table;
}

EmbeddingTable load_embeddings(const std::string& path, std::int64_t expected_k) {
    EmbeddingTable t = load_embeddings(path);
    if (t.dim() != expected_k)
        throw DimensionError(path + ": embedding width " + std::to_string(t.dim()) +
                             " does not match configured " + std::to_string(expected_k));
    return t;
}

void write_embedding_file(const std::string& path, const std::vector<std::string>& words, std::int64_t k,
                          std::uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write embedding file: " + path);
    std::mt19937_64 g(seed);
    out << words.size() << ' ' << k << '\n';
    char buf[64];
    for (const auto& w : words) {
        out << w;
        for (std::int64_t c = 0; c < k; ++c) {
            std::snprintf(buf, sizeof(buf), " %.17g", uniform_range(g, -0.5, 0.5));
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<std::string> corpus_vocabulary(const std::vector<Document>& docs) {
    std::set<std::string> s;
    for (const auto& d : docs) s.insert(d.tokens.begin(), d.tokens.end());
    return std::vector<std::string>(s.begin(), s.end());
}

// ---- splits ----

DatasetSplit split_dataset(const std::vector<Document>& docs, std::uint64_t seed) {
    const std::size_t n = docs.size();
    if (n < 10)
        throw ValueError("split_dataset: need at least 10 documents, got " + std::to_string(n));
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 g(seed);
    shuffle_vec(perm, g);
    const std::size_t n_test = n / 10;
    const std::size_t n_val = n / 10;
    const std::size_t n_train = n - n_val - n_test;
    DatasetSplit split;
    split.start_year = docs[0].year;
    split.end_year = docs[0].year;
    for (const auto& d : docs) {
        split.start_year = std::min(split.start_year, d.year);
        split.end_year = std::max(split.end_year, d.year);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Document& d = docs[perm[i]];
        if (i < n_train)
            split.train.push_back(d);
        else if (i < n_train + n_val)
            split.validation.push_back(d);
        else
            split.test.push_back(d);
    }
    return split;
}

}  // namespace docdate
