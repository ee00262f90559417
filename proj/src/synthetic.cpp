#include "docdate/synthetic.hpp"

#include <cstdio>

#include "docdate/rng.hpp"

namespace docdate {

std::string topic_word(int year, int j) {
    return "era" + std::to_string(year) + static_cast<char>('a' + j);
}

std::string time_token(int time_year) { return std::to_string(time_year); }

namespace {

constexpr int kEventNodes = 2;
// Specials per document: topic words, one time token, event tokens.
constexpr int kSpecials = topic_words_per_doc + 1 + kEventNodes;

const char* const kRelations[] = {"det", "nsubj", "obj", "amod", "advmod"};

}  // namespace

std::vector<Document> gen_synthetic(const SyntheticConfig& cfg) {
    if (cfg.num_docs < 1) throw ValueError("gen_synthetic: num_docs must be positive");
    if (cfg.end_year < cfg.start_year)
        throw ValueError("gen_synthetic: invalid year range [" + std::to_string(cfg.start_year) + ", " +
                         std::to_string(cfg.end_year) + "]");
    if (cfg.signal_strength < 0.0 || cfg.signal_strength > 1.0)
        throw ValueError("gen_synthetic: signal_strength " + std::to_string(cfg.signal_strength) +
                         " outside [0, 1]");
    if (cfg.doc_len_lo < kSpecials || cfg.doc_len_hi < cfg.doc_len_lo)
        throw ValueError("gen_synthetic: doc_len_range must satisfy " + std::to_string(kSpecials) +
                         " <= lo <= hi");

    std::mt19937_64 g(cfg.seed);
    std::vector<Document> docs;
    docs.reserve(static_cast<std::size_t>(cfg.num_docs));

    for (int di = 0; di < cfg.num_docs; ++di) {
        Document d;
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "doc%05d", di);
        d.id = idbuf;
        d.year = static_cast<int>(uniform_int(g, cfg.start_year, cfg.end_year));
        const int n = static_cast<int>(uniform_int(g, cfg.doc_len_lo, cfg.doc_len_hi));

        // Lexical signal: all topic words from the gold year's bucket, or from
        // a uniformly resampled year when the corruption coin fires.
        const int lex_year = uniform_unit(g) < cfg.signal_strength
                                 ? d.year
                                 : static_cast<int>(uniform_int(g, cfg.start_year, cfg.end_year));
        std::vector<std::string> specials;
        for (int j = 0; j < topic_words_per_doc; ++j)
            specials.push_back(topic_word(lex_year, static_cast<int>(uniform_int(g, 0, topic_words_per_doc - 1))));

        // Temporal signal: a time mention one year before the gold year,
        // BEFORE the DCT; corrupted docs get a random year and a random
        // BEFORE/AFTER link carrying no information.
        const bool time_clean = uniform_unit(g) < cfg.signal_strength;
        const int time_year = time_clean
                                  ? d.year - 1
                                  : static_cast<int>(uniform_int(g, cfg.start_year - 1, cfg.end_year - 1));
        const TemporalLabel time_label =
            time_clean ? TemporalLabel::Before
                       : (uniform_unit(g) < 0.5 ? TemporalLabel::Before : TemporalLabel::After);
        specials.push_back(time_token(time_year));

        for (int e = 0; e < kEventNodes; ++e)
            specials.push_back("evt" + std::to_string(uniform_int(g, 0, 9)));

        // Place specials at distinct random positions; fill the rest.
        std::vector<int> pos(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>(i)] = i;
        shuffle_vec(pos, g);
        d.tokens.assign(static_cast<std::size_t>(n), std::string());
        for (std::size_t s = 0; s < specials.size(); ++s)
            d.tokens[static_cast<std::size_t>(pos[s])] = specials[s];
        for (int i = 0; i < n; ++i)
            if (d.tokens[static_cast<std::size_t>(i)].empty())
                d.tokens[static_cast<std::size_t>(i)] = "w" + std::to_string(uniform_int(g, 0, 49));

        // Random dependency tree: token i > 0 attaches to a uniform earlier token.
        for (int i = 1; i < n; ++i) {
            const int head = static_cast<int>(uniform_below(g, static_cast<std::uint64_t>(i)));
            d.dep_edges.push_back({head, i, kRelations[uniform_int(g, 0, 4)]});
        }

        // Temporal annotation: time node 0, event nodes 1..kEventNodes.
        const int time_pos = pos[topic_words_per_doc];
        d.temporal_nodes.push_back({time_pos, NodeKind::Time});
        for (int e = 0; e < kEventNodes; ++e)
            d.temporal_nodes.push_back({pos[static_cast<std::size_t>(topic_words_per_doc + 1 + e)],
                                        NodeKind::Event});
        d.temporal_edges.push_back({NodeRef::node(0), NodeRef::dct(), time_label});
        // Structural noise: events linked to DCT and to the time node with
        // uniformly random labels (independent of the gold year).
        static const TemporalLabel all5[] = {TemporalLabel::After, TemporalLabel::Before,
                                             TemporalLabel::Simultaneous, TemporalLabel::Includes,
                                             TemporalLabel::IsIncluded};
        d.temporal_edges.push_back({NodeRef::node(1), NodeRef::dct(), all5[uniform_int(g, 0, 4)]});
        d.temporal_edges.push_back({NodeRef::node(2), NodeRef::node(0), all5[uniform_int(g, 0, 4)]});

        docs.push_back(std::move(d));
    }
    return docs;
}

}  // namespace docdate
