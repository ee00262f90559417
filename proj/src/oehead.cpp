#include "docdate/oehead.hpp"

#include <array>
#include <set>
#include <tuple>

namespace docdate {

namespace {

const std::array<std::string, kNumFineLabels> kFineNames = {
    "AFTER",          "BEFORE",          "SIMULTANEOUS",          "INCLUDES",          "IS_INCLUDED",
    "AFTER_INV",      "BEFORE_INV",      "SIMULTANEOUS_INV",      "INCLUDES_INV",      "IS_INCLUDED_INV"};

}  // namespace

FineLabel inverse_of(FineLabel l) {
    const int i = static_cast<int>(l);
    return static_cast<FineLabel>(i < kNumTemporalLabels ? i + kNumTemporalLabels : i - kNumTemporalLabels);
}

FineLabel fine_of(TemporalLabel l) { return static_cast<FineLabel>(static_cast<int>(l)); }

const std::string& fine_label_name(FineLabel l) { return kFineNames[static_cast<std::size_t>(l)]; }

const std::vector<int>& TemporalGraph::out_neighbors(int i, FineLabel l) const {
    return out_[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)];
}

TemporalGraph build_temporal_graph(const Document& doc) {
    const int t_count = static_cast<int>(doc.temporal_nodes.size());
    TemporalGraph g;
    g.num_nodes = t_count + 1;
    for (const auto& n : doc.temporal_nodes) g.token_of.push_back(n.token_idx);

    auto resolve = [&](const NodeRef& r) { return r.is_dct ? t_count : r.idx; };

    std::set<std::tuple<int, int, int>> seen;
    for (const auto& e : doc.temporal_edges) {
        const int s = resolve(e.src);
        const int d = resolve(e.dst);
        const FineLabel l = fine_of(e.label);
        if (!seen.insert({s, d, static_cast<int>(l)}).second) {
            ++g.duplicate_count;
            continue;
        }
        g.edges.push_back({s, d, l, CoarseDir::Original});
        g.edges.push_back({d, s, inverse_of(l), CoarseDir::Added});
    }

    g.out_.assign(static_cast<std::size_t>(g.num_nodes),
                  std::vector<std::vector<int>>(kNumFineLabels));
    for (const auto& e : g.edges)
        g.out_[static_cast<std::size_t>(e.src)][static_cast<std::size_t>(e.label)].push_back(e.dst);
    return g;
}

Node edge_attention(Tape& t, Node h, const TemporalGraph& g, const AtGcnLayerNodeParams& p, FineLabel l,
                    int i) {
    if (h.tape != &t) throw ValueError("edge_attention: features recorded on a different tape");
    const auto& neigh = g.out_neighbors(i, l);
    if (neigh.empty())
        throw ValueError("edge_attention: empty neighborhood for node " + std::to_string(i) + " under label " +
                         fine_label_name(l));
    const auto dir = static_cast<std::size_t>(coarse_of(l));
    Node hi = slice_rows(h, i, i + 1);
    Node pi = matmul(hi, p.w_atten[dir]);  // 1 x F
    std::vector<Node> scores;
    scores.reserve(neigh.size());
    for (int j : neigh) {
        Node pj = matmul(slice_rows(h, j, j + 1), p.w_atten[dir]);
        Node e = tanh(concat_rows(pi, pj));       // 1 x 2F
        scores.push_back(matmul(e, p.a[dir]));    // 1 x 1
    }
    Node srow = transpose(stack_rows(scores));    // 1 x m
    return softmax_rows(srow);
}

Node atgcn_layer(Tape& t, Node h, const TemporalGraph& g, const AtGcnLayerNodeParams& p, int layer_index,
                 std::vector<EdgeAttentionRecord>* attention_out) {
    const Tensor& hv = t.val(h);
    if (hv.rank() != 2 || hv.rows() != g.num_nodes)
        throw DimensionError("atgcn_layer: features " + shape_str(hv.shape()) + " do not cover " +
                             std::to_string(g.num_nodes) + " nodes");

    std::vector<Node> out_rows;
    out_rows.reserve(static_cast<std::size_t>(g.num_nodes));
    for (int i = 0; i < g.num_nodes; ++i) {
        Node hi = slice_rows(h, i, i + 1);
        // Self term with fixed attention 1.
        Node acc = add_row_bias(matmul(hi, p.w_self), p.b_self);
        for (int li = 0; li < kNumFineLabels; ++li) {
            const auto l = static_cast<FineLabel>(li);
            const auto& neigh = g.out_neighbors(i, l);
            if (neigh.empty()) continue;
            Node alpha = edge_attention(t, h, g, p, l, i);  // 1 x m
            if (attention_out != nullptr) {
                const Tensor& av = t.val(alpha);
                for (std::size_t j = 0; j < neigh.size(); ++j)
                    attention_out->push_back({layer_index, i, neigh[j], l, av[static_cast<std::int64_t>(j)]});
            }
            std::vector<Node> transformed;
            transformed.reserve(neigh.size());
            for (int j : neigh)
                transformed.push_back(
                    add_row_bias(matmul(slice_rows(h, j, j + 1), p.w[static_cast<std::size_t>(li)]),
                                 p.b[static_cast<std::size_t>(li)]));
            Node contrib = matmul(alpha, stack_rows(transformed));  // 1 x k_syn
            acc = add(acc, contrib);
        }
        out_rows.push_back(acc);
    }
    return relu(stack_rows(out_rows));
}

OeEncoding oe_encode(Tape& t, const Document& doc, Node h_syn, const OeNodeParams& p) {
    if (p.layers.empty()) throw ValueError("oe_encode: at least one AT-GCN layer is required");
    TemporalGraph g = build_temporal_graph(doc);

    std::vector<Node> rows;
    rows.reserve(static_cast<std::size_t>(g.num_nodes));
    for (int i = 0; i + 1 < g.num_nodes; ++i) {
        const int tok = g.token_of[static_cast<std::size_t>(i)];
        rows.push_back(slice_rows(h_syn, tok, tok + 1));
    }
    rows.push_back(p.h_dct0);
    Node h = stack_rows(rows);

    std::vector<EdgeAttentionRecord> attention;
    for (std::size_t layer = 0; layer < p.layers.size(); ++layer)
        h = atgcn_layer(t, h, g, p.layers[layer], static_cast<int>(layer), &attention);

    Node h_dct = slice_rows(h, g.dct(), g.dct() + 1);
    return {h_dct, std::move(g), std::move(attention)};
}

OeResult oe_forward(Tape& t, const Document& doc, Node h_syn, const OeNodeParams& p) {
    OeEncoding enc = oe_encode(t, doc, h_syn, p);
    Node fc = relu(add_row_bias(matmul(enc.h_dct, p.fc_w), p.fc_b));
    Node dist = classify(t, fc, p.cls);
    return {dist, std::move(enc.graph), std::move(enc.attention)};
}

}  // namespace docdate
