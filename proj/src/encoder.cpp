#include "docdate/encoder.hpp"

namespace docdate {

Tensor embed_tokens(const Document& doc, const EmbeddingTable& table) {
    const std::int64_t n = doc.n_tokens();
    const std::int64_t k = table.dim();
    Tensor out = Tensor::zeros({n, k});
    for (std::int64_t t = 0; t < n; ++t) {
        const std::int64_t row = table.index_of(doc.tokens[static_cast<std::size_t>(t)]);
        const double* src = row >= 0 ? table.matrix.data() + row * k : table.unk.data();
        std::copy(src, src + k, out.data() + t * k);
    }
    return out;
}

Node bilstm_forward(Tape& t, Node x, const BiLstmNodeParams& p, double keep_prob, std::mt19937_64& rng,
                    bool training) {
    const Tensor& xv = t.val(x);
    if (xv.rank() != 2) throw DimensionError("bilstm_forward: input must be n x k, got " + shape_str(xv.shape()));
    const std::int64_t n = xv.rows();
    const std::int64_t k = xv.cols();
    const Tensor& w00 = t.val(p.w[0][0]);
    if (w00.rank() != 2) throw DimensionError("bilstm_forward: gate weights must be rank 2");
    const std::int64_t h = w00.cols();
    for (int dir = 0; dir < 2; ++dir)
        for (int gate = 0; gate < 4; ++gate) {
            const Tensor& w = t.val(p.w[dir][gate]);
            if (w.rows() != k + h || w.cols() != h)
                throw DimensionError("bilstm_forward: gate weight shape " + shape_str(w.shape()) +
                                     ", expected [" + std::to_string(k + h) + " x " + std::to_string(h) + "]");
        }

    std::vector<Node> xs;
    xs.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) xs.push_back(slice_rows(x, i, i + 1));

    std::array<std::vector<Node>, 2> hidden;  // [dir][original token index]
    for (int dir = 0; dir < 2; ++dir) {
        hidden[static_cast<std::size_t>(dir)].resize(static_cast<std::size_t>(n));
        Node hprev = t.constant(Tensor::zeros({1, h}));
        Node cprev = t.constant(Tensor::zeros({1, h}));
        for (std::int64_t step = 0; step < n; ++step) {
            const std::int64_t i = dir == 0 ? step : n - 1 - step;
            Node z = concat_rows(xs[static_cast<std::size_t>(i)], hprev);
            auto gate = [&](int gi) {
                return add_row_bias(matmul(z, p.w[static_cast<std::size_t>(dir)][static_cast<std::size_t>(gi)]),
                                    p.b[static_cast<std::size_t>(dir)][static_cast<std::size_t>(gi)]);
            };
            Node ig = sigmoid(gate(0));
            Node fg = sigmoid(gate(1));
            Node og = sigmoid(gate(2));
            Node cand = tanh(gate(3));
            Node c = add(mul(fg, cprev), mul(ig, cand));
            Node hcur = mul(og, tanh(c));
            hidden[static_cast<std::size_t>(dir)][static_cast<std::size_t>(i)] = hcur;
            hprev = hcur;
            cprev = c;
        }
    }

    std::vector<Node> rows;
    rows.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        rows.push_back(concat_rows(hidden[0][static_cast<std::size_t>(i)], hidden[1][static_cast<std::size_t>(i)]));
    Node out = stack_rows(rows);
    return dropout(out, keep_prob, rng, training);
}

LabeledDirectedGraph augment_syntactic_graph(const Document& doc) {
    const int n = doc.n_tokens();
    LabeledDirectedGraph g(n);
    for (const auto& e : doc.dep_edges) {
        g.add_edge(e.head, e.dependent, static_cast<int>(SynLabel::Original));
        g.add_edge(e.dependent, e.head, static_cast<int>(SynLabel::Reverse));
    }
    for (int i = 0; i < n; ++i) g.add_edge(i, i, static_cast<int>(SynLabel::SelfLoop));
    return g;
}

Node sgcn_forward(Tape& t, Node h, const LabeledDirectedGraph& g, const SGcnNodeParams& p) {
    const Tensor& hv = t.val(h);
    if (hv.rank() != 2) throw DimensionError("sgcn_forward: features must be n x d, got " + shape_str(hv.shape()));
    const std::int64_t n = hv.rows();
    if (g.num_nodes() != n)
        throw DimensionError("sgcn_forward: graph has " + std::to_string(g.num_nodes()) + " nodes, features " +
                             std::to_string(n) + " rows");
    for (const auto& e : g.edges())
        if (e.label < 0 || e.label >= kNumSynLabels)
            throw ValueError("sgcn_forward: edge label " + std::to_string(e.label) + " outside the 3 classes");

    // Per label l: sum over in-edges (u,v,l) of h_u W_l + b_l, expressed as
    // A_l (h W_l) + deg_l b_l with constant adjacency/degree tensors.
    Node acc{};
    bool have = false;
    for (int label = 0; label < kNumSynLabels; ++label) {
        Tensor adj = Tensor::zeros({n, n});
        Tensor deg = Tensor::zeros({n, 1});
        std::int64_t count = 0;
        for (const auto& e : g.edges()) {
            if (e.label != label) continue;
            adj.at(e.dst, e.src) += 1.0;
            deg.at(e.dst, 0) += 1.0;
            ++count;
        }
        if (count == 0) continue;
        const auto li = static_cast<std::size_t>(label);
        Node term = add(matmul(t.constant(std::move(adj)), matmul(h, p.w[li])),
                        matmul(t.constant(std::move(deg)), p.b[li]));
        acc = have ? add(acc, term) : term;
        have = true;
    }
    if (!have) {
        const std::int64_t ks = t.val(p.w[0]).cols();
        acc = t.constant(Tensor::zeros({n, ks}));
    }
    return relu(acc);
}

}  // namespace docdate
