#pragma once

#include <array>
#include <random>

#include "docdate/corpus.hpp"
#include "docdate/graph.hpp"
#include "docdate/tensor.hpp"

namespace docdate {

// Row t is the (frozen) embedding of token t; out-of-vocabulary tokens get
// the table's unk row.
Tensor embed_tokens(const Document& doc, const EmbeddingTable& table);

// Parameters as tape nodes; binding from named storage happens in the model
// layer so the forward functions stay testable in isolation.
struct BiLstmNodeParams {
    // [direction][gate]; direction 0 runs left-to-right, 1 right-to-left.
    // Gate order: input, forget, output, candidate.
    std::array<std::array<Node, 4>, 2> w;  // (k + h) x h, h = per-direction width
    std::array<std::array<Node, 4>, 2> b;  // 1 x h
};

inline constexpr std::array<const char*, 4> kLstmGateNames = {"i", "f", "o", "c"};

// Standard LSTM recurrence per direction over concatenated [x_t ; h_{t-1}],
// zero initial states; output row t = [fwd h_t ; bwd h_t], then inverted
// dropout on the output.
Node bilstm_forward(Tape& t, Node x, const BiLstmNodeParams& p, double keep_prob, std::mt19937_64& rng,
                    bool training);

enum class SynLabel : int { Original = 0, Reverse = 1, SelfLoop = 2 };
inline constexpr int kNumSynLabels = 3;

// For each dependency edge (h, m): (h, m, original) and (m, h, reverse);
// plus (t, t, self) for every token. |E'| = 2|dep_edges| + n.
LabeledDirectedGraph augment_syntactic_graph(const Document& doc);

struct SGcnNodeParams {
    std::array<Node, 3> w;  // d x k_syn, indexed by SynLabel
    std::array<Node, 3> b;  // 1 x k_syn
};

// One S-GCN layer: h_v' = relu(sum over in-edges (u,v,l) of (h_u W_l + b_l)).
Node sgcn_forward(Tape& t, Node h, const LabeledDirectedGraph& g, const SGcnNodeParams& p);

}  // namespace docdate
