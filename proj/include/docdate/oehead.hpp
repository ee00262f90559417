#pragma once

#include <array>
#include <vector>

#include "docdate/achead.hpp"
#include "docdate/corpus.hpp"
#include "docdate/tensor.hpp"

namespace docdate {

// The 10 temporal-graph labels: the 5 corpus labels plus their inverses.
// Self loops are not labels; they are handled with fixed weight 1.
enum class FineLabel : int {
    After = 0,
    Before,
    Simultaneous,
    Includes,
    IsIncluded,
    AfterInv,
    BeforeInv,
    SimultaneousInv,
    IncludesInv,
    IsIncludedInv,
};

inline constexpr int kNumFineLabels = 10;

FineLabel inverse_of(FineLabel l);
FineLabel fine_of(TemporalLabel l);
const std::string& fine_label_name(FineLabel l);

// Coarse edge direction: original corpus edges vs added inverses. Selects the
// attention parameter set.
enum class CoarseDir : int { Original = 0, Added = 1 };

inline CoarseDir coarse_of(FineLabel l) {
    return static_cast<int>(l) < kNumTemporalLabels ? CoarseDir::Original : CoarseDir::Added;
}

struct TemporalGraphEdge {
    int src = 0;
    int dst = 0;
    FineLabel label = FineLabel::After;
    CoarseDir dir = CoarseDir::Original;
    bool operator==(const TemporalGraphEdge&) const = default;
};

// Temporal nodes of a document plus the DCT node (always the last index).
// Every node implicitly carries a self loop; labeled edges exclude them.
struct TemporalGraph {
    int num_nodes = 1;
    std::vector<int> token_of;              // token index per non-DCT node
    std::vector<TemporalGraphEdge> edges;   // augmented: originals + inverses
    int duplicate_count = 0;                // identical input edges collapsed

    int dct() const { return num_nodes - 1; }
    std::size_t self_loops() const { return static_cast<std::size_t>(num_nodes); }
    std::size_t total_edges() const { return edges.size() + self_loops(); }
    // N^l(i) = { j : (i, j, l) in edges }, in edge order.
    const std::vector<int>& out_neighbors(int i, FineLabel l) const;

    std::vector<std::vector<std::vector<int>>> out_;  // [node][label] -> dst list
};

TemporalGraph build_temporal_graph(const Document& doc);

// One AT-GCN layer's parameters.
struct AtGcnLayerNodeParams {
    std::array<Node, kNumFineLabels> w;  // k_syn x k_syn aggregation per label
    std::array<Node, kNumFineLabels> b;  // 1 x k_syn
    std::array<Node, 2> w_atten;         // k_syn x F, per coarse direction
    std::array<Node, 2> a;               // 2F x 1, per coarse direction
    Node w_self;                         // k_syn x k_syn
    Node b_self;                         // 1 x k_syn
};

// Attention over N^l(i): e_ij = tanh[h_i W_atten ; h_j W_atten],
// alpha = softmax_j(e_ij . a), parameters chosen by the edges' coarse
// direction. Returns a 1 x |N^l(i)| row aligned with out_neighbors order.
// Precondition: N^l(i) nonempty.
Node edge_attention(Tape& t, Node h, const TemporalGraph& g, const AtGcnLayerNodeParams& p, FineLabel l,
                    int i);

struct EdgeAttentionRecord {
    int layer = 0;
    int src = 0;
    int dst = 0;
    FineLabel label = FineLabel::After;
    double weight = 0.0;
};

// h_i' = relu( W_self h_i + b_self + sum_l sum_{j in N^l(i)} alpha^l_ij (W_l h_j + b_l) ).
// Attention is recomputed from the layer's input features. When
// attention_out is given, every alpha is appended as a record.
Node atgcn_layer(Tape& t, Node h, const TemporalGraph& g, const AtGcnLayerNodeParams& p, int layer_index = 0,
                 std::vector<EdgeAttentionRecord>* attention_out = nullptr);

struct OeNodeParams {
    std::vector<AtGcnLayerNodeParams> layers;  // 2 layers per the architecture
    Node h_dct0;                               // 1 x k_syn learned DCT embedding
    Node fc_w;                                 // k_syn x fc_width
    Node fc_b;                                 // 1 x fc_width
    ClassifierNodeParams cls;                  // fc_width -> num_classes
};

struct OeEncoding {
    Node h_dct;  // 1 x k_syn final DCT representation
    TemporalGraph graph;
    std::vector<EdgeAttentionRecord> attention;  // per layer, per edge
};

// The graph part of the head: build the temporal graph, gather node features
// (syntactic rows at the temporal nodes' token positions, DCT from the
// learned embedding), run the AT-GCN layers, return the DCT row. The joint
// model consumes this directly; oe_forward adds the readout.
OeEncoding oe_encode(Tape& t, const Document& doc, Node h_syn, const OeNodeParams& p);

struct OeResult {
    Node dist;  // 1 x num_classes
    TemporalGraph graph;
    std::vector<EdgeAttentionRecord> attention;  // per layer, per edge
};

// oe_encode, then the DCT readout: relu fully connected layer and a softmax
// classifier.
OeResult oe_forward(Tape& t, const Document& doc, Node h_syn, const OeNodeParams& p);

}  // namespace docdate
