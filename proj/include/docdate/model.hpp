#pragma once

#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "docdate/achead.hpp"
#include "docdate/corpus.hpp"
#include "docdate/encoder.hpp"
#include "docdate/gradcheck.hpp"
#include "docdate/oehead.hpp"

namespace docdate {

enum class Head { Ac, Oe, Joint };

Head head_from_name(const std::string& name);  // "ac" | "oe" | "joint"
const std::string& head_name(Head h);

// Structural hyperparameters of the full model. Widths default to the
// reference configuration; tests shrink them.
struct ModelConfig {
    std::int64_t embed_dim = 300;      // word embedding width (must match the table)
    std::int64_t lstm_hidden = 128;    // per direction; context width is twice this
    std::int64_t k_syn = 128;          // S-GCN output width, shared by both heads
    std::int64_t attn_pool_dim = 128;  // s, context-attention projection width
    std::int64_t attn_feat_dim = 128;  // F, edge-attention projection width
    std::int64_t fc_dim = 128;         // OE readout width
    int num_at_layers = 2;
    int num_classes = 8;
    double keep_prob = 0.8;

    void validate() const;  // ConfigError on any non-positive width / bad keep_prob
    bool operator==(const ModelConfig&) const = default;
};

// Named, ordered collection of learnable tensors. Iteration order is
// insertion order everywhere (initialization draws, optimizer state,
// checkpoints), which keeps runs reproducible.
class ParamStore {
  public:
    Tensor& add(const std::string& name, Tensor value);
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const { return by_name_.count(name) > 0; }
    const std::vector<std::string>& names() const { return order_; }
    std::size_t size() const { return order_.size(); }
    // Pointers stay valid for the store's lifetime (node-based map).
    std::vector<ParamView> views();

  private:
    std::vector<std::string> order_;
    std::map<std::string, Tensor> by_name_;
};

// All parameters bound onto one tape, plus the flat node list aligned with
// ParamStore::names() for gradient collection.
struct BoundModel {
    BiLstmNodeParams bilstm;
    SGcnNodeParams sgcn;
    AttnPoolNodeParams pool;
    ClassifierNodeParams ac_cls;
    OeNodeParams oe;
    ClassifierNodeParams joint_cls;
    std::vector<Node> leaves;
};

// Enumerates every parameter of a model with the given config, in the fixed
// store order: fn(name, rows, cols, is_bias). Initialization and checkpoint
// validation both derive the layout from this.
void for_each_param_spec(const ModelConfig& config,
                         const std::function<void(const std::string&, std::int64_t, std::int64_t, bool)>& fn);

struct Model {
    ModelConfig config;
    ParamStore params;

    // Creates every named parameter with Glorot-uniform weights and zero
    // biases, drawing in name order from a generator seeded as given.
    static Model init(const ModelConfig& config, std::uint64_t seed);

    // Bind every parameter onto the tape; differentiable parameters become
    // leaves, otherwise constants.
    BoundModel bind(Tape& t, bool differentiable = true);
};

// Shared encoder: frozen embeddings -> BiLSTM (dropout in training mode) ->
// S-GCN over the augmented dependency graph. Rows are per-token syntactic
// context vectors of width k_syn.
Node encode_document(Tape& t, const Document& doc, const EmbeddingTable& table, const BoundModel& m,
                     double keep_prob, std::mt19937_64& rng, bool training);

AcResult forward_ac(Tape& t, Node h_syn, const BoundModel& m);
OeResult forward_oe(Tape& t, const Document& doc, Node h_syn, const BoundModel& m);

struct JointResult {
    Node dist;        // 1 x num_classes
    Node ac_weights;  // 1 x n token attention
    TemporalGraph graph;
    std::vector<EdgeAttentionRecord> attention;
};

// Attentive joint variant: softmax over an affine map of [d_AC ; h_DCT]
// (width 2 * k_syn). The separate heads' classifiers are not used.
JointResult forward_joint(Tape& t, const Document& doc, Node h_syn, const BoundModel& m);

}  // namespace docdate
