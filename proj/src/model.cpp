#include "docdate/model.hpp"

#include <cmath>

#include "docdate/errors.hpp"
#include "docdate/rng.hpp"

namespace docdate {

namespace {

const std::array<std::string, 3> kHeadNames = {"ac", "oe", "joint"};

std::string layer_prefix(int layer) { return "oe.layer" + std::to_string(layer) + "."; }

}  // namespace

Head head_from_name(const std::string& name) {
    for (std::size_t i = 0; i < kHeadNames.size(); ++i)
        if (name == kHeadNames[i]) return static_cast<Head>(i);
    throw ConfigError("unknown head '" + name + "' (expected ac, oe, or joint)");
}

const std::string& head_name(Head h) { return kHeadNames[static_cast<std::size_t>(h)]; }

void ModelConfig::validate() const {
    auto positive = [](std::int64_t v, const char* what) {
        if (v < 1) throw ConfigError(std::string(what) + " must be positive, got " + std::to_string(v));
    };
    positive(embed_dim, "embed_dim");
    positive(lstm_hidden, "lstm_hidden");
    positive(k_syn, "k_syn");
    positive(attn_pool_dim, "attn_pool_dim");
    positive(attn_feat_dim, "attn_feat_dim");
    positive(fc_dim, "fc_dim");
    positive(num_at_layers, "num_at_layers");
    positive(num_classes, "num_classes");
    if (!(keep_prob > 0.0 && keep_prob <= 1.0))
        throw ConfigError("keep_prob must be in (0, 1], got " + std::to_string(keep_prob));
}

Tensor& ParamStore::add(const std::string& name, Tensor value) {
    auto [it, inserted] = by_name_.emplace(name, std::move(value));
    if (!inserted) throw ValueError("duplicate parameter name '" + name + "'");
    order_.push_back(name);
    return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ValueError("unknown parameter name '" + name + "'");
    return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ValueError("unknown parameter name '" + name + "'");
    return it->second;
}

std::vector<ParamView> ParamStore::views() {
    std::vector<ParamView> out;
    out.reserve(order_.size());
    for (const auto& name : order_) out.push_back({name, &by_name_.at(name)});
    return out;
}

void for_each_param_spec(
    const ModelConfig& config,
    const std::function<void(const std::string&, std::int64_t, std::int64_t, bool)>& fn) {
    const std::int64_t k = config.embed_dim;
    const std::int64_t h = config.lstm_hidden;
    const std::int64_t d = 2 * h;  // context width
    const std::int64_t ks = config.k_syn;
    const std::int64_t C = config.num_classes;

    auto weight = [&](const std::string& name, std::int64_t rows, std::int64_t cols) {
        fn(name, rows, cols, false);
    };
    auto bias = [&](const std::string& name, std::int64_t cols) { fn(name, 1, cols, true); };

    for (const char* dir : {"fwd", "bwd"}) {
        for (const char* gate : kLstmGateNames)
            weight("bilstm." + std::string(dir) + ".w_" + gate, k + h, h);
        for (const char* gate : kLstmGateNames) bias("bilstm." + std::string(dir) + ".b_" + gate, h);
    }
    for (int l = 0; l < kNumSynLabels; ++l) weight("sgcn.w" + std::to_string(l), d, ks);
    for (int l = 0; l < kNumSynLabels; ++l) bias("sgcn.b" + std::to_string(l), ks);

    weight("ac.pool.w_s", ks, config.attn_pool_dim);
    weight("ac.pool.u_s", config.attn_pool_dim, 1);
    weight("ac.cls.w", ks, C);
    bias("ac.cls.b", C);

    for (int layer = 0; layer < config.num_at_layers; ++layer) {
        const std::string pre = layer_prefix(layer);
        for (int l = 0; l < kNumFineLabels; ++l) weight(pre + "w" + std::to_string(l), ks, ks);
        for (int l = 0; l < kNumFineLabels; ++l) bias(pre + "b" + std::to_string(l), ks);
        for (int dir = 0; dir < 2; ++dir) {
            weight(pre + "atten" + std::to_string(dir) + ".w", ks, config.attn_feat_dim);
            weight(pre + "atten" + std::to_string(dir) + ".a", 2 * config.attn_feat_dim, 1);
        }
        weight(pre + "self.w", ks, ks);
        bias(pre + "self.b", ks);
    }
    weight("oe.h_dct0", 1, ks);
    weight("oe.fc.w", ks, config.fc_dim);
    bias("oe.fc.b", config.fc_dim);
    weight("oe.cls.w", config.fc_dim, C);
    bias("oe.cls.b", C);

    weight("joint.cls.w", 2 * ks, C);
    bias("joint.cls.b", C);
}

Model Model::init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Model m;
    m.config = config;
    std::mt19937_64 g(seed);

    // Glorot-uniform weight matrices, zero biases. Parameters are added (and
    // drawn) in a fixed order so a seed pins every value.
    for_each_param_spec(config, [&](const std::string& name, std::int64_t rows, std::int64_t cols,
                                    bool is_bias) {
        Tensor w = Tensor::zeros({rows, cols});
        if (!is_bias) {
            const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
            for (std::int64_t i = 0; i < w.size(); ++i) w[i] = uniform_range(g, -limit, limit);
        }
        m.params.add(name, std::move(w));
    });
    return m;
}

BoundModel Model::bind(Tape& t, bool differentiable) {
    BoundModel b;
    std::map<std::string, Node> nodes;
    b.leaves.reserve(params.size());
    for (const auto& name : params.names()) {
        Tensor* value = &params.get(name);
        Node n = differentiable ? t.leaf_ref(value) : t.constant_ref(value);
        nodes.emplace(name, n);
        b.leaves.push_back(n);
    }
    auto at = [&](const std::string& name) { return nodes.at(name); };

    for (int dir = 0; dir < 2; ++dir) {
        const std::string pre = dir == 0 ? "bilstm.fwd." : "bilstm.bwd.";
        for (int gate = 0; gate < 4; ++gate) {
            b.bilstm.w[static_cast<std::size_t>(dir)][static_cast<std::size_t>(gate)] =
                at(pre + "w_" + kLstmGateNames[static_cast<std::size_t>(gate)]);
            b.bilstm.b[static_cast<std::size_t>(dir)][static_cast<std::size_t>(gate)] =
                at(pre + "b_" + kLstmGateNames[static_cast<std::size_t>(gate)]);
        }
    }
    for (int l = 0; l < kNumSynLabels; ++l) {
        b.sgcn.w[static_cast<std::size_t>(l)] = at("sgcn.w" + std::to_string(l));
        b.sgcn.b[static_cast<std::size_t>(l)] = at("sgcn.b" + std::to_string(l));
    }
    b.pool = {at("ac.pool.w_s"), at("ac.pool.u_s")};
    b.ac_cls = {at("ac.cls.w"), at("ac.cls.b")};

    b.oe.layers.resize(static_cast<std::size_t>(config.num_at_layers));
    for (int layer = 0; layer < config.num_at_layers; ++layer) {
        const std::string pre = layer_prefix(layer);
        auto& lp = b.oe.layers[static_cast<std::size_t>(layer)];
        for (int l = 0; l < kNumFineLabels; ++l) {
            lp.w[static_cast<std::size_t>(l)] = at(pre + "w" + std::to_string(l));
            lp.b[static_cast<std::size_t>(l)] = at(pre + "b" + std::to_string(l));
        }
        for (int dir = 0; dir < 2; ++dir) {
            lp.w_atten[static_cast<std::size_t>(dir)] = at(pre + "atten" + std::to_string(dir) + ".w");
            lp.a[static_cast<std::size_t>(dir)] = at(pre + "atten" + std::to_string(dir) + ".a");
        }
        lp.w_self = at(pre + "self.w");
        lp.b_self = at(pre + "self.b");
    }
    b.oe.h_dct0 = at("oe.h_dct0");
    b.oe.fc_w = at("oe.fc.w");
    b.oe.fc_b = at("oe.fc.b");
    b.oe.cls = {at("oe.cls.w"), at("oe.cls.b")};

    b.joint_cls = {at("joint.cls.w"), at("joint.cls.b")};
    return b;
}

Node encode_document(Tape& t, const Document& doc, const EmbeddingTable& table, const BoundModel& m,
                     double keep_prob, std::mt19937_64& rng, bool training) {
    Node x = t.constant(embed_tokens(doc, table));
    Node ctx = bilstm_forward(t, x, m.bilstm, keep_prob, rng, training);
    LabeledDirectedGraph g = augment_syntactic_graph(doc);
    return sgcn_forward(t, ctx, g, m.sgcn);
}

AcResult forward_ac(Tape& t, Node h_syn, const BoundModel& m) {
    return ac_forward(t, h_syn, m.pool, m.ac_cls);
}

OeResult forward_oe(Tape& t, const Document& doc, Node h_syn, const BoundModel& m) {
    return oe_forward(t, doc, h_syn, m.oe);
}

JointResult forward_joint(Tape& t, const Document& doc, Node h_syn, const BoundModel& m) {
    AttnPoolResult pooled = attention_pool(t, h_syn, m.pool);
    OeEncoding enc = oe_encode(t, doc, h_syn, m.oe);
    Node features = concat_rows(pooled.d_doc, enc.h_dct);
    Node dist = classify(t, features, m.joint_cls);
    return {dist, pooled.weights, std::move(enc.graph), std::move(enc.attention)};
}

}  // namespace docdate
