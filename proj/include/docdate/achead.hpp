#pragma once

#include "docdate/tensor.hpp"

namespace docdate {

struct AttnPoolNodeParams {
    Node w_s;  // k_syn x s projection
    Node u_s;  // s x 1 context vector
};

struct AttnPoolResult {
    Node d_doc;    // 1 x k_syn pooled document vector
    Node weights;  // 1 x n attention over tokens
};

// u_t = tanh(h_t W_s); alpha = softmax_t(u_t . u_s); d = sum_t alpha_t h_t.
AttnPoolResult attention_pool(Tape& t, Node h_syn, const AttnPoolNodeParams& p);

struct ClassifierNodeParams {
    Node w;  // feature_width x num_classes
    Node b;  // 1 x num_classes
};

// softmax(x W + b) over a single feature row.
Node classify(Tape& t, Node feature_row, const ClassifierNodeParams& p);

struct AcResult {
    Node dist;     // 1 x num_classes year distribution
    Node weights;  // 1 x n attention, exactly the values used in the forward
};

AcResult ac_forward(Tape& t, Node h_syn, const AttnPoolNodeParams& pool, const ClassifierNodeParams& cls);

}  // namespace docdate
