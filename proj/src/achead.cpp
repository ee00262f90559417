#include "docdate/achead.hpp"

namespace docdate {

AttnPoolResult attention_pool(Tape& t, Node h_syn, const AttnPoolNodeParams& p) {
    const Tensor& hv = t.val(h_syn);
    if (hv.rank() != 2 || hv.rows() < 1)
        throw DimensionError("attention_pool: features must be n x k_syn, got " + shape_str(hv.shape()));
    Node u = tanh(matmul(h_syn, p.w_s));          // n x s
    Node scores = transpose(matmul(u, p.u_s));    // 1 x n
    Node alpha = softmax_rows(scores);            // 1 x n
    Node d = matmul(alpha, h_syn);                // 1 x k_syn
    return {d, alpha};
}

Node classify(Tape& t, Node feature_row, const ClassifierNodeParams& p) {
    const Tensor& fv = t.val(feature_row);
    if (fv.rank() != 2 || fv.rows() != 1)
        throw DimensionError("classify: expected a single feature row, got " + shape_str(fv.shape()));
    return softmax_rows(add_row_bias(matmul(feature_row, p.w), p.b));
}

AcResult ac_forward(Tape& t, Node h_syn, const AttnPoolNodeParams& pool, const ClassifierNodeParams& cls) {
    AttnPoolResult pooled = attention_pool(t, h_syn, pool);
    Node dist = classify(t, pooled.d_doc, cls);
    return {dist, pooled.weights};
}

}  // namespace docdate
