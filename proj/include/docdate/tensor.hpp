#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "docdate/errors.hpp"

namespace docdate {

using Shape = std::vector<std::int64_t>;

std::string shape_str(const Shape& s);

// Dense row-major tensor of 64-bit floats. Rank 1 and 2 cover everything in
// this project; scalars are shape {1}.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> values);

    static Tensor zeros(Shape shape);
    static Tensor filled(Shape shape, double v);
    static Tensor scalar(double v);
    static Tensor row(std::vector<double> v);                            // 1 x n
    static Tensor vec(std::vector<double> v);                            // rank 1
    static Tensor matrix(std::int64_t r, std::int64_t c, std::vector<double> v);

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    std::int64_t dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    std::int64_t size() const { return static_cast<std::int64_t>(v_.size()); }
    bool is_scalar() const { return v_.size() == 1; }

    std::int64_t rows() const;  // rank-2 only
    std::int64_t cols() const;

    double& at(std::int64_t r, std::int64_t c) { return v_[static_cast<std::size_t>(r * cols() + c)]; }
    double at(std::int64_t r, std::int64_t c) const { return v_[static_cast<std::size_t>(r * cols() + c)]; }
    double& operator[](std::int64_t i) { return v_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return v_[static_cast<std::size_t>(i)]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;

private:
    Shape shape_;
    std::vector<double> v_;
};

class Tape;

// Handle to a recorded tensor on a tape.
struct Node {
    Tape* tape = nullptr;
    int id = -1;
    bool valid() const { return tape != nullptr && id >= 0; }
};

// Eager-evaluated operation record for reverse-mode differentiation. Values
// are computed when an op is recorded; backward() replays the records in
// reverse, which is a valid topological order because inputs always precede
// their consumers. A tape and its nodes are a single-threaded unit of work.
class Tape {
public:
    using BackFn = std::function<void(Tape&, int)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaves. _ref variants keep a pointer to caller-owned storage, which must
    // outlive the tape and stay constant while the tape is alive.
    Node constant(Tensor v);
    Node constant_ref(const Tensor* v);
    Node leaf(Tensor v);            // differentiable
    Node leaf_ref(const Tensor* v); // differentiable, external storage

    const Tensor& val(Node n) const { return rec(n.id).value(); }
    bool needs_grad(Node n) const { return rec(n.id).needs_grad; }

    // Gradient of a node after backward(); zeros of the value's shape when the
    // node never received one.
    const Tensor& grad(Node n);

    // Reverse accumulation from a scalar loss. One shot per tape.
    void backward(Node loss);

    std::size_t node_count() const { return recs_.size(); }

    // --- op-implementation surface ---
    int add_record(Tensor value, std::vector<int> inputs, BackFn back);
    int add_leaf(Tensor owned, const Tensor* ext, bool differentiable);
    const Tensor& value_of(int id) const { return rec(id).value(); }
    bool id_needs_grad(int id) const { return rec(id).needs_grad; }
    // Lazily allocated zero-initialized gradient buffer.
    Tensor& grad_buffer(int id);
    bool has_grad(int id) const { return rec(id).grad.size() > 0; }

private:
    struct Rec {
        Tensor owned;
        const Tensor* ext = nullptr;
        Tensor grad;
        std::vector<int> inputs;
        BackFn back;
        bool needs_grad = false;
        const Tensor& value() const { return ext != nullptr ? *ext : owned; }
    };

    const Rec& rec(int id) const;
    Rec& rec(int id);

    // deque: references returned by val()/grad() stay valid as records are
    // appended, unlike vector growth.
    std::deque<Rec> recs_;
    bool backward_done_ = false;
};

// --- recorded operations ---

// C = A(m x k) * B(k x n); gradients dA = dC B^T, dB = A^T dC.
Node matmul(Node a, Node b);
Node transpose(Node a);
Node reshape(Node a, Shape s);

Node add(Node a, Node b);  // equal shapes; no implicit broadcasting
Node sub(Node a, Node b);
Node mul(Node a, Node b);  // elementwise
// The one sanctioned broadcast: add a bias vector to every row of a matrix.
Node add_row_bias(Node m, Node bias);

Node tanh(Node a);
Node sigmoid(Node a);
Node relu(Node a);  // subgradient at 0 is 0

Node concat_rows(Node a, Node b);                  // (m x p, m x q) -> m x (p+q)
Node stack_rows(const std::vector<Node>& parts);   // vertical stack of rank-2 blocks
Node slice_rows(Node a, std::int64_t r0, std::int64_t r1);  // rows [r0, r1)

// Row-wise softmax, stabilized by per-row max subtraction. Masked entries
// (mask value 0) are exactly 0 in the output; a fully masked row is an error.
Node softmax_rows(Node a);
Node softmax_rows(Node a, const Tensor& mask);

// Inverted dropout: kept entries scale by 1/keep_prob so eval needs no
// rescaling; eval mode is the identity.
Node dropout(Node a, double keep_prob, std::mt19937_64& rng, bool training);

// -ln(probs[gold]) with probs clamped at 1e-12 before the log.
Node cross_entropy(Node probs, std::int64_t gold);

Node sum_all(Node a);

}  // namespace docdate
