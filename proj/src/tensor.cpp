#include "docdate/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "docdate/rng.hpp"

namespace docdate {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EMat>;
using MapC = Eigen::Map<const EMat>;

MapC cmap(const Tensor& t) { return MapC(t.data(), t.rows(), t.cols()); }
MapM mmap(Tensor& t) { return MapM(t.data(), t.rows(), t.cols()); }

void require_rank2(const Tensor& t, const char* op) {
    if (t.rank() != 2)
        throw DimensionError(std::string(op) + ": expected a rank-2 tensor, got shape " + shape_str(t.shape()));
}

}  // namespace

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << " x ";
        os << s[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), v_(std::move(values)) {
    std::int64_t n = 1;
    for (auto e : shape_) {
        if (e <= 0) throw DimensionError("tensor extent must be positive, shape " + shape_str(shape_));
        n *= e;
    }
    if (n != static_cast<std::int64_t>(v_.size()))
        throw DimensionError("value count " + std::to_string(v_.size()) + " does not match shape " + shape_str(shape_));
}

Tensor Tensor::zeros(Shape shape) {
    std::int64_t n = 1;
    for (auto e : shape) n *= e;
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

Tensor Tensor::filled(Shape shape, double v) {
    std::int64_t n = 1;
    for (auto e : shape) n *= e;
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), v));
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::row(std::vector<double> v) {
    const auto n = static_cast<std::int64_t>(v.size());
    return Tensor({1, n}, std::move(v));
}

Tensor Tensor::vec(std::vector<double> v) {
    const auto n = static_cast<std::int64_t>(v.size());
    return Tensor({n}, std::move(v));
}

Tensor Tensor::matrix(std::int64_t r, std::int64_t c, std::vector<double> v) {
    return Tensor({r, c}, std::move(v));
}

std::int64_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows(): tensor has shape " + shape_str(shape_));
    return shape_[0];
}

std::int64_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols(): tensor has shape " + shape_str(shape_));
    return shape_[1];
}

bool Tensor::all_finite() const {
    return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
}

// --- Tape ---

const Tape::Rec& Tape::rec(int id) const { return recs_[static_cast<std::size_t>(id)]; }
Tape::Rec& Tape::rec(int id) { return recs_[static_cast<std::size_t>(id)]; }

int Tape::add_leaf(Tensor owned, const Tensor* ext, bool differentiable) {
    Rec r;
    r.owned = std::move(owned);
    r.ext = ext;
    r.needs_grad = differentiable;
    recs_.push_back(std::move(r));
    return static_cast<int>(recs_.size()) - 1;
}

Node Tape::constant(Tensor v) { return Node{this, add_leaf(std::move(v), nullptr, false)}; }
Node Tape::constant_ref(const Tensor* v) { return Node{this, add_leaf(Tensor{}, v, false)}; }
Node Tape::leaf(Tensor v) { return Node{this, add_leaf(std::move(v), nullptr, true)}; }
Node Tape::leaf_ref(const Tensor* v) { return Node{this, add_leaf(Tensor{}, v, true)}; }

int Tape::add_record(Tensor value, std::vector<int> inputs, BackFn back) {
    Rec r;
    r.owned = std::move(value);
    r.inputs = std::move(inputs);
    bool ng = false;
    for (int i : r.inputs) ng = ng || rec(i).needs_grad;
    r.needs_grad = ng;
    if (ng) r.back = std::move(back);
    recs_.push_back(std::move(r));
    return static_cast<int>(recs_.size()) - 1;
}

Tensor& Tape::grad_buffer(int id) {
    Rec& r = rec(id);
    if (r.grad.size() == 0) r.grad = Tensor::zeros(r.value().shape());
    return r.grad;
}

const Tensor& Tape::grad(Node n) { return grad_buffer(n.id); }

void Tape::backward(Node loss) {
    if (loss.tape != this) throw ValueError("backward: node belongs to a different tape");
    if (backward_done_) throw ValueError("backward: tape already differentiated");
    const Tensor& lv = val(loss);
    if (!lv.is_scalar())
        throw DimensionError("backward: loss must be scalar, got shape " + shape_str(lv.shape()));
    backward_done_ = true;
    grad_buffer(loss.id)[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        Rec& r = rec(id);
        if (!r.needs_grad || r.grad.size() == 0 || !r.back) continue;
        r.back(*this, id);
    }
}

// --- ops ---

namespace {

// Accumulate helper: adds src into the grad buffer of `input` unless that
// input does not require gradients.
struct Ctx {
    Tape& t;
    int self;
    const Tensor& g() { return t.grad_buffer(self); }
    const Tensor& v(int id) { return t.value_of(id); }
    bool wants(int id) { return t.id_needs_grad(id); }
    Tensor& gbuf(int id) { return t.grad_buffer(id); }
};

Node make(Tape& t, Tensor value, std::vector<int> inputs, Tape::BackFn back) {
    return Node{&t, t.add_record(std::move(value), std::move(inputs), std::move(back))};
}

Tape& tape_of(Node a, Node b, const char* op) {
    if (!a.valid() || !b.valid()) throw ValueError(std::string(op) + ": invalid node");
    if (a.tape != b.tape) throw ValueError(std::string(op) + ": nodes from different tapes");
    return *a.tape;
}

}  // namespace

Node matmul(Node a, Node b) {
    Tape& t = tape_of(a, b, "matmul");
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    require_rank2(av, "matmul");
    require_rank2(bv, "matmul");
    if (av.cols() != bv.rows())
        throw DimensionError("matmul: inner extents do not match: " + shape_str(av.shape()) + " vs " +
                             shape_str(bv.shape()));
    Tensor out = Tensor::zeros({av.rows(), bv.cols()});
    mmap(out).noalias() = cmap(av) * cmap(bv);
    const int ia = a.id, ib = b.id;
    return make(
        t, std::move(out), {ia, ib},
        [ia, ib](Tape& tp, int self) {
            Ctx c{tp, self};
            MapC g(c.g().data(), c.g().rows(), c.g().cols());
            if (c.wants(ia)) {
                Tensor& ga = c.gbuf(ia);
                mmap(ga).noalias() += g * cmap(c.v(ib)).transpose();
            }
            if (c.wants(ib)) {
                Tensor& gb = c.gbuf(ib);
                mmap(gb).noalias() += cmap(c.v(ia)).transpose() * g;
            }
        });
}

Node transpose(Node a) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a);
    require_rank2(av, "transpose");
    Tensor out = Tensor::zeros({av.cols(), av.rows()});
    mmap(out) = cmap(av).transpose();
    const int ia = a.id;
    return make(t, std::move(out), {ia}, [ia](Tape& tp, int self) {
        Ctx c{tp, self};
        if (!c.wants(ia)) return;
        Tensor& ga = c.gbuf(ia);
        mmap(ga) += MapC(c.g().data(), c.g().rows(), c.g().cols()).transpose();
    });
}

Node reshape(Node a, Shape s) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a);
    std::int64_t n = 1;
    for (auto e : s) n *= e;
    if (n != av.size())
        throw DimensionError("reshape: size mismatch: " + shape_str(av.shape()) + " -> " + shape_str(s));
    Tensor out(s, av.values());
    const int ia = a.id;
    return make(t, std::move(out), {ia}, [ia](Tape& tp, int self) {
        Ctx c{tp, self};
        if (!c.wants(ia)) return;
        Tensor& ga = c.gbuf(ia);
        const Tensor& g = c.g();
        for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

namespace {

enum class BinOp { Add, Sub, Mul };

Node binary(Node a, Node b, BinOp op, const char* name) {
    Tape& t = tape_of(a, b, name);
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    if (!av.same_shape(bv))
        throw DimensionError(std::string(name) + ": shapes differ: " + shape_str(av.shape()) + " vs " +
                             shape_str(bv.shape()));
    Tensor out = Tensor::zeros(av.shape());
    for (std::int64_t i = 0; i < av.size(); ++i) {
        switch (op) {
            case BinOp::Add: out[i] = av[i] + bv[i]; break;
            case BinOp::Sub: out[i] = av[i] - bv[i]; break;
            case BinOp::Mul: out[i] = av[i] * bv[i]; break;
        }
    }
    const int ia = a.id, ib = b.id;
    return make(t, std::move(out), {ia, ib}, [ia, ib, op](Tape& tp, int self) {
        Ctx c{tp, self};
        const Tensor& g = c.g();
        if (c.wants(ia)) {
            Tensor& ga = c.gbuf(ia);
            if (op == BinOp::Mul) {
                const Tensor& bv2 = c.v(ib);
                for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
            } else {
                for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
        }
        if (c.wants(ib)) {
            Tensor& gb = c.gbuf(ib);
            switch (op) {
                case BinOp::Add:
                    for (std::int64_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                    break;
                case BinOp::Sub:
                    for (std::int64_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                    break;
                case BinOp::Mul: {
                    const Tensor& av2 = c.v(ia);
                    for (std::int64_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
                    break;
                }
            }
        }
    });
}

}  // namespace

Node add(Node a, Node b) { return binary(a, b, BinOp::Add, "add"); }
Node sub(Node a, Node b) { return binary(a, b, BinOp::Sub, "sub"); }
Node mul(Node a, Node b) { return binary(a, b, BinOp::Mul, "mul"); }

Node add_row_bias(Node m, Node bias) {
    Tape& t = tape_of(m, bias, "add_row_bias");
    const Tensor& mv = t.val(m);
    const Tensor& bv = t.val(bias);
    require_rank2(mv, "add_row_bias");
    const std::int64_t n = bv.rank() == 2 && bv.rows() == 1 ? bv.cols()
                         : bv.rank() == 1                   ? bv.dim(0)
                                                            : -1;
    if (n != mv.cols())
        throw DimensionError("add_row_bias: bias " + shape_str(bv.shape()) + " does not fit matrix " +
                             shape_str(mv.shape()));
    Tensor out = mv;
    for (std::int64_t r = 0; r < mv.rows(); ++r)
        for (std::int64_t c = 0; c < n; ++c) out.at(r, c) += bv[c];
    const int im = m.id, ib = bias.id;
    return make(t, std::move(out), {im, ib}, [im, ib](Tape& tp, int self) {
        Ctx c{tp, self};
        const Tensor& g = c.g();
        if (c.wants(im)) {
            Tensor& gm = c.gbuf(im);
            for (std::int64_t i = 0; i < g.size(); ++i) gm[i] += g[i];
        }
        if (c.wants(ib)) {
            Tensor& gb = c.gbuf(ib);
            const std::int64_t n2 = gb.size();
            for (std::int64_t i = 0; i < g.size(); ++i) gb[i % n2] += g[i];
        }
    });
}

namespace {

enum class UnOp { Tanh, Sigmoid, Relu };

Node unary(Node a, UnOp op) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a);
    Tensor out = Tensor::zeros(av.shape());
    for (std::int64_t i = 0; i < av.size(); ++i) {
        switch (op) {
            case UnOp::Tanh: out[i] = std::tanh(av[i]); break;
            case UnOp::Sigmoid: out[i] = 1.0 / (1.0 + std::exp(-av[i])); break;
            case UnOp::Relu: out[i] = av[i] > 0.0 ? av[i] : 0.0; break;
        }
    }
    const int ia = a.id;
    return make(t, std::move(out), {ia}, [ia, op](Tape& tp, int self) {
        Ctx c{tp, self};
        if (!c.wants(ia)) return;
        const Tensor& g = c.g();
        const Tensor& y = tp.value_of(self);
        const Tensor& x = c.v(ia);
        Tensor& ga = c.gbuf(ia);
        for (std::int64_t i = 0; i < g.size(); ++i) {
            double d = 0.0;
            switch (op) {
                case UnOp::Tanh: d = 1.0 - y[i] * y[i]; break;
                case UnOp::Sigmoid: d = y[i] * (1.0 - y[i]); break;
                case UnOp::Relu: d = x[i] > 0.0 ? 1.0 : 0.0; break;
            }
            ga[i] += g[i] * d;
        }
    });
}

}  // namespace

Node tanh(Node a) { return unary(a, UnOp::Tanh); }
Node sigmoid(Node a) { return unary(a, UnOp::Sigmoid); }
Node relu(Node a) { return unary(a, UnOp::Relu); }

Node concat_rows(Node a, Node b) {
    Tape& t = tape_of(a, b, "concat_rows");
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    require_rank2(av, "concat_rows");
    require_rank2(bv, "concat_rows");
    if (av.rows() != bv.rows())
        throw DimensionError("concat_rows: row counts differ: " + shape_str(av.shape()) + " vs " +
                             shape_str(bv.shape()));
    const std::int64_t m = av.rows(), p = av.cols(), q = bv.cols();
    Tensor out = Tensor::zeros({m, p + q});
    for (std::int64_t r = 0; r < m; ++r) {
        for (std::int64_t c = 0; c < p; ++c) out.at(r, c) = av.at(r, c);
        for (std::int64_t c = 0; c < q; ++c) out.at(r, p + c) = bv.at(r, c);
    }
    const int ia = a.id, ib = b.id;
    return make(t, std::move(out), {ia, ib}, [ia, ib, m, p, q](Tape& tp, int self) {
        Ctx c{tp, self};
        const Tensor& g = c.g();
        if (c.wants(ia)) {
            Tensor& ga = c.gbuf(ia);
            for (std::int64_t r = 0; r < m; ++r)
                for (std::int64_t cc = 0; cc < p; ++cc) ga.at(r, cc) += g.at(r, cc);
        }
        if (c.wants(ib)) {
            Tensor& gb = c.gbuf(ib);
            for (std::int64_t r = 0; r < m; ++r)
                for (std::int64_t cc = 0; cc < q; ++cc) gb.at(r, cc) += g.at(r, p + cc);
        }
    });
}

Node stack_rows(const std::vector<Node>& parts) {
    if (parts.empty()) throw DimensionError("stack_rows: no inputs");
    Tape& t = *parts[0].tape;
    std::int64_t rows = 0;
    const std::int64_t cols = t.val(parts[0]).rank() == 2 ? t.val(parts[0]).cols() : -1;
    std::vector<int> inputs;
    inputs.reserve(parts.size());
    for (Node p : parts) {
        if (p.tape != &t) throw ValueError("stack_rows: nodes from different tapes");
        const Tensor& pv = t.val(p);
        require_rank2(pv, "stack_rows");
        if (pv.cols() != cols)
            throw DimensionError("stack_rows: column mismatch: " + shape_str(pv.shape()));
        rows += pv.rows();
        inputs.push_back(p.id);
    }
    Tensor out = Tensor::zeros({rows, cols});
    std::int64_t r = 0;
    for (Node p : parts) {
        const Tensor& pv = t.val(p);
        std::copy(pv.data(), pv.data() + pv.size(), out.data() + r * cols);
        r += pv.rows();
    }
    auto ins = inputs;
    return make(t, std::move(out), std::move(inputs), [ins, cols](Tape& tp, int self) {
        Ctx c{tp, self};
        const Tensor& g = c.g();
        std::int64_t r0 = 0;
        for (int id : ins) {
            const std::int64_t nr = tp.value_of(id).rows();
            if (c.wants(id)) {
                Tensor& gi = c.gbuf(id);
                for (std::int64_t i = 0; i < nr * cols; ++i) gi[i] += g[r0 * cols + i];
            }
            r0 += nr;
        }
    });
}

Node slice_rows(Node a, std::int64_t r0, std::int64_t r1) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a);
    require_rank2(av, "slice_rows");
    if (r0 < 0 || r1 <= r0 || r1 > av.rows())
        throw DimensionError("slice_rows: range [" + std::to_string(r0) + ", " + std::to_string(r1) +
                             ") out of bounds for " + shape_str(av.shape()));
    const std::int64_t cols = av.cols();
    Tensor out = Tensor::zeros({r1 - r0, cols});
    std::copy(av.data() + r0 * cols, av.data() + r1 * cols, out.data());
    const int ia = a.id;
    return make(t, std::move(out), {ia}, [ia, r0, cols](Tape& tp, int self) {
        Ctx c{tp, self};
        if (!c.wants(ia)) return;
        const Tensor& g = c.g();
        Tensor& ga = c.gbuf(ia);
        for (std::int64_t i = 0; i < g.size(); ++i) ga[r0 * cols + i] += g[i];
    });
}

namespace {

Node softmax_impl(Node a, const Tensor* mask) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a);
    require_rank2(av, "softmax_rows");
    if (mask != nullptr && !mask->same_shape(av))
        throw DimensionError("softmax_rows: mask shape " + shape_str(mask->shape()) + " does not match " +
                             shape_str(av.shape()));
    const std::int64_t m = av.rows(), n = av.cols();
    Tensor out = Tensor::zeros({m, n});
    std::vector<double> keep;
    if (mask != nullptr) keep = mask->values();
    for (std::int64_t r = 0; r < m; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::int64_t c = 0; c < n; ++c)
            if (mask == nullptr || keep[static_cast<std::size_t>(r * n + c)] != 0.0) mx = std::max(mx, av.at(r, c));
        if (!std::isfinite(mx) && mx < 0)
            throw ValueError("softmax_rows: row " + std::to_string(r) + " is fully masked");
        double sum = 0.0;
        for (std::int64_t c = 0; c < n; ++c) {
            const bool on = mask == nullptr || keep[static_cast<std::size_t>(r * n + c)] != 0.0;
            const double e = on ? std::exp(av.at(r, c) - mx) : 0.0;
            out.at(r, c) = e;
            sum += e;
        }
        for (std::int64_t c = 0; c < n; ++c) out.at(r, c) /= sum;
    }
    const int ia = a.id;
    return make(t, std::move(out), {ia}, [ia, m, n](Tape& tp, int self) {
        Ctx c{tp, self};
        if (!c.wants(ia)) return;
        const Tensor& g = c.g();
        const Tensor& y = tp.value_of(self);
        Tensor& ga = c.gbuf(ia);
        for (std::int64_t r = 0; r < m; ++r) {
            double dot = 0.0;
            for (std::int64_t cc = 0; cc < n; ++cc) dot += g.at(r, cc) * y.at(r, cc);
            for (std::int64_t cc = 0; cc < n; ++cc) ga.at(r, cc) += y.at(r, cc) * (g.at(r, cc) - dot);
        }
    });
}

}  // namespace

Node softmax_rows(Node a) { return softmax_impl(a, nullptr); }
Node softmax_rows(Node a, const Tensor& mask) { return softmax_impl(a, &mask); }

Node dropout(Node a, double keep_prob, std::mt19937_64& rng, bool training) {
    if (!(keep_prob > 0.0) || keep_prob > 1.0)
        throw ValueError("dropout: keep_prob " + std::to_string(keep_prob) + " outside (0, 1]");
    Tape& t = *a.tape;
    const Tensor& av = t.val(a);
    if (!training || keep_prob == 1.0) {
        // identity map in eval mode
        Tensor out = av;
        const int ia = a.id;
        return make(t, std::move(out), {ia}, [ia](Tape& tp, int self) {
            Ctx c{tp, self};
            if (!c.wants(ia)) return;
            const Tensor& g = c.g();
            Tensor& ga = c.gbuf(ia);
            for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        });
    }
    auto scale = std::make_shared<std::vector<double>>(static_cast<std::size_t>(av.size()));
    Tensor out = Tensor::zeros(av.shape());
    const double inv = 1.0 / keep_prob;
    for (std::int64_t i = 0; i < av.size(); ++i) {
        const double s = uniform_unit(rng) < keep_prob ? inv : 0.0;
        (*scale)[static_cast<std::size_t>(i)] = s;
        out[i] = av[i] * s;
    }
    const int ia = a.id;
    return make(t, std::move(out), {ia}, [ia, scale](Tape& tp, int self) {
        Ctx c{tp, self};
        if (!c.wants(ia)) return;
        const Tensor& g = c.g();
        Tensor& ga = c.gbuf(ia);
        for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (*scale)[static_cast<std::size_t>(i)];
    });
}

Node cross_entropy(Node probs, std::int64_t gold) {
    Tape& t = *probs.tape;
    const Tensor& pv = t.val(probs);
    if (pv.rank() == 2 && pv.rows() != 1)
        throw DimensionError("cross_entropy: expected a single distribution, got " + shape_str(pv.shape()));
    const std::int64_t n = pv.size();
    if (gold < 0 || gold >= n)
        throw ValueError("cross_entropy: gold class " + std::to_string(gold) + " out of range [0, " +
                         std::to_string(n) + ")");
    double sum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) sum += pv[i];
    if (std::abs(sum - 1.0) > 1e-6)
        throw ValueError("cross_entropy: probabilities sum to " + std::to_string(sum) + ", not 1");
    const double p = std::max(pv[gold], 1e-12);
    Tensor out = Tensor::scalar(-std::log(p));
    const int ip = probs.id;
    return make(t, std::move(out), {ip}, [ip, gold](Tape& tp, int self) {
        Ctx c{tp, self};
        if (!c.wants(ip)) return;
        const double gl = c.g()[0];
        const double pg = std::max(tp.value_of(ip)[gold], 1e-12);
        c.gbuf(ip)[gold] += gl * (-1.0 / pg);
    });
}

Node sum_all(Node a) {
    Tape& t = *a.tape;
    const Tensor& av = t.val(a);
    double s = 0.0;
    for (std::int64_t i = 0; i < av.size(); ++i) s += av[i];
    const int ia = a.id;
    return make(t, Tensor::scalar(s), {ia}, [ia](Tape& tp, int self) {
        Ctx c{tp, self};
        if (!c.wants(ia)) return;
        const double gl = c.g()[0];
        Tensor& ga = c.gbuf(ia);
        for (std::int64_t i = 0; i < ga.size(); ++i) ga[i] += gl;
    });
}

}  // namespace docdate
