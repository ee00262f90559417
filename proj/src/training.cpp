#include "docdate/training.hpp"

#include <cmath>
#include <sstream>

#include "docdate/errors.hpp"
#include "docdate/rng.hpp"

namespace docdate {

namespace {

int class_of(const Document& doc, int start_year) { return doc.year - start_year; }

int argmax_index(const Tensor& row) {
    int best = 0;
    for (std::int64_t i = 1; i < row.size(); ++i)
        if (row[i] > row[best]) best = static_cast<int>(i);
    return best;
}

std::string rng_to_string(const std::mt19937_64& g) {
    std::ostringstream os;
    os << g;
    return os.str();
}

}  // namespace

AdamState AdamState::init(const ParamStore& params, const AdamConfig& config) {
    AdamState s;
    s.config = config;
    for (const auto& name : params.names()) {
        const Tensor& p = params.get(name);
        s.m.push_back(Tensor::zeros(p.shape()));
        s.v.push_back(Tensor::zeros(p.shape()));
    }
    return s;
}

void adam_step(ParamStore& params, const std::vector<Tensor>& grads, AdamState& state) {
    const auto& names = params.names();
    if (grads.size() != names.size())
        throw DimensionError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                             std::to_string(names.size()) + " parameters");
    ++state.step;
    const AdamConfig& c = state.config;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < names.size(); ++i) {
        Tensor& p = params.get(names[i]);
        const Tensor& g = grads[i];
        if (!p.same_shape(g))
            throw DimensionError("adam_step: gradient shape " + shape_str(g.shape()) +
                                 " does not match parameter '" + names[i] + "' " + shape_str(p.shape()));
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (std::int64_t j = 0; j < p.size(); ++j) {
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
        }
    }
}

void TrainConfig::validate() const {
    model.validate();
    if (!(lr >= 0.0)) throw ConfigError("lr must be nonnegative, got " + std::to_string(lr));
    if (epochs < 1) throw ConfigError("epochs must be positive, got " + std::to_string(epochs));
    if (batch_size < 1) throw ConfigError("batch_size must be positive, got " + std::to_string(batch_size));
}

Node head_distribution(Tape& t, BoundModel& bound, const Document& doc, const EmbeddingTable& table,
                       const ModelConfig& config, Head head, std::mt19937_64& rng, bool training) {
    Node h_syn = encode_document(t, doc, table, bound, config.keep_prob, rng, training);
    switch (head) {
        case Head::Ac:
            return forward_ac(t, h_syn, bound).dist;
        case Head::Oe:
            return forward_oe(t, doc, h_syn, bound).dist;
        case Head::Joint:
            return forward_joint(t, doc, h_syn, bound).dist;
    }
    throw ValueError("head_distribution: unknown head");
}

DatasetEval eval_dataset(Model& model, const EmbeddingTable& table, const std::vector<Document>& docs,
                         Head head, int start_year) {
    if (docs.empty()) return {};
    std::mt19937_64 unused(0);  // evaluation mode never draws from it
    double loss_sum = 0.0;
    std::int64_t correct = 0;
    for (const auto& doc : docs) {
        Tape t;
        BoundModel bound = model.bind(t, false);
        Node dist = head_distribution(t, bound, doc, table, model.config, head, unused, false);
        const Tensor& p = t.val(dist);
        loss_sum += t.val(cross_entropy(dist, class_of(doc, start_year)))[0];
        if (argmax_index(p) == class_of(doc, start_year)) ++correct;
    }
    const double n = static_cast<double>(docs.size());
    return {loss_sum / n, static_cast<double>(correct) / n};
}

TrainResult run_training(Model start, const DatasetSplit& split, const EmbeddingTable& table,
                         const TrainConfig& config) {
    config.validate();
    if (split.train.empty()) throw ValueError("train: empty training split");
    if (table.dim() != start.config.embed_dim)
        throw DimensionError("train: embedding table width " + std::to_string(table.dim()) +
                             " does not match embed_dim " + std::to_string(start.config.embed_dim));
    for (const auto& doc : split.train) {
        const int c = class_of(doc, split.start_year);
        if (c < 0 || c >= start.config.num_classes)
            throw ValueError("train: document '" + doc.id + "' year " + std::to_string(doc.year) +
                             " falls outside the " + std::to_string(start.config.num_classes) +
                             " configured classes from " + std::to_string(split.start_year));
    }

    Model model = std::move(start);
    AdamState opt = AdamState::init(model.params, {config.lr, 0.9, 0.999, 1e-8});
    std::mt19937_64 rng(config.seed);

    TrainResult result;
    result.model = model;  // placeholder until the first epoch completes
    result.rng_state = rng_to_string(rng);
    result.best_val_accuracy = -1.0;

    const std::size_t n_params = model.params.size();
    std::vector<std::size_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_vec(order, rng);
        std::size_t cursor = 0;
        int batch_index = 0;
        while (cursor < order.size()) {
            const std::size_t batch_end =
                std::min(order.size(), cursor + static_cast<std::size_t>(config.batch_size));
            std::vector<Tensor> grads;
            grads.reserve(n_params);
            for (const auto& name : model.params.names())
                grads.push_back(Tensor::zeros(model.params.get(name).shape()));

            for (std::size_t bi = cursor; bi < batch_end; ++bi) {
                const Document& doc = split.train[order[bi]];
                Tape t;
                BoundModel bound = model.bind(t, true);
                Node dist =
                    head_distribution(t, bound, doc, table, model.config, config.head, rng, true);
                if (!t.val(dist).all_finite())
                    throw ValueError("training diverged: non-finite distribution in epoch " +
                                     std::to_string(epoch) + ", batch " + std::to_string(batch_index) +
                                     " (document '" + doc.id + "')");
                Node loss = cross_entropy(dist, class_of(doc, split.start_year));
                if (!std::isfinite(t.val(loss)[0]))
                    throw ValueError("training diverged: non-finite loss in epoch " +
                                     std::to_string(epoch) + ", batch " + std::to_string(batch_index) +
                                     " (document '" + doc.id + "')");
                t.backward(loss);
                for (std::size_t pi = 0; pi < n_params; ++pi) {
                    const Tensor& g = t.grad(bound.leaves[pi]);
                    for (std::int64_t j = 0; j < g.size(); ++j) grads[pi][j] += g[j];
                }
            }
            const double inv = 1.0 / static_cast<double>(batch_end - cursor);
            for (auto& g : grads)
                for (std::int64_t j = 0; j < g.size(); ++j) g[j] *= inv;
            adam_step(model.params, grads, opt);
            cursor = batch_end;
            ++batch_index;
        }

        DatasetEval tr = eval_dataset(model, table, split.train, config.head, split.start_year);
        DatasetEval va = eval_dataset(model, table, split.validation, config.head, split.start_year);
        result.metrics.push_back({epoch, tr.loss, tr.accuracy, va.loss, va.accuracy});
        if (va.accuracy > result.best_val_accuracy) {
            result.best_val_accuracy = va.accuracy;
            result.best_epoch = epoch;
            result.model = model;  // deep copy of the parameter store
            result.rng_state = rng_to_string(rng);
        }
    }
    return result;
}

TrainResult train(const DatasetSplit& split, const EmbeddingTable& table, const TrainConfig& config) {
    config.validate();
    return run_training(Model::init(config.model, config.seed), split, table, config);
}

}  // namespace docdate
