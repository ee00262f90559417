#pragma once

#include <cstdint>
#include <vector>

#include "docdate/model.hpp"

namespace docdate {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moment accumulators aligned with ParamStore order.
struct AdamState {
    AdamConfig config;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long long step = 0;

    static AdamState init(const ParamStore& params, const AdamConfig& config);
};

// Standard Adam with bias correction, in place. grads must be aligned with
// the store (same order, same shapes).
void adam_step(ParamStore& params, const std::vector<Tensor>& grads, AdamState& state);

struct TrainConfig {
    Head head = Head::Ac;
    ModelConfig model;
    double lr = 0.001;
    int epochs = 30;
    int batch_size = 32;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    Model model;  // parameters of the best-validation epoch
    std::vector<EpochMetrics> metrics;
    int best_epoch = 0;
    double best_val_accuracy = 0.0;
    std::string rng_state;  // training generator after the best epoch
};

// Mean loss and accuracy of one head over a document list, evaluation mode.
struct DatasetEval {
    double loss = 0.0;
    double accuracy = 0.0;
};

DatasetEval eval_dataset(Model& model, const EmbeddingTable& table, const std::vector<Document>& docs,
                         Head head, int start_year);

// Forward one document through the selected head on a fresh tape bound to
// `model`; returns the distribution node (and the bound model via out-param).
Node head_distribution(Tape& t, BoundModel& bound, const Document& doc, const EmbeddingTable& table,
                       const ModelConfig& config, Head head, std::mt19937_64& rng, bool training);

// Minimizes mean cross-entropy of the selected head over split.train with
// Adam, shuffling per epoch from the config seed; logs train/validation
// loss and accuracy each epoch and keeps the best-validation parameters.
// Aborts with a diagnostic naming the epoch and batch if the loss stops
// being finite.
TrainResult train(const DatasetSplit& split, const EmbeddingTable& table, const TrainConfig& config);

// As train(), but starting from an existing model (train() initializes one
// from the seed and calls this).
TrainResult run_training(Model start, const DatasetSplit& split, const EmbeddingTable& table,
                         const TrainConfig& config);

}  // namespace docdate
