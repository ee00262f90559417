#pragma once

#include <string>
#include <vector>

#include "docdate/corpus.hpp"

namespace docdate {

// A probability vector over the contiguous year classes of a dataset.
using YearDist = std::vector<double>;

// lambda * p_ac + (1 - lambda) * p_oe. Endpoints reproduce the inputs
// exactly (no arithmetic drift at lambda 0 or 1).
YearDist ensemble_predict(const YearDist& p_ac, const YearDist& p_oe, double lambda);

// Argmax class index; ties resolve to the smallest index (= smallest year).
int argmax_class(const YearDist& dist);

struct LambdaCurvePoint {
    double lambda = 0.0;
    double accuracy = 0.0;  // percent
};

struct TuneResult {
    double lambda_star = 0.0;
    double accuracy = 0.0;  // percent, at lambda_star
    std::vector<LambdaCurvePoint> curve;
};

// Grid search over {0, step, ..., 1} (the upper endpoint is always
// included); ties resolve to the smaller lambda.
TuneResult tune_lambda(const std::vector<YearDist>& ac, const std::vector<YearDist>& oe,
                       const std::vector<int>& gold_classes, double step = 0.01);

struct ClassCount {
    int year = 0;
    int total = 0;
    int correct = 0;
};

struct EvalReport {
    int documents = 0;
    int correct = 0;
    double accuracy = 0.0;  // percent
    double mad = 0.0;       // mean |pred_year - gold_year| in years
    std::vector<ClassCount> per_class;  // by gold year, ascending
    std::vector<int> predictions;       // predicted year per document

    // Line-oriented record set, deterministic bytes.
    std::vector<std::string> to_lines() const;
};

EvalReport evaluate(const std::vector<int>& pred_years, const std::vector<int>& gold_years);

enum class BucketKey { TokenCount, TemporalMentionCount };

BucketKey bucket_key_from_name(const std::string& name);

struct BucketAccuracy {
    std::int64_t lo = 0;  // left-closed interval [lo, hi)
    std::int64_t hi = 0;
    int total = 0;
    int correct = 0;
    double accuracy = 0.0;  // percent
};

// Buckets are consecutive pairs of `edges`; a document whose key value falls
// outside every bucket is skipped; empty buckets are absent from the result.
std::vector<BucketAccuracy> evaluate_bucketed(const std::vector<Document>& docs,
                                              const std::vector<int>& pred_years,
                                              const std::vector<int>& gold_years, BucketKey key,
                                              const std::vector<std::int64_t>& edges);

struct McNemarResult {
    int b = 0;  // A correct, B wrong
    int c = 0;  // A wrong, B correct
    double statistic = 0.0;  // continuity-corrected chi-square, numerator clamped at 0
    double p_value = 1.0;    // headline: exact when b + c < 25, chi-square otherwise
    double p_chisq = 1.0;    // chi-square(1 df) upper tail at `statistic`
    double p_exact = 1.0;    // two-sided binomial, clamped at 1
    bool used_exact = false;
    bool degenerate = false;  // b + c == 0: no discordant pairs
};

McNemarResult mcnemar_test(const std::vector<int>& preds_a, const std::vector<int>& preds_b,
                           const std::vector<int>& gold);

}  // namespace docdate
