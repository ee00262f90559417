#include "docdate/ensemble_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>

#include "docdate/errors.hpp"

namespace docdate {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double percent(int correct, int total) {
    return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

// P(X <= m) for X ~ Binomial(n, 1/2), via log terms so large n cannot
// overflow.
double binom_half_cdf(int m, int n) {
    double sum = 0.0;
    const double log_half_n = -static_cast<double>(n) * std::log(2.0);
    for (int k = 0; k <= m; ++k) {
        const double log_term = std::lgamma(static_cast<double>(n) + 1.0) -
                                std::lgamma(static_cast<double>(k) + 1.0) -
                                std::lgamma(static_cast<double>(n - k) + 1.0) + log_half_n;
        sum += std::exp(log_term);
    }
    return std::min(sum, 1.0);
}

}  // namespace

YearDist ensemble_predict(const YearDist& p_ac, const YearDist& p_oe, double lambda) {
    if (p_ac.size() != p_oe.size())
        throw DimensionError("ensemble_predict: " + std::to_string(p_ac.size()) + " vs " +
                             std::to_string(p_oe.size()) + " classes");
    if (p_ac.empty()) throw ValueError("ensemble_predict: empty distributions");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw ValueError("ensemble_predict: lambda " + std::to_string(lambda) + " outside [0, 1]");
    if (lambda == 1.0) return p_ac;
    if (lambda == 0.0) return p_oe;
    YearDist out(p_ac.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = lambda * p_ac[i] + (1.0 - lambda) * p_oe[i];
    return out;
}

int argmax_class(const YearDist& dist) {
    if (dist.empty()) throw ValueError("argmax_class: empty distribution");
    std::size_t best = 0;
    for (std::size_t i = 1; i < dist.size(); ++i)
        if (dist[i] > dist[best]) best = i;
    return static_cast<int>(best);
}

TuneResult tune_lambda(const std::vector<YearDist>& ac, const std::vector<YearDist>& oe,
                       const std::vector<int>& gold_classes, double step) {
    if (ac.empty()) throw ValueError("tune_lambda: empty validation set");
    if (ac.size() != oe.size() || ac.size() != gold_classes.size())
        throw DimensionError("tune_lambda: misaligned prediction lists (" + std::to_string(ac.size()) +
                             ", " + std::to_string(oe.size()) + ", " + std::to_string(gold_classes.size()) +
                             ")");
    if (!(step > 0.0 && step <= 1.0))
        throw ValueError("tune_lambda: grid step " + std::to_string(step) + " outside (0, 1]");

    TuneResult result;
    result.accuracy = -1.0;
    for (int i = 0;; ++i) {
        double lambda = static_cast<double>(i) * step;
        if (lambda > 1.0 + 1e-9) {
            // Make sure the upper endpoint is always part of the grid.
            if (result.curve.empty() || result.curve.back().lambda < 1.0) lambda = 1.0;
            else break;
        }
        lambda = std::min(lambda, 1.0);
        int correct = 0;
        for (std::size_t d = 0; d < ac.size(); ++d)
            if (argmax_class(ensemble_predict(ac[d], oe[d], lambda)) == gold_classes[d]) ++correct;
        const double acc = percent(correct, static_cast<int>(ac.size()));
        result.curve.push_back({lambda, acc});
        if (acc > result.accuracy) {  // strict: ties keep the smaller lambda
            result.accuracy = acc;
            result.lambda_star = lambda;
        }
        if (lambda == 1.0) break;
    }
    return result;
}

std::vector<std::string> EvalReport::to_lines() const {
    std::vector<std::string> lines;
    lines.push_back("documents " + std::to_string(documents));
    lines.push_back("correct " + std::to_string(correct));
    lines.push_back("accuracy " + fmt_double(accuracy));
    lines.push_back("mad " + fmt_double(mad));
    for (const auto& c : per_class)
        lines.push_back("class " + std::to_string(c.year) + " total " + std::to_string(c.total) +
                        " correct " + std::to_string(c.correct));
    return lines;
}

EvalReport evaluate(const std::vector<int>& pred_years, const std::vector<int>& gold_years) {
    if (pred_years.size() != gold_years.size())
        throw DimensionError("evaluate: " + std::to_string(pred_years.size()) + " predictions for " +
                             std::to_string(gold_years.size()) + " gold labels");
    if (pred_years.empty()) throw ValueError("evaluate: empty prediction list");

    EvalReport r;
    r.documents = static_cast<int>(pred_years.size());
    r.predictions = pred_years;
    std::map<int, ClassCount> per_class;
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < pred_years.size(); ++i) {
        auto& c = per_class[gold_years[i]];
        c.year = gold_years[i];
        ++c.total;
        if (pred_years[i] == gold_years[i]) {
            ++r.correct;
            ++c.correct;
        }
        abs_sum += std::abs(pred_years[i] - gold_years[i]);
    }
    r.accuracy = percent(r.correct, r.documents);
    r.mad = abs_sum / static_cast<double>(r.documents);
    for (const auto& [year, c] : per_class) r.per_class.push_back(c);
    return r;
}

BucketKey bucket_key_from_name(const std::string& name) {
    if (name == "token_count") return BucketKey::TokenCount;
    if (name == "temporal_mention_count") return BucketKey::TemporalMentionCount;
    throw ConfigError("unknown bucket key '" + name +
                      "' (expected token_count or temporal_mention_count)");
}

std::vector<BucketAccuracy> evaluate_bucketed(const std::vector<Document>& docs,
                                              const std::vector<int>& pred_years,
                                              const std::vector<int>& gold_years, BucketKey key,
                                              const std::vector<std::int64_t>& edges) {
    if (docs.size() != pred_years.size() || docs.size() != gold_years.size())
        throw DimensionError("evaluate_bucketed: misaligned lists (" + std::to_string(docs.size()) + ", " +
                             std::to_string(pred_years.size()) + ", " + std::to_string(gold_years.size()) +
                             ")");
    if (edges.size() < 2) throw ValueError("evaluate_bucketed: need at least two bucket edges");
    for (std::size_t i = 1; i < edges.size(); ++i)
        if (edges[i] <= edges[i - 1])
            throw ValueError("evaluate_bucketed: bucket edges must be strictly increasing");

    std::vector<BucketAccuracy> buckets(edges.size() - 1);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        buckets[i].lo = edges[i];
        buckets[i].hi = edges[i + 1];
    }
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const std::int64_t value = key == BucketKey::TokenCount
                                       ? docs[d].n_tokens()
                                       : static_cast<std::int64_t>(docs[d].temporal_nodes.size());
        // Left-closed assignment: bucket i holds [edges[i], edges[i+1]).
        for (auto& bucket : buckets) {
            if (value >= bucket.lo && value < bucket.hi) {
                ++bucket.total;
                if (pred_years[d] == gold_years[d]) ++bucket.correct;
                break;
            }
        }
    }
    std::vector<BucketAccuracy> out;
    for (auto& bucket : buckets) {
        if (bucket.total == 0) continue;  // empty buckets are absent
        bucket.accuracy = percent(bucket.correct, bucket.total);
        out.push_back(bucket);
    }
    return out;
}

McNemarResult mcnemar_test(const std::vector<int>& preds_a, const std::vector<int>& preds_b,
                           const std::vector<int>& gold) {
    if (preds_a.size() != preds_b.size() || preds_a.size() != gold.size())
        throw DimensionError("mcnemar_test: misaligned lists (" + std::to_string(preds_a.size()) + ", " +
                             std::to_string(preds_b.size()) + ", " + std::to_string(gold.size()) + ")");

    McNemarResult r;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool a_ok = preds_a[i] == gold[i];
        const bool b_ok = preds_b[i] == gold[i];
        if (a_ok && !b_ok) ++r.b;
        if (!a_ok && b_ok) ++r.c;
    }
    const int n = r.b + r.c;
    if (n == 0) {
        r.degenerate = true;
        return r;  // statistic 0, every p-value 1
    }
    const double corrected = std::max(std::abs(static_cast<double>(r.b - r.c)) - 1.0, 0.0);
    r.statistic = corrected * corrected / static_cast<double>(n);
    // Upper tail of chi-square with 1 df: P(X > s) = erfc(sqrt(s / 2)).
    r.p_chisq = std::erfc(std::sqrt(r.statistic / 2.0));
    r.p_exact = std::min(1.0, 2.0 * binom_half_cdf(std::min(r.b, r.c), n));
    r.used_exact = n < 25;
    r.p_value = r.used_exact ? r.p_exact : r.p_chisq;
    return r;
}

}  // namespace docdate
