#include <doctest.h>

#include <cmath>
#include <random>

#include "docdate/ensemble_eval.hpp"
#include "docdate/rng.hpp"

using namespace docdate;

namespace {

// chi-square(1 df) upper tail by adaptive Simpson integration of the
// density, an oracle independent of the erfc-based implementation.
double chisq1_pdf(double x) { return std::exp(-x / 2.0) / std::sqrt(2.0 * M_PI * x); }

double simpson(double a, double b, int n) {
    // n even
    const double h = (b - a) / n;
    double s = chisq1_pdf(a) + chisq1_pdf(b);
    for (int i = 1; i < n; ++i) s += chisq1_pdf(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

double chisq1_upper_tail_oracle(double stat) { return simpson(stat, stat + 400.0, 200000); }

// Two-sided exact binomial p by enumerating all 2^n discordant outcomes.
double brute_force_exact_p(int b, int c) {
    const int n = b + c;
    const int m = std::min(b, c);
    long long le = 0;
    for (long long mask = 0; mask < (1LL << n); ++mask) {
        int ones = 0;
        for (int bit = 0; bit < n; ++bit) ones += (mask >> bit) & 1;
        if (ones <= m) ++le;
    }
    const double p = 2.0 * static_cast<double>(le) / static_cast<double>(1LL << n);
    return std::min(p, 1.0);
}

// Builds aligned prediction lists with the requested discordant counts plus
// `both` documents both classifiers get right.
void discordant_lists(int b, int c, int both, std::vector<int>& a, std::vector<int>& bb,
                      std::vector<int>& gold) {
    a.clear();
    bb.clear();
    gold.clear();
    for (int i = 0; i < b; ++i) {
        gold.push_back(0);
        a.push_back(0);
        bb.push_back(1);
    }
    for (int i = 0; i < c; ++i) {
        gold.push_back(0);
        a.push_back(1);
        bb.push_back(0);
    }
    for (int i = 0; i < both; ++i) {
        gold.push_back(0);
        a.push_back(0);
        bb.push_back(0);
    }
}

Document doc_with(int tokens, int mentions) {
    Document d;
    d.id = "d";
    d.year = 2000;
    d.tokens.assign(static_cast<std::size_t>(tokens), "w");
    for (int i = 0; i < mentions; ++i) d.temporal_nodes.push_back({0, NodeKind::Event});
    return d;
}

}  // namespace

TEST_CASE("ensemble_predict mixes convexly and reproduces the endpoints exactly") {
    const YearDist ac = {1.0, 0.0};
    const YearDist oe = {0.0, 1.0};
    YearDist mixed = ensemble_predict(ac, oe, 0.52);
    CHECK(mixed[0] == doctest::Approx(0.52).epsilon(1e-12));
    CHECK(mixed[1] == doctest::Approx(0.48).epsilon(1e-12));
    CHECK(mixed[0] + mixed[1] == doctest::Approx(1.0).epsilon(1e-12));

    const YearDist p = {0.1237, 0.5001, 0.3762};
    const YearDist q = {0.9, 0.0999, 0.0001};
    CHECK(ensemble_predict(p, q, 1.0) == p);
    CHECK(ensemble_predict(p, q, 0.0) == q);

    CHECK_THROWS_AS(ensemble_predict({0.5, 0.5}, {1.0}, 0.5), DimensionError);
    CHECK_THROWS_AS(ensemble_predict({}, {}, 0.5), ValueError);
    CHECK_THROWS_AS(ensemble_predict(p, q, -0.01), ValueError);
    CHECK_THROWS_AS(ensemble_predict(p, q, 1.01), ValueError);
}

TEST_CASE("ensemble output sums to one across the whole lambda range") {
    std::mt19937_64 g(3);
    for (int it = 0; it < 20; ++it) {
        YearDist a(5), b(5);
        double sa = 0.0, sb = 0.0;
        for (int i = 0; i < 5; ++i) {
            a[static_cast<std::size_t>(i)] = uniform_unit(g) + 1e-3;
            b[static_cast<std::size_t>(i)] = uniform_unit(g) + 1e-3;
            sa += a[static_cast<std::size_t>(i)];
            sb += b[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < 5; ++i) {
            a[static_cast<std::size_t>(i)] /= sa;
            b[static_cast<std::size_t>(i)] /= sb;
        }
        for (double lambda : {0.0, 0.17, 0.5, 0.99, 1.0}) {
            YearDist m = ensemble_predict(a, b, lambda);
            double s = 0.0;
            for (double v : m) s += v;
            CHECK(std::fabs(s - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("argmax ties resolve to the smallest class") {
    CHECK(argmax_class({0.2, 0.4, 0.4}) == 1);
    CHECK(argmax_class({0.5, 0.5}) == 0);
    CHECK(argmax_class({0.1, 0.2, 0.7}) == 2);
    CHECK_THROWS_AS(argmax_class({}), ValueError);
}

TEST_CASE("tune_lambda: identical heads give a constant curve and lambda 0") {
    std::vector<YearDist> heads = {{0.9, 0.1}, {0.2, 0.8}, {0.6, 0.4}};
    std::vector<int> gold = {0, 1, 0};
    TuneResult r = tune_lambda(heads, heads, gold, 0.01);
    CHECK(r.lambda_star == 0.0);
    CHECK(r.curve.size() == 101);
    CHECK(r.curve.front().lambda == 0.0);
    CHECK(r.curve.back().lambda == 1.0);
    for (const auto& pt : r.curve) CHECK(pt.accuracy == r.accuracy);
    CHECK(r.accuracy == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("tune_lambda finds an interior optimum when only a mixture is right") {
    // Gold is class 0 everywhere. Document 1 needs lambda > 3/7, document 2
    // needs lambda < 4/7 (at equality the argmax tie already favors class
    // 0), so only the middle of the grid classifies all three.
    std::vector<YearDist> ac = {{0.9, 0.1}, {0.2, 0.8}, {0.6, 0.4}};
    std::vector<YearDist> oe = {{0.2, 0.8}, {0.9, 0.1}, {0.6, 0.4}};
    std::vector<int> gold = {0, 0, 0};
    TuneResult r = tune_lambda(ac, oe, gold, 0.01);
    CHECK(r.accuracy == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(r.lambda_star > 0.42);
    CHECK(r.lambda_star < 0.58);
    // Ties resolve to the smaller lambda: the first grid point that reaches
    // full accuracy wins. 0.43 crosses 3/7 ~ 0.4286.
    CHECK(r.lambda_star == doctest::Approx(0.43).epsilon(1e-12));
    // Endpoint accuracies are both 2/3.
    CHECK(r.curve.front().accuracy == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
    CHECK(r.curve.back().accuracy == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
    CHECK(r.accuracy >= r.curve.front().accuracy);
    CHECK(r.accuracy >= r.curve.back().accuracy);
}

TEST_CASE("tune_lambda grid always ends exactly at 1") {
    std::vector<YearDist> ac = {{0.9, 0.1}};
    std::vector<YearDist> oe = {{0.1, 0.9}};
    std::vector<int> gold = {0};
    TuneResult r = tune_lambda(ac, oe, gold, 0.3);
    REQUIRE(r.curve.size() == 5);  // 0, 0.3, 0.6, 0.9, 1
    CHECK(r.curve.back().lambda == 1.0);
    TuneResult whole = tune_lambda(ac, oe, gold, 1.0);
    REQUIRE(whole.curve.size() == 2);
    CHECK(whole.curve[0].lambda == 0.0);
    CHECK(whole.curve[1].lambda == 1.0);
}

TEST_CASE("tune_lambda input validation") {
    std::vector<YearDist> one = {{1.0, 0.0}};
    CHECK_THROWS_AS(tune_lambda({}, {}, {}, 0.01), ValueError);
    CHECK_THROWS_AS(tune_lambda(one, {}, {0}, 0.01), DimensionError);
    CHECK_THROWS_AS(tune_lambda(one, one, {0}, 0.0), ValueError);
    CHECK_THROWS_AS(tune_lambda(one, one, {0}, 1.5), ValueError);
}

TEST_CASE("evaluate computes accuracy and MAD per definition") {
    EvalReport r = evaluate({1996, 1997}, {1996, 1995});
    CHECK(r.accuracy == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(r.mad == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.documents == 2);
    CHECK(r.correct == 1);

    EvalReport perfect = evaluate({1995, 1999, 2001}, {1995, 1999, 2001});
    CHECK(perfect.accuracy == 100.0);
    CHECK(perfect.mad == 0.0);

    EvalReport off = evaluate({1997, 1995}, {1995, 1997});
    CHECK(off.accuracy == 0.0);
    CHECK(off.mad == 2.0);

    CHECK_THROWS_AS(evaluate({1995}, {1995, 1996}), DimensionError);
    CHECK_THROWS_AS(evaluate({}, {}), ValueError);
}

TEST_CASE("evaluate reports per-class counts in year order") {
    EvalReport r = evaluate({1995, 1996, 1995, 1997}, {1995, 1995, 1997, 1997});
    REQUIRE(r.per_class.size() == 2);
    CHECK(r.per_class[0].year == 1995);
    CHECK(r.per_class[0].total == 2);
    CHECK(r.per_class[0].correct == 1);
    CHECK(r.per_class[1].year == 1997);
    CHECK(r.per_class[1].total == 2);
    CHECK(r.per_class[1].correct == 1);

    const auto lines = r.to_lines();
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "documents 4");
    CHECK(lines[1] == "correct 2");
    CHECK(lines[2] == "accuracy 50");
    CHECK(lines[3] == "mad 0.75");
    CHECK(lines[4] == "class 1995 total 2 correct 1");
    CHECK(lines[5] == "class 1997 total 2 correct 1");
}

TEST_CASE("evaluate_bucketed groups by key with left-closed buckets") {
    std::vector<Document> docs = {doc_with(5, 0), doc_with(10, 2), doc_with(15, 4), doc_with(25, 9)};
    std::vector<int> gold = {2000, 2000, 2000, 2000};
    std::vector<int> pred = {2000, 1999, 2000, 2000};

    SUBCASE("single bucket equals overall accuracy") {
        auto buckets = evaluate_bucketed(docs, pred, gold, BucketKey::TokenCount, {0, 100});
        REQUIRE(buckets.size() == 1);
        CHECK(buckets[0].total == 4);
        CHECK(buckets[0].accuracy == doctest::Approx(75.0).epsilon(1e-12));
    }
    SUBCASE("a document on an edge goes to the bucket it opens") {
        auto buckets = evaluate_bucketed(docs, pred, gold, BucketKey::TokenCount, {5, 10, 15, 30});
        REQUIRE(buckets.size() == 3);
        CHECK(buckets[0].lo == 5);
        CHECK(buckets[0].total == 1);  // the 5-token doc, not the 10-token one
        CHECK(buckets[1].total == 1);
        CHECK(buckets[1].correct == 0);
        CHECK(buckets[2].total == 2);
    }
    SUBCASE("empty buckets are absent; out-of-range docs are skipped") {
        auto buckets = evaluate_bucketed(docs, pred, gold, BucketKey::TemporalMentionCount, {0, 1, 6, 7});
        // mentions: 0, 2, 4, 9 -> [0,1): one; [1,6): two; [6,7): none; 9 out of range.
        REQUIRE(buckets.size() == 2);
        CHECK(buckets[0].total == 1);
        CHECK(buckets[1].total == 2);
    }
    SUBCASE("unsorted or degenerate edges are rejected") {
        CHECK_THROWS_AS(evaluate_bucketed(docs, pred, gold, BucketKey::TokenCount, {10, 5}), ValueError);
        CHECK_THROWS_AS(evaluate_bucketed(docs, pred, gold, BucketKey::TokenCount, {5, 5}), ValueError);
        CHECK_THROWS_AS(evaluate_bucketed(docs, pred, gold, BucketKey::TokenCount, {5}), ValueError);
    }
    SUBCASE("misaligned lists are rejected") {
        CHECK_THROWS_AS(evaluate_bucketed(docs, {2000}, gold, BucketKey::TokenCount, {0, 100}),
                        DimensionError);
    }
}

TEST_CASE("bucket_key_from_name") {
    CHECK(bucket_key_from_name("token_count") == BucketKey::TokenCount);
    CHECK(bucket_key_from_name("temporal_mention_count") == BucketKey::TemporalMentionCount);
    CHECK_THROWS_AS(bucket_key_from_name("length"), ConfigError);
}

TEST_CASE("mcnemar on the b=15 c=5 table") {
    std::vector<int> a, b, gold;
    discordant_lists(15, 5, 10, a, b, gold);
    McNemarResult r = mcnemar_test(a, b, gold);
    CHECK(r.b == 15);
    CHECK(r.c == 5);
    CHECK(std::fabs(r.statistic - 4.05) <= 1e-9);
    CHECK(std::fabs(r.p_chisq - chisq1_upper_tail_oracle(4.05)) <= 1e-6);
    CHECK(r.p_chisq == doctest::Approx(0.0442).epsilon(2e-3));
    // 20 discordant pairs: the headline p is the exact binomial.
    CHECK(r.used_exact);
    CHECK(r.p_value == r.p_exact);
    CHECK(std::fabs(r.p_exact - brute_force_exact_p(15, 5)) <= 1e-12);
}

TEST_CASE("mcnemar symmetry and degenerate cases") {
    std::vector<int> a, b, gold;
    discordant_lists(7, 7, 3, a, b, gold);
    McNemarResult even = mcnemar_test(a, b, gold);
    CHECK(even.statistic == 0.0);
    CHECK(even.p_value >= 0.5);
    CHECK(even.p_chisq == 1.0);

    // |b - c| = 1 is swallowed by the continuity correction.
    discordant_lists(4, 3, 0, a, b, gold);
    CHECK(mcnemar_test(a, b, gold).statistic == 0.0);

    discordant_lists(0, 0, 5, a, b, gold);
    McNemarResult deg = mcnemar_test(a, b, gold);
    CHECK(deg.degenerate);
    CHECK(deg.b == 0);
    CHECK(deg.c == 0);
    CHECK(deg.p_value == 1.0);
    CHECK(deg.statistic == 0.0);

    CHECK_THROWS_AS(mcnemar_test({1}, {1, 2}, {1, 2}), DimensionError);
}

TEST_CASE("exact binomial fallback matches brute-force enumeration up to b+c = 12") {
    for (int n = 1; n <= 12; ++n) {
        for (int b = 0; b <= n; ++b) {
            const int c = n - b;
            std::vector<int> pa, pb, gold;
            discordant_lists(b, c, 2, pa, pb, gold);
            McNemarResult r = mcnemar_test(pa, pb, gold);
            CHECK(r.used_exact);
            CHECK(std::fabs(r.p_exact - brute_force_exact_p(b, c)) <= 1e-12);
        }
    }
}

TEST_CASE("chi-square path tracks the exact binomial for 25 <= b+c <= 60") {
    std::mt19937_64 g(9);
    for (int it = 0; it < 60; ++it) {
        const int n = static_cast<int>(uniform_int(g, 25, 60));
        const int b = static_cast<int>(uniform_int(g, 0, n));
        const int c = n - b;
        std::vector<int> pa, pb, gold;
        discordant_lists(b, c, 1, pa, pb, gold);
        McNemarResult r = mcnemar_test(pa, pb, gold);
        CHECK_FALSE(r.used_exact);
        CHECK(r.p_value == r.p_chisq);
        CHECK(std::fabs(r.p_chisq - r.p_exact) <= 0.02);
    }
}
