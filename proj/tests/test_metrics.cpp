#include <gtest/gtest.h>

#include <cmath>

#include "cac/metrics.hpp"
#include "test_util.hpp"

using namespace cac;

namespace {

// Exact pair enumeration.
double brute_auc(const std::vector<double>& s, const IndexVector& y) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            pairs += 1.0;
            wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    }
    return wins / pairs;
}

// Average precision from its definition: threshold at every distinct score.
double brute_ap(const std::vector<double>& s, const IndexVector& y) {
    std::vector<double> thresholds = s;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    const double pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
    double ap = 0.0, prev = 0.0;
    for (double t : thresholds) {
        double tp = 0.0, sel = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] < t) continue;
            sel += 1.0;
            tp += y[i];
        }
        ap += (tp / pos - prev) * (tp / sel);
        prev = tp / pos;
    }
    return ap;
}

void random_case(Rng& rng, int n, std::vector<double>& s, IndexVector& y, bool ties) {
    s.resize(n);
    y = cac::testing::random_labels(n, rng);
    y[0] = 0;
    y[1] = 1;
    for (auto& v : s) v = ties ? std::floor(uniform01(rng) * 5.0) / 5.0 : uniform01(rng);
}

}  // namespace

TEST(Auc, HandValues) {
    EXPECT_EQ(auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}), 0.75);
    EXPECT_EQ(auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}), 1.0);
    EXPECT_EQ(auc({0.3, 0.3, 0.3, 0.3}, {0, 1, 0, 1}), 0.5);
    try {
        auc({0.1, 0.2}, {1, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OneClassOnly);
    }
}

TEST(Auc, MatchesPairEnumerationAndInvariances) {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s;
        IndexVector y;
        random_case(rng, 3 + static_cast<int>(uniform_index(rng, 60)), s, y, trial % 2 == 0);
        const double a = auc(s, y);
        EXPECT_NEAR(a, brute_auc(s, y), 1e-12);

        std::vector<double> monotone(s.size());
        std::transform(s.begin(), s.end(), monotone.begin(), [](double v) { return std::exp(3.0 * v) - 7.0; });
        EXPECT_NEAR(auc(monotone, y), a, 1e-12);

        std::vector<int> perm(s.size());
        std::iota(perm.begin(), perm.end(), 0);
        shuffle(perm, rng);
        std::vector<double> ps(s.size());
        IndexVector py(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            ps[i] = s[perm[i]];
            py[i] = y[perm[i]];
        }
        EXPECT_NEAR(auc(ps, py), a, 1e-12);
        EXPECT_NEAR(auprc(ps, py), auprc(s, y), 1e-12);

        IndexVector flipped(y.size());
        std::transform(y.begin(), y.end(), flipped.begin(), [](int v) { return 1 - v; });
        EXPECT_NEAR(auc(s, flipped), 1.0 - a, 1e-12);
    }
}

TEST(Auprc, HandValues) {
    EXPECT_NEAR(auprc({0.9, 0.8, 0.7}, {1, 0, 1}), 5.0 / 6.0, 1e-15);
    EXPECT_EQ(auprc({0.9, 0.8, 0.1}, {1, 1, 0}), 1.0);
    // One tie group holding everything: precision = prevalence.
    EXPECT_NEAR(auprc({0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 0}), 0.25, 1e-15);
    try {
        auprc({0.1, 0.2}, {0, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoPositives);
    }
}

TEST(Auprc, MatchesThresholdDefinition) {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s;
        IndexVector y;
        random_case(rng, 3 + static_cast<int>(uniform_index(rng, 60)), s, y, trial % 2 == 1);
        EXPECT_NEAR(auprc(s, y), brute_ap(s, y), 1e-12);
    }
}

TEST(Auprc, RandomScoresGivePrevalence) {
    for (double p : {0.1, 0.3}) {
        double mean = 0.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            Rng rng(seed);
            std::vector<double> s(10000);
            IndexVector y(10000);
            for (int i = 0; i < 10000; ++i) {
                s[i] = uniform01(rng);
                y[i] = uniform01(rng) < p ? 1 : 0;
            }
            mean += auprc(s, y) / 5.0;
        }
        EXPECT_NEAR(mean, p, 0.05);
    }
}

TEST(F1, HandValues) {
    EXPECT_EQ(f1_score({1, 0, 1}, {1, 0, 1}, 2), 1.0);
    EXPECT_EQ(f1_score({0, 0, 0}, {1, 0, 1}, 2), 0.0);
    EXPECT_DOUBLE_EQ(f1_score({1, 1, 0, 0}, {1, 0, 1, 0}, 2), 0.5);
    // Three classes: per-class F1 = 1, 4/5, 0.
    EXPECT_NEAR(f1_score({0, 1, 1, 1}, {0, 1, 2, 1}, 3), (1.0 + 0.8 + 0.0) / 3.0, 1e-15);
}

TEST(Confusion, CountsAndRange) {
    const auto c = confusion_counts({0, 1, 1, 0}, {0, 1, 0, 0}, 2);
    EXPECT_EQ(c[0][0], 2);
    EXPECT_EQ(c[0][1], 1);
    EXPECT_EQ(c[1][1], 1);
    EXPECT_THROW(confusion_counts({2}, {0}, 2), Error);
}

TEST(EvalReport, BinaryCountsAndThreshold) {
    const auto r = evaluate_binary({0.5, 0.49, 0.9, 0.1}, {1, 0, 1, 1});
    EXPECT_EQ(r.n_test, 4);
    EXPECT_EQ(r.class_counts, (std::vector<int>{1, 3}));
    EXPECT_EQ(r.predicted_counts, (std::vector<int>{2, 2}));
    EXPECT_NEAR(r.f1, 2.0 * 2.0 / (2.0 * 2.0 + 0.0 + 1.0), 1e-15);
    EXPECT_EQ(r.averaging, "binary");
}

TEST(EvalReport, JsonAndCsvRoundTrip) {
    EvalReport r = evaluate_binary({0.2, 0.7, 0.6, 0.1}, {0, 1, 0, 1});
    r.dataset = "synthetic";
    r.method = "cac";
    r.k = 3;
    r.seed = 4;
    r.alpha = 0.05;
    r.silhouette = 0.125;
    const auto back = EvalReport::from_json(nlohmann::json::parse(r.to_json().dump()));
    EXPECT_EQ(back.to_json().dump(), r.to_json().dump());
    EXPECT_EQ(back.alpha, r.alpha);
    const auto header = EvalReport::csv_header();
    const auto row = r.csv_row();
    EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
    EXPECT_EQ(row.rfind("synthetic,cac,3,4,0.05,", 0), 0u);
}

TEST(EvalReport, MulticlassMacroAverage) {
    Matrix p(6, 3);
    p << 0.8, 0.1, 0.1,  //
        0.6, 0.3, 0.1,   //
        0.2, 0.7, 0.1,   //
        0.1, 0.5, 0.4,   //
        0.1, 0.2, 0.7,   //
        0.3, 0.3, 0.4;
    const IndexVector y{0, 1, 1, 2, 2, 0};
    const auto r = evaluate_multiclass(p, y, 3);
    double a = 0.0, ap = 0.0;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> s(6);
        IndexVector b(6);
        for (int i = 0; i < 6; ++i) {
            s[i] = p(i, c);
            b[i] = y[i] == c;
        }
        a += brute_auc(s, b) / 3.0;
        ap += brute_ap(s, b) / 3.0;
    }
    EXPECT_NEAR(r.auc, a, 1e-12);
    EXPECT_NEAR(r.auprc, ap, 1e-12);
    EXPECT_EQ(r.averaging, "macro-ovr");
    EXPECT_NEAR(r.f1, f1_score({0, 0, 1, 1, 2, 2}, y, 3), 1e-15);

    Matrix two(3, 2);
    two << 0.9, 0.1, 0.2, 0.8, 0.4, 0.6;
    const auto bin = evaluate_multiclass(two, {0, 1, 0}, 2);
    EXPECT_EQ(bin.auc, auc({0.1, 0.8, 0.6}, {0, 1, 0}));
    EXPECT_EQ(bin.averaging, "binary");
}
