#include <gtest/gtest.h>

#include <cmath>

#include "cac/classifiers.hpp"
#include "cac/dataset.hpp"
#include "cac/pipeline.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cac;
using cac::testing::random_labels;
using cac::testing::random_matrix;
using cac::testing::rel_err;

namespace {

double training_accuracy(const TrainedClassifier& clf, const Matrix& x, const IndexVector& y) {
    int hits = 0;
    for (int i = 0; i < x.rows(); ++i) hits += (predict_proba(clf, x.row(i)) >= 0.5 ? 1 : 0) == y[i];
    return static_cast<double>(hits) / static_cast<double>(x.rows());
}

// Rows separable by the hyperplane x0 + x1 = 0 with margin >= 0.5.
void separable(Rng& rng, int n, Matrix& x, IndexVector& y) {
    x = random_matrix(n, 2, rng);
    y.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        const double s = x(i, 0) + x(i, 1);
        const double push = s >= 0 ? 0.5 : -0.5;
        x(i, 0) += push;
        x(i, 1) += push;
        y[i] = s >= 0 ? 1 : 0;
    }
}

LabeledDataset synthetic(double ics, int natural, std::uint64_t seed, int n = 1000, double ocs = 1.0) {
    SyntheticSpec spec;
    spec.ics = ics;
    spec.ocs = ocs;
    spec.natural_clusters = natural;
    spec.n_samples = n;
    spec.seed = seed;
    return make_classification(spec);
}

}  // namespace

TEST(LogReg, InitialLossIsNLn2) {
    Rng rng(1);
    const Matrix x = random_matrix(37, 3, rng);
    const IndexVector y = random_labels(37, rng);
    EXPECT_LE(rel_err(log_loss(x, y, Vector::Zero(4)), 37.0 * std::log(2.0)), 1e-12);
    ClassifierSpec spec;
    const auto clf = train_logreg(x, y, spec);
    EXPECT_LE(clf.training_loss, 37.0 * std::log(2.0));
}

TEST(LogReg, SeparableOneDimensional) {
    Matrix x(2, 1);
    x << -1, 1;
    ClassifierSpec spec;
    spec.l2_penalty = 0.0;
    spec.epochs = 5000;
    spec.learning_rate = 1.0;
    const auto clf = train_logreg(x, {0, 1}, spec);
    EXPECT_EQ(training_accuracy(clf, x, {0, 1}), 1.0);
    EXPECT_LT(clf.training_loss, 0.01);
}

TEST(LogReg, GradientMatchesFiniteDifferences) {
    Rng rng(2);
    const Matrix x = random_matrix(30, 4, rng);
    const IndexVector y = random_labels(30, rng);
    for (int trial = 0; trial < 20; ++trial) {
        Vector beta(5);
        for (int j = 0; j < 5; ++j) beta(j) = standard_normal(rng);
        const auto obj = logreg_objective(x, y, beta, 0.01);
        for (int j = 0; j < 5; ++j) {
            const double h = 1e-5;
            Vector up = beta, dn = beta;
            up(j) += h;
            dn(j) -= h;
            const double fd = (logreg_objective(x, y, up, 0.01).value - logreg_objective(x, y, dn, 0.01).value) / (2 * h);
            EXPECT_LE(std::abs(fd - obj.gradient(j)) / std::max(1e-3, std::abs(fd)), 1e-6) << trial << "/" << j;
        }
        EXPECT_LE(rel_err(obj.value * 30.0 - 0.005 * 30.0 * beta.head(4).squaredNorm(), cac::oracle::log_loss(x, y, beta)), 1e-10);
    }
}

TEST(LogReg, LossMonotoneInEpochs) {
    Rng rng(3);
    const Matrix x = random_matrix(80, 3, rng);
    const IndexVector y = random_labels(80, rng);
    ClassifierSpec spec;
    double previous = 1e300;
    for (int epochs : {1, 2, 5, 10, 50, 200}) {
        spec.epochs = epochs;
        const double loss = train_logreg(x, y, spec).training_loss;
        EXPECT_LE(loss, previous + 1e-9);
        previous = loss;
    }
}

TEST(LogReg, NotBinary) {
    Rng rng(4);
    try {
        train_logreg(random_matrix(10, 2, rng), {0, 1, 2, 0, 1, 2, 0, 1, 2, 0}, ClassifierSpec{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotBinary);
    }
}

TEST(PredictProba, HandValues) {
    TrainedClassifier clf;
    clf.weights = Vector::Zero(3);
    EXPECT_EQ(predict_proba(clf, RowVector::Constant(2, 7.0)), 0.5);
    clf.weights << 1, -1, 0;
    RowVector x(2);
    x << 2, 1;
    EXPECT_NEAR(predict_proba(clf, x), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
    EXPECT_NEAR(predict_proba(clf, x), 0.7311, 1e-4);
    x << 1000, 0;
    EXPECT_EQ(predict_proba(clf, x), 1.0);
    EXPECT_THROW(predict_proba(clf, RowVector::Zero(3)), Error);
}

TEST(Knn, OneNeighbourReproducesTrainingLabels) {
    Rng rng(5);
    const Matrix x = random_matrix(40, 3, rng);
    const IndexVector y = random_labels(40, rng);
    ClassifierSpec spec;
    spec.kind = ClassifierKind::Knn;
    spec.k_neighbors = 1;
    const auto clf = train_classifier(x, y, spec);
    for (int i = 0; i < 40; ++i) EXPECT_EQ(predict_proba(clf, x.row(i)), static_cast<double>(y[i]));
}

TEST(Knn, VoteFraction) {
    Matrix x(4, 1);
    x << 0, 1, 2, 10;
    ClassifierSpec spec;
    spec.kind = ClassifierKind::Knn;
    spec.k_neighbors = 3;
    const auto clf = train_knn(x, {1, 0, 1, 0}, spec);
    EXPECT_NEAR(predict_proba(clf, RowVector::Constant(1, 1.0)), 2.0 / 3.0, 1e-15);
}

TEST(Perceptron, ConvergesOnSeparableData) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        Matrix x;
        IndexVector y;
        separable(rng, 200, x, y);
        ClassifierSpec spec;
        spec.kind = ClassifierKind::Perceptron;
        spec.epochs = 1000;
        const auto clf = train_classifier(x, y, spec);
        for (int i = 0; i < x.rows(); ++i) EXPECT_EQ(linear_score(clf, x.row(i)) >= 0.0 ? 1 : 0, y[i]);
    }
}

TEST(Ridge, MatchesNormalEquations) {
    Rng rng(6);
    const Matrix x = random_matrix(50, 3, rng);
    const IndexVector y = random_labels(50, rng);
    ClassifierSpec spec;
    spec.kind = ClassifierKind::Ridge;
    spec.ridge_lambda = 2.0;
    const auto clf = train_classifier(x, y, spec);
    // Stationarity: X^T (Xw - t) + lambda * [w, 0] = 0.
    Matrix xb(50, 4);
    xb << x, Vector::Ones(50);
    Vector t(50);
    for (int i = 0; i < 50; ++i) t(i) = y[i] == 1 ? 1.0 : -1.0;
    Vector g = xb.transpose() * (xb * clf.weights - t);
    g.head(3) += 2.0 * clf.weights.head(3);
    EXPECT_LT(g.norm(), 1e-9);
}

TEST(Bounds, CollapseAtZero) {
    Rng rng(7);
    const Matrix x = random_matrix(25, 3, rng);
    IndexVector y = random_labels(25, rng);
    y[0] = 0;
    y[1] = 1;
    const auto b = logloss_bounds(x, y, Vector::Zero(3));
    EXPECT_LE(rel_err(b.lower, 25.0 * std::log(2.0)), 1e-12);
    EXPECT_LE(rel_err(b.actual, 25.0 * std::log(2.0)), 1e-12);
    EXPECT_LE(rel_err(b.upper, 25.0 * std::log(2.0)), 1e-12);
    EXPECT_EQ(b.c, 0.0);
}

TEST(Bounds, SandwichOnRandomBeta) {
    Rng rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 5 + static_cast<int>(uniform_index(rng, 40));
        const int d = 1 + static_cast<int>(uniform_index(rng, 4));
        const Matrix x = random_matrix(n, d, rng);
        IndexVector y = random_labels(n, rng);
        y[0] = 0;
        y[1] = 1;
        const bool with_bias = trial % 2 == 0;
        Vector beta(with_bias ? d + 1 : d);
        const double scale = 0.1 + 3.0 * uniform01(rng);
        for (int j = 0; j < beta.size(); ++j) beta(j) = scale * standard_normal(rng);
        const auto b = logloss_bounds(x, y, beta);
        const double actual = cac::oracle::log_loss(x, y, beta);
        EXPECT_LE(rel_err(b.actual, actual), 1e-10);
        EXPECT_LE(b.lower, actual * (1.0 + 1e-12) + 1e-12) << "trial " << trial;
        EXPECT_GE(b.upper, actual * (1.0 - 1e-12) - 1e-12) << "trial " << trial;
    }
}

TEST(Bounds, SandwichAtFittedBeta) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto ds = synthetic(2.0, 1, seed, 500);
        const auto clf = train_logreg(ds.features, ds.labels, ClassifierSpec{});
        const auto b = logloss_bounds(ds.features, ds.labels, clf.weights);
        EXPECT_LE(b.lower, b.actual);
        EXPECT_LE(b.actual, b.upper);
        const double n = 500.0;
        const double gap = n * (std::log1p(std::exp(b.c)) - b.c / 2.0 - std::log(2.0));
        EXPECT_GE(gap, 0.0);
        EXPECT_LE(rel_err(b.upper - b.lower, gap), 1e-9);
    }
}

TEST(Bounds, Errors) {
    Matrix x(3, 1);
    x << 0, 1, 2;
    try {
        logloss_bounds(x, {1, 1, 1}, Vector::Ones(1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OneClassOnly);
    }
    EXPECT_THROW(logloss_bounds(x, {0, 1, 1}, Vector::Ones(3)), Error);
}

TEST(PerCluster, SingleClusterMatchesLoneClassifier) {
    Rng rng(9);
    const Matrix x = random_matrix(60, 2, rng);
    const IndexVector y = random_labels(60, rng);
    const ClassifierSpec spec;
    const auto per = train_per_cluster(x, y, IndexVector(60, 0), 1, spec);
    ASSERT_EQ(per.size(), 1u);
    EXPECT_EQ(per[0].weights, train_classifier(x, y, spec).weights);
}

TEST(PerCluster, SingleClassClusterIsConstant) {
    Matrix x(4, 1);
    x << 0, 1, 5, 6;
    const auto per = train_per_cluster(x, {1, 1, 0, 1}, {0, 0, 1, 1}, 2, ClassifierSpec{});
    ASSERT_TRUE(per[0].constant_label.has_value());
    EXPECT_EQ(predict_proba(per[0], RowVector::Constant(1, -100.0)), 1.0 - 1e-7);
    EXPECT_FALSE(per[1].constant_label.has_value());
    try {
        train_per_cluster(x, {1, 1, 0, 1}, {0, 0, 0, 0}, 2, ClassifierSpec{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyCluster);
    }
}

TEST(PerCluster, PureSeparableClustersAreFitExactly) {
    Rng rng(10);
    Matrix a, b;
    IndexVector ya, yb;
    separable(rng, 100, a, ya);
    separable(rng, 100, b, yb);
    Matrix x(200, 2);
    x << a, (b.rowwise() + RowVector::Constant(2, 6.0));
    IndexVector y = ya, assign(200, 0);
    y.insert(y.end(), yb.begin(), yb.end());
    for (int i = 100; i < 200; ++i) assign[i] = 1;
    ClassifierSpec spec;
    spec.l2_penalty = 0.0;
    spec.epochs = 3000;
    const auto per = train_per_cluster(x, y, assign, 2, spec);
    EXPECT_EQ(training_accuracy(per[0], a, ya), 1.0);
    EXPECT_EQ(training_accuracy(per[1], b.rowwise() + RowVector::Constant(2, 6.0), yb), 1.0);
}

TEST(ClusterThenPredict, SingleClusterEqualsBareClassifier) {
    const auto ds = synthetic(1.0, 2, 1);
    SplitSpec split_spec;
    split_spec.seed = 1;
    const auto data = prepare(ds, split_spec);
    const auto ctp = cluster_then_predict(data.train, data.test, 1, ClassifierSpec{}, 1);
    const auto bare = run_classifier(data, ClassifierSpec{}).report;
    EXPECT_EQ(ctp.auc, bare.auc);
    EXPECT_EQ(ctp.auprc, bare.auprc);
    EXPECT_EQ(ctp.f1, bare.f1);
    const auto again = cluster_then_predict(data.train, data.test, 3, ClassifierSpec{}, 1);
    EXPECT_EQ(cluster_then_predict(data.train, data.test, 3, ClassifierSpec{}, 1).to_json().dump(),
              again.to_json().dump());
}

TEST(ClusterThenPredict, LocalModelsHelpOnClusteredData) {
    double km = 0.0, bare = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto ds = synthetic(1.0, 3, seed, 2000, 2.0);
        SplitSpec split_spec;
        split_spec.seed = seed;
        const auto data = prepare(ds, split_spec);
        km += cluster_then_predict(data.train, data.test, 3, ClassifierSpec{}, seed).auc;
        bare += run_classifier(data, ClassifierSpec{}).report.auc;
    }
    EXPECT_GE(km, bare);
}

TEST(ClassifierJson, RoundTripEveryKind) {
    Rng rng(11);
    const Matrix x = random_matrix(30, 2, rng);
    const IndexVector y = random_labels(30, rng);
    for (auto kind : {ClassifierKind::LogReg, ClassifierKind::Ridge, ClassifierKind::Perceptron, ClassifierKind::Knn}) {
        ClassifierSpec spec;
        spec.kind = kind;
        const auto clf = train_classifier(x, y, spec);
        const auto back = classifier_from_json(nlohmann::json::parse(to_json(clf).dump()));
        EXPECT_EQ(to_json(back).dump(), to_json(clf).dump());
        for (int i = 0; i < 5; ++i) EXPECT_EQ(predict_proba(back, x.row(i)), predict_proba(clf, x.row(i)));
        EXPECT_EQ(classifier_kind_from_string(to_string(kind)), kind);
    }
}
