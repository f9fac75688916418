#include "cac/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cac {

namespace {

double sigmoid(double s) {
    if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

// log(1 + e^s) without overflow.
double softplus(double s) {
    return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

Matrix with_bias(const Matrix& x) {
    Matrix out(x.rows(), x.cols() + 1);
    out.leftCols(x.cols()) = x;
    out.col(x.cols()).setOnes();
    return out;
}

void check_binary(const Matrix& x, const IndexVector& y) {
    if (x.rows() < 1) throw Error(ErrorCode::EmptyDataset, "no training rows");
    if (static_cast<Eigen::Index>(y.size()) != x.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "label count differs from row count");
    }
    for (int v : y) {
        if (v != 0 && v != 1) throw Error(ErrorCode::NotBinary, "labels must be 0 or 1");
    }
}

std::optional<int> single_class(const IndexVector& y) {
    const bool all_same = std::all_of(y.begin(), y.end(), [&](int v) { return v == y.front(); });
    if (all_same) return y.front();
    return std::nullopt;
}

TrainedClassifier constant_classifier(ClassifierKind kind, int dims, int label, std::size_t n) {
    TrainedClassifier clf;
    clf.kind = kind;
    clf.weights = Vector::Zero(dims + 1);
    clf.constant_label = label;
    clf.training_loss = -static_cast<double>(n) * std::log(1.0 - kProbFloor);
    return clf;
}

}  // namespace

std::string to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::LogReg: return "logreg";
        case ClassifierKind::Ridge: return "ridge";
        case ClassifierKind::Perceptron: return "perceptron";
        case ClassifierKind::Knn: return "knn";
    }
    return "logreg";
}

ClassifierKind classifier_kind_from_string(const std::string& name) {
    if (name == "logreg") return ClassifierKind::LogReg;
    if (name == "ridge") return ClassifierKind::Ridge;
    if (name == "perceptron") return ClassifierKind::Perceptron;
    if (name == "knn") return ClassifierKind::Knn;
    throw Error(ErrorCode::InvalidSpec, "unknown classifier kind '" + name + "'");
}

void ClassifierSpec::validate() const {
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidSpec, "learning_rate must be positive");
    if (l2_penalty < 0.0) throw Error(ErrorCode::InvalidSpec, "l2_penalty must be nonnegative");
    if (epochs < 0) throw Error(ErrorCode::InvalidSpec, "epochs must be nonnegative");
    if (k_neighbors < 1) throw Error(ErrorCode::InvalidSpec, "k_neighbors must be positive");
    if (!(ridge_lambda > 0.0)) throw Error(ErrorCode::InvalidSpec, "ridge_lambda must be positive");
}

int TrainedClassifier::dims() const {
    if (kind == ClassifierKind::Knn && !constant_label) return static_cast<int>(train_features.cols());
    return static_cast<int>(weights.size()) - 1;
}

LogRegObjective logreg_objective(const Matrix& x, const IndexVector& y, const Vector& beta, double l2) {
    const int d = static_cast<int>(x.cols());
    if (beta.size() != d + 1) throw Error(ErrorCode::DimensionMismatch, "beta must have length d + 1");
    const double n = static_cast<double>(x.rows());
    const Vector scores = x * beta.head(d) + Vector::Constant(x.rows(), beta(d));
    Vector residual(x.rows());
    double loss = 0.0;
    for (int i = 0; i < x.rows(); ++i) {
        loss += softplus(scores(i)) - y[i] * scores(i);
        residual(i) = sigmoid(scores(i)) - y[i];
    }
    LogRegObjective out;
    out.gradient.resize(d + 1);
    out.gradient.head(d) = x.transpose() * residual / n + l2 * beta.head(d);
    out.gradient(d) = residual.sum() / n;
    out.value = loss / n + 0.5 * l2 * beta.head(d).squaredNorm();
    return out;
}

double log_loss(const Matrix& x, const IndexVector& y, const Vector& beta) {
    const int d = static_cast<int>(x.cols());
    double loss = 0.0;
    for (int i = 0; i < x.rows(); ++i) {
        const double p = std::clamp(sigmoid(x.row(i).dot(beta.head(d)) + beta(d)), kProbFloor, 1.0 - kProbFloor);
        loss -= y[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return loss;
}

TrainedClassifier train_logreg(const Matrix& x, const IndexVector& y, const ClassifierSpec& spec) {
    check_binary(x, y);
    spec.validate();
    const int d = static_cast<int>(x.cols());
    if (auto c = single_class(y)) return constant_classifier(ClassifierKind::LogReg, d, *c, y.size());

    Vector beta = Vector::Zero(d + 1);
    LogRegObjective cur = logreg_objective(x, y, beta, spec.l2_penalty);
    double step = spec.learning_rate;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        bool accepted = false;
        for (int tries = 0; tries < 60 && !accepted; ++tries) {
            const Vector cand = beta - step * cur.gradient;
            LogRegObjective next = logreg_objective(x, y, cand, spec.l2_penalty);
            if (next.value <= cur.value) {
                beta = cand;
                cur = std::move(next);
                accepted = true;
            } else {
                step *= 0.5;
            }
        }
        if (!accepted) break;
    }
    TrainedClassifier clf;
    clf.kind = ClassifierKind::LogReg;
    clf.weights = beta;
    clf.training_loss = log_loss(x, y, beta);
    return clf;
}

TrainedClassifier train_ridge(const Matrix& x, const IndexVector& y, const ClassifierSpec& spec) {
    check_binary(x, y);
    spec.validate();
    const int d = static_cast<int>(x.cols());
    if (auto c = single_class(y)) return constant_classifier(ClassifierKind::Ridge, d, *c, y.size());

    const Matrix xb = with_bias(x);
    Vector target(x.rows());
    for (int i = 0; i < x.rows(); ++i) target(i) = y[i] == 1 ? 1.0 : -1.0;
    Eigen::MatrixXd gram = xb.transpose() * xb;
    for (int j = 0; j < d; ++j) gram(j, j) += spec.ridge_lambda;
    TrainedClassifier clf;
    clf.kind = ClassifierKind::Ridge;
    clf.weights = gram.ldlt().solve(Eigen::VectorXd(xb.transpose() * target));
    clf.training_loss = log_loss(x, y, clf.weights);
    return clf;
}

TrainedClassifier train_perceptron(const Matrix& x, const IndexVector& y, const ClassifierSpec& spec) {
    check_binary(x, y);
    spec.validate();
    const int d = static_cast<int>(x.cols());
    if (auto c = single_class(y)) return constant_classifier(ClassifierKind::Perceptron, d, *c, y.size());

    const Matrix xb = with_bias(x);
    Vector w = Vector::Zero(d + 1);
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        int errors = 0;
        for (int i = 0; i < xb.rows(); ++i) {
            const int pred = xb.row(i).dot(w) >= 0.0 ? 1 : 0;
            if (pred != y[i]) {
                w += spec.learning_rate * (y[i] == 1 ? 1.0 : -1.0) * xb.row(i).transpose();
                ++errors;
            }
        }
        if (errors == 0) break;
    }
    TrainedClassifier clf;
    clf.kind = ClassifierKind::Perceptron;
    clf.weights = w;
    clf.training_loss = log_loss(x, y, w);
    return clf;
}

TrainedClassifier train_knn(const Matrix& x, const IndexVector& y, const ClassifierSpec& spec) {
    check_binary(x, y);
    spec.validate();
    if (auto c = single_class(y)) {
        return constant_classifier(ClassifierKind::Knn, static_cast<int>(x.cols()), *c, y.size());
    }
    TrainedClassifier clf;
    clf.kind = ClassifierKind::Knn;
    clf.train_features = x;
    clf.train_labels = y;
    clf.k_neighbors = std::min<int>(spec.k_neighbors, static_cast<int>(x.rows()));
    double loss = 0.0;
    for (int i = 0; i < x.rows(); ++i) {
        const double p = std::clamp(predict_proba(clf, x.row(i)), kProbFloor, 1.0 - kProbFloor);
        loss -= y[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    clf.training_loss = loss;
    return clf;
}

TrainedClassifier train_classifier(const Matrix& x, const IndexVector& y, const ClassifierSpec& spec) {
    switch (spec.kind) {
        case ClassifierKind::LogReg: return train_logreg(x, y, spec);
        case ClassifierKind::Ridge: return train_ridge(x, y, spec);
        case ClassifierKind::Perceptron: return train_perceptron(x, y, spec);
        case ClassifierKind::Knn: return train_knn(x, y, spec);
    }
    return train_logreg(x, y, spec);
}

double linear_score(const TrainedClassifier& clf, const Eigen::Ref<const RowVector>& x) {
    const int d = static_cast<int>(clf.weights.size()) - 1;
    if (x.size() != d) throw Error(ErrorCode::DimensionMismatch, "input width");
    return x.dot(clf.weights.head(d)) + clf.weights(d);
}

double predict_proba(const TrainedClassifier& clf, const Eigen::Ref<const RowVector>& x) {
    if (clf.constant_label) {
        if (x.size() != clf.dims()) throw Error(ErrorCode::DimensionMismatch, "input width");
        return *clf.constant_label == 1 ? 1.0 - kProbFloor : kProbFloor;
    }
    if (clf.kind != ClassifierKind::Knn) return sigmoid(linear_score(clf, x));

    if (x.size() != clf.train_features.cols()) throw Error(ErrorCode::DimensionMismatch, "input width");
    const int n = static_cast<int>(clf.train_features.rows());
    std::vector<std::pair<double, int>> dist(n);
    for (int i = 0; i < n; ++i) dist[i] = {(clf.train_features.row(i) - x).squaredNorm(), i};
    const int k = std::min(clf.k_neighbors, n);
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    int votes = 0;
    for (int i = 0; i < k; ++i) votes += clf.train_labels[dist[i].second];
    return static_cast<double>(votes) / k;
}

LogLossBounds logloss_bounds(const Matrix& x, const IndexVector& y, const Vector& beta) {
    const int d = static_cast<int>(x.cols());
    if (beta.size() != d && beta.size() != d + 1) {
        throw Error(ErrorCode::DimensionMismatch, "beta must have length d or d + 1");
    }
    check_binary(x, y);
    const double bias = beta.size() == d + 1 ? beta(d) : 0.0;
    const Vector scores = x * beta.head(d) + Vector::Constant(x.rows(), bias);

    double n_pos = 0.0, n_neg = 0.0, sum_pos = 0.0, sum_neg = 0.0, actual = 0.0, c = 0.0;
    for (int i = 0; i < x.rows(); ++i) {
        c = std::max(c, std::abs(scores(i)));
        if (y[i] == 1) {
            n_pos += 1.0;
            sum_pos += scores(i);
            actual += softplus(-scores(i));
        } else {
            n_neg += 1.0;
            sum_neg += scores(i);
            actual += softplus(scores(i));
        }
    }
    if (n_pos == 0.0 || n_neg == 0.0) throw Error(ErrorCode::OneClassOnly, "both classes required");
    const double n = n_pos + n_neg;
    // N+ * beta.mu+ and N- * beta.mu- are the class score sums.
    const double shift = 0.5 * sum_pos - 0.5 * sum_neg;
    LogLossBounds out;
    out.c = c;
    out.actual = actual;
    out.lower = n * std::log(2.0) - shift;
    out.upper = n * softplus(c) - 0.5 * n * c - shift;
    return out;
}

std::vector<TrainedClassifier> train_per_cluster(const Matrix& data, const IndexVector& labels,
                                                 const IndexVector& assignments, int k,
                                                 const ClassifierSpec& spec) {
    if (static_cast<Eigen::Index>(assignments.size()) != data.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "assignment count differs from row count");
    }
    std::vector<IndexVector> members(k);
    for (int i = 0; i < data.rows(); ++i) members.at(assignments[i]).push_back(i);
    std::vector<TrainedClassifier> out;
    out.reserve(k);
    for (int j = 0; j < k; ++j) {
        if (members[j].empty()) throw Error(ErrorCode::EmptyCluster, "cluster " + std::to_string(j));
        Matrix xj(members[j].size(), data.cols());
        IndexVector yj(members[j].size());
        for (std::size_t r = 0; r < members[j].size(); ++r) {
            xj.row(static_cast<Eigen::Index>(r)) = data.row(members[j][r]);
            yj[r] = labels[members[j][r]];
        }
        out.push_back(train_classifier(xj, yj, spec));
    }
    return out;
}

nlohmann::json to_json(const TrainedClassifier& clf) {
    nlohmann::json doc;
    doc["kind"] = to_string(clf.kind);
    doc["weights"] = std::vector<double>(clf.weights.data(), clf.weights.data() + clf.weights.size());
    doc["constant_label"] = clf.constant_label ? nlohmann::json(*clf.constant_label) : nlohmann::json();
    doc["training_loss"] = clf.training_loss;
    if (clf.kind == ClassifierKind::Knn && !clf.constant_label) {
        doc["k_neighbors"] = clf.k_neighbors;
        doc["train_rows"] = clf.train_features.rows();
        doc["train_cols"] = clf.train_features.cols();
        doc["train_features"] = std::vector<double>(clf.train_features.data(),
                                                    clf.train_features.data() + clf.train_features.size());
        doc["train_labels"] = clf.train_labels;
    }
    return doc;
}

TrainedClassifier classifier_from_json(const nlohmann::json& doc) {
    TrainedClassifier clf;
    clf.kind = classifier_kind_from_string(doc.at("kind").get<std::string>());
    const auto w = doc.at("weights").get<std::vector<double>>();
    clf.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    if (!doc.at("constant_label").is_null()) clf.constant_label = doc.at("constant_label").get<int>();
    clf.training_loss = doc.at("training_loss").get<double>();
    if (clf.kind == ClassifierKind::Knn && !clf.constant_label) {
        clf.k_neighbors = doc.at("k_neighbors").get<int>();
        const auto rows = doc.at("train_rows").get<Eigen::Index>();
        const auto cols = doc.at("train_cols").get<Eigen::Index>();
        const auto flat = doc.at("train_features").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
            throw Error(ErrorCode::ShapeMismatch, "knn training matrix size");
        }
        clf.train_features = Eigen::Map<const Matrix>(flat.data(), rows, cols);
        clf.train_labels = doc.at("train_labels").get<IndexVector>();
    }
    return clf;
}

nlohmann::json to_json(const ClassifierSpec& spec) {
    nlohmann::ordered_json doc;
    doc["kind"] = to_string(spec.kind);
    doc["learning_rate"] = spec.learning_rate;
    doc["l2_penalty"] = spec.l2_penalty;
    doc["epochs"] = spec.epochs;
    doc["k_neighbors"] = spec.k_neighbors;
    doc["ridge_lambda"] = spec.ridge_lambda;
    return doc;
}

}  // namespace cac
