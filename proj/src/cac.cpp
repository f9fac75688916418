#include "cac/cac.hpp"

#include <limits>

namespace cac {

namespace {

void check_labels(const IndexVector& labels, const Matrix& data) {
    if (static_cast<Eigen::Index>(labels.size()) != data.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "label count differs from row count");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) throw Error(ErrorCode::NotBinary, "CAC needs 0/1 labels");
    }
}

void check_cluster(const ClusterState& state, int j) {
    if (j < 0 || j >= state.k()) throw Error(ErrorCode::InvalidSpec, "cluster index out of range");
}

void check_point(const ClusterState& state, int i) {
    if (i < 0 || i >= state.points()) throw Error(ErrorCode::InvalidSpec, "point index out of range");
}

}  // namespace

ClusterState ClusterState::from_assignments(const Matrix& data, const IndexVector& labels,
                                            const IndexVector& assignments, int k, double alpha) {
    check_labels(labels, data);
    if (static_cast<Eigen::Index>(assignments.size()) != data.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "assignment count differs from row count");
    }
    if (alpha < 0.0) throw Error(ErrorCode::InvalidSpec, "alpha must be nonnegative");
    ClusterState s;
    s.assignments = assignments;
    s.alpha = alpha;
    s.size.assign(k, 0);
    s.pos_count.assign(k, 0);
    s.neg_count.assign(k, 0);
    s.mu = Matrix::Zero(k, data.cols());
    s.mu_pos = Matrix::Zero(k, data.cols());
    s.mu_neg = Matrix::Zero(k, data.cols());
    for (int i = 0; i < data.rows(); ++i) {
        const int j = assignments[i];
        if (j < 0 || j >= k) throw Error(ErrorCode::InvalidSpec, "assignment out of range");
        ++s.size[j];
        s.mu.row(j) += data.row(i);
        if (labels[i] == 1) {
            ++s.pos_count[j];
            s.mu_pos.row(j) += data.row(i);
        } else {
            ++s.neg_count[j];
            s.mu_neg.row(j) += data.row(i);
        }
    }
    for (int j = 0; j < k; ++j) {
        if (s.size[j] > 0) s.mu.row(j) /= s.size[j];
        if (s.pos_count[j] > 0) s.mu_pos.row(j) /= s.pos_count[j];
        if (s.neg_count[j] > 0) s.mu_neg.row(j) /= s.neg_count[j];
    }
    return s;
}

double ClusterState::separation(int j) const {
    return two_class(j) ? (mu_pos.row(j) - mu_neg.row(j)).squaredNorm() : 0.0;
}

bool ClusterState::can_remove(int i, const IndexVector& labels) const {
    const int p = assignments[i];
    if (size[p] < 2) return false;
    const int pos_after = pos_count[p] - (labels[i] == 1 ? 1 : 0);
    const int neg_after = neg_count[p] - (labels[i] == 1 ? 0 : 1);
    return pos_after > 0 && neg_after > 0;
}

double cluster_cost(const ClusterState& state, const Matrix& data, int j) {
    check_cluster(state, j);
    if (state.size[j] == 0) throw Error(ErrorCode::EmptyCluster, "cluster " + std::to_string(j));
    double sse = 0.0;
    for (int i = 0; i < data.rows(); ++i) {
        if (state.assignments[i] == j) sse += (data.row(i) - state.mu.row(j)).squaredNorm();
    }
    return sse - state.alpha * state.size[j] * state.separation(j);
}

double total_cost(const ClusterState& state, const Matrix& data) {
    double cost = 0.0;
    for (int i = 0; i < data.rows(); ++i) {
        cost += (data.row(i) - state.mu.row(state.assignments[i])).squaredNorm();
    }
    for (int j = 0; j < state.k(); ++j) cost -= state.alpha * state.size[j] * state.separation(j);
    return cost;
}

double gamma_plus(const ClusterState& state, const Matrix& data, const IndexVector& labels, int j, int i) {
    check_cluster(state, j);
    check_point(state, i);
    if (state.assignments[i] == j) throw Error(ErrorCode::PointAlreadyInCluster, "point already in cluster");
    const auto x = data.row(i);
    const double n = state.size[j];
    const RowVector mu_new = (n * state.mu.row(j) + x) / (n + 1.0);

    double sep_new = 0.0;
    if (labels[i] == 1) {
        if (state.neg_count[j] > 0) {
            const double np = state.pos_count[j];
            sep_new = ((np * state.mu_pos.row(j) + x) / (np + 1.0) - state.mu_neg.row(j)).squaredNorm();
        }
    } else if (state.pos_count[j] > 0) {
        const double nn = state.neg_count[j];
        sep_new = (state.mu_pos.row(j) - (nn * state.mu_neg.row(j) + x) / (nn + 1.0)).squaredNorm();
    }
    state.count_ops(5 * static_cast<std::uint64_t>(data.cols()));
    return (mu_new - x).squaredNorm() + n * (mu_new - state.mu.row(j)).squaredNorm() +
           state.alpha * n * state.separation(j) - state.alpha * (n + 1.0) * sep_new;
}

double gamma_minus(const ClusterState& state, const Matrix& data, const IndexVector& labels, int p, int i) {
    check_cluster(state, p);
    check_point(state, i);
    if (state.assignments[i] != p) throw Error(ErrorCode::IllegalMove, "point is not in the cluster");
    if (state.size[p] < 2) throw Error(ErrorCode::WouldEmptyCluster, "removal would empty the cluster");
    if (!state.can_remove(i, labels)) {
        throw Error(ErrorCode::WouldCreateOneClassCluster, "removal would leave a one-class cluster");
    }
    const auto x = data.row(i);
    const double n = state.size[p];
    const RowVector mu_new = (n * state.mu.row(p) - x) / (n - 1.0);

    double sep_new = 0.0;
    if (labels[i] == 1) {
        const double np = state.pos_count[p];
        sep_new = ((np * state.mu_pos.row(p) - x) / (np - 1.0) - state.mu_neg.row(p)).squaredNorm();
    } else {
        const double nn = state.neg_count[p];
        sep_new = (state.mu_pos.row(p) - (nn * state.mu_neg.row(p) - x) / (nn - 1.0)).squaredNorm();
    }
    state.count_ops(5 * static_cast<std::uint64_t>(data.cols()));
    return -(state.mu.row(p) - x).squaredNorm() - (n - 1.0) * (mu_new - state.mu.row(p)).squaredNorm() +
           state.alpha * n * state.separation(p) - state.alpha * (n - 1.0) * sep_new;
}

double move_delta(const ClusterState& state, const Matrix& data, const IndexVector& labels, int i, int p, int q) {
    if (p == q) return 0.0;
    return gamma_plus(state, data, labels, q, i) + gamma_minus(state, data, labels, p, i);
}

void apply_move(ClusterState& state, const Matrix& data, const IndexVector& labels, int i, int p, int q) {
    check_point(state, i);
    check_cluster(state, p);
    check_cluster(state, q);
    if (p == q || state.assignments[i] != p || !state.can_remove(i, labels)) {
        throw Error(ErrorCode::IllegalMove, "move of point " + std::to_string(i) + " from " +
                                                std::to_string(p) + " to " + std::to_string(q));
    }
    const auto x = data.row(i);
    const double np = state.size[p];
    const double nq = state.size[q];
    state.mu.row(p) = (np * state.mu.row(p) - x) / (np - 1.0);
    state.mu.row(q) = (nq * state.mu.row(q) + x) / (nq + 1.0);
    --state.size[p];
    ++state.size[q];

    Matrix& class_mu = labels[i] == 1 ? state.mu_pos : state.mu_neg;
    std::vector<int>& count = labels[i] == 1 ? state.pos_count : state.neg_count;
    const double cp = count[p];
    const double cq = count[q];
    class_mu.row(p) = (cp * class_mu.row(p) - x) / (cp - 1.0);
    class_mu.row(q) = (cq * class_mu.row(q) + x) / (cq + 1.0);
    --count[p];
    ++count[q];
    state.assignments[i] = q;
    state.count_ops(4 * static_cast<std::uint64_t>(data.cols()));
}

CacFitResult cac_fit_from(const LabeledDataset& ds, const IndexVector& initial, int k, double alpha,
                          const CacFitOptions& options) {
    if (ds.n_classes != 2) throw Error(ErrorCode::NotBinary, "CAC needs a binary dataset");
    const Matrix& data = ds.features;
    const IndexVector& labels = ds.labels;

    CacFitResult res;
    res.initial_assignments = initial;
    res.state = ClusterState::from_assignments(data, labels, initial, k, alpha);
    for (int j = 0; j < k; ++j) {
        if (res.state.size[j] == 0) throw Error(ErrorCode::InfeasibleInit, "empty cluster at initialization");
    }
    ClusterState& state = res.state;
    res.trace.push_back(total_cost(state, data));
    if (options.observer) options.observer->on_start(state);

    const int n = ds.rows();
    for (int round = 1; round <= options.max_rounds; ++round) {
        RoundStats stats;
        state.reset_ops();
        for (int i = 0; i < n; ++i) {
            if (!state.can_remove(i, labels)) continue;
            const int p = state.assignments[i];
            const double removal = gamma_minus(state, data, labels, p, i);
            int best_q = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < k; ++j) {
                double delta = 0.0;
                if (j != p) {
                    delta = gamma_plus(state, data, labels, j, i) + removal;
                    ++stats.candidates;
                }
                if (delta < best) {
                    best = delta;
                    best_q = j;
                }
            }
            if (best_q != p && best < 0.0) {
                apply_move(state, data, labels, i, p, best_q);
                ++stats.moves;
                if (options.observer) options.observer->on_move(state, {round, i, p, best_q, best});
            }
        }
        stats.vector_ops = state.vector_ops();
        if (options.resync_each_round) {
            state = ClusterState::from_assignments(data, labels, state.assignments, k, alpha);
            stats.vector_ops += static_cast<std::uint64_t>(n) * data.cols();
        }
        res.rounds.push_back(stats);
        res.total_moves += stats.moves;
        res.trace.push_back(total_cost(state, data));
        if (options.observer) options.observer->on_round(state, round, stats.moves);
        if (stats.moves == 0) break;
    }
    return res;
}

CacFitResult cac_fit(const LabeledDataset& ds, int k, double alpha, const CacFitOptions& options) {
    if (ds.n_classes != 2) throw Error(ErrorCode::NotBinary, "CAC needs a binary dataset");
    check_labels(ds.labels, ds.features);
    const KmeansResult init = kmeans(ds.features, k, options.seed, options.init);
    return cac_fit_from(ds, init.assignments, k, alpha, options);
}

int assign_cluster(const CacModel& model, const Eigen::Ref<const RowVector>& x) {
    if (model.k() == 0) throw Error(ErrorCode::UntrainedModel, "model has no centroids");
    return nearest_centroid(model.centroids, x);
}

Prediction cac_predict(const CacModel& model, const Eigen::Ref<const RowVector>& x) {
    if (model.k() == 0 || static_cast<int>(model.classifiers.size()) != model.k()) {
        throw Error(ErrorCode::UntrainedModel, "model has no trained classifiers");
    }
    const int j = assign_cluster(model, x);
    Prediction out;
    out.score = predict_proba(model.classifiers[j], x);
    out.label = out.score >= 0.5 ? 1 : 0;
    return out;
}

Vector cac_scores(const CacModel& model, const Matrix& data) {
    Vector out(data.rows());
    for (int i = 0; i < data.rows(); ++i) out(i) = cac_predict(model, data.row(i)).score;
    return out;
}

CacModel train_cac_model(const LabeledDataset& ds, int k, double alpha, const ClassifierSpec& spec,
                         const CacFitOptions& options) {
    CacFitResult fit = cac_fit(ds, k, alpha, options);
    CacModel model;
    model.centroids = fit.state.mu;
    model.alpha = alpha;
    model.trace = fit.trace;
    model.classifiers = train_per_cluster(ds.features, ds.labels, fit.state.assignments, k, spec);
    return model;
}

nlohmann::json to_json(const CacModel& model) {
    nlohmann::json doc;
    doc["format"] = "cac-model";
    doc["version"] = 1;
    doc["alpha"] = model.alpha;
    doc["k"] = model.k();
    doc["dims"] = model.centroids.cols();
    doc["centroids"] = std::vector<double>(model.centroids.data(), model.centroids.data() + model.centroids.size());
    doc["classifiers"] = nlohmann::json::array();
    for (const auto& clf : model.classifiers) doc["classifiers"].push_back(to_json(clf));
    doc["trace"] = model.trace;
    return doc;
}

CacModel cac_model_from_json(const nlohmann::json& doc) {
    if (doc.value("format", "") != "cac-model" || doc.value("version", 0) != 1) {
        throw Error(ErrorCode::SchemaMismatch, "not a version-1 CAC model document");
    }
    CacModel model;
    model.alpha = doc.at("alpha").get<double>();
    const auto k = doc.at("k").get<Eigen::Index>();
    const auto d = doc.at("dims").get<Eigen::Index>();
    const auto flat = doc.at("centroids").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != k * d) throw Error(ErrorCode::ShapeMismatch, "centroid matrix size");
    model.centroids = Eigen::Map<const Matrix>(flat.data(), k, d);
    for (const auto& c : doc.at("classifiers")) model.classifiers.push_back(classifier_from_json(c));
    model.trace = doc.at("trace").get<std::vector<double>>();
    return model;
}

}  // namespace cac
