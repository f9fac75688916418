#include "cac/pipeline.hpp"

#include <limits>

#include "cac/kmeans.hpp"

namespace cac {

PreparedData prepare(const LabeledDataset& ds, const SplitSpec& spec) {
    const DatasetSplit parts = split(ds, spec);
    const Standardization train = standardize(parts.train);
    return {train.data, apply_standardization(parts.val, train.mean, train.std),
            apply_standardization(parts.test, train.mean, train.std)};
}

std::vector<double> routed_scores(const Matrix& centroids, const std::vector<TrainedClassifier>& classifiers,
                                  const Matrix& data) {
    std::vector<double> out(data.rows());
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        out[i] = predict_proba(classifiers.at(nearest_centroid(centroids, data.row(i))), data.row(i));
    }
    return out;
}

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

struct CacCandidate {
    CacModel model;
    IndexVector assignments;
};

CacCandidate fit_candidate(const LabeledDataset& train, double alpha, const CacRunOptions& options) {
    CacFitOptions fit_options;
    fit_options.seed = options.seed;
    fit_options.max_rounds = options.max_rounds;
    CacFitResult fit = cac_fit(train, options.k, alpha, fit_options);
    CacCandidate c;
    c.model.centroids = fit.state.mu;
    c.model.alpha = alpha;
    c.model.trace = fit.trace;
    c.model.classifiers =
        train_per_cluster(train.features, train.labels, fit.state.assignments, options.k, options.classifier);
    c.assignments = std::move(fit.state.assignments);
    return c;
}

}  // namespace

MethodRun run_cac(const PreparedData& data, const CacRunOptions& options) {
    if (options.alphas.empty()) throw Error(ErrorCode::InvalidSpec, "no alpha candidates");
    MethodRun run;
    CacCandidate best;
    double best_score = -std::numeric_limits<double>::infinity();
    nlohmann::ordered_json selection = nlohmann::ordered_json::array();
    for (double alpha : options.alphas) {
        CacCandidate candidate = fit_candidate(data.train, alpha, options);
        if (options.alphas.size() == 1) {
            best = std::move(candidate);
            break;
        }
        const double score = auprc(to_std(cac_scores(candidate.model, data.val.features)), data.val.labels);
        selection.push_back({{"alpha", alpha}, {"val_auprc", score}});
        if (score > best_score) {
            best_score = score;
            best = std::move(candidate);
        }
    }
    run.report = evaluate_binary(to_std(cac_scores(best.model, data.test.features)), data.test.labels);
    run.report.method = "cac+" + to_string(options.classifier.kind);
    run.report.k = options.k;
    run.report.alpha = best.model.alpha;
    if (options.k >= 2) run.report.silhouette = silhouette(data.train.features, best.assignments);
    run.model = to_json(best.model);
    run.diagnostics["alpha_selection"] = selection;
    run.diagnostics["rounds"] = static_cast<int>(best.model.trace.size()) - 1;
    run.diagnostics["initial_cost"] = best.model.trace.front();
    run.diagnostics["final_cost"] = best.model.trace.back();
    return run;
}

MethodRun run_cluster_then_predict(const PreparedData& data, int k, const ClassifierSpec& spec,
                                   std::uint64_t seed) {
    const KmeansResult km = kmeans(data.train.features, k, seed);
    const auto classifiers = train_per_cluster(data.train.features, data.train.labels, km.assignments, k, spec);
    MethodRun run;
    run.report = evaluate_binary(routed_scores(km.centroids, classifiers, data.test.features), data.test.labels);
    run.report.method = "km+" + to_string(spec.kind);
    run.report.k = k;
    if (k >= 2) run.report.silhouette = silhouette(data.train.features, km.assignments);
    CacModel model;
    model.centroids = km.centroids;
    model.classifiers = classifiers;
    run.model = to_json(model);
    run.diagnostics["kmeans_iterations"] = km.iterations;
    run.diagnostics["sse"] = km.sse;
    return run;
}

EvalReport cluster_then_predict(const LabeledDataset& train, const LabeledDataset& test, int k,
                                const ClassifierSpec& spec, std::uint64_t seed) {
    PreparedData data;
    data.train = train;
    data.test = test;
    return run_cluster_then_predict(data, k, spec, seed).report;
}

MethodRun run_classifier(const PreparedData& data, const ClassifierSpec& spec) {
    const TrainedClassifier clf = train_classifier(data.train.features, data.train.labels, spec);
    std::vector<double> scores(data.test.rows());
    for (int i = 0; i < data.test.rows(); ++i) scores[i] = predict_proba(clf, data.test.features.row(i));
    MethodRun run;
    run.report = evaluate_binary(scores, data.test.labels);
    run.report.method = to_string(spec.kind);
    run.report.k = 1;
    run.model = to_json(clf);
    return run;
}

MethodRun run_deepcac(const PreparedData& data, const DeepCacConfig& config) {
    const bool has_val = data.val.rows() > 0;
    const DeepCacFit fit = deepcac_fit(data.train, has_val ? &data.val : nullptr, config);
    const Matrix probs = deepcac_predict_proba(fit.model, data.test.features);
    MethodRun run;
    run.report = evaluate_multiclass(probs, data.test.labels, data.train.n_classes);
    run.report.method = config.clustering_stage ? "deepcac" : "km-z";
    run.report.k = fit.model.k();
    if (config.clustering_stage) run.report.alpha = config.weights.alpha;
    run.model = to_json(fit.model);
    const DeepCacDiagnostics& d = fit.diagnostics;
    run.diagnostics["pretrain_loss_final"] = d.pretrain_loss.back();
    run.diagnostics["cluster_loss"] = d.cluster_loss;
    run.diagnostics["class_cosine_pretrain"] = d.class_cosine_pretrain;
    run.diagnostics["class_cosine_final"] = d.class_cosine_final;
    run.diagnostics["pruned_clusters"] = d.pruned_clusters;
    run.diagnostics["local_epochs_run"] = d.local_epochs_run;
    return run;
}

}  // namespace cac
