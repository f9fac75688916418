#ifndef CAC_PIPELINE_HPP
#define CAC_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cac/cac.hpp"
#include "cac/classifiers.hpp"
#include "cac/dataset.hpp"
#include "cac/deepcac.hpp"
#include "cac/metrics.hpp"

#include <json.hpp>

namespace cac {

/// Train/val/test split, each standardized with the training statistics.
struct PreparedData {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;
};

PreparedData prepare(const LabeledDataset& ds, const SplitSpec& spec);

/// Result of one method on one prepared dataset.
struct MethodRun {
    EvalReport report;
    nlohmann::json model;
    /// Method-specific extras (selection scores, losses, ...).
    nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();
};

struct CacRunOptions {
    int k = 2;
    /// Candidates scored on validation AUPRC; a single entry skips selection.
    std::vector<double> alphas{0.01, 0.05, 0.5, 2.5, 3.0};
    ClassifierSpec classifier;
    std::uint64_t seed = 0;
    int max_rounds = 100;
};

/// CAC + X. Picks alpha by validation AUPRC (first best on ties), reports on test.
MethodRun run_cac(const PreparedData& data, const CacRunOptions& options);

/// KM + X: Lloyd on the training features, then one classifier per cluster.
MethodRun run_cluster_then_predict(const PreparedData& data, int k, const ClassifierSpec& spec,
                                   std::uint64_t seed);

/// KM + X on an explicit train/test pair; returns the test report.
EvalReport cluster_then_predict(const LabeledDataset& train, const LabeledDataset& test, int k,
                                const ClassifierSpec& spec, std::uint64_t seed);

/// A single classifier on all training rows.
MethodRun run_classifier(const PreparedData& data, const ClassifierSpec& spec);

/// DeepCAC, or KM-Z when config.clustering_stage is false.
MethodRun run_deepcac(const PreparedData& data, const DeepCacConfig& config);

/// Test scores of a KM + X model built from the given centroids and per-cluster classifiers.
std::vector<double> routed_scores(const Matrix& centroids, const std::vector<TrainedClassifier>& classifiers,
                                  const Matrix& data);

}  // namespace cac

#endif  // CAC_PIPELINE_HPP
