#ifndef CAC_DEEPCAC_HPP
#define CAC_DEEPCAC_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "cac/dataset.hpp"
#include "cac/nn.hpp"
#include "cac/types.hpp"

#include <json.hpp>

namespace cac {

/// Additive-margin softmax head on L2-normalized embeddings and weight rows.
struct AmsHead {
    Matrix weight;  // n_classes x latent
    double scale = 30.0;
    double margin = 0.35;

    int classes() const { return static_cast<int>(weight.rows()); }
    /// Weight rows scaled to unit norm.
    Matrix normalized_weight() const;
};

/// Autoencoder plus class-separation head.
struct DeepCacNet {
    nn::Mlp encoder;
    nn::Mlp decoder;
    AmsHead head;

    int input_dim() const { return encoder.input_dim(); }
    int latent_dim() const { return encoder.output_dim(); }

    /// encoder: d -> hidden... -> latent (identity at the bottleneck);
    /// decoder mirrors it back to d (identity at the output).
    static DeepCacNet create(int input_dim, const std::vector<int>& hidden, int latent, int n_classes,
                             double scale, double margin, Rng& rng);

    /// Encoder, decoder, then head parameters; matches NetGrad::flatten.
    std::vector<double*> parameters();
};

struct NetGrad {
    nn::MlpGrad encoder;
    nn::MlpGrad decoder;
    Matrix head;

    std::vector<double> flatten() const;
};

/// Weights of the three loss terms. delta keeps the cluster-SSE denominator
/// |C_j| - 1 + delta positive.
struct LossWeights {
    double alpha = 5.0;
    double beta = 20.0;
    double delta = 1.0;
};

struct LossComponents {
    /// sum ||x - D(E(x))||^2
    double reconstruction = 0.0;
    /// sum beta ||z - mu_s||^2 / (|C_s| - 1 + delta)
    double clustering = 0.0;
    /// sum AMS_i / |C_{s_i}|  (alpha not applied)
    double am_softmax = 0.0;
    /// sum AMS_i, unnormalized
    double am_softmax_raw = 0.0;
    double total = 0.0;
};

struct ForwardBackward {
    LossComponents loss;
    NetGrad grad;
};

/// Loss over a batch and its exact gradient w.r.t. encoder, decoder and head.
/// `assignments[i]` is the cluster of batch row i, `cluster_sizes` the current
/// global cluster cardinalities. Centroids are constants here.
ForwardBackward forward_backward(const DeepCacNet& net, const Matrix& batch, const IndexVector& labels,
                                 const IndexVector& assignments, const Matrix& centroids,
                                 const std::vector<int>& cluster_sizes, const LossWeights& weights);

/// Reconstruction-only loss and gradient (decoder and encoder).
ForwardBackward reconstruction_backward(const DeepCacNet& net, const Matrix& batch);

/// AM-softmax bound diagnostic for binary data. The lower bound is always
/// reported; the upper bound only when every margin-adjusted exponent is positive.
struct AmsBounds {
    double lower = 0.0;
    std::optional<double> upper;
    double actual = 0.0;
    /// The lower bound with the separation term at full weight s instead of s / 2.
    double lower_full_weight = 0.0;
};

AmsBounds ams_bounds(const Matrix& embeddings, const IndexVector& labels, const AmsHead& head);

struct PretrainOptions {
    int epochs = 50;
    double lr = 2e-3;
    int batch_size = 128;
    std::uint64_t seed = 0;
};

/// Minibatch SGD on reconstruction only (steps on the batch-mean gradient); returns the mean per-sample loss after every epoch
/// (the first entry is the loss before training).
std::vector<double> pretrain(DeepCacNet& net, const Matrix& data, const PretrainOptions& options);

struct LatentClusterState {
    Matrix centroids;
    IndexVector assignments;
    /// Online update counters.
    std::vector<int> counts;
    /// Current cluster cardinalities under `assignments`.
    std::vector<int> sizes;

    int k() const { return static_cast<int>(centroids.rows()); }
};

Matrix encode(const DeepCacNet& net, const Matrix& data);

/// Lloyd on the embeddings; counters start at the cluster sizes.
LatentClusterState init_latent_clusters(const DeepCacNet& net, const Matrix& data, int k, std::uint64_t seed);

/// Nearest-centroid reassignment of the batch rows (lowest index on ties).
void update_assignments(LatentClusterState& state, const Matrix& batch_embeddings, const IndexVector& indices);

/// For each batch row in order: mu_j += (z - mu_j) / c_j, then c_j += 1.
void update_centroids_online(LatentClusterState& state, const Matrix& batch_embeddings, const IndexVector& indices);

struct DeepCacConfig {
    std::vector<int> hidden{64};
    int latent = 32;
    int k = 3;
    LossWeights weights;
    double scale = 30.0;
    double margin = 0.35;
    double lr = 2e-3;
    int batch_size = 128;
    int pretrain_epochs = 50;
    int cluster_epochs = 50;
    int local_hidden = 30;
    double local_lr = 0.3;
    int local_epochs = 200;
    /// Validation checks without improvement before the local-network stage stops.
    int patience = 10;
    std::uint64_t seed = 0;
    /// false skips the clustering stage: autoencoder + k-means + local networks.
    bool clustering_stage = true;

    void validate() const;
};

nlohmann::json to_json(const DeepCacConfig& config);

struct DeepCacModel {
    nn::Mlp encoder;
    Matrix centroids;
    std::vector<nn::Mlp> local_nets;
    AmsHead head;
    int n_classes = 2;
    DeepCacConfig config;

    int k() const { return static_cast<int>(centroids.rows()); }
};

struct DeepCacDiagnostics {
    std::vector<double> pretrain_loss;
    /// Mean per-sample total loss per clustering-stage epoch.
    std::vector<double> cluster_loss;
    std::vector<double> val_auprc;
    /// Mean pairwise cosine between class centroids of normalized embeddings.
    double class_cosine_pretrain = 0.0;
    double class_cosine_final = 0.0;
    int empty_clusters_after_clustering = 0;
    int pruned_clusters = 0;
    int local_epochs_run = 0;
};

struct DeepCacFit {
    DeepCacModel model;
    DeepCacDiagnostics diagnostics;
    /// Cluster of every training row at the end (after pruning).
    IndexVector train_assignments;
};

/// Three stages: pretraining, alternating clustering stage, local networks.
/// `val` drives early stopping of the local networks; pass nullptr to run all epochs.
DeepCacFit deepcac_fit(const LabeledDataset& train, const LabeledDataset* val, const DeepCacConfig& config);

struct DeepCacPrediction {
    int label = 0;
    int cluster = 0;
    Vector probabilities;
};

DeepCacPrediction deepcac_predict(const DeepCacModel& model, const Eigen::Ref<const RowVector>& x);

/// Class probability rows for every input row.
Matrix deepcac_predict_proba(const DeepCacModel& model, const Matrix& data);

/// Mean pairwise cosine between class centroids of L2-normalized embeddings.
double class_centroid_cosine(const Matrix& embeddings, const IndexVector& labels, int n_classes);

nlohmann::json to_json(const DeepCacModel& model);
DeepCacModel deepcac_model_from_json(const nlohmann::json& doc);

}  // namespace cac

#endif  // CAC_DEEPCAC_HPP
