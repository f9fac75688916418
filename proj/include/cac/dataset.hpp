#ifndef CAC_DATASET_HPP
#define CAC_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cac/types.hpp"

namespace cac {

/// N x d feature matrix with integer labels in [0, n_classes).
struct LabeledDataset {
    Matrix features;
    IndexVector labels;
    std::vector<std::string> feature_names;
    /// Original label strings in encoding order (empty for generated data).
    std::vector<std::string> class_names;
    int n_classes = 2;

    int rows() const { return static_cast<int>(features.rows()); }
    int dims() const { return static_cast<int>(features.cols()); }

    /// Throws if any invariant (finite values, label range, N >= 1, d >= 1) is broken.
    void validate() const;

    /// Rows selected by `idx`, in that order.
    LabeledDataset subset(const IndexVector& idx) const;

    int count_label(int label) const;
};

/// Knobs for the synthetic benchmark generator.
struct SyntheticSpec {
    int n_samples = 2000;
    int n_features = 10;
    int natural_clusters = 2;
    /// Distance between the two class centroids inside each natural cluster.
    double ics = 1.0;
    /// Cluster-center spacing; adjacent centers sit 2 * ocs apart.
    double ocs = 2.0;
    std::uint64_t seed = 0;
    /// Relabel each point by XOR with the side of a second, orthogonal hyperplane
    /// through its cluster center, producing a checkerboard that no linear model fits.
    bool nonlinear_labels = false;
};

struct SplitSpec {
    double train_frac = 0.57;
    double val_frac = 0.18;
    double test_frac = 0.25;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct SplitIndices {
    IndexVector train;
    IndexVector val;
    IndexVector test;
};

struct DatasetSplit {
    LabeledDataset train;
    LabeledDataset val;
    LabeledDataset test;
};

struct Standardization {
    LabeledDataset data;
    Vector mean;
    Vector std;
};

/// Reads a CSV file. Without a header, `label_column` must be a 0-based column index.
/// Labels are re-encoded to 0..B-1 in order of first appearance.
LabeledDataset load_csv(const std::string& path, const std::string& label_column,
                        bool has_header = true);

/// Parses CSV text already in memory; same contract as load_csv.
LabeledDataset parse_csv(const std::string& text, const std::string& label_column,
                         bool has_header = true);

/// Writes features followed by an integer label column named `y`.
void write_csv(const LabeledDataset& ds, const std::string& path);
std::string to_csv(const LabeledDataset& ds);

/// Zero-mean, unit population variance per feature. Columns with std < 1e-12
/// are centered only and report std = 1.
Standardization standardize(const LabeledDataset& ds);

/// Applies previously fitted statistics to held-out data.
LabeledDataset apply_standardization(const LabeledDataset& ds, const Vector& mean,
                                     const Vector& std);

SplitIndices split_indices(const LabeledDataset& ds, const SplitSpec& spec);
DatasetSplit split(const LabeledDataset& ds, const SplitSpec& spec);

LabeledDataset make_classification(const SyntheticSpec& spec);

/// Which natural cluster each generated row came from (same seed, same order).
IndexVector natural_cluster_membership(const SyntheticSpec& spec);

}  // namespace cac

#endif  // CAC_DATASET_HPP
