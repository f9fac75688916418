#ifndef CAC_CAC_HPP
#define CAC_CAC_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "cac/classifiers.hpp"
#include "cac/dataset.hpp"
#include "cac/kmeans.hpp"
#include "cac/types.hpp"

#include <json.hpp>

namespace cac {

/// Mutable clustering state of the CAC descent: assignments plus, per cluster,
/// the overall, positive-class and negative-class centroids and their counts.
///
/// A cluster missing one class keeps a zero vector for that class centroid and
/// contributes no separation term until a point of the missing class joins it.
class ClusterState {
public:
    ClusterState() = default;

    /// Builds every field from scratch. Labels must be 0/1.
    static ClusterState from_assignments(const Matrix& data, const IndexVector& labels,
                                         const IndexVector& assignments, int k, double alpha);

    int k() const { return static_cast<int>(size.size()); }
    int dims() const { return static_cast<int>(mu.cols()); }
    int points() const { return static_cast<int>(assignments.size()); }

    bool two_class(int j) const { return pos_count[j] > 0 && neg_count[j] > 0; }

    /// ||mu+ - mu-||^2 for cluster j, or 0 when either class is absent.
    double separation(int j) const;

    /// Whether removing point i from its cluster leaves that cluster nonempty and two-class.
    bool can_remove(int i, const IndexVector& labels) const;

    /// Scalar lanes touched by incremental arithmetic (one per coordinate per vector pass).
    std::uint64_t vector_ops() const { return ops_; }
    void reset_ops() { ops_ = 0; }
    void count_ops(std::uint64_t n) const { ops_ += n; }

    IndexVector assignments;
    std::vector<int> size;
    std::vector<int> pos_count;
    std::vector<int> neg_count;
    Matrix mu;
    Matrix mu_pos;
    Matrix mu_neg;
    double alpha = 0.0;

private:
    mutable std::uint64_t ops_ = 0;
};

/// phi(C_j) = SSE_j - alpha * |C_j| * ||mu+_j - mu-_j||^2, evaluated from the
/// member rows (the SSE term) and the stored centroids.
double cluster_cost(const ClusterState& state, const Matrix& data, int j);

/// Sum of cluster_cost over nonempty clusters.
double total_cost(const ClusterState& state, const Matrix& data);

/// Cost change from adding point i to cluster j, in O(d).
double gamma_plus(const ClusterState& state, const Matrix& data, const IndexVector& labels, int j, int i);

/// Cost change from removing point i from its cluster p, in O(d).
double gamma_minus(const ClusterState& state, const Matrix& data, const IndexVector& labels, int p, int i);

/// Net cost change of moving point i from p to q; zero when p == q.
double move_delta(const ClusterState& state, const Matrix& data, const IndexVector& labels, int i, int p, int q);

/// Moves point i from p to q with O(d) centroid updates.
void apply_move(ClusterState& state, const Matrix& data, const IndexVector& labels, int i, int p, int q);

struct MoveEvent {
    int round = 0;
    int point = 0;
    int from = 0;
    int to = 0;
    double delta = 0.0;
};

/// Hooks into the descent; the default implementation ignores everything.
class FitObserver {
public:
    virtual ~FitObserver() = default;
    virtual void on_start(const ClusterState&) {}
    virtual void on_move(const ClusterState& /*after*/, const MoveEvent&) {}
    virtual void on_round(const ClusterState&, int /*round*/, int /*moves*/) {}
};

struct CacFitOptions {
    int max_rounds = 100;
    std::uint64_t seed = 0;
    LloydOptions init;
    /// Recompute all centroids from scratch at the end of every round.
    bool resync_each_round = true;
    FitObserver* observer = nullptr;
};

struct RoundStats {
    int moves = 0;
    std::uint64_t candidates = 0;
    std::uint64_t vector_ops = 0;
};

struct CacFitResult {
    ClusterState state;
    /// Total cost after initialization, then after every round.
    std::vector<double> trace;
    std::vector<RoundStats> rounds;
    IndexVector initial_assignments;
    int total_moves = 0;
};

/// Hartigan-style descent on the class-separation-augmented k-means cost,
/// starting from a seeded k-means clustering.
CacFitResult cac_fit(const LabeledDataset& ds, int k, double alpha, const CacFitOptions& options = {});

/// Descent from a caller-provided assignment.
CacFitResult cac_fit_from(const LabeledDataset& ds, const IndexVector& initial, int k, double alpha,
                          const CacFitOptions& options = {});

/// Deployable CAC predictor: centroids for routing and one classifier per cluster.
struct CacModel {
    Matrix centroids;
    std::vector<TrainedClassifier> classifiers;
    double alpha = 0.0;
    std::vector<double> trace;

    int k() const { return static_cast<int>(centroids.rows()); }
};

struct Prediction {
    int label = 0;
    double score = 0.0;
};

int assign_cluster(const CacModel& model, const Eigen::Ref<const RowVector>& x);
Prediction cac_predict(const CacModel& model, const Eigen::Ref<const RowVector>& x);

/// Class-1 scores for every row.
Vector cac_scores(const CacModel& model, const Matrix& data);

/// cac_fit followed by per-cluster classifier training.
CacModel train_cac_model(const LabeledDataset& ds, int k, double alpha, const ClassifierSpec& spec,
                         const CacFitOptions& options = {});

nlohmann::json to_json(const CacModel& model);
CacModel cac_model_from_json(const nlohmann::json& doc);

}  // namespace cac

#endif  // CAC_CAC_HPP
