#ifndef CAC_KMEANS_HPP
#define CAC_KMEANS_HPP

#include <cstdint>
#include <vector>

#include "cac/types.hpp"

namespace cac {

struct KmeansResult {
    Matrix centroids;
    IndexVector assignments;
    double sse = 0.0;
    int iterations = 0;
    /// SSE after every iteration; non-increasing.
    std::vector<double> sse_history;
};

struct LloydOptions {
    int max_iter = 300;
    /// Stop when the relative SSE improvement drops below this.
    double tol = 1e-6;
};

/// Index of the nearest row of `centroids`; ties go to the lowest index.
int nearest_centroid(const Matrix& centroids, const Eigen::Ref<const RowVector>& x);

/// Nearest-centroid assignment for every row of `data`.
IndexVector assign_nearest(const Matrix& data, const Matrix& centroids);

/// Sum of squared distances from each row to its assigned centroid.
double sum_squared_error(const Matrix& data, const Matrix& centroids, const IndexVector& assignments);

/// Per-cluster means; empty clusters keep the corresponding row of `previous`.
Matrix cluster_means(const Matrix& data, const IndexVector& assignments, int k,
                     const Matrix& previous);

/// k-means++ seeding: the first center uniformly, the rest by D^2 sampling.
/// Once every remaining row coincides with a chosen center, the lowest-index
/// unchosen row is taken.
Matrix kmeanspp_init(const Matrix& data, int k, std::uint64_t seed);

/// Lloyd iteration from `init`. Empty clusters are repaired by seizing the
/// point farthest from its centroid among clusters with more than one member.
KmeansResult lloyd(const Matrix& data, int k, const Matrix& init, const LloydOptions& options = {});

/// kmeanspp_init followed by lloyd.
KmeansResult kmeans(const Matrix& data, int k, std::uint64_t seed, const LloydOptions& options = {});

/// Mean silhouette over all points; points in singleton clusters contribute 0.
double silhouette(const Matrix& data, const IndexVector& assignments);

}  // namespace cac

#endif  // CAC_KMEANS_HPP
