#include "cac/kmeans.hpp"

#include <algorithm>
#include <limits>

namespace cac {

namespace {

void check_k(const Matrix& data, int k) {
    if (k < 1) throw Error(ErrorCode::InvalidSpec, "k must be >= 1");
    if (k > data.rows()) throw Error(ErrorCode::KTooLarge, "k exceeds the number of rows");
}

std::vector<int> cluster_sizes(const IndexVector& assignments, int k) {
    std::vector<int> sizes(k, 0);
    for (int a : assignments) ++sizes[a];
    return sizes;
}

// Gives every empty cluster the point farthest from its current centroid,
// taken from a cluster that can spare it. Returns true if anything moved.
bool repair_empty_clusters(const Matrix& data, Matrix& centroids, IndexVector& assignments, int k) {
    std::vector<int> sizes = cluster_sizes(assignments, k);
    bool repaired = false;
    for (int j = 0; j < k; ++j) {
        if (sizes[j] > 0) continue;
        int far = -1;
        double far_dist = -1.0;
        for (int i = 0; i < data.rows(); ++i) {
            const int a = assignments[i];
            if (sizes[a] < 2) continue;
            const double dist = (data.row(i) - centroids.row(a)).squaredNorm();
            if (dist > far_dist) {
                far_dist = dist;
                far = i;
            }
        }
        if (far < 0) break;  // unreachable when k <= N
        --sizes[assignments[far]];
        assignments[far] = j;
        ++sizes[j];
        centroids.row(j) = data.row(far);
        repaired = true;
    }
    return repaired;
}

}  // namespace

int nearest_centroid(const Matrix& centroids, const Eigen::Ref<const RowVector>& x) {
    if (centroids.cols() != x.size()) throw Error(ErrorCode::DimensionMismatch, "point width");
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int j = 0; j < centroids.rows(); ++j) {
        const double dist = (centroids.row(j) - x).squaredNorm();
        if (dist < best_dist) {
            best_dist = dist;
            best = j;
        }
    }
    return best;
}

IndexVector assign_nearest(const Matrix& data, const Matrix& centroids) {
    if (data.cols() != centroids.cols()) throw Error(ErrorCode::DimensionMismatch, "centroid width");
    IndexVector out(data.rows());
    for (int i = 0; i < data.rows(); ++i) out[i] = nearest_centroid(centroids, data.row(i));
    return out;
}

double sum_squared_error(const Matrix& data, const Matrix& centroids, const IndexVector& assignments) {
    double sse = 0.0;
    for (int i = 0; i < data.rows(); ++i) sse += (data.row(i) - centroids.row(assignments[i])).squaredNorm();
    return sse;
}

Matrix cluster_means(const Matrix& data, const IndexVector& assignments, int k, const Matrix& previous) {
    Matrix sums = Matrix::Zero(k, data.cols());
    std::vector<int> counts(k, 0);
    for (int i = 0; i < data.rows(); ++i) {
        sums.row(assignments[i]) += data.row(i);
        ++counts[assignments[i]];
    }
    for (int j = 0; j < k; ++j) {
        if (counts[j] > 0) {
            sums.row(j) /= counts[j];
        } else {
            sums.row(j) = previous.row(j);
        }
    }
    return sums;
}

Matrix kmeanspp_init(const Matrix& data, int k, std::uint64_t seed) {
    check_k(data, k);
    const int n = static_cast<int>(data.rows());
    Rng rng(seed);
    Matrix centers(k, data.cols());
    std::vector<char> chosen(n, 0);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());

    int pick = static_cast<int>(uniform_index(rng, n));
    for (int c = 0; c < k; ++c) {
        if (c > 0) {
            double total = 0.0;
            for (int i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
            pick = -1;
            if (total > 0.0) {
                const double r = uniform01(rng) * total;
                double acc = 0.0;
                for (int i = 0; i < n; ++i) {
                    if (chosen[i] || d2[i] <= 0.0) continue;
                    acc += d2[i];
                    pick = i;
                    if (acc > r) break;
                }
            }
            if (pick < 0) {
                pick = static_cast<int>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
            }
        }
        chosen[pick] = 1;
        centers.row(c) = data.row(pick);
        for (int i = 0; i < n; ++i) d2[i] = std::min(d2[i], (data.row(i) - data.row(pick)).squaredNorm());
    }
    return centers;
}

KmeansResult lloyd(const Matrix& data, int k, const Matrix& init, const LloydOptions& options) {
    check_k(data, k);
    if (init.rows() != k || init.cols() != data.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "init must be k x d");
    }
    KmeansResult res;
    res.centroids = init;
    res.assignments = assign_nearest(data, res.centroids);
    repair_empty_clusters(data, res.centroids, res.assignments, k);

    double prev = std::numeric_limits<double>::infinity();
    bool converged = false;
    while (res.iterations < options.max_iter) {
        ++res.iterations;
        res.centroids = cluster_means(data, res.assignments, k, res.centroids);
        IndexVector next = assign_nearest(data, res.centroids);
        bool changed = next != res.assignments;
        // A point only switches when strictly closer, so this never raises the SSE.
        for (int i = 0; i < data.rows() && changed; ++i) {
            const double cur = (data.row(i) - res.centroids.row(res.assignments[i])).squaredNorm();
            const double alt = (data.row(i) - res.centroids.row(next[i])).squaredNorm();
            if (!(alt < cur)) next[i] = res.assignments[i];
        }
        changed = next != res.assignments;
        res.assignments = std::move(next);
        changed = repair_empty_clusters(data, res.centroids, res.assignments, k) || changed;
        const double sse = sum_squared_error(data, res.centroids, res.assignments);
        res.sse_history.push_back(sse);
        if (!changed) {
            converged = true;
            break;
        }
        if (sse <= 0.0 || (std::isfinite(prev) && prev - sse < options.tol * prev)) break;
        prev = sse;
    }
    if (!converged) {
        // Leave the centroids consistent with the final assignment.
        res.centroids = cluster_means(data, res.assignments, k, res.centroids);
    }
    res.sse = sum_squared_error(data, res.centroids, res.assignments);
    return res;
}

KmeansResult kmeans(const Matrix& data, int k, std::uint64_t seed, const LloydOptions& options) {
    return lloyd(data, k, kmeanspp_init(data, k, seed), options);
}

double silhouette(const Matrix& data, const IndexVector& assignments) {
    const int n = static_cast<int>(data.rows());
    if (static_cast<int>(assignments.size()) != n) throw Error(ErrorCode::DimensionMismatch, "assignments");
    if (n < 2) throw Error(ErrorCode::TooFewRows, "silhouette needs at least 2 points");
    const int k = *std::max_element(assignments.begin(), assignments.end()) + 1;
    const std::vector<int> sizes = cluster_sizes(assignments, k);
    if (std::count_if(sizes.begin(), sizes.end(), [](int s) { return s > 0; }) < 2) {
        throw Error(ErrorCode::OneCluster, "silhouette needs at least 2 nonempty clusters");
    }
    double total = 0.0;
    std::vector<double> dist_sum(k);
    for (int i = 0; i < n; ++i) {
        const int own = assignments[i];
        if (sizes[own] == 1) continue;
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (int l = 0; l < n; ++l) {
            if (l != i) dist_sum[assignments[l]] += (data.row(i) - data.row(l)).norm();
        }
        const double a = dist_sum[own] / (sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int j = 0; j < k; ++j) {
            if (j != own && sizes[j] > 0) b = std::min(b, dist_sum[j] / sizes[j]);
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / n;
}

}  // namespace cac
