#ifndef CAC_TYPES_HPP
#define CAC_TYPES_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cac {

/// Row-major so that a data record is a contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using IndexVector = std::vector<int>;

using Rng = std::mt19937_64;

enum class ErrorCode {
    MissingColumn,
    ParseError,
    NonFiniteValue,
    EmptyDataset,
    TooFewRows,
    EmptySplit,
    InvalidSpec,
    KTooLarge,
    DimensionMismatch,
    OneCluster,
    EmptyCluster,
    PointAlreadyInCluster,
    WouldCreateOneClassCluster,
    WouldEmptyCluster,
    NotBinary,
    InfeasibleInit,
    IllegalMove,
    UntrainedModel,
    OneClassOnly,
    NoPositives,
    ShapeMismatch,
    ConfigInvalid,
    SchemaMismatch,
    Io,
};

const char* to_string(ErrorCode code);

/// The single exception type thrown by the library; `code()` identifies the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Uniform draw in [0, 1) using the top 53 bits of the generator.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n).
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

/// Standard normal via Box-Muller; platform-independent unlike std::normal_distribution.
inline double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Fisher-Yates with the helpers above, so permutations are identical across standard libraries.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = uniform_index(rng, i);
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace cac

#endif  // CAC_TYPES_HPP
