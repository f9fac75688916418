#ifndef CAC_NN_HPP
#define CAC_NN_HPP

#include <vector>

#include "cac/types.hpp"

#include <json.hpp>

namespace cac::nn {

enum class Activation { Identity, Relu };

/// y = act(x W^T + b) for a batch x laid out one sample per row.
struct DenseLayer {
    Matrix weight;  // out x in
    Vector bias;    // out
    Activation activation = Activation::Identity;

    int in() const { return static_cast<int>(weight.cols()); }
    int out() const { return static_cast<int>(weight.rows()); }
};

struct MlpGrad {
    std::vector<Matrix> weight;
    std::vector<Vector> bias;

    void scale(double factor);
};

/// Activations kept from a forward pass for the backward pass.
struct MlpCache {
    std::vector<Matrix> inputs;
    std::vector<Matrix> pre_activations;
};

/// Plain feed-forward stack of dense layers.
class Mlp {
public:
    Mlp() = default;

    /// sizes = {in, h1, ..., out}; hidden layers use `hidden`, the last layer `output`.
    /// Weights are uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
    static Mlp create(const std::vector<int>& sizes, Activation hidden, Activation output, Rng& rng);

    int input_dim() const { return layers.empty() ? 0 : layers.front().in(); }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out(); }
    std::vector<int> sizes() const;

    Matrix forward(const Matrix& x, MlpCache* cache = nullptr) const;

    /// Adds parameter gradients into `grads` and returns dL/dx.
    Matrix backward(const MlpCache& cache, const Matrix& grad_out, MlpGrad& grads) const;

    MlpGrad zero_grad() const;
    void apply_gradient(const MlpGrad& grads, double step);

    /// Pointers to every parameter, weights (row-major) then bias, layer by layer.
    std::vector<double*> parameters();
    static std::vector<double> flatten(const MlpGrad& grads);

    bool all_finite() const;

    std::vector<DenseLayer> layers;
};

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& doc);

}  // namespace cac::nn

#endif  // CAC_NN_HPP
