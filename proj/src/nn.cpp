#include "cac/nn.hpp"

#include <cmath>

namespace cac::nn {

void MlpGrad::scale(double factor) {
    for (auto& w : weight) w *= factor;
    for (auto& b : bias) b *= factor;
}

Mlp Mlp::create(const std::vector<int>& sizes, Activation hidden, Activation output, Rng& rng) {
    if (sizes.size() < 2) throw Error(ErrorCode::ShapeMismatch, "an MLP needs at least two sizes");
    Mlp net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int in = sizes[l];
        const int out = sizes[l + 1];
        if (in < 1 || out < 1) throw Error(ErrorCode::ShapeMismatch, "layer sizes must be positive");
        DenseLayer layer;
        const double limit = std::sqrt(6.0 / (in + out));
        layer.weight.resize(out, in);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) layer.weight(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
        layer.bias = Vector::Zero(out);
        layer.activation = l + 2 == sizes.size() ? output : hidden;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::vector<int> Mlp::sizes() const {
    std::vector<int> out;
    if (layers.empty()) return out;
    out.push_back(layers.front().in());
    for (const auto& l : layers) out.push_back(l.out());
    return out;
}

Matrix Mlp::forward(const Matrix& x, MlpCache* cache) const {
    if (x.cols() != input_dim()) throw Error(ErrorCode::ShapeMismatch, "input width");
    if (cache) {
        cache->inputs.clear();
        cache->pre_activations.clear();
    }
    Matrix a = x;
    for (const auto& layer : layers) {
        Matrix z = a * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        if (cache) {
            cache->inputs.push_back(a);
            cache->pre_activations.push_back(z);
        }
        a = layer.activation == Activation::Relu ? Matrix(z.cwiseMax(0.0)) : z;
    }
    return a;
}

Matrix Mlp::backward(const MlpCache& cache, const Matrix& grad_out, MlpGrad& grads) const {
    Matrix g = grad_out;
    for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
        const DenseLayer& layer = layers[l];
        if (layer.activation == Activation::Relu) {
            g = g.cwiseProduct(Matrix((cache.pre_activations[l].array() > 0.0).cast<double>()));
        }
        grads.weight[l] += g.transpose() * cache.inputs[l];
        grads.bias[l] += g.colwise().sum().transpose();
        g = g * layer.weight;
    }
    return g;
}

MlpGrad Mlp::zero_grad() const {
    MlpGrad g;
    for (const auto& l : layers) {
        g.weight.push_back(Matrix::Zero(l.out(), l.in()));
        g.bias.push_back(Vector::Zero(l.out()));
    }
    return g;
}

void Mlp::apply_gradient(const MlpGrad& grads, double step) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weight -= step * grads.weight[l];
        layers[l].bias -= step * grads.bias[l];
    }
}

std::vector<double*> Mlp::parameters() {
    std::vector<double*> out;
    for (auto& l : layers) {
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) out.push_back(l.weight.data() + i);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) out.push_back(l.bias.data() + i);
    }
    return out;
}

std::vector<double> Mlp::flatten(const MlpGrad& grads) {
    std::vector<double> out;
    for (std::size_t l = 0; l < grads.weight.size(); ++l) {
        out.insert(out.end(), grads.weight[l].data(), grads.weight[l].data() + grads.weight[l].size());
        out.insert(out.end(), grads.bias[l].data(), grads.bias[l].data() + grads.bias[l].size());
    }
    return out;
}

bool Mlp::all_finite() const {
    for (const auto& l : layers) {
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double mx = logits.row(i).maxCoeff();
        RowVector e = (logits.row(i).array() - mx).exp();
        out.row(i) = e / e.sum();
    }
    return out;
}

nlohmann::json to_json(const Mlp& net) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& l : net.layers) {
        nlohmann::json layer;
        layer["in"] = l.in();
        layer["out"] = l.out();
        layer["activation"] = l.activation == Activation::Relu ? "relu" : "identity";
        layer["weight"] = std::vector<double>(l.weight.data(), l.weight.data() + l.weight.size());
        layer["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
        doc.push_back(std::move(layer));
    }
    return doc;
}

Mlp mlp_from_json(const nlohmann::json& doc) {
    Mlp net;
    for (const auto& layer : doc) {
        DenseLayer l;
        const int in = layer.at("in").get<int>();
        const int out = layer.at("out").get<int>();
        const auto w = layer.at("weight").get<std::vector<double>>();
        const auto b = layer.at("bias").get<std::vector<double>>();
        if (static_cast<int>(w.size()) != in * out || static_cast<int>(b.size()) != out) {
            throw Error(ErrorCode::ShapeMismatch, "layer parameter size");
        }
        if (!net.layers.empty() && net.layers.back().out() != in) {
            throw Error(ErrorCode::ShapeMismatch, "layer shapes do not chain");
        }
        l.weight = Eigen::Map<const Matrix>(w.data(), out, in);
        l.bias = Eigen::Map<const Vector>(b.data(), out);
        l.activation = layer.at("activation").get<std::string>() == "relu" ? Activation::Relu : Activation::Identity;
        net.layers.push_back(std::move(l));
    }
    return net;
}

}  // namespace cac::nn
