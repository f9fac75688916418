#include "cac/deepcac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cac/kmeans.hpp"
#include "cac/metrics.hpp"

namespace cac {

namespace {

constexpr double kNormFloor = 1e-12;

double log_sum_exp(const RowVector& v) {
    const double mx = v.maxCoeff();
    return mx + std::log((v.array() - mx).exp().sum());
}

double softplus(double s) {
    return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

Matrix normalize_rows(const Matrix& m) {
    Matrix out = m;
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) /= std::max(m.row(i).norm(), kNormFloor);
    return out;
}

Matrix rows_of(const Matrix& data, const IndexVector& idx, std::size_t begin, std::size_t end) {
    Matrix out(static_cast<Eigen::Index>(end - begin), data.cols());
    for (std::size_t r = begin; r < end; ++r) out.row(static_cast<Eigen::Index>(r - begin)) = data.row(idx[r]);
    return out;
}

IndexVector iota_vector(int n) {
    IndexVector v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

}  // namespace

Matrix AmsHead::normalized_weight() const { return normalize_rows(weight); }

DeepCacNet DeepCacNet::create(int input_dim, const std::vector<int>& hidden, int latent, int n_classes,
                              double scale, double margin, Rng& rng) {
    if (input_dim < 1 || latent < 1 || n_classes < 2) throw Error(ErrorCode::ShapeMismatch, "network sizes");
    std::vector<int> enc{input_dim};
    enc.insert(enc.end(), hidden.begin(), hidden.end());
    enc.push_back(latent);
    std::vector<int> dec(enc.rbegin(), enc.rend());
    DeepCacNet net;
    net.encoder = nn::Mlp::create(enc, nn::Activation::Relu, nn::Activation::Identity, rng);
    net.decoder = nn::Mlp::create(dec, nn::Activation::Relu, nn::Activation::Identity, rng);
    const double limit = std::sqrt(6.0 / (n_classes + latent));
    net.head.weight.resize(n_classes, latent);
    for (int r = 0; r < n_classes; ++r)
        for (int c = 0; c < latent; ++c) net.head.weight(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
    net.head.scale = scale;
    net.head.margin = margin;
    return net;
}

std::vector<double*> DeepCacNet::parameters() {
    std::vector<double*> out = encoder.parameters();
    const std::vector<double*> dec = decoder.parameters();
    out.insert(out.end(), dec.begin(), dec.end());
    for (Eigen::Index i = 0; i < head.weight.size(); ++i) out.push_back(head.weight.data() + i);
    return out;
}

std::vector<double> NetGrad::flatten() const {
    std::vector<double> out = nn::Mlp::flatten(encoder);
    const std::vector<double> dec = nn::Mlp::flatten(decoder);
    out.insert(out.end(), dec.begin(), dec.end());
    out.insert(out.end(), head.data(), head.data() + head.size());
    return out;
}

ForwardBackward reconstruction_backward(const DeepCacNet& net, const Matrix& batch) {
    nn::MlpCache enc_cache, dec_cache;
    const Matrix z = net.encoder.forward(batch, &enc_cache);
    const Matrix recon = net.decoder.forward(z, &dec_cache);
    if (recon.cols() != batch.cols()) throw Error(ErrorCode::ShapeMismatch, "decoder output width");
    const Matrix residual = recon - batch;
    ForwardBackward out;
    out.loss.reconstruction = residual.squaredNorm();
    out.loss.total = out.loss.reconstruction;
    out.grad.decoder = net.decoder.zero_grad();
    out.grad.encoder = net.encoder.zero_grad();
    out.grad.head = Matrix::Zero(net.head.weight.rows(), net.head.weight.cols());
    const Matrix grad_z = net.decoder.backward(dec_cache, 2.0 * residual, out.grad.decoder);
    net.encoder.backward(enc_cache, grad_z, out.grad.encoder);
    return out;
}

ForwardBackward forward_backward(const DeepCacNet& net, const Matrix& batch, const IndexVector& labels,
                                 const IndexVector& assignments, const Matrix& centroids,
                                 const std::vector<int>& cluster_sizes, const LossWeights& weights) {
    const auto b = batch.rows();
    if (b < 1) throw Error(ErrorCode::ShapeMismatch, "empty batch");
    if (static_cast<Eigen::Index>(labels.size()) != b || static_cast<Eigen::Index>(assignments.size()) != b) {
        throw Error(ErrorCode::ShapeMismatch, "labels and assignments must match the batch");
    }
    if (centroids.cols() != net.latent_dim() || static_cast<Eigen::Index>(cluster_sizes.size()) != centroids.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "centroid matrix shape");
    }
    if (net.head.weight.cols() != net.latent_dim()) throw Error(ErrorCode::ShapeMismatch, "head width");

    nn::MlpCache enc_cache, dec_cache;
    const Matrix z = net.encoder.forward(batch, &enc_cache);
    const Matrix recon = net.decoder.forward(z, &dec_cache);
    if (recon.cols() != batch.cols()) throw Error(ErrorCode::ShapeMismatch, "decoder output width");
    const Matrix residual = recon - batch;

    ForwardBackward out;
    LossComponents& loss = out.loss;
    loss.reconstruction = residual.squaredNorm();
    out.grad.decoder = net.decoder.zero_grad();
    out.grad.encoder = net.encoder.zero_grad();
    Matrix grad_z = net.decoder.backward(dec_cache, 2.0 * residual, out.grad.decoder);

    const AmsHead& head = net.head;
    const int classes = head.classes();
    const Matrix w_hat = head.normalized_weight();
    Matrix grad_w_hat = Matrix::Zero(classes, net.latent_dim());

    for (Eigen::Index i = 0; i < b; ++i) {
        const int s = assignments[i];
        const int y = labels[i];
        if (s < 0 || s >= centroids.rows()) throw Error(ErrorCode::ShapeMismatch, "assignment out of range");
        if (y < 0 || y >= classes) throw Error(ErrorCode::ShapeMismatch, "label exceeds head classes");
        const double size = cluster_sizes[s];
        if (size < 1.0) throw Error(ErrorCode::ShapeMismatch, "cluster of a batch point has size 0");

        const RowVector diff = z.row(i) - centroids.row(s);
        const double w = weights.beta / (size - 1.0 + weights.delta);
        loss.clustering += w * diff.squaredNorm();
        grad_z.row(i) += 2.0 * w * diff;

        const double norm = std::max(z.row(i).norm(), kNormFloor);
        const RowVector z_hat = z.row(i) / norm;
        const RowVector cosine = (w_hat * z_hat.transpose()).transpose();
        RowVector logits = head.scale * cosine;
        logits(y) -= head.scale * head.margin;
        const double lse = log_sum_exp(logits);
        const double ams = lse - logits(y);
        loss.am_softmax_raw += ams;
        loss.am_softmax += ams / size;

        const double a = weights.alpha / size;
        if (a == 0.0) continue;
        RowVector grad_cos = (logits.array() - lse).exp();
        grad_cos(y) -= 1.0;
        grad_cos *= a * head.scale;
        const RowVector grad_z_hat = grad_cos * w_hat;
        grad_z.row(i) += (grad_z_hat - z_hat * z_hat.dot(grad_z_hat)) / norm;
        grad_w_hat += grad_cos.transpose() * z_hat;
    }
    net.encoder.backward(enc_cache, grad_z, out.grad.encoder);

    out.grad.head.resize(classes, net.latent_dim());
    for (int j = 0; j < classes; ++j) {
        const double norm = std::max(head.weight.row(j).norm(), kNormFloor);
        const RowVector g = grad_w_hat.row(j);
        out.grad.head.row(j) = (g - w_hat.row(j) * w_hat.row(j).dot(g)) / norm;
    }
    loss.total = loss.reconstruction + loss.clustering + weights.alpha * loss.am_softmax;
    return out;
}

AmsBounds ams_bounds(const Matrix& embeddings, const IndexVector& labels, const AmsHead& head) {
    if (head.classes() != 2) throw Error(ErrorCode::NotBinary, "AM-softmax bounds are for two classes");
    if (embeddings.cols() != head.weight.cols() || static_cast<Eigen::Index>(labels.size()) != embeddings.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "embedding shape");
    }
    const Matrix z = normalize_rows(embeddings);
    const Matrix w = head.normalized_weight();
    const RowVector gamma = w.row(1) - w.row(0);
    const double s = head.scale;
    const double sm = head.scale * head.margin;

    double n_pos = 0.0, n_neg = 0.0, projection = 0.0, actual = 0.0;
    bool exponents_positive = true;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double proj = z.row(i).dot(gamma);
        double exponent = 0.0;
        if (labels[i] == 1) {
            n_pos += 1.0;
            projection += proj;
            exponent = sm - s * proj;
        } else if (labels[i] == 0) {
            n_neg += 1.0;
            projection -= proj;
            exponent = sm + s * proj;
        } else {
            throw Error(ErrorCode::NotBinary, "labels must be 0 or 1");
        }
        actual += softplus(exponent);
        exponents_positive = exponents_positive && exponent > 0.0;
    }
    if (n_pos == 0.0 || n_neg == 0.0) throw Error(ErrorCode::OneClassOnly, "both classes required");
    // projection = Gamma . (N+ mu+ - N- mu-)
    const double n = n_pos + n_neg;
    AmsBounds out;
    out.actual = actual;
    out.lower = n * (std::log(2.0) + 0.5 * sm) - 0.5 * s * projection;
    out.lower_full_weight = n * (std::log(2.0) + 0.5 * sm) - s * projection;
    if (exponents_positive) out.upper = n * (1.0 + sm) - s * projection;
    return out;
}

std::vector<double> pretrain(DeepCacNet& net, const Matrix& data, const PretrainOptions& options) {
    if (options.batch_size < 1 || !(options.lr > 0.0)) throw Error(ErrorCode::InvalidSpec, "pretrain options");
    auto mean_loss = [&] {
        const Matrix recon = net.decoder.forward(net.encoder.forward(data));
        return (recon - data).squaredNorm() / static_cast<double>(data.rows());
    };
    std::vector<double> history{mean_loss()};
    Rng rng(options.seed);
    IndexVector order = iota_vector(static_cast<int>(data.rows()));
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t end = std::min(order.size(), start + options.batch_size);
            const Matrix batch = rows_of(data, order, start, end);
            const ForwardBackward fb = reconstruction_backward(net, batch);
            const double step = options.lr / static_cast<double>(end - start);
            net.encoder.apply_gradient(fb.grad.encoder, step);
            net.decoder.apply_gradient(fb.grad.decoder, step);
        }
        history.push_back(mean_loss());
    }
    return history;
}

Matrix encode(const DeepCacNet& net, const Matrix& data) { return net.encoder.forward(data); }

LatentClusterState init_latent_clusters(const DeepCacNet& net, const Matrix& data, int k, std::uint64_t seed) {
    const Matrix z = encode(net, data);
    const KmeansResult km = kmeans(z, k, seed);
    LatentClusterState state;
    state.centroids = km.centroids;
    state.assignments = km.assignments;
    state.sizes.assign(k, 0);
    for (int a : state.assignments) ++state.sizes[a];
    state.counts = state.sizes;
    for (int& c : state.counts) c = std::max(c, 1);
    return state;
}

void update_assignments(LatentClusterState& state, const Matrix& batch_embeddings, const IndexVector& indices) {
    if (static_cast<Eigen::Index>(indices.size()) != batch_embeddings.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "index count differs from batch rows");
    }
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const int j = nearest_centroid(state.centroids, batch_embeddings.row(static_cast<Eigen::Index>(r)));
        int& current = state.assignments.at(indices[r]);
        if (current == j) continue;
        if (!state.sizes.empty()) {
            --state.sizes[current];
            ++state.sizes[j];
        }
        current = j;
    }
}

void update_centroids_online(LatentClusterState& state, const Matrix& batch_embeddings, const IndexVector& indices) {
    if (static_cast<Eigen::Index>(indices.size()) != batch_embeddings.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "index count differs from batch rows");
    }
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const int j = state.assignments.at(indices[r]);
        const auto z = batch_embeddings.row(static_cast<Eigen::Index>(r));
        state.centroids.row(j) += (z - state.centroids.row(j)) / static_cast<double>(state.counts[j]);
        ++state.counts[j];
    }
}

void DeepCacConfig::validate() const {
    auto fail = [](const char* what) { throw Error(ErrorCode::InvalidSpec, what); };
    if (latent < 1) fail("latent must be positive");
    for (int h : hidden)
        if (h < 1) fail("hidden sizes must be positive");
    if (k < 1) fail("k must be positive");
    if (weights.alpha < 0.0 || weights.beta < 0.0) fail("alpha and beta must be nonnegative");
    if (!(weights.delta > 0.0)) fail("delta must be positive");
    if (scale < 0.0 || margin < 0.0) fail("scale and margin must be nonnegative");
    if (!(lr > 0.0) || !(local_lr > 0.0)) fail("learning rates must be positive");
    if (batch_size < 1) fail("batch_size must be positive");
    if (pretrain_epochs < 0 || cluster_epochs < 0 || local_epochs < 0) fail("epochs must be nonnegative");
    if (local_hidden < 1) fail("local_hidden must be positive");
    if (patience < 1) fail("patience must be positive");
}

nlohmann::json to_json(const DeepCacConfig& c) {
    nlohmann::json doc;
    doc["hidden"] = c.hidden;
    doc["latent"] = c.latent;
    doc["k"] = c.k;
    doc["alpha"] = c.weights.alpha;
    doc["beta"] = c.weights.beta;
    doc["delta"] = c.weights.delta;
    doc["scale"] = c.scale;
    doc["margin"] = c.margin;
    doc["lr"] = c.lr;
    doc["batch_size"] = c.batch_size;
    doc["pretrain_epochs"] = c.pretrain_epochs;
    doc["cluster_epochs"] = c.cluster_epochs;
    doc["local_hidden"] = c.local_hidden;
    doc["local_lr"] = c.local_lr;
    doc["local_epochs"] = c.local_epochs;
    doc["patience"] = c.patience;
    doc["seed"] = c.seed;
    doc["clustering_stage"] = c.clustering_stage;
    return doc;
}

double class_centroid_cosine(const Matrix& embeddings, const IndexVector& labels, int n_classes) {
    const Matrix z = normalize_rows(embeddings);
    Matrix sums = Matrix::Zero(n_classes, z.cols());
    std::vector<int> counts(n_classes, 0);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        sums.row(labels[i]) += z.row(i);
        ++counts[labels[i]];
    }
    double total = 0.0;
    int pairs = 0;
    for (int a = 0; a < n_classes; ++a) {
        for (int b = a + 1; b < n_classes; ++b) {
            if (counts[a] == 0 || counts[b] == 0) continue;
            const double na = sums.row(a).norm(), nb = sums.row(b).norm();
            if (na < kNormFloor || nb < kNormFloor) continue;
            total += sums.row(a).dot(sums.row(b)) / (na * nb);
            ++pairs;
        }
    }
    return pairs > 0 ? total / pairs : 0.0;
}

namespace {

Matrix predict_with(const nn::Mlp& encoder, const Matrix& centroids, const std::vector<nn::Mlp>& nets,
                    const Matrix& data, int n_classes) {
    const Matrix z = encoder.forward(data);
    Matrix probs(data.rows(), n_classes);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const int j = nearest_centroid(centroids, z.row(i));
        probs.row(i) = nn::softmax_rows(nets[j].forward(z.row(i))).row(0);
    }
    return probs;
}

double validation_auprc(const Matrix& probs, const IndexVector& labels, int n_classes) {
    return evaluate_multiclass(probs, labels, n_classes).auprc;
}

}  // namespace

DeepCacFit deepcac_fit(const LabeledDataset& train, const LabeledDataset* val, const DeepCacConfig& config) {
    config.validate();
    train.validate();
    const Matrix& x = train.features;
    const int n = train.rows();
    const int classes = train.n_classes;
    if (config.k > n) throw Error(ErrorCode::KTooLarge, "k exceeds the number of training rows");

    Rng rng(config.seed);
    DeepCacNet net = DeepCacNet::create(train.dims(), config.hidden, config.latent, classes, config.scale,
                                        config.margin, rng);
    const std::uint64_t pretrain_seed = rng();
    const std::uint64_t kmeans_seed = rng();
    const std::uint64_t cluster_seed = rng();
    const std::uint64_t local_seed = rng();

    DeepCacFit fit;
    DeepCacDiagnostics& diag = fit.diagnostics;
    diag.pretrain_loss = pretrain(net, x, {config.pretrain_epochs, config.lr, config.batch_size, pretrain_seed});
    diag.class_cosine_pretrain = class_centroid_cosine(encode(net, x), train.labels, classes);

    LatentClusterState state = init_latent_clusters(net, x, config.k, kmeans_seed);
    if (config.clustering_stage) {
        Rng batch_rng(cluster_seed);
        IndexVector order = iota_vector(n);
        for (int epoch = 0; epoch < config.cluster_epochs; ++epoch) {
            shuffle(order, batch_rng);
            double epoch_loss = 0.0;
            for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
                const std::size_t end = std::min(order.size(), start + config.batch_size);
                const IndexVector idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                      order.begin() + static_cast<std::ptrdiff_t>(end));
                const Matrix batch = rows_of(x, order, start, end);
                IndexVector y(idx.size()), s(idx.size());
                for (std::size_t r = 0; r < idx.size(); ++r) {
                    y[r] = train.labels[idx[r]];
                    s[r] = state.assignments[idx[r]];
                }
                const ForwardBackward fb =
                    forward_backward(net, batch, y, s, state.centroids, state.sizes, config.weights);
                epoch_loss += fb.loss.total;
                const double step = config.lr / static_cast<double>(idx.size());
                net.encoder.apply_gradient(fb.grad.encoder, step);
                net.decoder.apply_gradient(fb.grad.decoder, step);
                net.head.weight -= step * fb.grad.head;

                const Matrix z = encode(net, batch);
                update_assignments(state, z, idx);
                update_centroids_online(state, z, idx);
            }
            diag.cluster_loss.push_back(epoch_loss / n);
        }
    }
    if (!net.encoder.all_finite()) throw Error(ErrorCode::NonFiniteValue, "encoder diverged");

    const Matrix z = encode(net, x);
    diag.class_cosine_final = class_centroid_cosine(z, train.labels, classes);

    // Prune clusters that end up with no nearest points, then reroute.
    IndexVector nearest = assign_nearest(z, state.centroids);
    std::vector<int> counts(config.k, 0);
    for (int a : nearest) ++counts[a];
    IndexVector kept;
    for (int j = 0; j < config.k; ++j)
        if (counts[j] > 0) kept.push_back(j);
    diag.empty_clusters_after_clustering = config.k - static_cast<int>(kept.size());
    diag.pruned_clusters = diag.empty_clusters_after_clustering;

    DeepCacModel& model = fit.model;
    model.encoder = net.encoder;
    model.head = net.head;
    model.n_classes = classes;
    model.config = config;
    model.centroids.resize(static_cast<Eigen::Index>(kept.size()), z.cols());
    for (std::size_t j = 0; j < kept.size(); ++j) model.centroids.row(static_cast<Eigen::Index>(j)) = state.centroids.row(kept[j]);
    fit.train_assignments = assign_nearest(z, model.centroids);

    const int k = model.k();
    std::vector<IndexVector> members(k);
    for (int i = 0; i < n; ++i) members[fit.train_assignments[i]].push_back(i);

    Rng local_rng(local_seed);
    std::vector<nn::Mlp> nets;
    for (int j = 0; j < k; ++j) {
        nets.push_back(nn::Mlp::create({config.latent, config.local_hidden, classes}, nn::Activation::Relu,
                                       nn::Activation::Identity, local_rng));
    }

    const bool early_stop = val != nullptr && val->rows() > 0 &&
                            (classes > 2 || std::count(val->labels.begin(), val->labels.end(), 1) > 0) &&
                            (classes > 2 || std::count(val->labels.begin(), val->labels.end(), 0) > 0);
    std::vector<nn::Mlp> best = nets;
    double best_auprc = -std::numeric_limits<double>::infinity();
    int stale = 0;
    for (int epoch = 0; epoch < config.local_epochs; ++epoch) {
        ++diag.local_epochs_run;
        for (int j = 0; j < k; ++j) {
            shuffle(members[j], local_rng);
            for (std::size_t start = 0; start < members[j].size(); start += config.batch_size) {
                const std::size_t end = std::min(members[j].size(), start + config.batch_size);
                const Matrix zb = rows_of(z, members[j], start, end);
                nn::MlpCache cache;
                Matrix grad = nn::softmax_rows(nets[j].forward(zb, &cache));
                for (std::size_t r = start; r < end; ++r) grad(static_cast<Eigen::Index>(r - start), train.labels[members[j][r]]) -= 1.0;
                nn::MlpGrad g = nets[j].zero_grad();
                nets[j].backward(cache, grad, g);
                nets[j].apply_gradient(g, config.local_lr / static_cast<double>(end - start));
            }
        }
        if (!early_stop) continue;
        const double score = validation_auprc(
            predict_with(model.encoder, model.centroids, nets, val->features, classes), val->labels, classes);
        diag.val_auprc.push_back(score);
        if (score > best_auprc) {
            best_auprc = score;
            best = nets;
            stale = 0;
        } else if (++stale >= config.patience) {
            break;
        }
    }
    model.local_nets = early_stop && diag.local_epochs_run > 0 ? best : nets;
    return fit;
}

DeepCacPrediction deepcac_predict(const DeepCacModel& model, const Eigen::Ref<const RowVector>& x) {
    if (model.k() == 0 || static_cast<int>(model.local_nets.size()) != model.k()) {
        throw Error(ErrorCode::UntrainedModel, "model has no local networks");
    }
    if (x.size() != model.encoder.input_dim()) throw Error(ErrorCode::DimensionMismatch, "input width");
    const Matrix z = model.encoder.forward(Matrix(x));
    DeepCacPrediction out;
    out.cluster = nearest_centroid(model.centroids, z.row(0));
    out.probabilities = nn::softmax_rows(model.local_nets[out.cluster].forward(z)).row(0).transpose();
    Eigen::Index arg = 0;
    out.probabilities.maxCoeff(&arg);
    out.label = static_cast<int>(arg);
    if (model.n_classes == 2) out.label = out.probabilities(1) >= 0.5 ? 1 : 0;
    return out;
}

Matrix deepcac_predict_proba(const DeepCacModel& model, const Matrix& data) {
    if (model.k() == 0 || static_cast<int>(model.local_nets.size()) != model.k()) {
        throw Error(ErrorCode::UntrainedModel, "model has no local networks");
    }
    if (data.cols() != model.encoder.input_dim()) throw Error(ErrorCode::DimensionMismatch, "input width");
    return predict_with(model.encoder, model.centroids, model.local_nets, data, model.n_classes);
}

nlohmann::json to_json(const DeepCacModel& model) {
    nlohmann::json doc;
    doc["format"] = "deepcac-model";
    doc["version"] = 1;
    doc["n_classes"] = model.n_classes;
    doc["encoder"] = nn::to_json(model.encoder);
    doc["k"] = model.k();
    doc["latent"] = model.centroids.cols();
    doc["centroids"] = std::vector<double>(model.centroids.data(), model.centroids.data() + model.centroids.size());
    doc["head"] = {{"classes", model.head.classes()},
                   {"latent", model.head.weight.cols()},
                   {"weight", std::vector<double>(model.head.weight.data(),
                                                  model.head.weight.data() + model.head.weight.size())},
                   {"scale", model.head.scale},
                   {"margin", model.head.margin}};
    doc["local_nets"] = nlohmann::json::array();
    for (const auto& net : model.local_nets) doc["local_nets"].push_back(nn::to_json(net));
    doc["config"] = to_json(model.config);
    return doc;
}

DeepCacModel deepcac_model_from_json(const nlohmann::json& doc) {
    if (doc.value("format", "") != "deepcac-model" || doc.value("version", 0) != 1) {
        throw Error(ErrorCode::SchemaMismatch, "not a version-1 DeepCAC model document");
    }
    DeepCacModel model;
    model.n_classes = doc.at("n_classes").get<int>();
    model.encoder = nn::mlp_from_json(doc.at("encoder"));
    const auto k = doc.at("k").get<Eigen::Index>();
    const auto latent = doc.at("latent").get<Eigen::Index>();
    const auto flat = doc.at("centroids").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != k * latent) throw Error(ErrorCode::ShapeMismatch, "centroids");
    model.centroids = Eigen::Map<const Matrix>(flat.data(), k, latent);
    const auto& head = doc.at("head");
    const auto hw = head.at("weight").get<std::vector<double>>();
    model.head.weight = Eigen::Map<const Matrix>(hw.data(), head.at("classes").get<Eigen::Index>(),
                                                 head.at("latent").get<Eigen::Index>());
    model.head.scale = head.at("scale").get<double>();
    model.head.margin = head.at("margin").get<double>();
    for (const auto& net : doc.at("local_nets")) model.local_nets.push_back(nn::mlp_from_json(net));
    const auto& c = doc.at("config");
    DeepCacConfig& cfg = model.config;
    cfg.hidden = c.at("hidden").get<std::vector<int>>();
    cfg.latent = c.at("latent").get<int>();
    cfg.k = c.at("k").get<int>();
    cfg.weights = {c.at("alpha").get<double>(), c.at("beta").get<double>(), c.at("delta").get<double>()};
    cfg.scale = c.at("scale").get<double>();
    cfg.margin = c.at("margin").get<double>();
    cfg.lr = c.at("lr").get<double>();
    cfg.batch_size = c.at("batch_size").get<int>();
    cfg.pretrain_epochs = c.at("pretrain_epochs").get<int>();
    cfg.cluster_epochs = c.at("cluster_epochs").get<int>();
    cfg.local_hidden = c.at("local_hidden").get<int>();
    cfg.local_lr = c.at("local_lr").get<double>();
    cfg.local_epochs = c.at("local_epochs").get<int>();
    cfg.patience = c.at("patience").get<int>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    cfg.clustering_stage = c.at("clustering_stage").get<bool>();
    if (static_cast<Eigen::Index>(model.local_nets.size()) != k) throw Error(ErrorCode::ShapeMismatch, "local nets");
    return model;
}

}  // namespace cac
