#include "fedqv/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fedqv/rng.hpp"

namespace fedqv {

void ModelSpec::validate() const {
    if (layer_sizes.size() < 2) throw std::invalid_argument("ModelSpec: need at least input and output layer");
    for (int n : layer_sizes) {
        if (n < 1) throw std::invalid_argument("ModelSpec: layer sizes must be positive");
    }
}

std::size_t ModelSpec::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        n += std::size_t(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
    }
    return n;
}

ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParameterVector params(spec.param_count(), 0.0);
    auto rng = make_rng({seed, hash_bytes("init")});
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        const int n_in = spec.layer_sizes[l];
        const int n_out = spec.layer_sizes[l + 1];
        const double a = std::sqrt(6.0 / (n_in + n_out));
        std::uniform_real_distribution<double> uni(-a, a);
        for (int i = 0; i < n_out * n_in; ++i) params[off + i] = uni(rng);
        off += std::size_t(n_out) * n_in + n_out; // biases stay zero
    }
    return params;
}

namespace {

struct Forward {
    // post-activation per layer; [0] is the input row
    std::vector<std::vector<double>> acts;
    std::vector<double> probs;
    double loss = 0.0;
};

Forward forward_one(const ModelSpec& spec, const ParameterVector& params,
                    const std::vector<double>& row, int label) {
    Forward f;
    f.acts.push_back(row);
    std::size_t off = 0;
    const std::size_t n_layers = spec.layer_sizes.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int n_in = spec.layer_sizes[l];
        const int n_out = spec.layer_sizes[l + 1];
        const auto& in = f.acts.back();
        std::vector<double> out(n_out);
        for (int o = 0; o < n_out; ++o) {
            double z = params[off + std::size_t(n_out) * n_in + o]; // bias
            const double* w = &params[off + std::size_t(o) * n_in];
            for (int i = 0; i < n_in; ++i) z += w[i] * in[i];
            if (l + 1 < n_layers && spec.activation == Activation::relu) z = std::max(0.0, z);
            out[o] = z;
        }
        off += std::size_t(n_out) * n_in + n_out;
        f.acts.push_back(std::move(out));
    }

    const auto& logits = f.acts.back();
    double zmax = *std::max_element(logits.begin(), logits.end());
    if (!std::isfinite(zmax)) throw std::runtime_error("model: non-finite activations (divergence)");
    double denom = 0.0;
    f.probs.resize(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        f.probs[k] = std::exp(logits[k] - zmax);
        denom += f.probs[k];
    }
    for (double& p : f.probs) p /= denom;
    f.loss = -(logits[label] - zmax - std::log(denom));
    return f;
}

} // namespace

std::pair<double, ParameterVector> loss_and_grad(const ModelSpec& spec, const ParameterVector& params,
                                                 const LabeledDataset& data,
                                                 std::span<const std::size_t> batch) {
    spec.validate();
    if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
    if (params.size() != spec.param_count()) throw std::invalid_argument("loss_and_grad: wrong parameter count");

    const std::size_t n_layers = spec.layer_sizes.size() - 1;
    ParameterVector grad(params.size(), 0.0);
    double loss = 0.0;
    const double inv_n = 1.0 / double(batch.size());

    // layer offsets into the flat parameter vector
    std::vector<std::size_t> offsets(n_layers);
    {
        std::size_t off = 0;
        for (std::size_t l = 0; l < n_layers; ++l) {
            offsets[l] = off;
            off += std::size_t(spec.layer_sizes[l]) * spec.layer_sizes[l + 1] + spec.layer_sizes[l + 1];
        }
    }

    for (std::size_t idx : batch) {
        const auto f = forward_one(spec, params, data.features[idx], data.labels[idx]);
        loss += f.loss * inv_n;

        // delta at the output layer: softmax - onehot
        std::vector<double> delta = f.probs;
        delta[data.labels[idx]] -= 1.0;

        for (std::size_t l = n_layers; l-- > 0;) {
            const int n_in = spec.layer_sizes[l];
            const int n_out = spec.layer_sizes[l + 1];
            const auto& in = f.acts[l];
            const std::size_t off = offsets[l];
            for (int o = 0; o < n_out; ++o) {
                const double d = delta[o] * inv_n;
                double* gw = &grad[off + std::size_t(o) * n_in];
                for (int i = 0; i < n_in; ++i) gw[i] += d * in[i];
                grad[off + std::size_t(n_out) * n_in + o] += d;
            }
            if (l == 0) break;
            std::vector<double> prev(n_in, 0.0);
            for (int i = 0; i < n_in; ++i) {
                double s = 0.0;
                for (int o = 0; o < n_out; ++o) s += params[off + std::size_t(o) * n_in + i] * delta[o];
                prev[i] = s;
            }
            if (spec.activation == Activation::relu) {
                for (int i = 0; i < n_in; ++i) {
                    if (f.acts[l][i] <= 0.0) prev[i] = 0.0;
                }
            }
            delta = std::move(prev);
        }
    }
    if (!std::isfinite(loss)) throw std::runtime_error("loss_and_grad: non-finite loss (divergence)");
    return {loss, std::move(grad)};
}

ParameterVector local_train(const ModelSpec& spec, const ParameterVector& start,
                            const LabeledDataset& data, std::span<const std::size_t> indices,
                            const TrainConfig& cfg) {
    if (indices.empty()) throw std::invalid_argument("local_train: no training samples");
    if (cfg.local_epochs < 0) throw std::invalid_argument("local_train: negative epoch count");
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
        throw std::invalid_argument("local_train: bad learning rate");
    }
    if (cfg.batch_size < 1) throw std::invalid_argument("local_train: batch size must be >= 1");

    ParameterVector params = start;
    if (cfg.local_epochs == 0 || cfg.learning_rate == 0.0) return params;

    std::vector<std::size_t> order(indices.begin(), indices.end());
    auto rng = make_rng({cfg.seed, hash_bytes("shuffle")});
    for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
            const std::size_t len = std::min<std::size_t>(cfg.batch_size, order.size() - pos);
            auto [l, g] = loss_and_grad(spec, params, data, {order.data() + pos, len});
            (void)l;
            for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.learning_rate * g[i];
        }
    }
    require_finite(params, "local_train result");
    return params;
}

int predict(const ModelSpec& spec, const ParameterVector& params, const std::vector<double>& row) {
    const auto f = forward_one(spec, params, row, 0);
    const auto& logits = f.acts.back();
    int best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k) {
        if (logits[k] > logits[best]) best = static_cast<int>(k); // ties keep the lowest class
    }
    return best;
}

double evaluate(const ModelSpec& spec, const ParameterVector& params, const LabeledDataset& testset) {
    if (testset.size() == 0) throw std::invalid_argument("evaluate: empty test set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < testset.size(); ++i) {
        if (predict(spec, params, testset.features[i]) == testset.labels[i]) ++correct;
    }
    return double(correct) / double(testset.size());
}

double mean_loss(const ModelSpec& spec, const ParameterVector& params, const LabeledDataset& data) {
    if (data.size() == 0) throw std::invalid_argument("mean_loss: empty dataset");
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return loss_and_grad(spec, params, data, all).first;
}

} // namespace fedqv
