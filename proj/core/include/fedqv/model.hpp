#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedqv/dataset.hpp"
#include "fedqv/vector_ops.hpp"

namespace fedqv {

enum class Activation { relu, identity };

// Feed-forward classifier, layer_sizes = [d_x, h_1, ..., K]. Parameters are
// flattened per layer as the (n_out x n_in) weight matrix in row-major order
// followed by the n_out biases.
struct ModelSpec {
    std::vector<int> layer_sizes;
    Activation activation = Activation::relu;

    std::size_t param_count() const;
    void validate() const;
};

struct TrainConfig {
    int local_epochs = 5;
    double learning_rate = 0.01;
    int batch_size = 10;
    std::uint64_t seed = 0;
};

// Glorot-uniform weights (a = sqrt(6/(fan_in+fan_out))), zero biases.
ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed);

// Mean cross-entropy over the batch and its exact gradient. Softmax uses
// max-subtraction; non-finite activations raise (training divergence).
std::pair<double, ParameterVector> loss_and_grad(const ModelSpec& spec, const ParameterVector& params,
                                                 const LabeledDataset& data,
                                                 std::span<const std::size_t> batch);

// local_epochs passes of seeded mini-batch SGD over the given sample indices.
ParameterVector local_train(const ModelSpec& spec, const ParameterVector& start,
                            const LabeledDataset& data, std::span<const std::size_t> indices,
                            const TrainConfig& cfg);

int predict(const ModelSpec& spec, const ParameterVector& params, const std::vector<double>& row);

// Fraction of argmax-correct predictions; ties break toward the lowest class.
double evaluate(const ModelSpec& spec, const ParameterVector& params, const LabeledDataset& testset);

double mean_loss(const ModelSpec& spec, const ParameterVector& params, const LabeledDataset& data);

} // namespace fedqv
