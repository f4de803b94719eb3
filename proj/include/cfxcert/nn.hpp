#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cfxcert/dataset.hpp"
#include "cfxcert/matrix.hpp"

namespace cfxcert {

// Output layer semantics. two-logit and multiclass classify by argmax of
// the affine outputs; single-sigmoid has one output and classifies 1 iff
// its pre-activation is strictly positive.
enum class OutputMode { two_logit, multiclass, single_sigmoid };

std::string_view output_mode_name(OutputMode m);
OutputMode output_mode_from(std::string_view name);

// One layer transition. An empty bias vector means the layer has no bias
// parameters at all (treated as zeros by inference, skipped by parameter
// distances and abstraction widening).
struct Layer {
    Matrix weights;
    Vector biases;
};

// ReLU feed-forward network: hidden layers apply ReLU, the final layer is
// affine. Immutable by convention after construction.
struct FFNN {
    std::vector<Layer> layers;
    OutputMode output_mode = OutputMode::two_logit;

    FFNN() = default;
    // Zero-initialized network with biases on every layer.
    FFNN(const std::vector<std::size_t>& sizes, OutputMode mode);

    std::size_t input_size() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
    std::size_t output_size() const { return layers.empty() ? 0 : layers.back().weights.rows(); }
    std::size_t hidden_layer_count() const { return layers.empty() ? 0 : layers.size() - 1; }
    std::vector<std::size_t> layer_sizes() const;
    std::size_t parameter_count() const;
    bool same_topology(const FFNN& o) const;
    void validate() const;
};

Vector forward(const FFNN& m, const Vector& x);
// Argmax with lowest-index tie break; single-sigmoid: 1 iff output > 0.
int classify(const FFNN& m, const Vector& x);

enum class Loss { binary_cross_entropy, softmax_cross_entropy };

struct TrainConfig {
    std::size_t hidden_size = 8;
    double learning_rate = 0.5;
    std::size_t batch_size = 16;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
    Loss loss = Loss::binary_cross_entropy;
};

// Mini-batch SGD from a seeded initialization. Same seed, same data, same
// config give a bit-identical model.
FFNN train(const Dataset& data, const TrainConfig& cfg);
// Continues SGD from the given parameters; topology is kept, cfg.hidden_size
// is ignored. An empty subset returns the model unchanged.
FFNN retrain_incremental(const FFNN& model, const Dataset& subset, const TrainConfig& cfg);

double accuracy(const FFNN& m, const Dataset& data);

// Internal trace of one forward pass, exposed for the trainer and tests.
struct ForwardTrace {
    std::vector<Vector> pre;  // pre-activation per non-input layer
    std::vector<Vector> post; // post-activation (post[0] = input)
};
ForwardTrace forward_trace(const FFNN& m, const Vector& x);

// Per-sample loss and parameter gradient, same shapes as the model.
struct Gradient {
    std::vector<Layer> layers;
};
double loss_and_gradient(const FFNN& m, const Vector& x, int label, Loss loss, Gradient& g);

nlohmann::json model_to_json(const FFNN& m);
FFNN model_from_json(const nlohmann::json& j);
void save_model(const FFNN& m, const std::string& path);
FFNN load_model(const std::string& path);

} // namespace cfxcert
