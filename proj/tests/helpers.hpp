#pragma once

#include <algorithm>
#include <filesystem>
#include <string>

#include "cfxcert/dataset.hpp"
#include "cfxcert/nn.hpp"
#include "cfxcert/rng.hpp"

namespace testutil {

// 2-2-2 two-logit net without bias parameters:
//   y0 = relu(x0 - x1), y1 = relu(x1 - x0)
// so the decision flips across the x0 = x1 diagonal.
inline cfxcert::FFNN two_feature_diff_net() {
    cfxcert::FFNN m;
    cfxcert::Layer l1;
    l1.weights = cfxcert::Matrix(2, 2);
    l1.weights(0, 0) = 1.0;
    l1.weights(0, 1) = -1.0;
    l1.weights(1, 0) = -1.0;
    l1.weights(1, 1) = 1.0;
    cfxcert::Layer l2;
    l2.weights = cfxcert::Matrix(2, 2);
    l2.weights(0, 0) = 1.0;
    l2.weights(0, 1) = 0.0;
    l2.weights(1, 0) = 0.0;
    l2.weights(1, 1) = 1.0;
    m.layers = {l1, l2};
    m.output_mode = cfxcert::OutputMode::two_logit;
    return m;
}

// Two Gaussian blobs inside the unit box, one per class.
inline cfxcert::Dataset make_blobs(std::size_t n, std::uint64_t seed, double spread = 0.08) {
    cfxcert::FeatureSpec spec;
    for (const char* name : {"f0", "f1"}) {
        cfxcert::FeatureColumn c;
        c.name = name;
        c.kind = cfxcert::FeatureKind::continuous;
        c.min = 0.0;
        c.max = 1.0;
        c.has_range = true;
        spec.columns.push_back(c);
    }
    cfxcert::Dataset d;
    d.spec = spec;
    d.rows = cfxcert::Matrix(n, 2);
    d.labels.resize(n);
    cfxcert::Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        int label = i % 2;
        double cx = label == 0 ? 0.3 : 0.7;
        double cy = label == 0 ? 0.3 : 0.7;
        d.rows(i, 0) = std::clamp(cx + rng.normal(0.0, spread), 0.0, 1.0);
        d.rows(i, 1) = std::clamp(cy + rng.normal(0.0, spread), 0.0, 1.0);
        d.labels[i] = label;
    }
    return d;
}

// Random small net with biases, seeded; weights in [-1,1], biases in [-0.5,0.5].
inline cfxcert::FFNN random_net(const std::vector<std::size_t>& sizes, cfxcert::OutputMode mode,
                                std::uint64_t seed) {
    cfxcert::FFNN m(sizes, mode);
    cfxcert::Rng rng(seed);
    for (auto& l : m.layers) {
        for (double& w : l.weights.data())
            w = rng.uniform(-1.0, 1.0);
        for (double& b : l.biases)
            b = rng.uniform(-0.5, 0.5);
    }
    return m;
}

class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        dir_ = std::filesystem::temp_directory_path() /
               ("cfxcert-" + tag + "-" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

  private:
    std::filesystem::path dir_;
};

} // namespace testutil
