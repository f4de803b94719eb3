#include "cfxcert/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cfxcert/common.hpp"
#include "cfxcert/jsonio.hpp"
#include "cfxcert/kernels.hpp"
#include "cfxcert/log.hpp"
#include "cfxcert/rng.hpp"

namespace cfxcert {

std::string_view output_mode_name(OutputMode m) {
    switch (m) {
    case OutputMode::two_logit: return "two-logit";
    case OutputMode::multiclass: return "multiclass";
    case OutputMode::single_sigmoid: return "single-sigmoid";
    }
    return "?";
}

OutputMode output_mode_from(std::string_view name) {
    if (name == "two-logit")
        return OutputMode::two_logit;
    if (name == "multiclass")
        return OutputMode::multiclass;
    if (name == "single-sigmoid")
        return OutputMode::single_sigmoid;
    throw ParseError("output_mode: unknown value \"" + std::string(name) + "\"");
}

FFNN::FFNN(const std::vector<std::size_t>& sizes, OutputMode mode) : output_mode(mode) {
    if (sizes.size() < 2)
        throw ShapeError("network needs at least input and output layers");
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        Layer l;
        l.weights = Matrix(sizes[i + 1], sizes[i]);
        l.biases = Vector(sizes[i + 1], 0.0);
        layers.push_back(std::move(l));
    }
    validate();
}

std::vector<std::size_t> FFNN::layer_sizes() const {
    std::vector<std::size_t> s;
    if (layers.empty())
        return s;
    s.push_back(layers.front().weights.cols());
    for (const auto& l : layers)
        s.push_back(l.weights.rows());
    return s;
}

std::size_t FFNN::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers)
        n += l.weights.rows() * l.weights.cols() + l.biases.size();
    return n;
}

bool FFNN::same_topology(const FFNN& o) const {
    if (layers.size() != o.layers.size())
        return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i].weights.rows() != o.layers[i].weights.rows() ||
            layers[i].weights.cols() != o.layers[i].weights.cols() ||
            layers[i].biases.size() != o.layers[i].biases.size())
            return false;
    }
    return true;
}

void FFNN::validate() const {
    if (layers.empty())
        throw ShapeError("network has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (l.weights.rows() == 0 || l.weights.cols() == 0)
            throw ShapeError("layer " + std::to_string(i) + ": empty weight matrix");
        if (i > 0 && l.weights.cols() != layers[i - 1].weights.rows())
            throw ShapeError("layer " + std::to_string(i) + ": input width " +
                             std::to_string(l.weights.cols()) + " does not match previous layer");
        if (!l.biases.empty() && l.biases.size() != l.weights.rows())
            throw ShapeError("layer " + std::to_string(i) + ": bias length mismatch");
        for (double w : l.weights.data())
            if (!std::isfinite(w))
                throw ConfigError("layer " + std::to_string(i) + ": non-finite weight");
        for (double b : l.biases)
            if (!std::isfinite(b))
                throw ConfigError("layer " + std::to_string(i) + ": non-finite bias");
    }
    if (output_mode == OutputMode::single_sigmoid && output_size() != 1)
        throw ConfigError("single-sigmoid requires exactly one output node");
}

namespace {

void affine(const Layer& l, const Vector& in, Vector& out) {
    out.resize(l.weights.rows());
    for (std::size_t j = 0; j < l.weights.rows(); ++j) {
        double v = kernels::dot(l.weights.row(j), in.data(), in.size());
        if (!l.biases.empty())
            v += l.biases[j];
        out[j] = v;
    }
}

double sigmoid(double z) {
    if (z >= 0)
        return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace

ForwardTrace forward_trace(const FFNN& m, const Vector& x) {
    if (x.size() != m.input_size())
        throw ShapeError("input has " + std::to_string(x.size()) + " features, network expects " +
                         std::to_string(m.input_size()));
    ForwardTrace t;
    t.post.push_back(x);
    Vector cur = x;
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        Vector z;
        affine(m.layers[i], cur, z);
        t.pre.push_back(z);
        if (i + 1 < m.layers.size())
            for (double& v : z)
                v = std::max(0.0, v);
        t.post.push_back(z);
        cur = std::move(z);
    }
    return t;
}

Vector forward(const FFNN& m, const Vector& x) {
    return forward_trace(m, x).post.back();
}

int classify(const FFNN& m, const Vector& x) {
    Vector y = forward(m, x);
    if (m.output_mode == OutputMode::single_sigmoid)
        return y[0] > 0.0 ? 1 : 0;
    std::size_t best = 0;
    for (std::size_t j = 1; j < y.size(); ++j)
        if (y[j] > y[best])
            best = j;
    return static_cast<int>(best);
}

namespace {

Gradient zero_gradient(const FFNN& m) {
    Gradient g;
    for (const auto& l : m.layers) {
        Layer gl;
        gl.weights = Matrix(l.weights.rows(), l.weights.cols());
        gl.biases = Vector(l.biases.size(), 0.0);
        g.layers.push_back(std::move(gl));
    }
    return g;
}

void zero_out(Gradient& g) {
    for (auto& l : g.layers) {
        std::fill(l.weights.data().begin(), l.weights.data().end(), 0.0);
        std::fill(l.biases.begin(), l.biases.end(), 0.0);
    }
}

// Adds one sample's gradient into g and returns its loss.
double accumulate_gradient(const FFNN& m, const Vector& x, int label, Loss loss, Gradient& g) {
    ForwardTrace t = forward_trace(m, x);
    const Vector& z = t.pre.back();

    double loss_val;
    Vector delta(z.size());
    if (loss == Loss::binary_cross_entropy) {
        double zv = z[0];
        double y = label > 0 ? 1.0 : 0.0;
        loss_val = std::max(zv, 0.0) - zv * y + std::log1p(std::exp(-std::fabs(zv)));
        delta[0] = sigmoid(zv) - y;
    } else {
        double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z)
            sum += std::exp(v - zmax);
        double lse = zmax + std::log(sum);
        loss_val = lse - z[static_cast<std::size_t>(label)];
        for (std::size_t j = 0; j < z.size(); ++j)
            delta[j] = std::exp(z[j] - lse) - (static_cast<int>(j) == label ? 1.0 : 0.0);
    }

    for (std::size_t li = m.layers.size(); li-- > 0;) {
        const Vector& a_prev = t.post[li];
        Layer& gl = g.layers[li];
        for (std::size_t j = 0; j < delta.size(); ++j)
            kernels::axpy(delta[j], a_prev.data(), gl.weights.row(j), a_prev.size());
        if (!gl.biases.empty())
            for (std::size_t j = 0; j < delta.size(); ++j)
                gl.biases[j] += delta[j];
        if (li > 0) {
            Vector da(a_prev.size(), 0.0);
            for (std::size_t j = 0; j < delta.size(); ++j)
                kernels::axpy(delta[j], m.layers[li].weights.row(j), da.data(), da.size());
            for (std::size_t l = 0; l < da.size(); ++l)
                if (t.pre[li - 1][l] <= 0.0)
                    da[l] = 0.0;
            delta = std::move(da);
        }
    }
    return loss_val;
}

Loss effective_loss(const FFNN& m) {
    return m.output_mode == OutputMode::single_sigmoid ? Loss::binary_cross_entropy
                                                       : Loss::softmax_cross_entropy;
}

void sgd(FFNN& m, const Dataset& data, const TrainConfig& cfg, Rng& rng) {
    if (cfg.batch_size == 0)
        throw ConfigError("batch_size must be positive");
    if (cfg.learning_rate < 0 || !std::isfinite(cfg.learning_rate))
        throw ConfigError("learning_rate must be a finite nonnegative value");
    Loss loss = effective_loss(m);
    for (int label : data.labels)
        if (label < 0 || static_cast<std::size_t>(label) >= std::max<std::size_t>(m.output_size(), 2))
            throw ConfigError("label " + std::to_string(label) + " out of range for this network");

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    Gradient g = zero_gradient(m);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(start + cfg.batch_size, order.size());
            zero_out(g);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i)
                batch_loss += accumulate_gradient(m, data.row(order[i]), data.labels[order[i]],
                                                  loss, g);
            if (!std::isfinite(batch_loss))
                throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch));
            double scale = -cfg.learning_rate / double(end - start);
            for (std::size_t li = 0; li < m.layers.size(); ++li) {
                auto& ml = m.layers[li];
                auto& gl = g.layers[li];
                kernels::axpy(scale, gl.weights.data().data(), ml.weights.data().data(),
                              ml.weights.data().size());
                kernels::axpy(scale, gl.biases.data(), ml.biases.data(), ml.biases.size());
            }
        }
    }
}

} // namespace

double loss_and_gradient(const FFNN& m, const Vector& x, int label, Loss loss, Gradient& g) {
    g = zero_gradient(m);
    return accumulate_gradient(m, x, label, loss, g);
}

FFNN train(const Dataset& data, const TrainConfig& cfg) {
    if (data.size() == 0)
        throw ConfigError("cannot train on an empty dataset");
    std::size_t n_in = data.rows.cols();
    if (n_in == 0)
        throw ConfigError("dataset has no features");
    if (cfg.hidden_size == 0)
        throw ConfigError("hidden_size must be positive");
    std::size_t n_classes = std::max<std::size_t>(data.num_classes(), 2);

    std::vector<std::size_t> sizes;
    OutputMode mode;
    if (cfg.loss == Loss::binary_cross_entropy) {
        if (n_classes != 2)
            throw ConfigError("binary-cross-entropy needs binary labels");
        sizes = {n_in, cfg.hidden_size, 1};
        mode = OutputMode::single_sigmoid;
    } else {
        sizes = {n_in, cfg.hidden_size, n_classes};
        mode = n_classes == 2 ? OutputMode::two_logit : OutputMode::multiclass;
    }

    FFNN m(sizes, mode);
    Rng rng(cfg.seed);
    for (auto& l : m.layers) {
        double r = 1.0 / std::sqrt(double(l.weights.cols()));
        for (double& w : l.weights.data())
            w = rng.uniform(-r, r);
    }
    sgd(m, data, cfg, rng);
    return m;
}

FFNN retrain_incremental(const FFNN& model, const Dataset& subset, const TrainConfig& cfg) {
    model.validate();
    if (subset.size() == 0)
        return model;
    if (subset.rows.cols() != model.input_size())
        throw ShapeError("subset has " + std::to_string(subset.rows.cols()) +
                         " features, model expects " + std::to_string(model.input_size()));
    FFNN m = model;
    Rng rng(cfg.seed);
    sgd(m, subset, cfg, rng);
    return m;
}

double accuracy(const FFNN& m, const Dataset& data) {
    if (data.size() == 0)
        return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (classify(m, data.row(i)) == data.labels[i])
            ++hits;
    return double(hits) / double(data.size());
}

nlohmann::json model_to_json(const FFNN& m) {
    m.validate();
    nlohmann::json j;
    j["layer_sizes"] = m.layer_sizes();
    j["output_mode"] = std::string(output_mode_name(m.output_mode));
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : m.layers) {
        nlohmann::json jl;
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t r = 0; r < l.weights.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t c = 0; c < l.weights.cols(); ++c)
                row.push_back(format_double(l.weights(r, c)));
            rows.push_back(std::move(row));
        }
        jl["weights"] = std::move(rows);
        nlohmann::json biases = nlohmann::json::array();
        for (double b : l.biases)
            biases.push_back(format_double(b));
        jl["biases"] = std::move(biases);
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    return j;
}

FFNN model_from_json(const nlohmann::json& j) {
    if (!j.is_object())
        throw ParseError("model: expected a JSON object");
    for (const char* field : {"layer_sizes", "layers", "output_mode"})
        if (!j.contains(field))
            throw ParseError(std::string("model: missing field \"") + field + "\"");
    if (!j["layer_sizes"].is_array() || j["layer_sizes"].size() < 2)
        throw ParseError("layer_sizes: expected an array of at least two sizes");

    std::vector<std::size_t> sizes;
    for (const auto& s : j["layer_sizes"]) {
        if (!s.is_number_unsigned() || s.get<std::size_t>() == 0)
            throw ParseError("layer_sizes: entries must be positive integers");
        sizes.push_back(s.get<std::size_t>());
    }

    FFNN m;
    m.output_mode = output_mode_from(j["output_mode"].get<std::string>());
    const auto& jlayers = j["layers"];
    if (!jlayers.is_array() || jlayers.size() != sizes.size() - 1)
        throw ParseError("layers: expected " + std::to_string(sizes.size() - 1) + " entries");

    for (std::size_t i = 0; i < jlayers.size(); ++i) {
        const auto& jl = jlayers[i];
        std::string ctx = "layers[" + std::to_string(i) + "]";
        if (!jl.is_object() || !jl.contains("weights") || !jl.contains("biases"))
            throw ParseError(ctx + ": needs \"weights\" and \"biases\"");
        const auto& jw = jl["weights"];
        if (!jw.is_array() || jw.size() != sizes[i + 1])
            throw ShapeError(ctx + ".weights: expected " + std::to_string(sizes[i + 1]) + " rows");
        Layer l;
        l.weights = Matrix(sizes[i + 1], sizes[i]);
        for (std::size_t r = 0; r < jw.size(); ++r) {
            if (!jw[r].is_array() || jw[r].size() != sizes[i])
                throw ShapeError(ctx + ".weights[" + std::to_string(r) + "]: expected " +
                                 std::to_string(sizes[i]) + " columns");
            for (std::size_t c = 0; c < sizes[i]; ++c)
                l.weights(r, c) = json_number(jw[r][c], ctx + ".weights");
        }
        const auto& jb = jl["biases"];
        if (!jb.is_array() || (jb.size() != 0 && jb.size() != sizes[i + 1]))
            throw ShapeError(ctx + ".biases: expected 0 or " + std::to_string(sizes[i + 1]) +
                             " entries");
        for (const auto& b : jb)
            l.biases.push_back(json_number(b, ctx + ".biases"));
        m.layers.push_back(std::move(l));
    }
    m.validate();
    return m;
}

void save_model(const FFNN& m, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ParseError("cannot write file: " + path);
    out << model_to_json(m).dump(2) << "\n";
}

FFNN load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON: " + e.what());
    }
    return model_from_json(j);
}

} // namespace cfxcert
