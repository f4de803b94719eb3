#include "cfxcert/interval.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "cfxcert/common.hpp"
#include "cfxcert/jsonio.hpp"
#include "cfxcert/kernels.hpp"
#include "cfxcert/rng.hpp"

namespace cfxcert {

Interval::Interval(double l, double h) : lo(l), hi(h) {
    if (!std::isfinite(l) || !std::isfinite(h) || l > h)
        throw ConfigError("invalid interval [" + std::to_string(l) + "," + std::to_string(h) + "]");
}

void INN::validate() const {
    if (layers.empty())
        throw ShapeError("interval network has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const InnLayer& l = layers[i];
        if (l.w_lo.rows() != l.w_hi.rows() || l.w_lo.cols() != l.w_hi.cols())
            throw ShapeError("layer " + std::to_string(i) + ": bound plane shapes differ");
        if (l.w_lo.rows() == 0 || l.w_lo.cols() == 0)
            throw ShapeError("layer " + std::to_string(i) + ": empty weight matrix");
        if (i > 0 && l.w_lo.cols() != layers[i - 1].w_lo.rows())
            throw ShapeError("layer " + std::to_string(i) + ": width does not match previous layer");
        if (l.b_lo.size() != l.b_hi.size() ||
            (!l.b_lo.empty() && l.b_lo.size() != l.w_lo.rows()))
            throw ShapeError("layer " + std::to_string(i) + ": bias bound length mismatch");
        for (std::size_t t = 0; t < l.w_lo.data().size(); ++t)
            if (!(l.w_lo.data()[t] <= l.w_hi.data()[t]))
                throw ConfigError("layer " + std::to_string(i) + ": weight interval with lo > hi");
        for (std::size_t t = 0; t < l.b_lo.size(); ++t)
            if (!(l.b_lo[t] <= l.b_hi[t]))
                throw ConfigError("layer " + std::to_string(i) + ": bias interval with lo > hi");
    }
    if (output_mode == OutputMode::single_sigmoid && output_size() != 1)
        throw ConfigError("single-sigmoid requires exactly one output node");
}

PlausibleShiftSet::PlausibleShiftSet(double delta_, double p_) : delta(delta_), p(p_) {
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw ConfigError("shift radius delta must be a positive finite value");
    if (std::isnan(p) || p < 0.0)
        throw ConfigError("shift norm p must be in [0, inf]");
}

double p_distance(const FFNN& a, const FFNN& b, double p) {
    if (!a.same_topology(b))
        throw ShapeError("p_distance requires identical topology");
    if (std::isnan(p) || p < 0.0)
        throw ConfigError("p must be in [0, inf]");

    const bool inf_norm = std::isinf(p);
    double acc = 0.0;
    auto fold = [&](const double* x, const double* y, std::size_t n) {
        if (n == 0)
            return;
        if (inf_norm) {
            acc = std::max(acc, kernels::max_abs_diff(x, y, n));
        } else if (p == 2.0) {
            acc += kernels::sum_sq_diff(x, y, n);
        } else if (p == 1.0) {
            acc += kernels::sum_abs_diff(x, y, n);
        } else if (p == 0.0) {
            for (std::size_t i = 0; i < n; ++i)
                acc += x[i] != y[i] ? 1.0 : 0.0;
        } else {
            for (std::size_t i = 0; i < n; ++i)
                acc += std::pow(std::fabs(x[i] - y[i]), p);
        }
    };
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        fold(a.layers[i].weights.data().data(), b.layers[i].weights.data().data(),
             a.layers[i].weights.data().size());
        fold(a.layers[i].biases.data(), b.layers[i].biases.data(), a.layers[i].biases.size());
    }
    if (inf_norm || p == 0.0 || p == 1.0)
        return acc;
    if (p == 2.0)
        return std::sqrt(acc);
    return std::pow(acc, 1.0 / p);
}

namespace {

INN widen(const FFNN& model, double delta) {
    model.validate();
    INN inn;
    inn.output_mode = model.output_mode;
    for (const auto& l : model.layers) {
        InnLayer il;
        il.w_lo = l.weights;
        il.w_hi = l.weights;
        for (double& v : il.w_lo.data())
            v -= delta;
        for (double& v : il.w_hi.data())
            v += delta;
        il.b_lo = l.biases;
        il.b_hi = l.biases;
        for (double& v : il.b_lo)
            v -= delta;
        for (double& v : il.b_hi)
            v += delta;
        inn.layers.push_back(std::move(il));
    }
    return inn;
}

} // namespace

INN build_abstraction(const FFNN& model, const PlausibleShiftSet& shifts) {
    return widen(model, shifts.delta);
}

INN make_point_inn(const FFNN& model) {
    return widen(model, 0.0);
}

std::vector<Interval> inn_forward_box(const INN& inn, const Vector& xlo, const Vector& xhi,
                                      std::vector<std::vector<Interval>>* pre) {
    inn.validate();
    if (xlo.size() != inn.input_size() || xhi.size() != xlo.size())
        throw ShapeError("input has " + std::to_string(xlo.size()) +
                         " features, network expects " + std::to_string(inn.input_size()));
    for (std::size_t i = 0; i < xlo.size(); ++i)
        if (!(xlo[i] <= xhi[i]))
            throw ConfigError("input box with lo > hi at feature " + std::to_string(i));
    if (pre)
        pre->clear();

    Vector cur_lo = xlo, cur_hi = xhi;
    for (std::size_t li = 0; li < inn.layers.size(); ++li) {
        const InnLayer& l = inn.layers[li];
        std::size_t rows = l.w_lo.rows();
        Vector next_lo(rows), next_hi(rows);
        std::vector<Interval> pre_row;
        for (std::size_t j = 0; j < rows; ++j) {
            double lo = 0.0, hi = 0.0;
            kernels::interval_dot(l.w_lo.row(j), l.w_hi.row(j), cur_lo.data(), cur_hi.data(),
                                  cur_lo.size(), lo, hi);
            if (!l.b_lo.empty()) {
                lo += l.b_lo[j];
                hi += l.b_hi[j];
            }
            if (pre)
                pre_row.push_back(Interval(lo, hi));
            if (li + 1 < inn.layers.size()) {
                lo = std::max(lo, 0.0);
                hi = std::max(hi, 0.0);
            }
            next_lo[j] = lo;
            next_hi[j] = hi;
        }
        if (pre)
            pre->push_back(std::move(pre_row));
        cur_lo = std::move(next_lo);
        cur_hi = std::move(next_hi);
    }
    std::vector<Interval> out;
    out.reserve(cur_lo.size());
    for (std::size_t j = 0; j < cur_lo.size(); ++j)
        out.push_back(Interval(cur_lo[j], cur_hi[j]));
    return out;
}

std::vector<Interval> inn_forward(const INN& inn, const Vector& x) {
    return inn_forward_box(inn, x, x);
}

std::optional<int> decide_intervals(OutputMode mode, const std::vector<Interval>& outputs) {
    if (mode == OutputMode::single_sigmoid) {
        if (outputs.size() != 1)
            throw ShapeError("single-sigmoid expects one output interval");
        if (outputs[0].lo > 0.0)
            return 1;
        if (outputs[0].hi < 0.0)
            return 0;
        return std::nullopt;
    }
    for (std::size_t c = 0; c < outputs.size(); ++c) {
        bool wins = true;
        for (std::size_t j = 0; j < outputs.size() && wins; ++j)
            if (j != c && !(outputs[c].lo > outputs[j].hi))
                wins = false;
        if (wins)
            return static_cast<int>(c);
    }
    return std::nullopt;
}

std::optional<int> inn_classify(const INN& inn, const Vector& x) {
    return decide_intervals(inn.output_mode, inn_forward(inn, x));
}

FFNN sample_shift(const FFNN& model, const PlausibleShiftSet& shifts, std::uint64_t seed) {
    if (!std::isinf(shifts.p))
        throw ConfigError("sample_shift supports only p=inf shift sets");
    model.validate();
    FFNN out = model;
    Rng rng(seed);
    for (auto& l : out.layers) {
        for (double& w : l.weights.data())
            w += rng.uniform(-shifts.delta, shifts.delta);
        for (double& b : l.biases)
            b += rng.uniform(-shifts.delta, shifts.delta);
    }
    return out;
}

nlohmann::json inn_to_json(const INN& inn) {
    inn.validate();
    nlohmann::json j;
    std::vector<std::size_t> sizes;
    sizes.push_back(inn.input_size());
    for (const auto& l : inn.layers)
        sizes.push_back(l.w_lo.rows());
    j["layer_sizes"] = sizes;
    j["output_mode"] = std::string(output_mode_name(inn.output_mode));
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : inn.layers) {
        nlohmann::json jl;
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t r = 0; r < l.w_lo.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t c = 0; c < l.w_lo.cols(); ++c)
                row.push_back(
                    nlohmann::json::array({format_double(l.w_lo(r, c)), format_double(l.w_hi(r, c))}));
            rows.push_back(std::move(row));
        }
        jl["weights"] = std::move(rows);
        nlohmann::json biases = nlohmann::json::array();
        for (std::size_t t = 0; t < l.b_lo.size(); ++t)
            biases.push_back(nlohmann::json::array({format_double(l.b_lo[t]), format_double(l.b_hi[t])}));
        jl["biases"] = std::move(biases);
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    return j;
}

INN inn_from_json(const nlohmann::json& j) {
    if (!j.is_object())
        throw ParseError("interval model: expected a JSON object");
    for (const char* field : {"layer_sizes", "layers", "output_mode"})
        if (!j.contains(field))
            throw ParseError(std::string("interval model: missing field \"") + field + "\"");
    std::vector<std::size_t> sizes;
    for (const auto& s : j["layer_sizes"])
        sizes.push_back(s.get<std::size_t>());
    if (sizes.size() < 2)
        throw ParseError("layer_sizes: expected at least two sizes");

    auto bound_pair = [](const nlohmann::json& cell, const std::string& ctx, double& lo, double& hi) {
        if (!cell.is_array() || cell.size() != 2)
            throw ParseError(ctx + ": expected [lo, hi]");
        lo = json_number(cell[0], ctx);
        hi = json_number(cell[1], ctx);
    };

    INN inn;
    inn.output_mode = output_mode_from(j["output_mode"].get<std::string>());
    const auto& jlayers = j["layers"];
    if (!jlayers.is_array() || jlayers.size() != sizes.size() - 1)
        throw ParseError("layers: expected " + std::to_string(sizes.size() - 1) + " entries");
    for (std::size_t i = 0; i < jlayers.size(); ++i) {
        const auto& jl = jlayers[i];
        std::string ctx = "layers[" + std::to_string(i) + "]";
        InnLayer l;
        l.w_lo = Matrix(sizes[i + 1], sizes[i]);
        l.w_hi = Matrix(sizes[i + 1], sizes[i]);
        const auto& jw = jl.at("weights");
        if (!jw.is_array() || jw.size() != sizes[i + 1])
            throw ShapeError(ctx + ".weights: expected " + std::to_string(sizes[i + 1]) + " rows");
        for (std::size_t r = 0; r < jw.size(); ++r) {
            if (!jw[r].is_array() || jw[r].size() != sizes[i])
                throw ShapeError(ctx + ".weights: row " + std::to_string(r) + " has wrong width");
            for (std::size_t c = 0; c < sizes[i]; ++c)
                bound_pair(jw[r][c], ctx + ".weights", l.w_lo(r, c), l.w_hi(r, c));
        }
        const auto& jb = jl.at("biases");
        if (!jb.is_array() || (jb.size() != 0 && jb.size() != sizes[i + 1]))
            throw ShapeError(ctx + ".biases: expected 0 or " + std::to_string(sizes[i + 1]) +
                             " entries");
        for (const auto& cell : jb) {
            double lo, hi;
            bound_pair(cell, ctx + ".biases", lo, hi);
            l.b_lo.push_back(lo);
            l.b_hi.push_back(hi);
        }
        inn.layers.push_back(std::move(l));
    }
    inn.validate();
    return inn;
}

void save_inn(const INN& inn, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ParseError("cannot write file: " + path);
    out << inn_to_json(inn).dump(2) << "\n";
}

INN load_inn(const std::string& path) {
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
    return inn_from_json(j);
}

} // namespace cfxcert
