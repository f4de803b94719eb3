#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfxcert/matrix.hpp"
#include "cfxcert/nn.hpp"

namespace cfxcert {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double l, double h);
    static Interval point(double v) { return Interval(v, v); }

    double width() const { return hi - lo; }
    bool contains(double v, double tol = 0.0) const { return v >= lo - tol && v <= hi + tol; }
    bool contains(const Interval& o, double tol = 0.0) const {
        return o.lo >= lo - tol && o.hi <= hi + tol;
    }
};

// Layer with independent interval bounds per weight/bias, stored as
// lower/upper planes so rows feed the interval dot kernel directly.
// Empty bias vectors mean the layer has no bias parameters.
struct InnLayer {
    Matrix w_lo, w_hi;
    Vector b_lo, b_hi;
};

// Network whose parameters are closed intervals. Hidden layers are ReLU,
// output layer affine, mirroring FFNN.
struct INN {
    std::vector<InnLayer> layers;
    OutputMode output_mode = OutputMode::two_logit;

    std::size_t input_size() const { return layers.empty() ? 0 : layers.front().w_lo.cols(); }
    std::size_t output_size() const { return layers.empty() ? 0 : layers.back().w_lo.rows(); }
    std::size_t hidden_layer_count() const { return layers.empty() ? 0 : layers.size() - 1; }
    void validate() const;
};

// All parameter vectors within p-distance delta of a base model.
struct PlausibleShiftSet {
    double delta;
    double p;

    explicit PlausibleShiftSet(double delta_, double p_ = std::numeric_limits<double>::infinity());
};

// p-norm of the elementwise parameter differences (weights and biases).
// p=inf: max abs difference; p=0: count of differing parameters.
double p_distance(const FFNN& a, const FFNN& b, double p);

// Widens every parameter to [v-delta, v+delta]. Exact for p=inf, a sound
// over-approximation for finite p.
INN build_abstraction(const FFNN& model, const PlausibleShiftSet& shifts);

// Interval network whose every parameter is the point interval [v, v].
INN make_point_inn(const FFNN& model);

// Interval propagation: exact four-endpoint products per term, interval
// sums, ReLU clamps on hidden layers. The box overload admits interval
// inputs; with pre != nullptr it also records pre-activation intervals per
// non-input layer (used to size big-M constants).
std::vector<Interval> inn_forward(const INN& inn, const Vector& x);
std::vector<Interval> inn_forward_box(const INN& inn, const Vector& xlo, const Vector& xhi,
                                      std::vector<std::vector<Interval>>* pre = nullptr);

// Decision rule shared by propagation and MILP-tightened verdicts:
// argmax modes need one output whose lower bound strictly beats every
// other upper bound; single-sigmoid needs the output interval strictly on
// one side of zero. nullopt = undecided.
std::optional<int> decide_intervals(OutputMode mode, const std::vector<Interval>& outputs);

std::optional<int> inn_classify(const INN& inn, const Vector& x);

// Uniform perturbation of every parameter within [-delta, delta]; only
// p=inf shift sets are supported.
FFNN sample_shift(const FFNN& model, const PlausibleShiftSet& shifts, std::uint64_t seed);

nlohmann::json inn_to_json(const INN& inn);
INN inn_from_json(const nlohmann::json& j);
void save_inn(const INN& inn, const std::string& path);
INN load_inn(const std::string& path);

} // namespace cfxcert
