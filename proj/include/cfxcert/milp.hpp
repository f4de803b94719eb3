#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

#include "cfxcert/interval.hpp"
#include "cfxcert/lp.hpp"

namespace cfxcert {

// LP plus a set of variables restricted to {0, 1}.
struct MILPProblem {
    LinearProgram lp;
    std::vector<std::size_t> binaries;
};

enum class MilpStatus { optimal, infeasible };

struct MilpResult {
    MilpStatus status = MilpStatus::infeasible;
    double value = 0.0;
    Vector x;
    std::size_t nodes = 0;
    std::size_t lp_iterations = 0;
};

// Branch and bound with best-bound node selection and branching on the
// most fractional binary (ties by listing order). Proves optimality to an
// absolute gap of 1e-6. Exhausting the node budget raises ResourceError
// carrying the best bound seen.
MilpResult solve_milp(const MILPProblem& p, std::size_t node_budget = 200000);

// Big-M encoding of an interval network over a box of inputs. Variable
// layout: one continuous variable per node per layer; one binary per
// hidden node switching its ReLU phase. Per hidden node (prev activations
// y, interval weights [wl,wu], bias [bl,bu], binary d):
//   x >= 0,  x <= M(1-d),  x <= wu.y + bu + M d,  x >= wl.y + bl
// and per output node the affine sandwich wl.y + bl <= x <= wu.y + bu.
// M is sized per node from interval propagation of the input box.
// The sandwich reads wl/wu as coefficient-wise extremes, which is valid
// because activations and (scaled) inputs are non-negative.
struct InnEncoding {
    MILPProblem problem;
    std::vector<std::vector<std::size_t>> node_vars;     // [layer][node], layer 0 = inputs
    std::vector<std::vector<std::size_t>> relu_binaries; // [hidden layer][node]
    std::vector<std::vector<double>> big_m;              // [hidden layer][node]

    const std::vector<std::size_t>& input_vars() const { return node_vars.front(); }
    const std::vector<std::size_t>& output_vars() const { return node_vars.back(); }
};

InnEncoding encode_inn_box(const INN& inn, const Vector& xlo, const Vector& xhi);
// Inputs pinned to a concrete point.
InnEncoding encode_inn(const INN& inn, const Vector& x);

// Reachable range of one output node, tightened by the MILP over the
// interval encoding; never wider than plain propagation.
Interval output_range(const INN& inn, const Vector& x, std::size_t output,
                      std::size_t* nodes = nullptr, std::size_t* lp_iterations = nullptr);

struct RangeResult {
    std::vector<Interval> outputs;
    std::size_t nodes = 0;
    std::size_t lp_iterations = 0;
};
RangeResult output_ranges(const INN& inn, const Vector& x);

// Text dump in the industry LP-file subset (objective, constraints,
// bounds, binary section) for cross-checking with external solvers.
void write_lp_format(const MILPProblem& p, std::ostream& out);

} // namespace cfxcert
