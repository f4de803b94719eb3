#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "cfxcert/matrix.hpp"

namespace cfxcert {

enum class Sense { minimize, maximize };
enum class Relation { le, ge, eq };

struct Constraint {
    Vector coeffs;
    Relation rel = Relation::le;
    double rhs = 0.0;
};

// Dense LP. Variable bounds may be +-inf; constraints are dense rows.
struct LinearProgram {
    std::size_t num_vars = 0;
    Sense sense = Sense::minimize;
    Vector objective;
    Vector lower;
    Vector upper;
    std::vector<Constraint> constraints;

    static constexpr double inf = std::numeric_limits<double>::infinity();

    std::size_t add_var(double lo, double hi, double obj = 0.0) {
        lower.push_back(lo);
        upper.push_back(hi);
        objective.push_back(obj);
        return num_vars++;
    }
    // Sparse helper: terms are (var, coeff) pairs expanded into a dense row.
    // Variables added after a row simply do not appear in it: rows may be
    // shorter than num_vars and missing trailing coefficients read as zero.
    void add_constraint(const std::vector<std::pair<std::size_t, double>>& terms, Relation rel,
                        double rhs) {
        Constraint c;
        c.coeffs.assign(num_vars, 0.0);
        for (auto [v, a] : terms)
            c.coeffs[v] += a;
        c.rel = rel;
        c.rhs = rhs;
        constraints.push_back(std::move(c));
    }
    void validate() const;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double value = 0.0;
    Vector x;
    std::size_t iterations = 0;
};

// Two-phase primal simplex on a dense tableau. Dantzig pricing with a
// switch to Bland's rule after a degenerate stretch; feasibility tolerance
// 1e-7. Throws SolverError on iteration-limit breakdown.
LpResult solve_lp(const LinearProgram& lp);

} // namespace cfxcert
