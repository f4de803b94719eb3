#include "cfxcert/lp.hpp"

#include <algorithm>
#include <cmath>

#include "cfxcert/common.hpp"
#include "cfxcert/kernels.hpp"

namespace cfxcert {

namespace {

constexpr double kFeasTol = 1e-7;
constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-9;

// All variables are rewritten to x' >= 0 before building the tableau:
// finite lower bounds shift, upper-only bounds flip, free variables split
// into a positive and a negative part, pinned variables (lo == hi) become
// constants. Finite widths become explicit rows.
struct VarMap {
    enum Kind { shift, flip, split, fixed } kind = shift;
    double offset = 0.0;
    std::size_t col = 0;
    std::size_t col2 = 0; // split only
};

} // namespace

void LinearProgram::validate() const {
    if (objective.size() != num_vars || lower.size() != num_vars || upper.size() != num_vars)
        throw ShapeError("objective/bounds length does not match num_vars");
    for (double c : objective)
        if (!std::isfinite(c))
            throw ConfigError("non-finite objective coefficient");
    for (std::size_t i = 0; i < num_vars; ++i)
        if (std::isnan(lower[i]) || std::isnan(upper[i]))
            throw ConfigError("NaN variable bound");
    for (const auto& c : constraints) {
        if (c.coeffs.size() > num_vars)
            throw ShapeError("constraint row is wider than num_vars");
        for (double a : c.coeffs)
            if (!std::isfinite(a))
                throw ConfigError("non-finite constraint coefficient");
        if (!std::isfinite(c.rhs))
            throw ConfigError("non-finite constraint rhs");
    }
}

LpResult solve_lp(const LinearProgram& lp) {
    lp.validate();
    const double inf = LinearProgram::inf;
    LpResult res;

    // Variable rewrite.
    std::vector<VarMap> vm(lp.num_vars);
    std::size_t n_struct = 0;
    for (std::size_t i = 0; i < lp.num_vars; ++i) {
        double lo = lp.lower[i], hi = lp.upper[i];
        if (lo > hi)
            return res; // infeasible box
        if (lo == hi) {
            vm[i] = {VarMap::fixed, lo, 0, 0};
        } else if (lo == -inf && hi == inf) {
            vm[i] = {VarMap::split, 0.0, n_struct, n_struct + 1};
            n_struct += 2;
        } else if (lo == -inf) {
            vm[i] = {VarMap::flip, hi, n_struct, 0};
            ++n_struct;
        } else {
            vm[i] = {VarMap::shift, lo, n_struct, 0};
            ++n_struct;
        }
    }

    // Rows over the rewritten variables.
    struct Row {
        Vector a;
        Relation rel;
        double rhs;
    };
    std::vector<Row> rows;
    auto add_row = [&](const Vector& coeffs, Relation rel, double rhs) {
        Row r;
        r.a.assign(n_struct, 0.0);
        r.rel = rel;
        r.rhs = rhs;
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            double c = coeffs[i];
            if (c == 0.0)
                continue;
            switch (vm[i].kind) {
            case VarMap::shift:
                r.a[vm[i].col] += c;
                r.rhs -= c * vm[i].offset;
                break;
            case VarMap::flip:
                r.a[vm[i].col] -= c;
                r.rhs -= c * vm[i].offset;
                break;
            case VarMap::split:
                r.a[vm[i].col] += c;
                r.a[vm[i].col2] -= c;
                break;
            case VarMap::fixed:
                r.rhs -= c * vm[i].offset;
                break;
            }
        }
        rows.push_back(std::move(r));
    };
    for (const auto& c : lp.constraints)
        add_row(c.coeffs, c.rel, c.rhs);
    for (std::size_t i = 0; i < lp.num_vars; ++i) {
        if (vm[i].kind == VarMap::shift && lp.upper[i] != inf && lp.upper[i] > lp.lower[i]) {
            Row r;
            r.a.assign(n_struct, 0.0);
            r.a[vm[i].col] = 1.0;
            r.rel = Relation::le;
            r.rhs = lp.upper[i] - lp.lower[i];
            rows.push_back(std::move(r));
        }
    }

    // Normalize to rhs >= 0.
    for (auto& r : rows) {
        if (r.rhs < 0.0) {
            for (double& a : r.a)
                a = -a;
            r.rhs = -r.rhs;
            if (r.rel == Relation::le)
                r.rel = Relation::ge;
            else if (r.rel == Relation::ge)
                r.rel = Relation::le;
        }
    }

    const std::size_t m = rows.size();
    std::vector<long> slack_col(m, -1), art_col(m, -1);
    std::size_t next = n_struct;
    for (std::size_t r = 0; r < m; ++r)
        if (rows[r].rel != Relation::eq)
            slack_col[r] = static_cast<long>(next++);
    const std::size_t art_start = next;
    for (std::size_t r = 0; r < m; ++r)
        if (rows[r].rel != Relation::le)
            art_col[r] = static_cast<long>(next++);
    const std::size_t ncols = next;
    const std::size_t rhs_col = ncols;

    Matrix T(m, ncols + 1, 0.0);
    std::vector<std::size_t> basis(m);
    bool any_art = false;
    for (std::size_t r = 0; r < m; ++r) {
        std::copy(rows[r].a.begin(), rows[r].a.end(), T.row(r));
        T(r, rhs_col) = rows[r].rhs;
        if (slack_col[r] >= 0)
            T(r, static_cast<std::size_t>(slack_col[r])) = rows[r].rel == Relation::le ? 1.0 : -1.0;
        if (art_col[r] >= 0) {
            T(r, static_cast<std::size_t>(art_col[r])) = 1.0;
            basis[r] = static_cast<std::size_t>(art_col[r]);
            any_art = true;
        } else {
            basis[r] = static_cast<std::size_t>(slack_col[r]);
        }
    }

    std::size_t iterations = 0;
    const std::size_t iter_cap = 10000 + 200 * (m + ncols);

    auto pivot = [&](std::size_t pr, std::size_t pc) {
        double* prow = T.row(pr);
        double inv = 1.0 / prow[pc];
        for (std::size_t c = 0; c <= rhs_col; ++c)
            prow[c] *= inv;
        prow[pc] = 1.0;
        for (std::size_t r = 0; r < m; ++r) {
            if (r == pr)
                continue;
            double f = T(r, pc);
            if (f != 0.0) {
                kernels::axpy(-f, prow, T.row(r), rhs_col + 1);
                T(r, pc) = 0.0;
            }
        }
        basis[pr] = pc;
        ++iterations;
    };

    // Returns true on optimal, false on unbounded. Artificial columns
    // never enter.
    auto run_simplex = [&](Vector& cost) -> bool {
        bool bland = false;
        std::size_t degenerate_streak = 0;
        for (;;) {
            if (iterations > iter_cap)
                throw SolverError("simplex iteration limit reached (" +
                                  std::to_string(iterations) + " pivots)");
            long enter = -1;
            if (bland) {
                for (std::size_t c = 0; c < art_start; ++c)
                    if (cost[c] < -kCostTol) {
                        enter = static_cast<long>(c);
                        break;
                    }
            } else {
                double best = -kCostTol;
                for (std::size_t c = 0; c < art_start; ++c)
                    if (cost[c] < best) {
                        best = cost[c];
                        enter = static_cast<long>(c);
                    }
            }
            if (enter < 0)
                return true;
            const std::size_t pc = static_cast<std::size_t>(enter);

            long leave = -1;
            double best_ratio = inf;
            for (std::size_t r = 0; r < m; ++r) {
                double a = T(r, pc);
                if (a <= kPivotTol)
                    continue;
                double ratio = std::max(T(r, rhs_col), 0.0) / a;
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 && leave >= 0 &&
                     basis[r] < basis[static_cast<std::size_t>(leave)])) {
                    best_ratio = ratio;
                    leave = static_cast<long>(r);
                }
            }
            if (leave < 0)
                return false;
            if (best_ratio < 1e-12) {
                if (++degenerate_streak > 64)
                    bland = true;
            } else {
                degenerate_streak = 0;
            }

            double f = cost[pc];
            pivot(static_cast<std::size_t>(leave), pc);
            kernels::axpy(-f, T.row(static_cast<std::size_t>(leave)), cost.data(), rhs_col + 1);
            cost[pc] = 0.0;
        }
    };

    if (any_art) {
        Vector cost(ncols + 1, 0.0);
        for (std::size_t c = art_start; c < ncols; ++c)
            cost[c] = 1.0;
        for (std::size_t r = 0; r < m; ++r)
            if (basis[r] >= art_start)
                kernels::axpy(-1.0, T.row(r), cost.data(), rhs_col + 1);
        run_simplex(cost); // cannot be unbounded: cost bounded below by 0
        if (-cost[rhs_col] > kFeasTol) {
            res.status = LpStatus::infeasible;
            res.iterations = iterations;
            return res;
        }
        // Push leftover artificials out of the basis where possible; rows
        // with no eligible pivot are redundant and stay at zero.
        for (std::size_t r = 0; r < m; ++r) {
            if (basis[r] < art_start)
                continue;
            for (std::size_t c = 0; c < art_start; ++c) {
                if (std::fabs(T(r, c)) > kPivotTol) {
                    pivot(r, c);
                    break;
                }
            }
        }
    }

    // Phase 2 over the real objective (converted to minimize).
    Vector cost(ncols + 1, 0.0);
    double sign = lp.sense == Sense::maximize ? -1.0 : 1.0;
    for (std::size_t i = 0; i < lp.num_vars; ++i) {
        double c = sign * lp.objective[i];
        switch (vm[i].kind) {
        case VarMap::shift:
            cost[vm[i].col] += c;
            break;
        case VarMap::flip:
            cost[vm[i].col] -= c;
            break;
        case VarMap::split:
            cost[vm[i].col] += c;
            cost[vm[i].col2] -= c;
            break;
        case VarMap::fixed:
            break;
        }
    }
    for (std::size_t r = 0; r < m; ++r)
        if (cost[basis[r]] != 0.0) {
            double f = cost[basis[r]];
            kernels::axpy(-f, T.row(r), cost.data(), rhs_col + 1);
            cost[basis[r]] = 0.0;
        }
    if (!run_simplex(cost)) {
        res.status = LpStatus::unbounded;
        res.iterations = iterations;
        return res;
    }

    // Recover the original variables.
    Vector xs(ncols, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        xs[basis[r]] = std::max(T(r, rhs_col), 0.0);
    res.x.assign(lp.num_vars, 0.0);
    for (std::size_t i = 0; i < lp.num_vars; ++i) {
        switch (vm[i].kind) {
        case VarMap::shift:
            res.x[i] = xs[vm[i].col] + vm[i].offset;
            break;
        case VarMap::flip:
            res.x[i] = vm[i].offset - xs[vm[i].col];
            break;
        case VarMap::split:
            res.x[i] = xs[vm[i].col] - xs[vm[i].col2];
            break;
        case VarMap::fixed:
            res.x[i] = vm[i].offset;
            break;
        }
    }
    res.status = LpStatus::optimal;
    res.value = lp.num_vars
                    ? kernels::dot(lp.objective.data(), res.x.data(), lp.num_vars)
                    : 0.0;
    res.iterations = iterations;
    return res;
}

} // namespace cfxcert
