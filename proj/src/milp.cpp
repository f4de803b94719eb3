#include "cfxcert/milp.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "cfxcert/common.hpp"
#include "cfxcert/jsonio.hpp"

namespace cfxcert {

MilpResult solve_milp(const MILPProblem& p, std::size_t node_budget) {
    p.lp.validate();
    for (std::size_t b : p.binaries)
        if (b >= p.lp.num_vars)
            throw ConfigError("binary variable index out of range");

    const double inf = LinearProgram::inf;
    LinearProgram base = p.lp;
    const bool maximize = base.sense == Sense::maximize;
    if (maximize) {
        for (double& c : base.objective)
            c = -c;
        base.sense = Sense::minimize;
    }
    for (std::size_t b : p.binaries) {
        base.lower[b] = std::max(base.lower[b], 0.0);
        base.upper[b] = std::min(base.upper[b], 1.0);
    }

    struct Node {
        Vector lower, upper;
        double bound;
        std::size_t id;
    };
    auto worse = [](const Node& a, const Node& b) {
        if (a.bound != b.bound)
            return a.bound > b.bound;
        return a.id > b.id;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);
    open.push({base.lower, base.upper, -inf, 0});

    MilpResult res;
    double inc_value = inf;
    Vector inc_x;
    bool have_inc = false;
    std::size_t next_id = 1;
    double best_open_bound = -inf;

    auto report_value = [&](double v) { return maximize ? -v : v; };

    while (!open.empty()) {
        Node nd = open.top();
        open.pop();
        best_open_bound = nd.bound;
        if (have_inc && nd.bound >= inc_value - 1e-6)
            break; // best-bound order: nothing left can improve
        if (res.nodes >= node_budget) {
            double bound = have_inc ? report_value(inc_value) : report_value(best_open_bound);
            throw ResourceError("branch-and-bound node budget of " + std::to_string(node_budget) +
                                    " exhausted",
                                bound);
        }
        ++res.nodes;

        LinearProgram sub = base;
        sub.lower = nd.lower;
        sub.upper = nd.upper;
        LpResult lr = solve_lp(sub);
        res.lp_iterations += lr.iterations;
        if (lr.status == LpStatus::infeasible)
            continue;
        if (lr.status == LpStatus::unbounded)
            throw SolverError("relaxation is unbounded; binaries cannot bound the objective");
        if (have_inc && lr.value >= inc_value - 1e-6)
            continue;

        long branch_var = -1;
        double branch_frac = 1e-6;
        for (std::size_t b : p.binaries) {
            double v = std::clamp(lr.x[b], 0.0, 1.0);
            double frac = std::min(v, 1.0 - v);
            if (frac > branch_frac) {
                branch_frac = frac;
                branch_var = static_cast<long>(b);
            }
        }
        if (branch_var < 0) {
            if (!have_inc || lr.value < inc_value) {
                have_inc = true;
                inc_value = lr.value;
                inc_x = lr.x;
                for (std::size_t b : p.binaries)
                    inc_x[b] = std::round(std::clamp(inc_x[b], 0.0, 1.0));
            }
            continue;
        }

        Node zero{nd.lower, nd.upper, lr.value, next_id++};
        zero.upper[static_cast<std::size_t>(branch_var)] = 0.0;
        Node one{std::move(nd.lower), std::move(nd.upper), lr.value, next_id++};
        one.lower[static_cast<std::size_t>(branch_var)] = 1.0;
        open.push(std::move(zero));
        open.push(std::move(one));
    }

    if (!have_inc) {
        res.status = MilpStatus::infeasible;
        return res;
    }
    res.status = MilpStatus::optimal;
    res.value = report_value(inc_value);
    res.x = std::move(inc_x);
    return res;
}

InnEncoding encode_inn_box(const INN& inn, const Vector& xlo, const Vector& xhi) {
    std::vector<std::vector<Interval>> pre;
    inn_forward_box(inn, xlo, xhi, &pre); // validates shapes and the box

    InnEncoding enc;
    LinearProgram& lp = enc.problem.lp;

    std::vector<std::size_t> inputs;
    for (std::size_t j = 0; j < xlo.size(); ++j)
        inputs.push_back(lp.add_var(xlo[j], xhi[j]));
    enc.node_vars.push_back(std::move(inputs));

    // All variables first: constraint rows are dense over the final count.
    for (std::size_t li = 0; li < inn.layers.size(); ++li) {
        const bool hidden = li + 1 < inn.layers.size();
        std::size_t rows = inn.layers[li].w_lo.rows();
        std::vector<std::size_t> vars, bins;
        std::vector<double> ms;
        for (std::size_t j = 0; j < rows; ++j) {
            const Interval& pij = pre[li][j];
            if (hidden) {
                vars.push_back(lp.add_var(0.0, std::max(0.0, pij.hi)));
                bins.push_back(lp.add_var(0.0, 1.0));
                ms.push_back(std::max(std::fabs(pij.lo), std::fabs(pij.hi)) + 1.0);
            } else {
                vars.push_back(lp.add_var(pij.lo, pij.hi));
            }
        }
        enc.node_vars.push_back(std::move(vars));
        if (hidden) {
            enc.problem.binaries.insert(enc.problem.binaries.end(), bins.begin(), bins.end());
            enc.relu_binaries.push_back(std::move(bins));
            enc.big_m.push_back(std::move(ms));
        }
    }

    for (std::size_t li = 0; li < inn.layers.size(); ++li) {
        const InnLayer& l = inn.layers[li];
        const bool hidden = li + 1 < inn.layers.size();
        const auto& prev = enc.node_vars[li];
        for (std::size_t j = 0; j < l.w_lo.rows(); ++j) {
            std::size_t xv = enc.node_vars[li + 1][j];
            double blo = l.b_lo.empty() ? 0.0 : l.b_lo[j];
            double bhi = l.b_hi.empty() ? 0.0 : l.b_hi[j];

            std::vector<std::pair<std::size_t, double>> upper_row{{xv, 1.0}};
            std::vector<std::pair<std::size_t, double>> lower_row{{xv, 1.0}};
            for (std::size_t c = 0; c < prev.size(); ++c) {
                upper_row.push_back({prev[c], -l.w_hi(j, c)});
                lower_row.push_back({prev[c], -l.w_lo(j, c)});
            }
            if (hidden) {
                double m = enc.big_m[li][j];
                std::size_t d = enc.relu_binaries[li][j];
                lp.add_constraint({{xv, 1.0}, {d, m}}, Relation::le, m);
                upper_row.push_back({d, -m});
            }
            lp.add_constraint(upper_row, Relation::le, bhi);
            lp.add_constraint(lower_row, Relation::ge, blo);
        }
    }
    return enc;
}

InnEncoding encode_inn(const INN& inn, const Vector& x) {
    return encode_inn_box(inn, x, x);
}

Interval output_range(const INN& inn, const Vector& x, std::size_t output, std::size_t* nodes,
                      std::size_t* lp_iterations) {
    if (output >= inn.output_size())
        throw ShapeError("output index out of range");
    Interval prop = inn_forward(inn, x)[output];

    InnEncoding enc = encode_inn(inn, x);
    enc.problem.lp.objective[enc.output_vars()[output]] = 1.0;

    auto run = [&](Sense sense) {
        enc.problem.lp.sense = sense;
        MilpResult r = solve_milp(enc.problem);
        if (nodes)
            *nodes += r.nodes;
        if (lp_iterations)
            *lp_iterations += r.lp_iterations;
        if (r.status != MilpStatus::optimal)
            throw SolverError("output range query was infeasible; the encoding is inconsistent");
        return r.value;
    };
    double lo = run(Sense::minimize);
    double hi = run(Sense::maximize);
    // The MILP may tighten propagation but never legitimately widen it;
    // clamp away solver tolerance noise.
    lo = std::clamp(lo, prop.lo, prop.hi);
    hi = std::clamp(hi, prop.lo, prop.hi);
    if (lo > hi)
        std::swap(lo, hi);
    return Interval(lo, hi);
}

RangeResult output_ranges(const INN& inn, const Vector& x) {
    RangeResult out;
    for (std::size_t j = 0; j < inn.output_size(); ++j)
        out.outputs.push_back(output_range(inn, x, j, &out.nodes, &out.lp_iterations));
    return out;
}

namespace {

void write_terms(std::ostream& out, const std::vector<std::pair<std::size_t, double>>& terms) {
    bool first = true;
    for (auto [v, c] : terms) {
        if (c == 0.0)
            continue;
        if (first) {
            out << (c < 0 ? "- " : "") << format_double(std::fabs(c)) << " x" << v;
            first = false;
        } else {
            out << (c < 0 ? " - " : " + ") << format_double(std::fabs(c)) << " x" << v;
        }
    }
    if (first)
        out << "0 x0";
}

} // namespace

void write_lp_format(const MILPProblem& p, std::ostream& out) {
    const auto& lp = p.lp;
    out << (lp.sense == Sense::maximize ? "Maximize" : "Minimize") << "\n obj: ";
    std::vector<std::pair<std::size_t, double>> obj;
    for (std::size_t i = 0; i < lp.num_vars; ++i)
        obj.push_back({i, lp.objective[i]});
    write_terms(out, obj);
    out << "\nSubject To\n";
    for (std::size_t r = 0; r < lp.constraints.size(); ++r) {
        const auto& c = lp.constraints[r];
        out << " c" << r << ": ";
        std::vector<std::pair<std::size_t, double>> terms;
        for (std::size_t i = 0; i < c.coeffs.size(); ++i)
            terms.push_back({i, c.coeffs[i]});
        write_terms(out, terms);
        const char* rel = c.rel == Relation::le ? "<=" : (c.rel == Relation::ge ? ">=" : "=");
        out << " " << rel << " " << format_double(c.rhs) << "\n";
    }
    out << "Bounds\n";
    const double inf = LinearProgram::inf;
    for (std::size_t i = 0; i < lp.num_vars; ++i) {
        double lo = lp.lower[i], hi = lp.upper[i];
        out << " ";
        if (lo == -inf && hi == inf)
            out << "x" << i << " free";
        else if (lo == -inf)
            out << "-inf <= x" << i << " <= " << format_double(hi);
        else if (hi == inf)
            out << "x" << i << " >= " << format_double(lo);
        else
            out << format_double(lo) << " <= x" << i << " <= " << format_double(hi);
        out << "\n";
    }
    if (!p.binaries.empty()) {
        out << "Binary\n";
        for (std::size_t b : p.binaries)
            out << " x" << b << "\n";
    }
    out << "End\n";
}

} // namespace cfxcert
