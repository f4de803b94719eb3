#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cfxcert/milp.hpp"
#include "cfxcert/nn.hpp"
#include "cfxcert/rng.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cfxcert;

namespace {

struct BruteResult {
    bool feasible = false;
    double value = 0.0;
};

// Enumerate every binary assignment and solve the remaining LP.
BruteResult brute_force_milp(const MILPProblem& p) {
    BruteResult best;
    std::size_t nb = p.binaries.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << nb); ++mask) {
        LinearProgram sub = p.lp;
        for (std::size_t i = 0; i < nb; ++i) {
            double v = static_cast<double>((mask >> i) & 1U);
            std::size_t b = p.binaries[i];
            if (v < sub.lower[b] - 1e-12 || v > sub.upper[b] + 1e-12)
                goto next_mask;
            sub.lower[b] = v;
            sub.upper[b] = v;
        }
        {
            LpResult r = solve_lp(sub);
            if (r.status == LpStatus::optimal) {
                bool better = p.lp.sense == Sense::minimize ? r.value < best.value
                                                            : r.value > best.value;
                if (!best.feasible || better) {
                    best.feasible = true;
                    best.value = r.value;
                }
            }
        }
    next_mask:;
    }
    return best;
}

bool solution_feasible(const LinearProgram& lp, const Vector& x, double tol) {
    for (std::size_t i = 0; i < lp.num_vars; ++i)
        if (x[i] < lp.lower[i] - tol || x[i] > lp.upper[i] + tol)
            return false;
    for (const auto& c : lp.constraints) {
        double lhs = 0.0;
        for (std::size_t i = 0; i < c.coeffs.size(); ++i)
            lhs += c.coeffs[i] * x[i];
        if (c.rel == Relation::le && lhs > c.rhs + tol)
            return false;
        if (c.rel == Relation::ge && lhs < c.rhs - tol)
            return false;
        if (c.rel == Relation::eq && std::fabs(lhs - c.rhs) > tol)
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("knapsack with three binaries") {
    MILPProblem p;
    auto a = p.lp.add_var(0, 1, 5.0);
    auto b = p.lp.add_var(0, 1, 4.0);
    auto c = p.lp.add_var(0, 1, 3.0);
    p.lp.sense = Sense::maximize;
    p.lp.add_constraint({{a, 2.0}, {b, 3.0}, {c, 1.0}}, Relation::le, 3.0);
    p.binaries = {a, b, c};

    MilpResult r = solve_milp(p);
    REQUIRE(r.status == MilpStatus::optimal);
    CHECK(r.value == doctest::Approx(8.0).epsilon(1e-9));
    CHECK(r.x[a] == doctest::Approx(1.0));
    CHECK(r.x[b] == doctest::Approx(0.0));
    CHECK(r.x[c] == doctest::Approx(1.0));
    CHECK(r.nodes >= 1);
    CHECK(r.lp_iterations >= 1);
}

TEST_CASE("integral relaxation is accepted at the root") {
    MILPProblem p;
    auto a = p.lp.add_var(0, 1, 1.0);
    auto y = p.lp.add_var(0, 10, 1.0);
    p.lp.sense = Sense::maximize;
    p.lp.add_constraint({{a, 1.0}, {y, 1.0}}, Relation::le, 4.0);
    p.binaries = {a};

    MilpResult r = solve_milp(p);
    REQUIRE(r.status == MilpStatus::optimal);
    CHECK(r.value == doctest::Approx(4.0));
    CHECK(r.nodes == 1);
}

TEST_CASE("infeasible binary system") {
    MILPProblem p;
    auto a = p.lp.add_var(0, 1);
    auto b = p.lp.add_var(0, 1);
    p.lp.add_constraint({{a, 1.0}, {b, 1.0}}, Relation::ge, 3.0);
    p.binaries = {a, b};
    CHECK(solve_milp(p).status == MilpStatus::infeasible);
}

TEST_CASE("mixed continuous and binary optimum") {
    // max 3a + y with y <= 2 + 4(1-a): a=0 gives 6, a=1 gives 5.
    MILPProblem p;
    auto a = p.lp.add_var(0, 1, 3.0);
    auto y = p.lp.add_var(0, 10, 1.0);
    p.lp.sense = Sense::maximize;
    p.lp.add_constraint({{y, 1.0}, {a, 4.0}}, Relation::le, 6.0);
    p.binaries = {a};
    MilpResult r = solve_milp(p);
    REQUIRE(r.status == MilpStatus::optimal);
    CHECK(r.value == doctest::Approx(6.0));
    CHECK(r.x[a] == doctest::Approx(0.0));
}

TEST_CASE("random instances agree with brute-force enumeration") {
    Rng rng(2024);
    int solved = 0;
    for (int trial = 0; trial < 80; ++trial) {
        MILPProblem p;
        std::size_t nb = 1 + rng.uniform_index(6);
        std::size_t nc = rng.uniform_index(3);
        for (std::size_t i = 0; i < nb; ++i)
            p.binaries.push_back(p.lp.add_var(0, 1, rng.uniform(-3, 3)));
        for (std::size_t i = 0; i < nc; ++i) {
            double lo = rng.uniform(-2, 0);
            p.lp.add_var(lo, lo + rng.uniform(0, 3), rng.uniform(-3, 3));
        }
        p.lp.sense = rng.uniform() < 0.5 ? Sense::minimize : Sense::maximize;
        std::size_t rows = rng.uniform_index(4);
        for (std::size_t r = 0; r < rows; ++r) {
            std::vector<std::pair<std::size_t, double>> terms;
            for (std::size_t v = 0; v < p.lp.num_vars; ++v)
                if (rng.uniform() < 0.7)
                    terms.push_back({v, rng.uniform(-2, 2)});
            if (terms.empty())
                continue;
            Relation rel = rng.uniform() < 0.45
                               ? Relation::le
                               : (rng.uniform() < 0.8 ? Relation::ge : Relation::eq);
            p.lp.add_constraint(terms, rel, rng.uniform(-2, 2));
        }

        BruteResult want = brute_force_milp(p);
        MilpResult got = solve_milp(p);
        if (!want.feasible) {
            CHECK(got.status == MilpStatus::infeasible);
            continue;
        }
        ++solved;
        REQUIRE(got.status == MilpStatus::optimal);
        CHECK(std::fabs(got.value - want.value) <= 1e-6);
        CHECK(solution_feasible(p.lp, got.x, 1e-6));
        for (std::size_t b : p.binaries) {
            double v = got.x[b];
            CHECK(std::fabs(v - std::round(v)) < 1e-6);
        }
    }
    CHECK(solved >= 30); // the generator must not degenerate into all-infeasible
}

TEST_CASE("node budget exhaustion raises ResourceError with a bound") {
    MILPProblem p;
    for (int i = 0; i < 6; ++i)
        p.binaries.push_back(p.lp.add_var(0, 1, 1.0 + 0.1 * i));
    p.lp.sense = Sense::maximize;
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t b : p.binaries)
        terms.push_back({b, 2.0});
    p.lp.add_constraint(terms, Relation::le, 7.0); // fractional relaxation
    try {
        solve_milp(p, 1);
        FAIL("expected ResourceError");
    } catch (const ResourceError& e) {
        CHECK(std::isfinite(e.incumbent_bound));
        CHECK(e.incumbent_bound <= 7.0); // bound on a maximize problem stays meaningful
    }
}

TEST_CASE("encoding structure for the two-feature difference net") {
    FFNN net = testutil::two_feature_diff_net();
    INN inn = build_abstraction(net, PlausibleShiftSet{0.1});
    InnEncoding enc = encode_inn(inn, {2.1, 2.0});

    REQUIRE(enc.node_vars.size() == 3);
    CHECK(enc.node_vars[0].size() == 2);
    CHECK(enc.node_vars[1].size() == 2);
    CHECK(enc.node_vars[2].size() == 2);
    REQUIRE(enc.relu_binaries.size() == 1);
    CHECK(enc.relu_binaries[0].size() == 2);
    CHECK(enc.problem.binaries.size() == 2);
    // 2 inputs + 2 hidden + 2 binaries + 2 outputs
    CHECK(enc.problem.lp.num_vars == 8);
    // 3 rows per hidden node, 2 per output node
    CHECK(enc.problem.lp.constraints.size() == 10);
    REQUIRE(enc.big_m.size() == 1);
    for (double m : enc.big_m[0])
        CHECK(m >= 1.0);
    // inputs are pinned
    for (std::size_t v : enc.input_vars())
        CHECK(enc.problem.lp.lower[v] == enc.problem.lp.upper[v]);
}

TEST_CASE("point network ranges collapse to the concrete forward pass") {
    Rng rng(7);
    for (int trial = 0; trial < 6; ++trial) {
        FFNN net = testutil::random_net({3, 4, 2}, OutputMode::two_logit, 100 + trial);
        INN inn = make_point_inn(net);
        Vector x = {rng.uniform(), rng.uniform(), rng.uniform()};
        Vector y = forward(net, x);
        RangeResult rr = output_ranges(inn, x);
        REQUIRE(rr.outputs.size() == 2);
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(std::fabs(rr.outputs[j].lo - y[j]) <= 1e-6);
            CHECK(std::fabs(rr.outputs[j].hi - y[j]) <= 1e-6);
        }
        CHECK(rr.nodes >= 2);
        CHECK(rr.lp_iterations >= 1);
    }
}

TEST_CASE("difference net ranges match hand propagation") {
    FFNN net = testutil::two_feature_diff_net();
    INN inn = build_abstraction(net, PlausibleShiftSet{0.1});

    // Decided point: the first logit stays strictly positive.
    Interval r0 = output_range(inn, {2.6, 2.0}, 0);
    Interval r1 = output_range(inn, {2.6, 2.0}, 1);
    CHECK(r0.lo >= 0.126 - 1e-6);
    CHECK(r0.hi <= 1.166 + 1e-6);
    CHECK(r1.lo >= -0.106 - 1e-6);
    CHECK(r1.hi <= 0.106 + 1e-6);
    CHECK(r0.lo > r1.hi);

    // Undecided point: the tightened range still sits inside propagation.
    auto prop = inn_forward(inn, {2.1, 2.0});
    RangeResult rr = output_ranges(inn, {2.1, 2.0});
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(rr.outputs[j].lo >= prop[j].lo - 1e-9);
        CHECK(rr.outputs[j].hi <= prop[j].hi + 1e-9);
    }
}

TEST_CASE("sampled shifts land inside the tightened range") {
    for (int trial = 0; trial < 4; ++trial) {
        FFNN net = testutil::random_net({2, 3, 3, 2}, OutputMode::two_logit, 40 + trial);
        PlausibleShiftSet shifts{0.05};
        INN inn = build_abstraction(net, shifts);
        Rng rng(500 + trial);
        Vector x = {rng.uniform(), rng.uniform()};

        auto prop = inn_forward(inn, x);
        RangeResult rr = output_ranges(inn, x);
        for (std::size_t j = 0; j < rr.outputs.size(); ++j) {
            CHECK(rr.outputs[j].lo >= prop[j].lo - 1e-6);
            CHECK(rr.outputs[j].hi <= prop[j].hi + 1e-6);
        }
        for (int s = 0; s < 40; ++s) {
            FFNN shifted = sample_shift(net, shifts, 9000 + s);
            Vector y = forward(shifted, x);
            for (std::size_t j = 0; j < y.size(); ++j) {
                CHECK(y[j] >= rr.outputs[j].lo - 1e-6);
                CHECK(y[j] <= rr.outputs[j].hi + 1e-6);
            }
        }
    }
}

TEST_CASE("results are insensitive to the big-M magnitude") {
    FFNN net = testutil::random_net({2, 3, 2}, OutputMode::two_logit, 77);
    INN inn = build_abstraction(net, PlausibleShiftSet{0.1});
    Vector x = {0.4, 0.7};

    InnEncoding enc = encode_inn(inn, x);
    MILPProblem inflated = enc.problem;
    // Rows touching a binary: x + M d <= M (positive coefficient, rhs = M)
    // and x - wu.y - M d <= bhi (negative coefficient). Scale M by 10.
    for (auto& c : inflated.lp.constraints) {
        for (std::size_t b : inflated.binaries) {
            if (c.coeffs[b] > 0.0) {
                c.coeffs[b] *= 10.0;
                c.rhs *= 10.0;
            } else if (c.coeffs[b] < 0.0) {
                c.coeffs[b] *= 10.0;
            }
        }
    }
    for (std::size_t j = 0; j < 2; ++j) {
        for (Sense sense : {Sense::minimize, Sense::maximize}) {
            MILPProblem a = enc.problem, b = inflated;
            a.lp.objective.assign(a.lp.num_vars, 0.0);
            b.lp.objective.assign(b.lp.num_vars, 0.0);
            a.lp.objective[enc.output_vars()[j]] = 1.0;
            b.lp.objective[enc.output_vars()[j]] = 1.0;
            a.lp.sense = b.lp.sense = sense;
            MilpResult ra = solve_milp(a), rb = solve_milp(b);
            REQUIRE(ra.status == MilpStatus::optimal);
            REQUIRE(rb.status == MilpStatus::optimal);
            CHECK(std::fabs(ra.value - rb.value) <= 1e-6);
        }
    }
}

TEST_CASE("output index validation") {
    FFNN net = testutil::two_feature_diff_net();
    INN inn = make_point_inn(net);
    CHECK_THROWS_AS(output_range(inn, {1.0, 2.0}, 5), ShapeError);
}

TEST_CASE("lp-format dump is well formed") {
    FFNN net = testutil::two_feature_diff_net();
    INN inn = build_abstraction(net, PlausibleShiftSet{0.1});
    InnEncoding enc = encode_inn(inn, {2.1, 2.0});
    enc.problem.lp.objective[enc.output_vars()[0]] = 1.0;

    std::ostringstream out;
    write_lp_format(enc.problem, out);
    std::string text = out.str();
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("obj:") != std::string::npos);
    CHECK(text.find("Subject To") != std::string::npos);
    CHECK(text.find("Bounds") != std::string::npos);
    CHECK(text.find("Binary") != std::string::npos);
    CHECK(text.rfind("End\n") == text.size() - 4);
    CHECK(text.find("x0") != std::string::npos);
    // every constraint line carries a relation
    std::istringstream lines(text);
    std::string line;
    bool in_rows = false;
    while (std::getline(lines, line)) {
        if (line == "Subject To") {
            in_rows = true;
            continue;
        }
        if (line == "Bounds")
            break;
        if (in_rows)
            CHECK((line.find("<=") != std::string::npos || line.find(">=") != std::string::npos ||
                   line.find(" = ") != std::string::npos));
    }
}
