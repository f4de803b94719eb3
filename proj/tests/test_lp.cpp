#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cfxcert/common.hpp"
#include "cfxcert/lp.hpp"
#include "cfxcert/rng.hpp"
#include "oracles.hpp"

using namespace cfxcert;

namespace {
constexpr double kInf = LinearProgram::inf;
}

TEST_CASE("single variable, upper bounded") {
    LinearProgram lp;
    lp.sense = Sense::maximize;
    std::size_t x = lp.add_var(0.0, kInf, 1.0);
    lp.add_constraint({{x, 1.0}}, Relation::le, 3.0);
    auto r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(3.0));
    CHECK(r.x[0] == doctest::Approx(3.0));
}

TEST_CASE("contradictory constraints are infeasible") {
    LinearProgram lp;
    std::size_t x = lp.add_var(-kInf, kInf, 1.0);
    lp.add_constraint({{x, 1.0}}, Relation::ge, 1.0);
    lp.add_constraint({{x, 1.0}}, Relation::le, 0.0);
    CHECK(solve_lp(lp).status == LpStatus::infeasible);

    LinearProgram box;
    box.add_var(2.0, 1.0, 1.0); // empty box
    CHECK(solve_lp(box).status == LpStatus::infeasible);
}

TEST_CASE("unbounded direction is detected") {
    LinearProgram lp;
    lp.sense = Sense::maximize;
    lp.add_var(0.0, kInf, 1.0);
    CHECK(solve_lp(lp).status == LpStatus::unbounded);

    LinearProgram down;
    down.sense = Sense::minimize;
    down.add_var(-kInf, 5.0, 1.0);
    CHECK(solve_lp(down).status == LpStatus::unbounded);
}

TEST_CASE("classic two-variable maximization") {
    // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36
    LinearProgram lp;
    lp.sense = Sense::maximize;
    std::size_t x = lp.add_var(0.0, kInf, 3.0);
    std::size_t y = lp.add_var(0.0, kInf, 5.0);
    lp.add_constraint({{x, 1.0}}, Relation::le, 4.0);
    lp.add_constraint({{y, 2.0}}, Relation::le, 12.0);
    lp.add_constraint({{x, 3.0}, {y, 2.0}}, Relation::le, 18.0);
    auto r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(36.0));
    CHECK(r.x[0] == doctest::Approx(2.0));
    CHECK(r.x[1] == doctest::Approx(6.0));
}

TEST_CASE("equality constraints and negative lower bounds") {
    // min x + y st x + y = 2, x - y >= -1, x in [-5,5], y in [-5,5]
    LinearProgram lp;
    std::size_t x = lp.add_var(-5.0, 5.0, 1.0);
    std::size_t y = lp.add_var(-5.0, 5.0, 1.0);
    lp.add_constraint({{x, 1.0}, {y, 1.0}}, Relation::eq, 2.0);
    lp.add_constraint({{x, 1.0}, {y, -1.0}}, Relation::ge, -1.0);
    auto r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(2.0));
    CHECK(r.x[0] + r.x[1] == doctest::Approx(2.0));
}

TEST_CASE("free variables") {
    // min |style| objective: min y st y >= x - 2, y >= -x + 1, x free, y free
    LinearProgram lp;
    std::size_t x = lp.add_var(-kInf, kInf, 0.0);
    std::size_t y = lp.add_var(-kInf, kInf, 1.0);
    lp.add_constraint({{y, 1.0}, {x, -1.0}}, Relation::ge, -2.0);
    lp.add_constraint({{y, 1.0}, {x, 1.0}}, Relation::ge, 1.0);
    auto r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(-0.5));
    CHECK(r.x[0] == doctest::Approx(1.5));
}

TEST_CASE("fixed variables substitute as constants") {
    LinearProgram lp;
    std::size_t x = lp.add_var(2.0, 2.0, 1.0);
    std::size_t y = lp.add_var(0.0, 10.0, 1.0);
    lp.add_constraint({{x, 1.0}, {y, 1.0}}, Relation::ge, 5.0);
    auto r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.x[0] == 2.0);
    CHECK(r.value == doctest::Approx(5.0));
    CHECK(r.x[1] == doctest::Approx(3.0));
}

TEST_CASE("degenerate vertices do not cycle") {
    // Many redundant constraints through the optimum.
    LinearProgram lp;
    lp.sense = Sense::maximize;
    std::size_t x = lp.add_var(0.0, kInf, 1.0);
    std::size_t y = lp.add_var(0.0, kInf, 1.0);
    for (int i = 0; i < 6; ++i)
        lp.add_constraint({{x, 1.0 + 0.1 * i}, {y, 1.0}}, Relation::le, 1.0 + 0.1 * i);
    lp.add_constraint({{x, 1.0}}, Relation::le, 1.0);
    lp.add_constraint({{y, 1.0}}, Relation::le, 1.0);
    auto r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(1.0));
}

TEST_CASE("random boxed LPs match vertex enumeration") {
    Rng rng(99);
    int solved = 0;
    for (int trial = 0; trial < 120; ++trial) {
        std::size_t n = 1 + rng.uniform_index(3);
        LinearProgram lp;
        lp.sense = trial % 2 == 0 ? Sense::minimize : Sense::maximize;
        for (std::size_t i = 0; i < n; ++i) {
            double lo = rng.uniform(-3.0, 0.0);
            double hi = lo + rng.uniform(0.5, 4.0);
            lp.add_var(lo, hi, rng.uniform(-2.0, 2.0));
        }
        std::size_t rows = rng.uniform_index(4);
        for (std::size_t r = 0; r < rows; ++r) {
            Constraint c;
            c.coeffs.resize(n);
            for (auto& a : c.coeffs)
                a = rng.uniform(-1.5, 1.5);
            int rel = int(rng.uniform_index(3));
            c.rel = rel == 0 ? Relation::le : (rel == 1 ? Relation::ge : Relation::eq);
            c.rhs = rng.uniform(-2.0, 2.0);
            lp.constraints.push_back(c);
        }

        auto got = solve_lp(lp);
        auto want = oracle::vertex_enumerate(lp);
        if (!want.feasible) {
            // The oracle only certifies infeasibility up to its tolerance;
            // accept either infeasible or a boundary-touching optimum.
            if (got.status == LpStatus::optimal)
                continue;
            CHECK(got.status == LpStatus::infeasible);
            continue;
        }
        REQUIRE(got.status == LpStatus::optimal);
        double want_val = lp.sense == Sense::minimize ? want.min_value : want.max_value;
        CHECK(got.value == doctest::Approx(want_val).epsilon(1e-6));
        ++solved;
    }
    CHECK(solved > 40);
}

TEST_CASE("solutions satisfy their constraints") {
    Rng rng(123);
    for (int trial = 0; trial < 60; ++trial) {
        std::size_t n = 2 + rng.uniform_index(4);
        LinearProgram lp;
        for (std::size_t i = 0; i < n; ++i)
            lp.add_var(0.0, rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0));
        for (int r = 0; r < 3; ++r) {
            Constraint c;
            c.coeffs.resize(n);
            for (auto& a : c.coeffs)
                a = rng.uniform(0.0, 1.0);
            c.rel = Relation::le;
            c.rhs = rng.uniform(0.5, 2.0);
            lp.constraints.push_back(c);
        }
        auto r = solve_lp(lp);
        REQUIRE(r.status == LpStatus::optimal);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(r.x[i] >= lp.lower[i] - 1e-7);
            CHECK(r.x[i] <= lp.upper[i] + 1e-7);
        }
        for (const auto& c : lp.constraints) {
            double s = 0;
            for (std::size_t i = 0; i < n; ++i)
                s += c.coeffs[i] * r.x[i];
            CHECK(s <= c.rhs + 1e-7);
        }
    }
}

TEST_CASE("validation rejects malformed programs") {
    LinearProgram lp;
    lp.num_vars = 2;
    lp.objective = {1.0};
    CHECK_THROWS_AS(solve_lp(lp), ShapeError);

    LinearProgram nan_obj;
    nan_obj.add_var(0, 1, std::nan(""));
    CHECK_THROWS_AS(solve_lp(nan_obj), ConfigError);

    LinearProgram bad_row;
    bad_row.add_var(0, 1, 1.0);
    Constraint c;
    c.coeffs = {1.0, 2.0};
    bad_row.constraints.push_back(c);
    CHECK_THROWS_AS(solve_lp(bad_row), ShapeError);
}
