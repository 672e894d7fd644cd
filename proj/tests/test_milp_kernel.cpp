#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "gridmesh/milp.hpp"
#include "gridmesh/milp_solver.hpp"
#include "gridmesh/mps.hpp"
#include "gridmesh/simplex.hpp"
#include "oracle_lp.hpp"

using namespace gridmesh;

TEST_CASE("lp: single variable lower bound", "[kernel]") {
    MilpModel m;
    int x = m.add_var("x", -kInf, kInf, VarKind::Continuous, 1.0);
    m.add_row({{x, 1.0}}, RowSense::GE, 3.0);
    auto sol = solve_lp(m);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE(sol.objective == Catch::Approx(3.0).margin(1e-9));
}

TEST_CASE("lp: contradictory constraints are infeasible", "[kernel]") {
    MilpModel m;
    int x = m.add_var("x", 0.0, kInf, VarKind::Continuous, 0.0);
    m.add_row({{x, 1.0}}, RowSense::LE, -1.0);
    auto sol = solve_lp(m);
    REQUIRE(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("lp: unbounded detection", "[kernel]") {
    MilpModel m;
    int x = m.add_var("x", 0.0, kInf, VarKind::Continuous, -1.0);
    m.add_row({{x, 1.0}}, RowSense::GE, 0.0);
    auto sol = solve_lp(m);
    REQUIRE(sol.status == SolveStatus::Unbounded);
}

namespace {

MilpModel random_lp(std::mt19937& rng, int nvars, int nrows) {
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    std::uniform_real_distribution<double> pos(0.0, 5.0);
    std::uniform_int_distribution<int> sense(0, 2);
    MilpModel m;
    std::vector<double> x0(nvars);
    for (int j = 0; j < nvars; ++j) {
        x0[j] = pos(rng);
        m.add_var("x" + std::to_string(j), 0.0, 10.0, VarKind::Continuous, coef(rng));
    }
    // rows built around a known interior point so the LP is feasible
    for (int i = 0; i < nrows; ++i) {
        Row row;
        double lhs = 0.0;
        for (int j = 0; j < nvars; ++j) {
            if ((i + j) % 3 == 0) continue;
            const double a = coef(rng);
            row.coeffs.push_back({j, a});
            lhs += a * x0[j];
        }
        const int s = sense(rng);
        if (s == 0) { row.sense = RowSense::LE; row.rhs = lhs + pos(rng); }
        else if (s == 1) { row.sense = RowSense::GE; row.rhs = lhs - pos(rng); }
        else { row.sense = RowSense::EQ; row.rhs = lhs; }
        m.add_row(std::move(row));
    }
    return m;
}

}  // namespace

TEST_CASE("lp: 20 random instances match dense tableau oracle", "[kernel]") {
    std::mt19937 rng(12345);
    for (int trial = 0; trial < 20; ++trial) {
        MilpModel m = random_lp(rng, 8 + trial % 23, 4 + trial % 11);
        auto got = solve_lp(m);
        auto want = oracle::tableau_solve(m);
        INFO("trial " << trial);
        REQUIRE(got.status == SolveStatus::Optimal);
        REQUIRE(want.status == oracle::LpResult::Status::Optimal);
        REQUIRE(got.objective == Catch::Approx(want.objective).margin(1e-7));
        REQUIRE(max_violation(m, got.values) < 1e-7);
    }
}

TEST_CASE("milp: knapsack optimum by enumeration", "[kernel]") {
    // max 5a+4b s.t. 3a+2b <= 4  ==  min -5a-4b
    MilpModel m;
    int a = m.add_var("a", 0, 1, VarKind::Binary, -5.0);
    int b = m.add_var("b", 0, 1, VarKind::Binary, -4.0);
    m.add_row({{a, 3.0}, {b, 2.0}}, RowSense::LE, 4.0);
    auto sol = solve_milp(m);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE(sol.objective == Catch::Approx(-5.0).margin(1e-9));
    REQUIRE(sol.values[static_cast<size_t>(a)] == Catch::Approx(1.0));
    REQUIRE(sol.values[static_cast<size_t>(b)] == Catch::Approx(0.0));
}

TEST_CASE("milp: pure LP model matches solve_lp", "[kernel]") {
    std::mt19937 rng(7);
    MilpModel m = random_lp(rng, 12, 6);
    auto a = solve_milp(m);
    auto b = solve_lp(m);
    REQUIRE(a.status == SolveStatus::Optimal);
    REQUIRE(a.objective == Catch::Approx(b.objective).margin(1e-9));
}

TEST_CASE("milp: 20 random instances match exhaustive enumeration", "[kernel]") {
    std::mt19937 rng(999);
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    std::uniform_real_distribution<double> pos(0.0, 4.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int nbin = 4 + trial % 9;   // up to 12 binaries
        const int ncont = 3;
        MilpModel m;
        for (int j = 0; j < nbin; ++j)
            m.add_var("d" + std::to_string(j), 0, 1, VarKind::Binary, coef(rng));
        for (int j = 0; j < ncont; ++j)
            m.add_var("x" + std::to_string(j), 0.0, 5.0, VarKind::Continuous, coef(rng));
        for (int i = 0; i < 4; ++i) {
            Row row;
            double lhs = 0.0;
            for (int j = 0; j < nbin + ncont; ++j) {
                if ((i + j) % 2 == 0) continue;
                const double a = coef(rng);
                row.coeffs.push_back({j, a});
                lhs += a * (j < nbin ? 0.5 : 1.0);
            }
            row.sense = RowSense::LE;
            row.rhs = lhs + pos(rng);
            m.add_row(std::move(row));
        }
        auto got = solve_milp(m);
        auto want = oracle::enumerate_milp(m);
        INFO("trial " << trial);
        REQUIRE(got.status == SolveStatus::Optimal);
        REQUIRE(want.status == oracle::LpResult::Status::Optimal);
        REQUIRE(got.objective == Catch::Approx(want.objective).margin(1e-6));
        REQUIRE(max_violation(m, got.values) < 1e-7);
    }
}

TEST_CASE("milp: weak duality and determinism", "[kernel]") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    MilpModel m;
    for (int j = 0; j < 10; ++j)
        m.add_var("d" + std::to_string(j), 0, 1, VarKind::Binary, coef(rng));
    for (int i = 0; i < 5; ++i) {
        Row row;
        for (int j = 0; j < 10; ++j)
            if ((i + j) % 2) row.coeffs.push_back({j, coef(rng)});
        row.sense = RowSense::GE;
        row.rhs = -1.0;
        m.add_row(std::move(row));
    }
    auto a = solve_milp(m);
    auto b = solve_milp(m);
    REQUIRE(a.status == SolveStatus::Optimal);
    REQUIRE(a.best_bound <= a.objective + 1e-12);
    REQUIRE(a.values == b.values);  // bit-identical
    REQUIRE(a.objective == b.objective);
}

TEST_CASE("milp: integer variables with wider ranges", "[kernel]") {
    MilpModel m;
    int x = m.add_var("x", 0.0, 7.0, VarKind::Integer, -1.0);
    int y = m.add_var("y", 0.0, 10.0, VarKind::Continuous, -0.1);
    m.add_row({{x, 2.0}, {y, 1.0}}, RowSense::LE, 9.0);
    auto got = solve_milp(m);
    auto want = oracle::enumerate_milp(m);
    REQUIRE(got.status == SolveStatus::Optimal);
    REQUIRE(got.objective == Catch::Approx(want.objective).margin(1e-7));
}

TEST_CASE("mps export is well-formed", "[kernel]") {
    MilpModel m;
    int a = m.add_var("a", 0, 1, VarKind::Binary, -5.0);
    int x = m.add_var("x", -2.0, 2.0, VarKind::Continuous, 1.0);
    m.add_row({{a, 3.0}, {x, 2.0}}, RowSense::LE, 4.0);
    std::ostringstream os;
    write_mps(m, os);
    const std::string s = os.str();
    REQUIRE(s.find("NAME") == 0);
    REQUIRE(s.find("ROWS") != std::string::npos);
    REQUIRE(s.find("INTORG") != std::string::npos);
    REQUIRE(s.find("INTEND") != std::string::npos);
    REQUIRE(s.find("ENDATA") != std::string::npos);
    // fixed-column: every COLUMNS data line starts with four spaces
    std::istringstream is(s);
    std::string line;
    bool in_cols = false;
    while (std::getline(is, line)) {
        if (line == "COLUMNS") { in_cols = true; continue; }
        if (line == "RHS") break;
        if (in_cols) REQUIRE(line.rfind("    ", 0) == 0);
    }
}

TEST_CASE("model validation rejects bad input", "[kernel]") {
    MilpModel m;
    int x = m.add_var("x", 0.0, kInf, VarKind::Continuous, 0.0);
    m.add_row({{x + 5, 1.0}}, RowSense::LE, 1.0);
    REQUIRE_THROWS_AS(m.validate(), ModelError);

    MilpModel m2;
    m2.add_var("bad", 0.0, kInf, VarKind::Integer, 1.0);  // integer needs finite bounds
    REQUIRE_THROWS_AS(m2.validate(), ModelError);
}
