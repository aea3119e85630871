#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>

#include "censaft/qp.hpp"
#include "censaft/rng.hpp"
#include "helpers.hpp"

using namespace censaft;

namespace {

Matrix random_spd(Rng& rng, std::size_t p) {
    Matrix g(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) g(i, j) = rng.normal();
    }
    Matrix d(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            double s = i == j ? 1.0 : 0.0;
            for (std::size_t k = 0; k < p; ++k) s += g(k, i) * g(k, j);
            d(i, j) = s;
        }
    }
    return d;
}

// Random strictly convex problem, feasible by construction: bounds sit at or
// below the constraint values of a reference point.
QpProblem random_problem(Rng& rng, std::size_t p, std::size_t m) {
    QpProblem prob;
    prob.D = random_spd(rng, p);
    prob.d.resize(p);
    for (double& v : prob.d) v = 2.0 * rng.normal();
    prob.A = Matrix(m, p);
    Vector ref(p);
    for (double& v : ref) v = rng.normal();
    prob.b0.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double ab = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            prob.A(i, j) = rng.normal();
            ab += prob.A(i, j) * ref[j];
        }
        const double slack = rng.uniform01() < 0.5 ? 0.0 : rng.uniform01();
        prob.b0[i] = ab - slack;
    }
    return prob;
}

double objective(const QpProblem& prob, const Vector& b) {
    double v = -dot(prob.d, b);
    for (std::size_t i = 0; i < b.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            v += 0.5 * b[i] * prob.D(i, j) * b[j];
        }
    }
    return v;
}

bool feasible(const QpProblem& prob, const Vector& b, double tol) {
    for (std::size_t i = 0; i < prob.A.rows(); ++i) {
        double ab = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) ab += prob.A(i, j) * b[j];
        if (ab < prob.b0[i] - tol) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("unconstrained problems reduce to the normal equations") {
    Rng rng(7);
    for (int rep = 0; rep < 25; ++rep) {
        const std::size_t p = 1 + static_cast<std::size_t>(rng.uniform01() * 8);
        QpProblem prob;
        prob.D = random_spd(rng, p);
        prob.d.resize(p);
        for (double& v : prob.d) v = rng.normal();
        prob.A = Matrix(0, p);

        const QpSolution sol = solve_qp(prob);
        const Vector direct = cholesky_solve(cholesky(prob.D), prob.d);
        CHECK(testutil::max_abs_diff(sol.b, direct) < 1e-12);
        CHECK(sol.kkt_residual <= 1e-8);
        CHECK(sol.active_set.empty());
    }
}

TEST_CASE("single bound becomes active exactly when it cuts the optimum") {
    QpProblem prob;
    prob.D = Matrix(1, 1);
    prob.D(0, 0) = 1.0;
    prob.d = {0.3};
    prob.A = Matrix(1, 1);
    prob.A(0, 0) = 1.0;
    prob.b0 = {0.7};

    const QpSolution active = solve_qp(prob);
    CHECK(active.b[0] == Catch::Approx(0.7));
    REQUIRE(active.active_set.size() == 1);

    prob.b0 = {-0.5};
    const QpSolution inactive = solve_qp(prob);
    CHECK(inactive.b[0] == Catch::Approx(0.3));
    CHECK(inactive.active_set.empty());
}

TEST_CASE("projection onto a simplex-like constraint") {
    QpProblem prob;
    prob.D = Matrix(2, 2);
    prob.D(0, 0) = prob.D(1, 1) = 1.0;
    prob.d = {0.0, 0.0};
    prob.A = Matrix(1, 2);
    prob.A(0, 0) = prob.A(0, 1) = 1.0;
    prob.b0 = {1.0};
    const QpSolution sol = solve_qp(prob);
    CHECK(sol.b[0] == Catch::Approx(0.5));
    CHECK(sol.b[1] == Catch::Approx(0.5));
    CHECK(sol.kkt_residual <= 1e-8);
}

TEST_CASE("random constrained problems match the dual oracle") {
    Rng rng(1234);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t p = 1 + static_cast<std::size_t>(rng.uniform01() * 8);
        const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform01() * 12);
        const QpProblem prob = random_problem(rng, p, m);

        const QpSolution sol = solve_qp(prob);
        CHECK(sol.kkt_residual <= 1e-8);
        CHECK(feasible(prob, sol.b, 1e-8));

        const Vector oracle = qp_dual_pg_oracle(prob);
        double gap = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            gap += (sol.b[j] - oracle[j]) * (sol.b[j] - oracle[j]);
        }
        CHECK(std::sqrt(gap) < 1e-6);
    }
}

TEST_CASE("two-dimensional solutions beat a brute-force feasible grid") {
    Rng rng(99);
    for (int rep = 0; rep < 10; ++rep) {
        const QpProblem prob = random_problem(rng, 2, 4);
        const QpSolution sol = solve_qp(prob);
        double best = 1e300;
        for (double u = -4.0; u <= 4.0; u += 0.01) {
            for (double v = -4.0; v <= 4.0; v += 0.01) {
                const Vector b{u, v};
                if (!feasible(prob, b, 0.0)) continue;
                best = std::min(best, objective(prob, b));
            }
        }
        if (best < 1e300) {
            CHECK(objective(prob, sol.b) <= best + 1e-4);
        }
    }
}

TEST_CASE("zero constraint rows") {
    QpProblem prob;
    prob.D = Matrix(2, 2);
    prob.D(0, 0) = prob.D(1, 1) = 1.0;
    prob.d = {1.0, -1.0};
    prob.A = Matrix(1, 2);
    prob.b0 = {-1.0};
    const QpSolution sol = solve_qp(prob);
    CHECK(sol.b[0] == Catch::Approx(1.0));
    CHECK(sol.b[1] == Catch::Approx(-1.0));

    prob.b0 = {0.5};
    CHECK_THROWS_AS(solve_qp(prob), Infeasible);
}

TEST_CASE("contradictory constraints are infeasible") {
    QpProblem prob;
    prob.D = Matrix(1, 1);
    prob.D(0, 0) = 1.0;
    prob.d = {0.0};
    prob.A = Matrix(2, 1);
    prob.A(0, 0) = 1.0;
    prob.A(1, 0) = -1.0;
    prob.b0 = {1.0, 0.0};
    CHECK_THROWS_AS(solve_qp(prob), Infeasible);
}

TEST_CASE("input validation") {
    QpProblem prob;
    prob.D = Matrix(2, 2);
    prob.D(0, 0) = prob.D(1, 1) = 1.0;
    prob.D(0, 1) = 0.3;
    prob.D(1, 0) = -0.3;
    prob.d = {0.0, 0.0};
    prob.A = Matrix(0, 2);
    CHECK_THROWS_AS(solve_qp(prob), InvalidDataset);

    prob.D(1, 0) = 0.3;
    prob.D(0, 0) = -1.0;
    CHECK_THROWS_AS(solve_qp(prob), NotPositiveDefinite);

    prob.D(0, 0) = 1.0;
    CHECK_THROWS_AS(solve_qp(prob, 0.0), InvalidDataset);
}

TEST_CASE("iteration cap returns the best iterate with a flag") {
    Rng rng(5);
    const QpProblem prob = random_problem(rng, 6, 10);
    const QpSolution sol = solve_qp(prob, 1e-8, 1);
    CHECK(sol.hit_iteration_limit);
    CHECK(sol.iterations == 1);
}

TEST_CASE("constrained solves stay fast") {
    Rng rng(77);
    const QpProblem prob = random_problem(rng, 8, 12);
    const auto start = std::chrono::steady_clock::now();
    for (int rep = 0; rep < 20; ++rep) solve_qp(prob);
    const auto elapsed = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    CHECK(elapsed / 20.0 < 10.0);
}
