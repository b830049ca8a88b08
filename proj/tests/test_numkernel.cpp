#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "supdiff/extreal.hpp"
#include "supdiff/numeric.hpp"
#include "supdiff/scalar_min.hpp"
#include "supdiff/simplex.hpp"

using namespace supdiff;

TEST_CASE("extended reals follow the +inf dominant addition convention") {
    ExtReal pi = ExtReal::pos_inf(), ni = ExtReal::neg_inf();
    CHECK((pi + ni).is_pos_inf());
    CHECK((ni + pi).is_pos_inf());
    CHECK((ni + ni).is_neg_inf());
    CHECK((ExtReal(2.0) + ExtReal(3.0)).v == 5.0);
    CHECK((pi + ExtReal(-7.0)).is_pos_inf());
    CHECK(ext_max(ni, ExtReal(1.0)).v == 1.0);
    CHECK(ni < ExtReal(0.0));
    CHECK(ExtReal(0.0) < pi);
}

TEST_CASE("psd check accepts semidefinite and rejects indefinite matrices") {
    Matrix id = Matrix::identity(3);
    CHECK(is_psd(id));
    Matrix rank1(2, 2);
    rank1(0, 0) = 1; rank1(0, 1) = 1; rank1(1, 0) = 1; rank1(1, 1) = 1;
    CHECK(is_psd(rank1));
    Matrix indef = Matrix::identity(2);
    indef(1, 1) = -0.5;
    CHECK_FALSE(is_psd(indef));
    Matrix zero(2, 2);
    CHECK(is_psd(zero));
}

TEST_CASE("simplex: minimize x subject to x >= 0") {
    LP lp;
    lp.objective = {1.0};
    lp.constraints.push_back(lp_leq({-1.0}, 0.0));
    LPResult r = solve_lp(lp);
    REQUIRE(r.status == LPStatus::Optimal);
    CHECK_THAT(r.point[0], Catch::Matchers::WithinAbs(0.0, 1e-10));
    CHECK_THAT(r.value, Catch::Matchers::WithinAbs(0.0, 1e-10));
}

TEST_CASE("simplex: infeasible system x <= -1, x >= 0") {
    LP lp;
    lp.objective = {1.0};
    lp.constraints.push_back(lp_leq({1.0}, -1.0));
    lp.constraints.push_back(lp_leq({-1.0}, 0.0));
    CHECK(solve_lp(lp).status == LPStatus::Infeasible);
}

TEST_CASE("simplex: minimize -x subject to x >= 0 is unbounded") {
    LP lp;
    lp.objective = {-1.0};
    lp.constraints.push_back(lp_leq({-1.0}, 0.0));
    CHECK(solve_lp(lp).status == LPStatus::Unbounded);
}

TEST_CASE("simplex: two dimensional vertex solution") {
    // min -x - y  s.t.  x + y <= 2, 0 <= x <= 1, y >= 0
    LP lp;
    lp.objective = {-1.0, -1.0};
    lp.constraints.push_back(lp_leq({1.0, 1.0}, 2.0));
    lp.constraints.push_back(lp_leq({1.0, 0.0}, 1.0));
    lp.constraints.push_back(lp_leq({-1.0, 0.0}, 0.0));
    lp.constraints.push_back(lp_leq({0.0, -1.0}, 0.0));
    LPResult r = solve_lp(lp);
    REQUIRE(r.status == LPStatus::Optimal);
    CHECK_THAT(r.value, Catch::Matchers::WithinAbs(-2.0, 1e-9));
}

TEST_CASE("simplex: dimension mismatch is rejected") {
    LP lp;
    lp.objective = {1.0, 2.0};
    lp.constraints.push_back(lp_leq({1.0}, 0.0));
    CHECK_THROWS_AS(solve_lp(lp), std::invalid_argument);
}

TEST_CASE("simplex: equality constraints and maximize goal") {
    // max x + 2y  s.t.  x + y = 1, x,y >= 0
    LP lp;
    lp.objective = {1.0, 2.0};
    lp.goal = LPGoal::Maximize;
    lp.constraints.push_back(lp_eq({1.0, 1.0}, 1.0));
    lp.constraints.push_back(lp_leq({-1.0, 0.0}, 0.0));
    lp.constraints.push_back(lp_leq({0.0, -1.0}, 0.0));
    LPResult r = solve_lp(lp);
    REQUIRE(r.status == LPStatus::Optimal);
    CHECK_THAT(r.value, Catch::Matchers::WithinAbs(2.0, 1e-9));
    CHECK_THAT(r.point[1], Catch::Matchers::WithinAbs(1.0, 1e-9));
}

TEST_CASE("simplex duality gap vanishes on random feasible bounded programs") {
    // primal: min c.x s.t. Ax <= b (x free, boxed)  /  dual: max -b.y s.t. A^T y = -c, y >= 0
    std::mt19937 rng(20240811);
    std::uniform_real_distribution<double> coef(-2.0, 2.0), off(0.1, 2.0);
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t n = 1 + rng() % 5;
        std::size_t m = 1 + rng() % 12;
        LP primal;
        primal.objective.resize(n);
        for (auto& c : primal.objective) c = coef(rng);
        for (std::size_t i = 0; i < m; ++i) {
            Vec a(n);
            for (auto& v : a) v = coef(rng);
            primal.constraints.push_back(lp_leq(std::move(a), off(rng))); // 0 stays feasible
        }
        for (std::size_t j = 0; j < n; ++j) { // box rows keep it bounded
            primal.constraints.push_back(lp_leq(unit_vec(n, j, 1.0), 10.0));
            primal.constraints.push_back(lp_leq(unit_vec(n, j, -1.0), 10.0));
        }
        LPResult pr = solve_lp(primal);
        REQUIRE(pr.status == LPStatus::Optimal);

        const std::size_t mm = primal.constraints.size();
        LP dual;
        dual.nonneg_vars = true;
        dual.goal = LPGoal::Maximize;
        dual.objective.resize(mm);
        for (std::size_t i = 0; i < mm; ++i) dual.objective[i] = -primal.constraints[i].offset;
        for (std::size_t j = 0; j < n; ++j) {
            Vec row(mm);
            for (std::size_t i = 0; i < mm; ++i) row[i] = primal.constraints[i].normal[j];
            dual.constraints.push_back(lp_eq(std::move(row), -primal.objective[j]));
        }
        LPResult du = solve_lp(dual);
        REQUIRE(du.status == LPStatus::Optimal);
        CHECK_THAT(du.value, Catch::Matchers::WithinAbs(pr.value, 1e-9));
    }
}

TEST_CASE("simplex determinism: identical inputs give identical outputs") {
    LP lp;
    lp.objective = {1.0, -1.0, 0.5};
    lp.constraints.push_back(lp_leq({1.0, 1.0, 1.0}, 3.0));
    lp.constraints.push_back(lp_leq({-1.0, 2.0, 0.0}, 4.0));
    lp.constraints.push_back(lp_leq({0.0, -1.0, 0.0}, 0.0));
    lp.constraints.push_back(lp_leq({0.0, 0.0, -1.0}, 0.0));
    lp.constraints.push_back(lp_leq({-1.0, 0.0, 0.0}, 5.0));
    LPResult a = solve_lp(lp), b = solve_lp(lp);
    REQUIRE(a.status == b.status);
    CHECK(a.value == b.value);
    CHECK(a.point == b.point);
}

TEST_CASE("minimize_scalar: (s-1)^2 over (0, 10]") {
    auto r = minimize_scalar([](double s) { return (s - 1.0) * (s - 1.0); }, 0.0, 10.0);
    CHECK_THAT(r.arg, Catch::Matchers::WithinAbs(1.0, 1e-6));
    CHECK_THAT(r.value, Catch::Matchers::WithinAbs(0.0, 1e-10));
    CHECK_FALSE(r.at_lower_limit);
}

TEST_CASE("minimize_scalar: 1/s + s over (0, 10]") {
    auto r = minimize_scalar([](double s) { return 1.0 / s + s; }, 0.0, 10.0);
    CHECK_THAT(r.arg, Catch::Matchers::WithinAbs(1.0, 1e-6));
    CHECK_THAT(r.value, Catch::Matchers::WithinAbs(2.0, 1e-10));
}

TEST_CASE("minimize_scalar: decreasing 1/s attains its minimum at the right endpoint") {
    auto r = minimize_scalar([](double s) { return 1.0 / s; }, 0.0, 10.0);
    CHECK_THAT(r.arg, Catch::Matchers::WithinAbs(10.0, 1e-9));
    CHECK_THAT(r.value, Catch::Matchers::WithinAbs(0.1, 1e-10));
}

TEST_CASE("minimize_scalar: increasing function flags the lower-limit infimum") {
    auto r = minimize_scalar([](double s) { return s; }, 0.0, 4.0);
    CHECK(r.at_lower_limit);
    CHECK(r.value < 1e-12);
}

TEST_CASE("minimize_scalar beats a 64-point uniform probe grid") {
    auto objectives = std::vector<std::function<double(double)>>{
        [](double s) { return std::fabs(s - 0.3737); },
        [](double s) { return std::cosh(s - 2.0); },
        [](double s) { return 1.0 / s + 0.25 * s; },
    };
    for (const auto& g : objectives) {
        auto r = minimize_scalar(g, 0.0, 8.0);
        double grid_best = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= 64; ++k) grid_best = std::min(grid_best, g(8.0 * k / 64.0));
        CHECK(r.value <= grid_best + 1e-9);
    }
}

TEST_CASE("minimize_scalar reports an error when every probe is non-finite") {
    CHECK_THROWS_AS(minimize_scalar([](double) { return std::numeric_limits<double>::infinity(); },
                                    0.0, 1.0),
                    std::runtime_error);
}
