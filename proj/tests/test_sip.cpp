#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "supdiff/sip.hpp"

using namespace supdiff;

namespace {

IndexedFamily abs_family() {
    return IndexedFamily::finite(
        {"id", "neg"}, {ConvexFunc::affine({1.0}, 0.0), ConvexFunc::affine({-1.0}, 0.0)});
}

// f_t(x) = (x - t)^2 on t in [0,1]
IndexedFamily shifted_square_family() {
    IndexPolynomial minus_two_t;
    minus_two_t.arity = 1;
    minus_two_t.terms.push_back({{1}, -2.0});
    IndexPolynomial t_sq;
    t_sq.arity = 1;
    t_sq.terms.push_back({{2}, 1.0});
    return IndexedFamily::box(
        {0.0}, {1.0},
        TemplateNode::quad({{IndexPolynomial::constant(1, 2.0)}}, {minus_two_t}, t_sq));
}

// f_{(t,s)}(a,b) = s*(a + t*b - t^2) on [0,1] x [-1,1]; the supremum over the
// index box is the sup-norm error of the line a + b*u against u^2 on [0,1]
IndexedFamily chebyshev_family() {
    auto mono = [](unsigned et, unsigned es, double v) {
        IndexPolynomial p;
        p.arity = 2;
        p.terms.push_back({{et, es}, v});
        return p;
    };
    return IndexedFamily::box({0.0, -1.0}, {1.0, 1.0},
                              TemplateNode::affine({mono(0, 1, 1.0), mono(1, 1, 1.0)},
                                                   mono(2, 1, -1.0)));
}

Polyhedron box_nd(std::size_t n, double lo, double hi) {
    Polyhedron p = Polyhedron::universe(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec e(n, 0.0);
        e[i] = 1.0;
        p.constraints.push_back({e, hi, false});
        e[i] = -1.0;
        p.constraints.push_back({e, -lo, false});
    }
    return p;
}

// reference optimum of min_{a,b} max_i |a + b*t_i - t_i^2| over the dyadic grid
// t_i = i * 2^-14, solved through the LP dual: the primal tableau would need
// ~3*10^4 rows, the dual has three equality rows and one nonnegative variable
// per signed grid constraint
double chebyshev_grid_reference() {
    const std::size_t kGrid = std::size_t{1} << 14;
    const std::size_t cols = 2 * (kGrid + 1);
    LP dual;
    dual.goal = LPGoal::Maximize;
    dual.nonneg_vars = true;
    dual.objective = Vec(cols, 0.0);
    Vec row_a(cols, 0.0), row_b(cols, 0.0), row_z(cols, 0.0);
    for (std::size_t i = 0; i <= kGrid; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(kGrid);
        const std::size_t jp = 2 * i, jm = 2 * i + 1;
        dual.objective[jp] = -t * t;
        dual.objective[jm] = t * t;
        row_a[jp] = 1.0;
        row_a[jm] = -1.0;
        row_b[jp] = t;
        row_b[jm] = -t;
        row_z[jp] = -1.0;
        row_z[jm] = -1.0;
    }
    dual.constraints.push_back(lp_eq(std::move(row_a), 0.0));
    dual.constraints.push_back(lp_eq(std::move(row_b), 0.0));
    dual.constraints.push_back(lp_eq(std::move(row_z), -1.0));
    LPResult r = solve_lp(dual);
    REQUIRE(r.status == LPStatus::Optimal);
    return r.value;
}

void check_monotone_bounds(const SIPResult& r) {
    for (std::size_t i = 1; i < r.lower_history.size(); ++i)
        CHECK(r.lower_history[i] >= r.lower_history[i - 1]);
    for (std::size_t i = 1; i < r.upper_history.size(); ++i)
        CHECK(r.upper_history[i] <= r.upper_history[i - 1]);
}

} // namespace

TEST_CASE("piecewise linear model is solved in a handful of cuts") {
    SIPProblem P{abs_family(), box_nd(1, -10.0, 10.0), 1e-9};
    SIPResult r = solve(P);
    CHECK(r.status == SIPStatus::Converged);
    CHECK(r.iterations <= 5);
    CHECK(std::fabs(r.value) <= 1e-9);
    CHECK(std::fabs(r.x_star[0]) <= 1e-9);
    CHECK(r.value <= r.lower_history.back() + P.target_tol);
    check_monotone_bounds(r);

    SECTION("repeated runs replay the identical cut history") {
        SIPResult r2 = solve(P);
        REQUIRE(r2.cut_history.size() == r.cut_history.size());
        for (std::size_t i = 0; i < r.cut_history.size(); ++i) {
            CHECK(r2.cut_history[i].t == r.cut_history[i].t);
            CHECK(r2.cut_history[i].g == r.cut_history[i].g);
            CHECK(r2.cut_history[i].offset == r.cut_history[i].offset);
        }
    }
}

TEST_CASE("shifted squares balance at the midpoint") {
    SIPProblem P{shifted_square_family(), box_nd(1, -10.0, 10.0), 1e-6};
    SIPResult r = solve(P, 200);
    REQUIRE(r.status == SIPStatus::Converged);
    CHECK(std::fabs(r.value - 0.25) <= 2e-6);
    CHECK(std::fabs(r.x_star[0] - 0.5) <= 1e-5);
    check_monotone_bounds(r);

    SECTION("a tight tolerance is reported honestly when the cap cuts in") {
        // the symmetric model closes its gap exactly at iteration 10, so a
        // lower cap must come back as iteration-limit with valid bounds
        P.target_tol = 0.0;
        SIPResult capped = solve(P, 6);
        CHECK(capped.status == SIPStatus::IterationLimit);
        CHECK(capped.iterations == 6);
        CHECK(capped.value >= 0.25 - 1e-9);
        CHECK(capped.lower_history.back() <= 0.25 + 1e-12);
        CHECK(std::string(sip_status_name(capped.status)) == "iteration-limit");
        CHECK(std::string(sip_status_name(SIPStatus::Converged)) == "converged");
    }
}

TEST_CASE("best sup-norm line under the parabola") {
    const double reference = chebyshev_grid_reference();
    CHECK(std::fabs(reference - 0.125) <= 1e-10);

    SIPProblem P{chebyshev_family(), box_nd(2, -10.0, 10.0), 1e-5};
    SIPResult r = solve(P, 200);
    REQUIRE(r.status == SIPStatus::Converged);
    CHECK(std::fabs(r.value - reference) <= 1e-4);
    // equioscillation solution: a = -1/8, b = 1
    CHECK(std::fabs(r.x_star[0] + 0.125) <= 5e-3);
    CHECK(std::fabs(r.x_star[1] - 1.0) <= 2e-2);
    check_monotone_bounds(r);
}

TEST_CASE("every cut under-estimates the supremum") {
    SIPProblem P{shifted_square_family(), box_nd(1, -10.0, 10.0), 1e-6};
    SIPResult r = solve(P, 200);
    REQUIRE(r.status == SIPStatus::Converged);

    std::mt19937 rng(20260814u);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    double worst = 0.0;
    for (int probe = 0; probe < 1000; ++probe) {
        Vec y{u(rng)};
        ExtReal fy = sup_eval(P.family, y);
        REQUIRE(fy.is_finite());
        for (const auto& cut : r.cut_history) {
            if (cut.feasibility) continue;
            worst = std::min(worst, fy.v - (dot(cut.g, y) + cut.offset));
        }
    }
    CHECK(worst >= -1e-8);
}

TEST_CASE("domain walls steer infeasible iterates back") {
    // minimize max(-x, x-10) subject to x in [-5,3]: the slope member carries
    // the domain, so iterates outside it draw feasibility cuts, not value cuts
    Polyhedron fence{1, {{{1.0}, 3.0, false}, {{-1.0}, 5.0, false}}};
    IndexedFamily F = IndexedFamily::finite(
        {"walled slope", "rising"},
        {ConvexFunc::sum_of({ConvexFunc::affine({-1.0}, 0.0), ConvexFunc::indicator(fence)}),
         ConvexFunc::affine({1.0}, -10.0)});
    SIPProblem P{F, box_nd(1, -10.0, 10.0), 1e-9};
    SIPResult r = solve(P);
    REQUIRE(r.status == SIPStatus::Converged);
    CHECK(r.x_star[0] == Catch::Approx(3.0).margin(1e-9));
    CHECK(r.value == Catch::Approx(-3.0).margin(1e-9));

    bool saw_right_wall = false;
    for (const auto& cut : r.cut_history) {
        if (!cut.feasibility) continue;
        bool right = cut.g == Vec{1.0} && cut.offset == 3.0;
        bool left = cut.g == Vec{-1.0} && cut.offset == 5.0;
        CHECK((right || left));
        saw_right_wall = saw_right_wall || right;
    }
    CHECK(saw_right_wall);
}

TEST_CASE("malformed problems are rejected up front") {
    Polyhedron half_line = Polyhedron::universe(1);
    half_line.constraints.push_back({{-1.0}, 0.0, false});
    CHECK_THROWS_AS(solve(SIPProblem{abs_family(), half_line, 1e-6}), std::invalid_argument);

    Polyhedron empty = Polyhedron::universe(1);
    empty.constraints.push_back({{1.0}, -1.0, false});
    empty.constraints.push_back({{-1.0}, 0.0, false});
    CHECK_THROWS_AS(solve(SIPProblem{abs_family(), empty, 1e-6}), std::invalid_argument);

    CHECK_THROWS_AS(solve(SIPProblem{abs_family(), box_nd(2, -1.0, 1.0), 1e-6}),
                    std::invalid_argument);
}
