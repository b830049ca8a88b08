#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "supdiff/gen_set.hpp"

using namespace supdiff;

namespace {

GenSet square01() {
    return canonicalize(GenSet::make(2, {{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {}));
}

} // namespace

TEST_CASE("canonicalize removes interior and duplicate generators") {
    GenSet g = GenSet::make(2, {{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0.5, 0.5}, {1.0, 1.0}}, {});
    GenSet c = canonicalize(g);
    CHECK(c.points.size() == 4);
    GenSet cc = canonicalize(c);
    CHECK(cc.points == c.points); // idempotent
    CHECK(cc.rays == c.rays);
}

TEST_CASE("canonicalize prunes conically redundant rays and normalizes") {
    GenSet g = GenSet::make(2, {{0, 0}}, {{2, 0}, {0, 3}, {1, 1}});
    GenSet c = canonicalize(g);
    REQUIRE(c.rays.size() == 2); // (1,1) lies in cone{e1,e2}
    CHECK_THAT(norm2(c.rays[0]), Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(norm2(c.rays[1]), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("hull_union of two segments gives the expected square") {
    GenSet a = GenSet::make(2, {{0, 0}, {1, 0}}, {});
    GenSet b = GenSet::make(2, {{0, 1}, {1, 1}}, {});
    GenSet u = hull_union({a, b});
    CHECK(u.points.size() == 4);
    CHECK(point_in_gen_set(u, {0.5, 0.5}));
    CHECK_FALSE(point_in_gen_set(u, {1.5, 0.5}));
}

TEST_CASE("hull_union support function is the max of operand supports") {
    GenSet a = canonicalize(GenSet::make(2, {{0, 0}, {1, 0}}, {{0, 1}}));
    GenSet b = canonicalize(GenSet::make(2, {{-1, -1}}, {}));
    GenSet u = hull_union({a, b});
    for (const Vec& d : direction_net(2)) {
        ExtReal su = support(u, d);
        ExtReal sm = ext_max(support(a, d), support(b, d));
        if (su.is_finite() && sm.is_finite())
            CHECK_THAT(su.v, Catch::Matchers::WithinAbs(sm.v, 1e-9));
        else
            CHECK(su.is_pos_inf() == sm.is_pos_inf());
    }
}

TEST_CASE("minkowski_sum adds supports and absorbs the empty set") {
    GenSet a = square01();
    GenSet b = canonicalize(GenSet::make(2, {{-1, 0}, {0, -1}}, {}));
    GenSet s = minkowski_sum(a, b);
    for (const Vec& d : direction_net(2)) {
        ExtReal ss = support(s, d);
        double expect = support(a, d).v + support(b, d).v;
        CHECK_THAT(ss.v, Catch::Matchers::WithinAbs(expect, 1e-9));
    }
    CHECK(minkowski_sum(a, GenSet::empty(2)).is_empty());
}

TEST_CASE("support of the empty set is -inf, unbounded directions give +inf") {
    CHECK(support(GenSet::empty(3), {1, 0, 0}).is_neg_inf());
    GenSet halfline = GenSet::make(1, {{0.0}}, {{-1.0}});
    CHECK(support(halfline, {-1.0}).is_pos_inf());
    CHECK_THAT(support(halfline, {1.0}).v, Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("normal cone of an orthant at faces, interior and exterior") {
    Polyhedron p = Polyhedron::universe(2); // x <= 0, y <= 0
    p.constraints.push_back({{1, 0}, 0.0, false});
    p.constraints.push_back({{0, 1}, 0.0, false});

    GenSet at_origin = normal_cone(p, {0, 0});
    CHECK(at_origin.rays.size() == 2); // cone{e1, e2}
    CHECK(ray_in_recession_cone(at_origin, {1, 0}));
    CHECK(ray_in_recession_cone(at_origin, {0, 1}));

    GenSet interior = normal_cone(p, {-1, -1});
    CHECK(interior.rays.empty());
    REQUIRE(interior.points.size() == 1);
    CHECK_THAT(norm2(interior.points[0]), Catch::Matchers::WithinAbs(0.0, 1e-12));

    CHECK(normal_cone(p, {1, 1}).is_empty());
}

TEST_CASE("trivial cone and empty set are distinct and print distinctly") {
    GenSet zero = GenSet::singleton({0.0, 0.0});
    GenSet none = GenSet::empty(2);
    CHECK_FALSE(zero.is_empty());
    CHECK(none.is_empty());
    std::ostringstream a, b;
    a << zero;
    b << none;
    CHECK(a.str() != b.str());
    CHECK(b.str() == "(empty set)");
}

TEST_CASE("set_contains agrees with a small hausdorff gap") {
    GenSet inner = canonicalize(GenSet::make(2, {{0.25, 0.25}, {0.75, 0.25}, {0.5, 0.75}}, {}));
    GenSet outer = square01();
    CHECK(set_contains(outer, inner, 1e-9));
    CHECK_FALSE(set_contains(inner, outer, 1e-3));
    CHECK(hausdorff_gap(outer, outer) <= 1e-12);

    GenSet shifted = translate_set(outer, {1e-9, -1e-9});
    CHECK(hausdorff_gap(outer, shifted) <= 3e-9);
    CHECK(set_contains(outer, shifted, 1e-8));
    CHECK(set_contains(shifted, outer, 1e-8));
}

TEST_CASE("hausdorff gap is +inf when recession cones differ or one side is empty") {
    GenSet bounded = square01();
    GenSet unbounded = canonicalize(GenSet::make(2, {{0, 0}}, {{1, 0}}));
    CHECK(std::isinf(hausdorff_gap(bounded, unbounded)));
    CHECK(std::isinf(hausdorff_gap(bounded, GenSet::empty(2))));
    CHECK(hausdorff_gap(GenSet::empty(2), GenSet::empty(2)) == 0.0);
}

TEST_CASE("vertex enumeration recovers the unit square from its facets") {
    std::vector<Halfspace> hs = {
        {{1, 0}, 1.0}, {{-1, 0}, 0.0}, {{0, 1}, 1.0}, {{0, -1}, 0.0}};
    GenSet g = canonicalize(vertex_enum(hs, 2));
    CHECK(g.points.size() == 4);
    CHECK(g.rays.empty());
    CHECK(point_in_gen_set(g, {1, 1}));
}

TEST_CASE("vertex enumeration handles unbounded and empty intersections") {
    // wedge: x >= 0, y >= 0, x + y >= 1
    std::vector<Halfspace> wedge = {{{-1, 0}, 0.0}, {{0, -1}, 0.0}, {{-1, -1}, -1.0}};
    GenSet w = canonicalize(vertex_enum(wedge, 2));
    CHECK(w.points.size() == 2);
    CHECK(w.rays.size() == 2);
    CHECK(ray_in_recession_cone(w, {1, 0}));
    CHECK(ray_in_recession_cone(w, {0, 1}));

    std::vector<Halfspace> contradiction = {{{1, 0}, -1.0}, {{-1, 0}, 0.0}};
    CHECK(vertex_enum(contradiction, 2).is_empty());

    // no constraints at all: the whole plane
    GenSet plane = vertex_enum({}, 2);
    CHECK_FALSE(plane.is_empty());
    CHECK(ray_in_recession_cone(plane, {1, 0}));
    CHECK(ray_in_recession_cone(plane, {-1, 0}));
    CHECK(ray_in_recession_cone(plane, {0, 1}));
}

TEST_CASE("facet enumeration inverts vertex enumeration on a simplex") {
    GenSet simplex = canonicalize(GenSet::make(3, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {}));
    auto facets = facet_enum(simplex);
    GenSet back = canonicalize(vertex_enum(facets, 3));
    CHECK(hausdorff_gap(simplex, back) <= 1e-9);
    CHECK(back.points.size() == 4);
}

TEST_CASE("intersect_sets is exact on polyhedral operands") {
    GenSet sq = square01();
    GenSet shifted = translate_set(sq, {0.5, 0.5});
    GenSet inter = intersect_sets({sq, shifted});
    GenSet expect = canonicalize(GenSet::make(2, {{0.5, 0.5}, {1, 0.5}, {0.5, 1}, {1, 1}}, {}));
    CHECK(hausdorff_gap(inter, expect) <= 1e-9);

    GenSet far = translate_set(sq, {5, 5});
    CHECK(intersect_sets({sq, far}).is_empty());
}

TEST_CASE("carathéodory: hull membership uses at most n+1 points") {
    // basic solutions of the membership LP have at most n+1 nonzero weights
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec> pts;
    for (int i = 0; i < 12; ++i) pts.push_back({u(rng), u(rng), u(rng)});
    GenSet g = canonicalize(GenSet::make(3, pts, {}));
    Vec centroid(3, 0.0);
    for (const Vec& p : pts) centroid = add(centroid, p);
    centroid = scale(1.0 / pts.size(), centroid);

    const std::size_t k = g.points.size();
    LP lp;
    lp.nonneg_vars = true;
    lp.objective = Vec(k, 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
        Vec row(k);
        for (std::size_t j = 0; j < k; ++j) row[j] = g.points[j][i];
        lp.constraints.push_back(lp_eq(std::move(row), centroid[i]));
    }
    lp.constraints.push_back(lp_eq(Vec(k, 1.0), 1.0));
    LPResult r = solve_lp(lp);
    REQUIRE(r.status == LPStatus::Optimal);
    std::size_t nnz = 0;
    for (double x : r.point)
        if (x > 1e-9) ++nnz;
    CHECK(nnz <= 4);
}

TEST_CASE("reconstruction from support recovers a polytope exactly") {
    GenSet truth = canonicalize(GenSet::make(2, {{-1, 0}, {1, 0}, {0, 2}}, {}));
    GenSet rec = reconstruct_set_from_support(
        [&](const Vec& u) { return support(truth, u).v; }, 2);
    CHECK(hausdorff_gap(truth, rec) <= 1e-8);
    REQUIRE(rec.points.size() == 3);
    // vertex-for-vertex match after canonicalization
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(norm_inf(sub(rec.points[i], truth.points[i])) <= 1e-8);
}

TEST_CASE("reconstruction from support keeps recession structure") {
    GenSet truth = canonicalize(GenSet::make(1, {{0.0}}, {{-1.0}})); // (-inf, 0]
    GenSet rec = reconstruct_set_from_support(
        [&](const Vec& u) {
            ExtReal s = support(truth, u);
            return s.is_pos_inf() ? std::numeric_limits<double>::infinity() : s.v;
        },
        1);
    CHECK(hausdorff_gap(truth, rec) <= 1e-9);
    CHECK(rec.rays.size() == 1);
}

TEST_CASE("direction nets have the advertised size and include the axes") {
    for (std::size_t n : {1u, 2u, 3u, 4u}) {
        const auto& net = direction_net(n);
        if (n == 1) {
            CHECK(net.size() == 2);
        } else {
            CHECK(net.size() == 32 * n * n + 2 * n);
        }
        for (const Vec& u : net) CHECK_THAT(norm2(u), Catch::Matchers::WithinAbs(1.0, 1e-9));
        for (std::size_t i = 0; i < n; ++i) {
            bool plus = false, minus = false;
            for (const Vec& u : net) {
                if (norm_inf(sub(u, unit_vec(n, i, 1.0))) < 1e-12) plus = true;
                if (norm_inf(sub(u, unit_vec(n, i, -1.0))) < 1e-12) minus = true;
            }
            CHECK(plus);
            CHECK(minus);
        }
    }
}
