#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "supdiff/theorems.hpp"

using namespace supdiff;

namespace {

// {x, -x}: the supremum is |x|
IndexedFamily abs_family() {
    return IndexedFamily::finite(
        {"id", "neg"}, {ConvexFunc::affine({1.0}, 0.0), ConvexFunc::affine({-1.0}, 0.0)});
}

// f_t = t*x on t in [0,1]: the supremum is max(x, 0)
IndexedFamily linear_box_family() {
    IndexPolynomial t;
    t.arity = 1;
    t.terms.push_back({{1}, 1.0});
    return IndexedFamily::box({0.0}, {1.0},
                              TemplateNode::affine({t}, IndexPolynomial::constant(1, 0.0)));
}

GenSet interval_set(double lo, double hi) {
    GenSet g = GenSet::empty(1);
    g.points.push_back({lo});
    if (hi != lo) g.points.push_back({hi});
    return g;
}

Polyhedron le0() { return Polyhedron{1, {{{1.0}, 0.0, false}}}; }
Polyhedron ge0() { return Polyhedron{1, {{{-1.0}, 0.0, false}}}; }

// strict half intervals with disjoint closures meeting only at 0
IndexedFamily strict_clash_family() {
    Polyhedron right{1, {{{-1.0}, 0.0, true}, {{1.0}, 1.0, false}}};  // (0, 1]
    Polyhedron left{1, {{{1.0}, 0.0, true}, {{-1.0}, 1.0, false}}};   // [-1, 0)
    return IndexedFamily::finite(
        {"right", "left"}, {ConvexFunc::indicator(right), ConvexFunc::indicator(left)});
}

// worst (outer - inner) support shortfall over the direction net; an inner
// infinite direction must stay infinite on the outer side
double min_support_slack(const GenSet& outer, const GenSet& inner) {
    double worst = std::numeric_limits<double>::infinity();
    for (const Vec& u : direction_net(outer.dim)) {
        ExtReal so = support(outer, u), si = support(inner, u);
        if (si.is_neg_inf()) continue;
        if (si.is_pos_inf()) {
            if (!so.is_pos_inf()) return -std::numeric_limits<double>::infinity();
            continue;
        }
        if (so.is_pos_inf()) continue;
        worst = std::min(worst, so.v - si.v);
    }
    return worst;
}

} // namespace

TEST_CASE("theorem ids round trip through their names") {
    for (TheoremId id : all_theorems()) CHECK(theorem_from_name(theorem_name(id)) == id);
    CHECK_THROWS_AS(theorem_from_name("compact2"), std::invalid_argument);
}

TEST_CASE("hull over the active set recovers simple subdifferentials") {
    CHECK(hausdorff_gap(rhs_compact0(abs_family(), {0.0}), interval_set(-1.0, 1.0)) <= 1e-9);
    CHECK(hausdorff_gap(rhs_compact0(linear_box_family(), {0.0}), interval_set(0.0, 1.0)) <= 1e-9);

    IndexedFamily wall = IndexedFamily::finite({"wall"}, {ConvexFunc::indicator(ge0())});
    GenSet g = rhs_compact0(wall, {0.0});
    REQUIRE(g.points.size() == 1);
    REQUIRE(g.rays.size() == 1);
    CHECK(g.points.front()[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(g.rays.front()[0] == Catch::Approx(-1.0).margin(1e-12));

    // away from the kink only one member stays active
    CHECK(hausdorff_gap(rhs_compact0(abs_family(), {0.7}), interval_set(1.0, 1.0)) <= 1e-9);
}

TEST_CASE("the whole-space subspace list reduces to the plain hull") {
    for (TheoremId v : {TheoremId::compact1, TheoremId::compact, TheoremId::rqq}) {
        CHECK(hausdorff_gap(rhs_with_subspaces(abs_family(), {0.0}, {}, v),
                            rhs_compact0(abs_family(), {0.0})) <= 1e-9);
        CHECK(hausdorff_gap(rhs_with_subspaces(linear_box_family(), {0.25}, {}, v),
                            rhs_compact0(linear_box_family(), {0.25})) <= 1e-9);
    }
    CHECK_THROWS_AS(rhs_with_subspaces(abs_family(), {0.0}, {}, TheoremId::spe1),
                    std::invalid_argument);
}

TEST_CASE("a thin subspace inflates each hull but not the intersection") {
    // two affine pieces tied at x = (1, 0); the subspace is the x1 axis
    IndexedFamily F = IndexedFamily::finite(
        {"up", "down"}, {ConvexFunc::affine({1.0, 1.0}, 0.0), ConvexFunc::affine({1.0, -1.0}, 0.0)});
    Vec x{1.0, 0.0};
    SubspaceList axis;
    axis.bases.push_back({Vec{1.0, 0.0}});

    GenSet plain = rhs_compact0(F, x);
    GenSet with_axis = rhs_with_subspaces(F, x, axis, TheoremId::compact);

    // the axis term alone is the vertical line through x1 = 1, a strict superset
    SubspaceList only; // computed by hand: hull of {a_t} + span{e2}
    GenSet vertical = GenSet::empty(2);
    vertical.points.push_back({1.0, 0.0});
    vertical.rays.push_back({0.0, 1.0});
    vertical.rays.push_back({0.0, -1.0});
    GenSet axis_term = intersect_sets({with_axis, vertical});
    CHECK(set_contains(vertical, plain, 1e-9));

    // the intersection with the whole-space term collapses back to the segment
    CHECK(hausdorff_gap(with_axis, plain) <= 1e-9);
    GenSet segment = GenSet::empty(2);
    segment.points.push_back({1.0, 1.0});
    segment.points.push_back({1.0, -1.0});
    CHECK(hausdorff_gap(with_axis, segment) <= 1e-9);
    CHECK(hausdorff_gap(oracle_subdiff(F, x), segment) <= 1e-6);

    SubspaceList bad;
    bad.bases.push_back({Vec{0.0, 1.0}}); // does not contain x
    CHECK_THROWS_AS(rhs_with_subspaces(F, x, bad, TheoremId::compact), std::invalid_argument);
}

TEST_CASE("subspace variants agree on lsc families") {
    IndexedFamily F = IndexedFamily::finite(
        {"cap", "neg"},
        {ConvexFunc::sum_of({ConvexFunc::affine({1.0}, 0.0), ConvexFunc::indicator(le0())}),
         ConvexFunc::affine({-1.0}, 0.0)});
    SubspaceList none;
    for (const Vec& x : {Vec{0.0}, Vec{-0.5}}) {
        GenSet a = rhs_with_subspaces(F, x, none, TheoremId::compact1);
        GenSet b = rhs_with_subspaces(F, x, none, TheoremId::compact);
        GenSet c = rhs_with_subspaces(F, x, none, TheoremId::rqq);
        CHECK(hausdorff_gap(a, b) <= 1e-9);
        CHECK(hausdorff_gap(b, c) <= 1e-9);
    }
}

TEST_CASE("epsilon intersection collapses for affine members") {
    // affine members have epsilon-independent subdifferentials
    GenSet g = rhs_spe1(abs_family(), {0.0}, {}, {});
    CHECK(hausdorff_gap(g, interval_set(-1.0, 1.0)) <= 1e-9);
    CHECK(hausdorff_gap(g, rhs_compact0(abs_family(), {0.0})) <= 1e-9);

    GenSet smooth = rhs_spe1(abs_family(), {0.4}, {1.0, 0.5}, {});
    CHECK(hausdorff_gap(smooth, interval_set(1.0, 1.0)) <= 1e-9);

    CHECK_THROWS_AS(rhs_spe1(abs_family(), {0.0}, {0.5, 0.0}, {}), std::invalid_argument);
}

TEST_CASE("epsilon grid refinement tightens a quadratic member") {
    // singleton family f = x^2/2: eps-subdifferential at 1 is [1-sqrt(2e), 1+sqrt(2e)]
    Matrix Q(1, 1);
    Q(0, 0) = 1.0;
    IndexedFamily F = IndexedFamily::finite({"q"}, {ConvexFunc::quad(Q, {0.0}, 0.0)});
    Vec x{1.0};

    GenSet coarse = rhs_sep2b(F, x, {1.0});
    GenSet fine = rhs_sep2b(F, x, {1.0, 0.25, std::ldexp(1.0, -12)});
    double w = std::sqrt(2.0 * std::ldexp(1.0, -12));
    CHECK(set_contains(coarse, fine, 1e-9));
    CHECK(hausdorff_gap(coarse, interval_set(1.0 - std::sqrt(2.0), 1.0 + std::sqrt(2.0))) <= 1e-6);
    CHECK(hausdorff_gap(fine, interval_set(1.0 - w, 1.0 + w)) <= 1e-6);

    // enlarging the grid never enlarges the set
    GenSet three = rhs_sep2b(F, x, {1.0, 0.5, 0.25});
    CHECK(set_contains(rhs_sep2b(F, x, {1.0, 0.5}), three, 1e-9));
}

TEST_CASE("domain normals enter the epsilon formula") {
    IndexedFamily wall = IndexedFamily::finite({"wall"}, {ConvexFunc::indicator(ge0())});
    GenSet g = rhs_sep2b(wall, {0.0});
    REQUIRE(g.rays.size() == 1);
    CHECK(g.rays.front()[0] == Catch::Approx(-1.0).margin(1e-12));
    CHECK(hausdorff_gap(g, oracle_subdiff(wall, {0.0})) <= 1e-6);

    // |x| capped to x <= 2, probed at the cap: {1} + normal ray
    IndexedFamily capped = IndexedFamily::finite(
        {"id", "neg"},
        {ConvexFunc::sum_of({ConvexFunc::affine({1.0}, 0.0),
                             ConvexFunc::indicator(Polyhedron{1, {{{1.0}, 2.0, false}}})}),
         ConvexFunc::sum_of({ConvexFunc::affine({-1.0}, 0.0),
                             ConvexFunc::indicator(Polyhedron{1, {{{1.0}, 2.0, false}}})})});
    GenSet at_cap = rhs_sep2b(capped, {2.0});
    GenSet expect = GenSet::empty(1);
    expect.points.push_back({1.0});
    expect.rays.push_back({1.0});
    CHECK(hausdorff_gap(at_cap, expect) <= 1e-6);
    CHECK(hausdorff_gap(at_cap, oracle_subdiff(capped, {2.0})) <= 1e-6);
}

TEST_CASE("normal cone plus hull matches the walled kink") {
    IndexedFamily F = IndexedFamily::finite(
        {"up", "down"},
        {ConvexFunc::sum_of({ConvexFunc::affine({1.0}, 0.0), ConvexFunc::indicator(le0())}),
         ConvexFunc::sum_of({ConvexFunc::affine({-1.0}, 0.0), ConvexFunc::indicator(le0())})});
    GenSet g = rhs_corcompcont(F, {0.0});
    GenSet expect = GenSet::empty(1);
    expect.points.push_back({-1.0});
    expect.rays.push_back({1.0});
    CHECK(hausdorff_gap(g, expect) <= 1e-9);
    CHECK(hausdorff_gap(g, oracle_subdiff(F, {0.0})) <= 1e-6);

    CHECK(hausdorff_gap(rhs_corcompcont(linear_box_family(), {0.0}), interval_set(0.0, 1.0)) <=
          1e-9);

    // smooth singleton: gradient plus the trivial cone
    Matrix Q(1, 1);
    Q(0, 0) = 1.0;
    IndexedFamily smooth = IndexedFamily::finite({"q"}, {ConvexFunc::quad(Q, {0.0}, 0.0)});
    CHECK(hausdorff_gap(rhs_corcompcont(smooth, {1.0}), interval_set(1.0, 1.0)) <= 1e-9);
}

TEST_CASE("normal cone formula reduces to the plain hull at interior points") {
    for (const Vec& x : {Vec{0.0}, Vec{0.7}}) {
        CHECK(hausdorff_gap(rhs_corcompcont(abs_family(), x), rhs_valadier(abs_family(), x)) <=
              1e-9);
    }
    CHECK(hausdorff_gap(rhs_corcompcont(linear_box_family(), {0.25}),
                        rhs_valadier(linear_box_family(), {0.25})) <= 1e-9);
}

TEST_CASE("sampled enlargement obeys the sandwich") {
    ConvexFunc absf = ConvexFunc::max_of(
        {ConvexFunc::affine({1.0}, 0.0), ConvexFunc::affine({-1.0}, 0.0)});
    Matrix Q(1, 1);
    Q(0, 0) = 1.0;
    ConvexFunc quad = ConvexFunc::quad(Q, {0.0}, 0.0);
    ConvexFunc walled =
        ConvexFunc::sum_of({ConvexFunc::affine({1.0}, 0.0), ConvexFunc::indicator(le0())});

    struct Probe {
        ConvexFunc f;
        Vec x;
    };
    std::vector<Probe> probes{{absf, {0.0}}, {absf, {1.0}}, {quad, {1.0}}, {walled, {0.0}}};
    for (const auto& pr : probes) {
        for (double eps : {0.5, 0.1, 0.01}) {
            SubdiffResult breve = breve_subdiff_estimate(pr.f, pr.x, eps);
            CHECK(breve.exactness == Exactness::Sampled);
            GenSet lower = subdiff(pr.f, pr.x).set;
            GenSet upper = eps_subdiff_set(pr.f, pr.x, 2.0 * eps).set;
            CHECK(min_support_slack(breve.set, lower) >= -1e-8);
            CHECK(min_support_slack(upper, breve.set) >= -1e-8);
        }
    }
}

TEST_CASE("sampled enlargement hits the documented values") {
    ConvexFunc absf = ConvexFunc::max_of(
        {ConvexFunc::affine({1.0}, 0.0), ConvexFunc::affine({-1.0}, 0.0)});
    CHECK(hausdorff_gap(breve_subdiff_estimate(absf, {0.0}, 0.1).set, interval_set(-1.0, 1.0)) <=
          1e-9);

    ConvexFunc aff = ConvexFunc::affine({3.0}, 1.0);
    for (double eps : {0.5, 2.0})
        CHECK(hausdorff_gap(breve_subdiff_estimate(aff, {0.3}, eps).set,
                            interval_set(3.0, 3.0)) <= 1e-9);

    Matrix Q(1, 1);
    Q(0, 0) = 1.0;
    ConvexFunc quad = ConvexFunc::quad(Q, {0.0}, 0.0);
    GenSet b = breve_subdiff_estimate(quad, {1.0}, 0.1).set;
    CHECK(set_contains(interval_set(0.9, 1.1), b, 1e-9));
    CHECK(set_contains(b, interval_set(1.0, 1.0), 1e-9));

    CHECK_THROWS_AS(breve_subdiff_estimate(absf, {0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("certification passes on the classic kink") {
    CertReport rep = certify(abs_family(), {0.0}, TheoremId::valadier_classic);
    CHECK(rep.verdict == CertVerdict::pass);
    CHECK(rep.gap <= 1e-9);
    CHECK(rep.lhs_in_rhs);
    CHECK(rep.rhs_in_lhs);
    CHECK(hausdorff_gap(rep.lhs, interval_set(-1.0, 1.0)) <= 1e-7);
    for (const auto& h : rep.hypotheses)
        CHECK((h.status == HypStatus::verified ||
               h.status == HypStatus::certified_by_construction));
}

TEST_CASE("certification labels the box template hypotheses") {
    CertReport rep = certify(linear_box_family(), {0.5}, TheoremId::compact0);
    CHECK(rep.verdict == CertVerdict::pass);
    CHECK(rep.gap <= 1e-7);
    REQUIRE(rep.hypotheses.size() == 5);
    for (const auto& h : rep.hypotheses)
        CHECK((h.status == HypStatus::verified ||
               h.status == HypStatus::certified_by_construction));
}

TEST_CASE("closure violation surfaces as an unmet hypothesis") {
    CertReport rep = certify(strict_clash_family(), {0.0}, TheoremId::compact);
    CHECK(rep.verdict == CertVerdict::hypothesis_unmet);
    CHECK(rep.note == "subdifferential empty on both sides");
    CHECK(rep.lhs.is_empty());
    CHECK(rep.rhs.is_empty());

    // the one-sided inclusion is still asserted on unmet runs
    CHECK(rep.rhs_in_lhs);

    bool closure_violated = false;
    for (const auto& h : rep.hypotheses)
        if (h.status == HypStatus::violated && h.name.find("closure") != std::string::npos)
            closure_violated = true;
    CHECK(closure_violated);
}

TEST_CASE("non-lsc members break the lsc checklist but not the inclusion") {
    Polyhedron half_open{1, {{{-1.0}, 0.0, true}, {{1.0}, 1.0, false}}}; // (0, 1]
    IndexedFamily F = IndexedFamily::finite({"cell"}, {ConvexFunc::indicator(half_open)});
    CertReport rep = certify(F, {0.5}, TheoremId::compact1);
    CHECK(rep.verdict == CertVerdict::hypothesis_unmet);
    bool lsc_violated = false;
    for (const auto& h : rep.hypotheses)
        if (h.status == HypStatus::violated && h.name.find("lsc") != std::string::npos)
            lsc_violated = true;
    CHECK(lsc_violated);
    CHECK(rep.rhs_in_lhs);
    CHECK(rep.lhs_in_rhs);
}

TEST_CASE("strong separation hypotheses certify the walled kink") {
    IndexedFamily F = IndexedFamily::finite(
        {"up", "down"},
        {ConvexFunc::sum_of({ConvexFunc::affine({1.0}, 0.0), ConvexFunc::indicator(le0())}),
         ConvexFunc::sum_of({ConvexFunc::affine({-1.0}, 0.0), ConvexFunc::indicator(le0())})});
    CertReport rep = certify(F, {0.0}, TheoremId::sep2_strong);
    CHECK(rep.verdict == CertVerdict::pass);
    CHECK(rep.gap <= 1e-6);

    CertReport corc = certify(F, {0.0}, TheoremId::corcompcont);
    CHECK(corc.verdict == CertVerdict::pass);
    CHECK(hausdorff_gap(rep.rhs, corc.rhs) <= 1e-12);
}

TEST_CASE("random affine families certify against the oracle") {
    std::mt19937 rng(20240814u);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int round = 0; round < 6; ++round) {
        std::size_t n = 1 + static_cast<std::size_t>(round % 2);
        std::size_t k = 3;
        std::vector<std::string> labels;
        std::vector<ConvexFunc> ms;
        for (std::size_t i = 0; i < k; ++i) {
            Vec a(n);
            for (auto& v : a) v = coef(rng);
            labels.push_back("m" + std::to_string(i));
            ms.push_back(ConvexFunc::affine(std::move(a), coef(rng)));
        }
        IndexedFamily F = IndexedFamily::finite(labels, ms);
        for (int p = 0; p < 2; ++p) {
            Vec x(n);
            for (auto& v : x) v = coef(rng);
            CertReport rep = certify(F, x, TheoremId::compact0);
            INFO("round " << round << " point " << p);
            CHECK(rep.verdict == CertVerdict::pass);
            CHECK(rep.gap <= 1e-7);
        }
    }
}

TEST_CASE("all theorem builders dispatch and agree on a full-domain kink") {
    // every formula collapses to [-1, 1] for |x| at the kink
    for (TheoremId id : all_theorems()) {
        CertReport rep = certify(abs_family(), {0.0}, id);
        INFO(theorem_name(id));
        CHECK(rep.verdict == CertVerdict::pass);
        CHECK(hausdorff_gap(rep.rhs, interval_set(-1.0, 1.0)) <= 1e-6);
        CHECK(rep.lhs_seconds >= 0.0);
        CHECK(rep.rhs_seconds >= 0.0);
        CHECK(rep.hypotheses_seconds >= 0.0);
    }
}
