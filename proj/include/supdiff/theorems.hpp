#pragma once

// Right-hand-side builders for the exact supremum-subdifferential formulas and
// the certification loop that compares each of them against the brute-force
// oracle. Every formula hulls member subdifferentials over the active index
// set; they differ in how domains, subspaces and epsilon enlargements enter.
// Hypothesis checks are best-effort and carry explicit labels, so a failed
// certification can be attributed to a violated assumption.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "convex_function.hpp"
#include "family.hpp"
#include "gen_set.hpp"
#include "oracle.hpp"
#include "polyhedron.hpp"

namespace supdiff {

enum class TheoremId {
    compact0,
    compact1,
    compact,
    rqq,
    spe1,
    sep2,
    sep2_strong,
    sep2b,
    corcompcont,
    valadier_final,
    valadier_classic,
};

inline const std::vector<TheoremId>& all_theorems() {
    static const std::vector<TheoremId> ids{
        TheoremId::compact0,    TheoremId::compact1,       TheoremId::compact,
        TheoremId::rqq,         TheoremId::spe1,           TheoremId::sep2,
        TheoremId::sep2_strong, TheoremId::sep2b,          TheoremId::corcompcont,
        TheoremId::valadier_final, TheoremId::valadier_classic,
    };
    return ids;
}

inline const char* theorem_name(TheoremId id) {
    switch (id) {
        case TheoremId::compact0: return "compact0";
        case TheoremId::compact1: return "compact1";
        case TheoremId::compact: return "compact";
        case TheoremId::rqq: return "rqq";
        case TheoremId::spe1: return "spe1";
        case TheoremId::sep2: return "sep2";
        case TheoremId::sep2_strong: return "sep2_strong";
        case TheoremId::sep2b: return "sep2b";
        case TheoremId::corcompcont: return "corcompcont";
        case TheoremId::valadier_final: return "valadier_final";
        case TheoremId::valadier_classic: return "valadier_classic";
    }
    throw std::logic_error("theorem_name: unreachable");
}

inline TheoremId theorem_from_name(const std::string& s) {
    for (TheoremId id : all_theorems())
        if (s == theorem_name(id)) return id;
    throw std::invalid_argument("unknown theorem id: " + s);
}

// finite-dimensional linear subspaces L containing x; the whole space is
// always an implicit extra entry and never needs listing
struct SubspaceList {
    std::vector<std::vector<Vec>> bases;

    void require_contains(const Vec& x) const {
        for (const auto& basis : bases) {
            Polyhedron L = subspace_polyhedron(basis, x.size());
            if (!polyhedron_contains(L, x, 1e-12))
                throw std::invalid_argument("SubspaceList: x must lie in every subspace");
        }
    }
};

inline std::vector<double> default_eps_grid() {
    std::vector<double> g{1.0};
    for (int k = 1; k <= 12; ++k) g.push_back(std::ldexp(1.0, -k));
    return g;
}

// ---------------------------------------------------------------------------
// union over the active index set, with lattice refinement for box covers
// ---------------------------------------------------------------------------

namespace detail {

// index samples feeding the union: validated seeds plus, for box families, a
// per-cover-box lattice filtered by the activity predicate
struct ActiveSampling {
    bool finite = true;
    std::vector<ActiveSet::SubBox> cover;
    std::vector<Vec> reps;
    std::function<bool(const Vec&)> is_active;
};

inline ActiveSampling sampling_from(const IndexedFamily& F, const Vec& x, double fx) {
    ActiveSet act = active_set(F, x, 0.0);
    ActiveSampling s;
    s.finite = act.finite;
    s.cover = std::move(act.cover);
    s.reps = std::move(act.representatives);
    const double tol = kTolActive * std::max(1.0, std::fabs(fx));
    s.is_active = [&F, x, fx, tol](const Vec& t) {
        ExtReal v = eval(F.member(t), x);
        return v.is_finite() && v.v >= fx - tol;
    };
    return s;
}

// cl-active set T'(x) = {t : (cl f_t)(x) = f(x)}; when member domains do not
// move with t the envelopes agree with the members at x, so T'(x) = T(x)
inline ActiveSampling cl_sampling_from(const IndexedFamily& F, const Vec& x, double fx) {
    const double tol = kTolActive * std::max(1.0, std::fabs(fx));
    auto cl_active = [&F, x, fx, tol](const Vec& t) {
        ExtReal v = lsc_envelope_value(F.member(t), x);
        return v.is_finite() && v.v >= fx - tol;
    };
    if (F.index_set.kind == IndexSet::Kind::Finite) {
        ActiveSampling s;
        for (std::size_t i = 0; i < F.finite_count(); ++i) {
            Vec t{static_cast<double>(i)};
            if (cl_active(t)) s.reps.push_back(std::move(t));
        }
        return s;
    }
    if (F.tmpl && !template_domain_t_dependent(*F.tmpl)) return sampling_from(F, x, fx);
    ActiveSampling s;
    s.finite = false;
    s.cover.push_back({F.index_set.lower, F.index_set.upper, 0.0});
    for (const Vec& t : box_samples(F.index_set.lower, F.index_set.upper))
        if (cl_active(t)) s.reps.push_back(t);
    s.is_active = cl_active;
    return s;
}

// hull of per-member pieces over the sampled active set; box covers are
// re-gridded at doubling resolution until the hull support settles on the
// direction net (within 1e-8), capped at 2^12 nodes per axis
inline GenSet union_hull(const IndexedFamily& F, std::size_t n, const ActiveSampling& s,
                         const std::function<GenSet(const ConvexFunc&)>& piece) {
    auto build = [&](const std::vector<Vec>& reps) -> GenSet {
        std::vector<GenSet> parts;
        for (const Vec& t : reps) {
            GenSet g = piece(F.member(t));
            if (!g.is_empty()) parts.push_back(std::move(g));
        }
        return parts.empty() ? GenSet::empty(n) : hull_union(parts);
    };
    if (s.finite || s.cover.empty()) return build(s.reps);

    GenSet prev = GenSet::empty(n);
    for (int level = 0;; ++level) {
        std::vector<Vec> reps = s.reps;
        std::size_t nodes = 0;
        for (const auto& b : s.cover) {
            const std::size_t m = b.lo.size();
            const std::size_t per = (std::size_t{1} << level) + 1;
            std::vector<std::size_t> idx(m, 0);
            bool done = false;
            while (!done) {
                Vec t(m);
                for (std::size_t i = 0; i < m; ++i)
                    t[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * static_cast<double>(idx[i]) /
                                         static_cast<double>(per - 1);
                if (s.is_active(t)) reps.push_back(std::move(t));
                ++nodes;
                for (std::size_t i = 0;; ++i) {
                    if (i == m) { done = true; break; }
                    if (++idx[i] < per) break;
                    idx[i] = 0;
                }
            }
        }
        std::sort(reps.begin(), reps.end(), lex_less);
        reps.erase(std::unique(reps.begin(), reps.end()), reps.end());
        GenSet cur = build(reps);
        if (level > 0 && hausdorff_gap(prev, cur) <= 1e-8) return cur;
        if (level >= 12 || nodes > 20000) return cur;
        prev = std::move(cur);
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// RHS builders
// ---------------------------------------------------------------------------

// hull of subdiff(f_t + I_domf, x) over the active set
inline GenSet rhs_compact0(const IndexedFamily& F, const Vec& x) {
    ExtReal fx = sup_eval(F, x);
    if (!fx.is_finite()) return GenSet::empty(x.size());
    const ConvexFunc wall = ConvexFunc::indicator(family_domain(F).domain);
    return detail::union_hull(F, x.size(), detail::sampling_from(F, x, fx.v),
                              [&](const ConvexFunc& m) {
                                  return subdiff(ConvexFunc::sum_of({m, wall}), x).set;
                              });
}

// intersection over subspaces L (the whole space always included) of the hulls
// of subdiff(f_t + I_{L cap domf}, x); the rqq variant substitutes the lsc
// envelopes cl f_t and their active set
inline GenSet rhs_with_subspaces(const IndexedFamily& F, const Vec& x, const SubspaceList& Ls,
                                 TheoremId variant) {
    if (variant != TheoremId::compact1 && variant != TheoremId::compact &&
        variant != TheoremId::rqq)
        throw std::invalid_argument("rhs_with_subspaces: variant must be compact1, compact or rqq");
    ExtReal fx = sup_eval(F, x);
    if (!fx.is_finite()) return GenSet::empty(x.size());
    Ls.require_contains(x);
    const bool use_closure = variant == TheoremId::rqq;
    detail::ActiveSampling s =
        use_closure ? detail::cl_sampling_from(F, x, fx.v) : detail::sampling_from(F, x, fx.v);
    const Polyhedron D = family_domain(F).domain;

    std::vector<Polyhedron> walls{D};
    for (const auto& basis : Ls.bases)
        walls.push_back(polyhedron_intersect(subspace_polyhedron(basis, x.size()), D));

    std::vector<GenSet> terms;
    for (const Polyhedron& w : walls) {
        const ConvexFunc wall = ConvexFunc::indicator(w);
        terms.push_back(detail::union_hull(F, x.size(), s, [&](const ConvexFunc& m) {
            ConvexFunc base = use_closure ? closure_of(m) : m;
            return subdiff(ConvexFunc::sum_of({std::move(base), wall}), x).set;
        }));
    }
    return intersect_sets(terms);
}

// intersection over (eps, L) of hulls of eps_subdiff(f_t) + N_{L cap domf}
inline GenSet rhs_spe1(const IndexedFamily& F, const Vec& x, std::vector<double> eps_grid,
                       const SubspaceList& Ls) {
    if (eps_grid.empty()) eps_grid = default_eps_grid();
    for (double e : eps_grid)
        if (!(e > 0.0)) throw std::invalid_argument("rhs_spe1: eps grid entries must be > 0");
    ExtReal fx = sup_eval(F, x);
    if (!fx.is_finite()) return GenSet::empty(x.size());
    Ls.require_contains(x);
    detail::ActiveSampling s = detail::sampling_from(F, x, fx.v);
    const Polyhedron D = family_domain(F).domain;

    std::vector<GenSet> cones{normal_cone(D, x)};
    for (const auto& basis : Ls.bases)
        cones.push_back(
            normal_cone(polyhedron_intersect(subspace_polyhedron(basis, x.size()), D), x));

    std::vector<GenSet> terms;
    for (double e : eps_grid)
        for (const GenSet& N : cones)
            terms.push_back(detail::union_hull(F, x.size(), s, [&](const ConvexFunc& m) {
                GenSet g = eps_subdiff_set(m, x, e).set;
                if (g.is_empty() || N.is_empty()) return GenSet::empty(x.size());
                return minkowski_sum(g, N);
            }));
    return intersect_sets(terms);
}

// the spe1 intersection with L fixed to the whole space
inline GenSet rhs_sep2b(const IndexedFamily& F, const Vec& x, std::vector<double> eps_grid = {}) {
    return rhs_spe1(F, x, std::move(eps_grid), SubspaceList{});
}

// plain hull of subdiff(f_t, x) over the active set; no closure taken, which
// is exactly the finite-dimensional sharpening under test
inline GenSet rhs_valadier(const IndexedFamily& F, const Vec& x) {
    ExtReal fx = sup_eval(F, x);
    if (!fx.is_finite()) return GenSet::empty(x.size());
    return detail::union_hull(F, x.size(), detail::sampling_from(F, x, fx.v),
                              [&](const ConvexFunc& m) { return subdiff(m, x).set; });
}

// normal cone of the domain plus the plain hull
inline GenSet rhs_corcompcont(const IndexedFamily& F, const Vec& x) {
    GenSet hull = rhs_valadier(F, x);
    if (hull.is_empty()) return hull;
    GenSet N = normal_cone(family_domain(F).domain, x);
    if (N.is_empty()) return GenSet::empty(x.size());
    return minkowski_sum(hull, N);
}

// ---------------------------------------------------------------------------
// sampled nearby-subgradient enlargement
// ---------------------------------------------------------------------------

// hull of exact subgradients y* in subdiff(phi, y) collected at deterministic
// points y near x (x itself, coordinate-hyperplane crossings where norm kinks
// live, and a direction-net sweep at shrinking radii), keeping only the pairs
// with |phi(y)-phi(x)| <= eps and |<y*, y-x>| <= eps; an inner approximation
// of the enlargement it samples, hence exactness is reported as sampled
inline SubdiffResult breve_subdiff_estimate(const ConvexFunc& phi, const Vec& x, double eps,
                                            std::size_t samples = 64) {
    if (!(eps > 0.0)) throw std::invalid_argument("breve_subdiff_estimate: eps must be > 0");
    ExtReal px = eval(phi, x);
    if (!px.is_finite())
        throw std::invalid_argument("breve_subdiff_estimate: phi(x) must be finite");
    const std::size_t n = x.size();

    std::vector<Vec> probes{x};
    if (n <= 5) {
        for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
            Vec y = x;
            double dist2 = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if ((mask >> i) & 1) {
                    dist2 += x[i] * x[i];
                    y[i] = 0.0;
                }
            if (dist2 <= eps * eps) probes.push_back(std::move(y));
        }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            if (std::fabs(x[i]) <= eps) {
                Vec y = x;
                y[i] = 0.0;
                probes.push_back(std::move(y));
            }
    }
    const auto& net = direction_net(n);
    for (std::size_t k = 0; k < samples; ++k) {
        double r = eps * std::ldexp(1.0, -static_cast<int>((k / net.size()) % 4));
        probes.push_back(axpy(x, r, net[k % net.size()]));
    }

    std::vector<GenSet> parts;
    for (const Vec& y : probes) {
        ExtReal py = eval(phi, y);
        if (!py.is_finite() || std::fabs(py.v - px.v) > eps) continue;
        GenSet g = subdiff(phi, y).set;
        if (g.is_empty()) continue;
        Vec d = sub(y, x);
        if (norm2(d) > eps * (1.0 + 1e-12)) continue;
        if (norm2(d) > 0.0)
            g = intersect_with_halfspaces(g, {{d, eps}, {scale(-1.0, d), eps}});
        if (!g.is_empty()) parts.push_back(std::move(g));
    }
    GenSet out = parts.empty() ? GenSet::empty(n) : hull_union(parts);
    return {std::move(out), Exactness::Sampled};
}

// ---------------------------------------------------------------------------
// hypothesis checks
// ---------------------------------------------------------------------------

enum class HypStatus { verified, certified_by_construction, unverified, violated };

inline const char* hyp_status_name(HypStatus s) {
    switch (s) {
        case HypStatus::verified: return "verified";
        case HypStatus::certified_by_construction: return "certified-by-construction";
        case HypStatus::unverified: return "unverified";
        case HypStatus::violated: return "violated";
    }
    throw std::logic_error("hyp_status_name: unreachable");
}

struct HypothesisCheck {
    std::string name;
    HypStatus status = HypStatus::unverified;
    std::string note;
};

namespace detail {

// a member fails to be lsc exactly when some strict face of its domain is
// attainable within the closure
inline bool member_lsc(const ConvexFunc& m) {
    Polyhedron d = domain_of(m);
    if (!d.has_strict()) return true;
    Polyhedron cl = polyhedron_closure(d);
    for (const auto& c : d.constraints) {
        if (!c.strict) continue;
        LP lp;
        lp.objective = c.normal;
        lp.goal = LPGoal::Maximize;
        for (const auto& r : cl.constraints) lp.constraints.push_back(lp_leq(r.normal, r.offset));
        LPResult res = solve_lp(lp);
        if (res.status != LPStatus::Optimal) return true; // empty closure: nothing missing
        if (res.value >= c.offset - 1e-9 * std::max(1.0, std::fabs(c.offset))) return false;
    }
    return true;
}

// is there a point of ri(A) inside B? positive common slack on the
// non-implicit rows of cl(A) while satisfying B (strictly where required)
inline bool relative_interior_meets(const Polyhedron& A, const Polyhedron& B) {
    Polyhedron clA = polyhedron_closure(A);
    std::vector<bool> is_impl(clA.constraints.size(), false);
    for (std::size_t i : implicit_equalities(clA)) is_impl[i] = true;
    LP lp;
    lp.objective = Vec(A.dim + 1, 0.0);
    lp.objective[A.dim] = 1.0;
    lp.goal = LPGoal::Maximize;
    for (std::size_t i = 0; i < clA.constraints.size(); ++i) {
        Vec row = clA.constraints[i].normal;
        row.push_back(is_impl[i] ? 0.0 : std::max(1e-12, norm2(clA.constraints[i].normal)));
        lp.constraints.push_back(lp_leq(std::move(row), clA.constraints[i].offset));
    }
    for (const auto& c : B.constraints) {
        Vec row = c.normal;
        row.push_back(c.strict ? std::max(1e-12, norm2(c.normal)) : 0.0);
        lp.constraints.push_back(lp_leq(std::move(row), c.offset));
    }
    Vec tcap(A.dim + 1, 0.0);
    tcap[A.dim] = 1.0;
    lp.constraints.push_back(lp_leq(std::move(tcap), 1.0));
    LPResult r = solve_lp(lp);
    return r.status == LPStatus::Optimal && r.value > 1e-10;
}

inline std::vector<Vec> member_index_samples(const IndexedFamily& F) {
    std::vector<Vec> out;
    if (F.index_set.kind == IndexSet::Kind::Finite) {
        for (std::size_t i = 0; i < F.finite_count(); ++i)
            out.push_back({static_cast<double>(i)});
    } else {
        out = box_samples(F.index_set.lower, F.index_set.upper);
    }
    return out;
}

// the family of lsc envelopes, for sampling-based checks on the cl variants
inline IndexedFamily closed_family(const IndexedFamily& F) {
    IndexedFamily G = F;
    auto src = std::make_shared<IndexedFamily>(F);
    if (F.index_set.kind == IndexSet::Kind::Finite && !F.members.empty()) {
        for (auto& m : G.members) m = closure_of(m);
        return G;
    }
    G.tmpl.reset();
    G.members.clear();
    G.override_fn = [src](const Vec& t) { return closure_of(src->member(t)); };
    return G;
}

inline ActiveSet whole_index_active(const IndexedFamily& F) {
    ActiveSet a;
    a.epsilon = 0.0;
    if (F.index_set.kind == IndexSet::Kind::Finite) {
        for (std::size_t i = 0; i < F.finite_count(); ++i) {
            a.labels.push_back(i);
            a.representatives.push_back({static_cast<double>(i)});
        }
        return a;
    }
    a.finite = false;
    a.cover.push_back({F.index_set.lower, F.index_set.upper, 0.0});
    a.representatives = box_samples(F.index_set.lower, F.index_set.upper);
    return a;
}

// worst distance of inner's generators outside outer; 0 when inner is empty
inline double inclusion_slack(const GenSet& inner, const GenSet& outer) {
    if (inner.is_empty()) return 0.0;
    if (outer.is_empty()) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (const Vec& p : inner.points)
        worst = std::max(worst, hull_distance(outer.points, outer.rays, p, true));
    for (const Vec& r : inner.rays)
        if (!ray_in_recession_cone(outer, r, 1e-8))
            worst = std::numeric_limits<double>::infinity();
    return worst;
}

inline HypothesisCheck hyp_ri_nonempty(const Polyhedron& D) {
    HypothesisCheck h{"ri(dom f) nonempty", HypStatus::verified, ""};
    if (!polyhedron_nonempty(D)) {
        h.status = HypStatus::violated;
        h.note = "dom f is empty";
    } else {
        h.note = "nonempty polyhedral domain has nonempty relative interior";
    }
    return h;
}

inline HypothesisCheck hyp_aff_continuity(const IndexedFamily& F) {
    HypothesisCheck h{"f restricted to aff(dom f) continuous on ri(dom f)",
                      HypStatus::certified_by_construction,
                      "finite parts are continuous and the coefficient supremum is finite"};
    if (F.override_fn) {
        h.status = HypStatus::unverified;
        h.note = "override family: coefficient growth over the index box not certified";
    }
    return h;
}

inline HypothesisCheck hyp_closure(const IndexedFamily& F, const std::vector<Vec>& probes) {
    HypothesisCheck h{"closure condition: cl f = sup_t cl f_t", HypStatus::verified, ""};
    ClosureReport rep = closure_condition_check(F, probes);
    if (!rep.holds) {
        h.status = HypStatus::violated;
        for (const auto& p : rep.probes)
            if (!p.holds) {
                h.note = "violated at a probe point (gap " + std::to_string(p.gap) + ")";
                break;
            }
    } else if (!rep.certified) {
        h.status = HypStatus::unverified;
        h.note = "sampled agreement only";
    } else {
        h.note = "certified on all probe points";
    }
    return h;
}

inline HypothesisCheck hyp_compactness(const IndexedFamily& F, bool have_active, double eps0) {
    HypothesisCheck h{"T_eps0(x) compact (eps0 = " + std::to_string(eps0) + ")",
                      HypStatus::certified_by_construction, ""};
    if (!have_active) {
        h.status = HypStatus::unverified;
        h.note = "active set undefined: supremum not finite at x";
        return h;
    }
    if (F.index_set.kind == IndexSet::Kind::Finite) {
        h.note = "finite index set";
    } else if (F.continuity_certified()) {
        h.note = "closed superlevel set of a polynomial over a compact index box";
    } else {
        h.status = HypStatus::unverified;
        h.note = "override family: closedness of the active set not certified";
    }
    return h;
}

inline HypothesisCheck hyp_usc(const IndexedFamily& F, const std::vector<Vec>& zs,
                               const std::optional<ActiveSet>& act, bool cl_variant) {
    HypothesisCheck h{cl_variant ? "t -> (cl f_t)(z) usc on T_eps0(x)"
                                 : "t -> f_t(z) usc on T_eps0(x)",
                      HypStatus::verified, ""};
    if (!act) {
        h.status = HypStatus::unverified;
        h.note = "active set undefined: supremum not finite at x";
        return h;
    }
    bool certified = true;
    if (cl_variant && !(F.index_set.kind == IndexSet::Kind::Finite ||
                        (F.tmpl && !template_domain_t_dependent(*F.tmpl))))
        certified = false;
    const IndexedFamily* probe_family = &F;
    IndexedFamily closed;
    if (cl_variant && !certified) {
        closed = closed_family(F);
        probe_family = &closed;
    }
    for (const Vec& z : zs) {
        UscReport rep = usc_check(*probe_family, z, *act);
        if (!rep.ok()) {
            h.status = HypStatus::violated;
            h.note = "violation at a sampled index (gap " +
                     std::to_string(rep.violations.front().gap) + ")";
            return h;
        }
        certified = certified && rep.certified;
    }
    if (certified) {
        h.status = HypStatus::certified_by_construction;
        h.note = "polynomial coefficients or finite index set";
    } else {
        h.status = HypStatus::unverified;
        h.note = "no violation found at sampled indices";
    }
    return h;
}

inline HypothesisCheck hyp_members_proper(const IndexedFamily& F) {
    HypothesisCheck h{"members proper", HypStatus::verified, "sampled member domains nonempty"};
    for (const Vec& t : member_index_samples(F))
        if (!polyhedron_nonempty(domain_of(F.member(t)))) {
            h.status = HypStatus::violated;
            h.note = "a sampled member has empty domain";
            return h;
        }
    if (F.index_set.kind != IndexSet::Kind::Finite) h.status = HypStatus::unverified;
    return h;
}

inline HypothesisCheck hyp_members_lsc(const IndexedFamily& F) {
    HypothesisCheck h{"members lsc", HypStatus::verified, ""};
    bool any_strict = false;
    for (const Vec& t : member_index_samples(F)) {
        ConvexFunc m = F.member(t);
        if (domain_of(m).has_strict()) any_strict = true;
        if (!member_lsc(m)) {
            h.status = HypStatus::violated;
            h.note = "a sampled member misses part of its domain boundary";
            return h;
        }
    }
    if (!any_strict) {
        h.status = HypStatus::certified_by_construction;
        h.note = "all sampled member domains are closed";
    } else {
        h.note = "strict faces present but unreachable";
    }
    if (F.index_set.kind != IndexSet::Kind::Finite && h.status == HypStatus::verified)
        h.status = HypStatus::unverified;
    return h;
}

inline HypothesisCheck hyp_cont_somewhere(const IndexedFamily& F, const Polyhedron& D) {
    HypothesisCheck h{"f finite and continuous at some point", HypStatus::verified, ""};
    double r = interior_radius(D);
    if (r <= 1e-10) {
        h.status = HypStatus::violated;
        h.note = "dom f has empty interior";
        return h;
    }
    if (F.override_fn) {
        h.status = HypStatus::unverified;
        h.note = "interior point exists but override supremum growth not certified";
    } else {
        h.note = "dom f has an interior point and the supremum is finite-valued";
    }
    return h;
}

inline HypothesisCheck hyp_cont_at_x(const IndexedFamily& F, const Polyhedron& D, const Vec& x,
                                     bool fx_finite) {
    HypothesisCheck h{"f finite and continuous at x", HypStatus::verified, ""};
    if (!fx_finite) {
        h.status = HypStatus::violated;
        h.note = "f(x) is not finite";
        return h;
    }
    if (!polyhedron_interior_contains(D, x, 1e-9)) {
        h.status = HypStatus::violated;
        h.note = "x is not interior to dom f";
        return h;
    }
    if (F.override_fn) {
        h.status = HypStatus::unverified;
        h.note = "x interior to dom f but override supremum growth not certified";
    } else {
        h.note = "x interior to dom f and the supremum is finite-valued";
    }
    return h;
}

inline HypothesisCheck hyp_ri_members_meet(const IndexedFamily& F, const Polyhedron& D,
                                           const std::optional<ActiveSet>& act0x) {
    HypothesisCheck h{"ri(dom f_t) meets dom f for active t", HypStatus::verified, ""};
    if (!act0x) {
        h.status = HypStatus::unverified;
        h.note = "active set undefined: supremum not finite at x";
        return h;
    }
    for (const Vec& t : act0x->representatives)
        if (!relative_interior_meets(domain_of(F.member(t)), D)) {
            h.status = HypStatus::violated;
            h.note = "fails for a sampled active index";
            return h;
        }
    if (F.index_set.kind == IndexSet::Kind::Finite) {
        h.note = "checked for every active member";
    } else {
        h.status = HypStatus::unverified;
        h.note = "checked at sampled representatives only";
    }
    return h;
}

inline HypothesisCheck hyp_members_aff_cont() {
    return {"f_t restricted to aff(dom f_t) continuous on ri(dom f_t)",
            HypStatus::certified_by_construction, "member finite parts are continuous"};
}

inline HypothesisCheck hyp_index_compact(const IndexedFamily& F) {
    return {"index set compact", HypStatus::certified_by_construction,
            F.index_set.kind == IndexSet::Kind::Finite ? "finite index set"
                                                       : "closed bounded index box"};
}

inline HypothesisCheck hyp_usc_everywhere(const IndexedFamily& F, const std::vector<Vec>& zs) {
    HypothesisCheck h{"t -> f_t(z) usc on T", HypStatus::certified_by_construction,
                      "polynomial coefficients or finite index set"};
    if (F.continuity_certified()) return h;
    ActiveSet whole = whole_index_active(F);
    for (const Vec& z : zs) {
        UscReport rep = usc_check(F, z, whole);
        if (!rep.ok()) {
            h.status = HypStatus::violated;
            h.note = "violation at a sampled index (gap " +
                     std::to_string(rep.violations.front().gap) + ")";
            return h;
        }
    }
    h.status = HypStatus::unverified;
    h.note = "no violation found at sampled indices";
    return h;
}

} // namespace detail

// ---------------------------------------------------------------------------
// certification
// ---------------------------------------------------------------------------

enum class CertVerdict { pass, fail, hypothesis_unmet };

inline const char* verdict_name(CertVerdict v) {
    switch (v) {
        case CertVerdict::pass: return "PASS";
        case CertVerdict::fail: return "FAIL";
        case CertVerdict::hypothesis_unmet: return "HYPOTHESIS-UNMET";
    }
    throw std::logic_error("verdict_name: unreachable");
}

struct CertOptions {
    double eps0 = 1.0;
    std::vector<double> eps_grid;    // empty: 1, 2^-1 .. 2^-12
    SubspaceList subspaces;
    std::vector<Vec> closure_probes; // empty: {x}
    std::vector<Vec> usc_probes;     // additional z arguments besides x
    OracleConfig oracle;
    double inclusion_tol = 1e-7;
};

struct CertReport {
    TheoremId theorem = TheoremId::compact0;
    GenSet lhs, rhs;
    bool lhs_in_rhs = false;
    double lhs_in_rhs_slack = std::numeric_limits<double>::infinity();
    bool rhs_in_lhs = false;
    double rhs_in_lhs_slack = std::numeric_limits<double>::infinity();
    double gap = std::numeric_limits<double>::infinity();
    std::vector<HypothesisCheck> hypotheses;
    CertVerdict verdict = CertVerdict::fail;
    std::string note;
    double lhs_seconds = 0.0;
    double rhs_seconds = 0.0;
    double hypotheses_seconds = 0.0;

    bool pass() const { return verdict == CertVerdict::pass; }
};

// RHS of the selected formula, with the options it needs
inline GenSet build_rhs(const IndexedFamily& F, const Vec& x, TheoremId id,
                        const CertOptions& opt = {}) {
    switch (id) {
        case TheoremId::compact0:
        case TheoremId::sep2: return rhs_compact0(F, x);
        case TheoremId::compact1:
        case TheoremId::compact:
        case TheoremId::rqq: return rhs_with_subspaces(F, x, opt.subspaces, id);
        case TheoremId::spe1: return rhs_spe1(F, x, opt.eps_grid, opt.subspaces);
        case TheoremId::sep2b: return rhs_sep2b(F, x, opt.eps_grid);
        case TheoremId::sep2_strong:
        case TheoremId::corcompcont: return rhs_corcompcont(F, x);
        case TheoremId::valadier_final:
        case TheoremId::valadier_classic: return rhs_valadier(F, x);
    }
    throw std::logic_error("build_rhs: unreachable");
}

inline CertReport certify(const IndexedFamily& F, const Vec& x, TheoremId id,
                          const CertOptions& opt = {}) {
    using clock = std::chrono::steady_clock;
    auto secs = [](clock::time_point a, clock::time_point b) {
        return std::chrono::duration<double>(b - a).count();
    };
    CertReport rep;
    rep.theorem = id;

    auto t0 = clock::now();
    rep.lhs = oracle_subdiff(F, x, opt.oracle);
    auto t1 = clock::now();
    rep.lhs_seconds = secs(t0, t1);

    rep.rhs = build_rhs(F, x, id, opt);
    auto t2 = clock::now();
    rep.rhs_seconds = secs(t1, t2);

    ExtReal fx = sup_eval(F, x);
    std::optional<ActiveSet> act_eps0, act_zero;
    if (fx.is_finite()) {
        act_eps0 = active_set(F, x, opt.eps0);
        act_zero = active_set(F, x, 0.0);
    }
    std::vector<Vec> closure_probes =
        opt.closure_probes.empty() ? std::vector<Vec>{x} : opt.closure_probes;
    std::vector<Vec> zs{x};
    zs.insert(zs.end(), opt.usc_probes.begin(), opt.usc_probes.end());
    const Polyhedron D = family_domain(F).domain;

    auto& H = rep.hypotheses;
    const bool have_act = act_eps0.has_value();
    switch (id) {
        case TheoremId::compact0:
            H.push_back(detail::hyp_ri_nonempty(D));
            H.push_back(detail::hyp_aff_continuity(F));
            H.push_back(detail::hyp_closure(F, closure_probes));
            H.push_back(detail::hyp_compactness(F, have_act, opt.eps0));
            H.push_back(detail::hyp_usc(F, zs, act_eps0, false));
            break;
        case TheoremId::compact1:
            H.push_back(detail::hyp_members_proper(F));
            H.push_back(detail::hyp_members_lsc(F));
            H.push_back(detail::hyp_compactness(F, have_act, opt.eps0));
            H.push_back(detail::hyp_usc(F, zs, act_eps0, false));
            break;
        case TheoremId::compact:
        case TheoremId::rqq:
        case TheoremId::spe1:
            H.push_back(detail::hyp_closure(F, closure_probes));
            H.push_back(detail::hyp_compactness(F, have_act, opt.eps0));
            H.push_back(detail::hyp_usc(F, zs, act_eps0, true));
            break;
        case TheoremId::sep2:
        case TheoremId::sep2_strong:
            H.push_back(detail::hyp_closure(F, closure_probes));
            H.push_back(detail::hyp_compactness(F, have_act, opt.eps0));
            H.push_back(detail::hyp_usc(F, zs, act_eps0, true));
            H.push_back(detail::hyp_ri_nonempty(D));
            H.push_back(detail::hyp_aff_continuity(F));
            if (id == TheoremId::sep2_strong) {
                H.push_back(detail::hyp_ri_members_meet(F, D, act_zero));
                H.push_back(detail::hyp_members_aff_cont());
            }
            break;
        case TheoremId::sep2b:
            H.push_back(detail::hyp_closure(F, closure_probes));
            H.push_back(detail::hyp_compactness(F, have_act, opt.eps0));
            H.push_back(detail::hyp_usc(F, zs, act_eps0, true));
            H.push_back(detail::hyp_ri_nonempty(D));
            break;
        case TheoremId::corcompcont:
            H.push_back(detail::hyp_cont_somewhere(F, D));
            H.push_back(detail::hyp_compactness(F, have_act, opt.eps0));
            H.push_back(detail::hyp_usc(F, zs, act_eps0, true));
            break;
        case TheoremId::valadier_final:
            H.push_back(detail::hyp_cont_at_x(F, D, x, fx.is_finite()));
            H.push_back(detail::hyp_compactness(F, have_act, opt.eps0));
            H.push_back(detail::hyp_usc(F, zs, act_eps0, false));
            break;
        case TheoremId::valadier_classic:
            H.push_back(detail::hyp_index_compact(F));
            H.push_back(detail::hyp_usc_everywhere(F, zs));
            H.push_back(detail::hyp_cont_at_x(F, D, x, fx.is_finite()));
            break;
    }
    auto t3 = clock::now();
    rep.hypotheses_seconds = secs(t2, t3);

    rep.lhs_in_rhs_slack = detail::inclusion_slack(rep.lhs, rep.rhs);
    rep.rhs_in_lhs_slack = detail::inclusion_slack(rep.rhs, rep.lhs);
    rep.lhs_in_rhs = rep.lhs_in_rhs_slack <= opt.inclusion_tol;
    rep.rhs_in_lhs = rep.rhs_in_lhs_slack <= opt.inclusion_tol;
    rep.gap = hausdorff_gap(rep.lhs, rep.rhs);

    if (rep.lhs.is_empty() && rep.rhs.is_empty())
        rep.note = "subdifferential empty on both sides";

    bool violated = false;
    for (const auto& h : H) violated = violated || h.status == HypStatus::violated;
    rep.verdict = violated ? CertVerdict::hypothesis_unmet
                  : (rep.lhs_in_rhs && rep.rhs_in_lhs) ? CertVerdict::pass
                                                       : CertVerdict::fail;
    return rep;
}

} // namespace supdiff
