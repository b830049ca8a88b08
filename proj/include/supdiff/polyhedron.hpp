#pragma once

// Polyhedra as finite lists of linear constraints <a,x> <= b. A constraint may be
// marked strict (<a,x> < b); clearing strict flags yields the closure when the set
// is nonempty, and emptiness of mixed strict/non-strict systems is decided by LP.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "numeric.hpp"
#include "simplex.hpp"

namespace supdiff {

struct LinearConstraint {
    Vec normal;
    double offset = 0.0;
    bool strict = false;
};

struct Polyhedron {
    std::size_t dim = 0;
    std::vector<LinearConstraint> constraints;

    static Polyhedron universe(std::size_t n) { return {n, {}}; }

    static Polyhedron empty_set(std::size_t n) {
        Polyhedron p{n, {}};
        p.constraints.push_back({Vec(n, 0.0), -1.0, false});
        return p;
    }

    bool has_strict() const {
        for (const auto& c : constraints)
            if (c.strict) return true;
        return false;
    }
};

// membership; strict rows admit no tolerance at equality by design
inline bool polyhedron_contains(const Polyhedron& p, const Vec& x, double tol = 1e-9) {
    check_dim(x, p.dim, "polyhedron_contains");
    for (const auto& c : p.constraints) {
        double v = dot(c.normal, x);
        double s = std::max(1.0, norm2(c.normal)) * std::max(1.0, std::fabs(c.offset));
        if (c.strict) {
            if (!(v < c.offset)) return false;
        } else {
            if (v > c.offset + tol * s) return false;
        }
    }
    return true;
}

inline bool polyhedron_interior_contains(const Polyhedron& p, const Vec& x, double margin) {
    check_dim(x, p.dim, "polyhedron_interior_contains");
    for (const auto& c : p.constraints) {
        double nn = norm2(c.normal);
        if (nn < 1e-14) {
            if (c.offset < 0.0) return false;
            continue;
        }
        if (dot(c.normal, x) > c.offset - margin * nn) return false;
    }
    return true;
}

inline Polyhedron polyhedron_intersect(const Polyhedron& a, const Polyhedron& b) {
    if (a.dim != b.dim) throw std::invalid_argument("polyhedron_intersect: dimension mismatch");
    Polyhedron r = a;
    r.constraints.insert(r.constraints.end(), b.constraints.begin(), b.constraints.end());
    return r;
}

inline Polyhedron polyhedron_translate(const Polyhedron& p, const Vec& t) {
    check_dim(t, p.dim, "polyhedron_translate");
    Polyhedron r = p;
    for (auto& c : r.constraints) c.offset += dot(c.normal, t);
    return r;
}

// Decides whether the (possibly strict) system has a point: maximize a common
// slack on the strict rows. A mixed system is nonempty iff that slack can be
// made positive.
inline bool polyhedron_nonempty(const Polyhedron& p) {
    if (p.constraints.empty()) return true;
    if (!p.has_strict()) {
        LP lp;
        lp.objective = Vec(p.dim, 0.0);
        for (const auto& c : p.constraints) lp.constraints.push_back(lp_leq(c.normal, c.offset));
        return solve_lp(lp).status == LPStatus::Optimal;
    }
    LP lp;
    lp.objective = Vec(p.dim + 1, 0.0);
    lp.objective[p.dim] = 1.0;
    lp.goal = LPGoal::Maximize;
    for (const auto& c : p.constraints) {
        Vec row = c.normal;
        row.push_back(c.strict ? std::max(1e-12, norm2(c.normal)) : 0.0);
        lp.constraints.push_back(lp_leq(std::move(row), c.offset));
    }
    Vec tcap(p.dim + 1, 0.0);
    tcap[p.dim] = 1.0;
    lp.constraints.push_back(lp_leq(std::move(tcap), 1.0));
    LPResult r = solve_lp(lp);
    return r.status == LPStatus::Optimal && r.value > 1e-10;
}

// Closure: clear strict flags when the set is nonempty, else the empty set.
inline Polyhedron polyhedron_closure(const Polyhedron& p) {
    if (!p.has_strict()) return p;
    if (!polyhedron_nonempty(p)) return Polyhedron::empty_set(p.dim);
    Polyhedron r = p;
    for (auto& c : r.constraints) c.strict = false;
    return r;
}

// Largest margin t with <a_i,x> + t*|a_i| <= b_i for all rows (capped at 1);
// positive iff the polyhedron has nonempty interior.
inline double interior_radius(const Polyhedron& p) {
    if (p.constraints.empty()) return 1.0;
    LP lp;
    lp.objective = Vec(p.dim + 1, 0.0);
    lp.objective[p.dim] = 1.0;
    lp.goal = LPGoal::Maximize;
    for (const auto& c : p.constraints) {
        Vec row = c.normal;
        row.push_back(std::max(1e-12, norm2(c.normal)));
        lp.constraints.push_back(lp_leq(std::move(row), c.offset));
    }
    Vec tcap(p.dim + 1, 0.0);
    tcap[p.dim] = 1.0;
    lp.constraints.push_back(lp_leq(std::move(tcap), 1.0));
    LPResult r = solve_lp(lp);
    return r.status == LPStatus::Optimal ? r.value : -1.0;
}

// Indices of rows that hold with equality over the whole set.
inline std::vector<std::size_t> implicit_equalities(const Polyhedron& p) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
        LP lp;
        lp.objective = p.constraints[i].normal;
        lp.goal = LPGoal::Minimize;
        for (const auto& c : p.constraints) lp.constraints.push_back(lp_leq(c.normal, c.offset));
        LPResult r = solve_lp(lp);
        if (r.status == LPStatus::Optimal &&
            p.constraints[i].offset - r.value <= 1e-9 * std::max(1.0, std::fabs(p.constraints[i].offset)))
            out.push_back(i);
    }
    return out;
}

// A point with positive slack on every non-implicit row, i.e. a relative interior
// point; nullopt when the set is empty.
inline std::optional<Vec> relative_interior_point(const Polyhedron& p) {
    if (p.constraints.empty()) return Vec(p.dim, 0.0);
    auto implicit = implicit_equalities(p);
    std::vector<bool> is_impl(p.constraints.size(), false);
    for (auto i : implicit) is_impl[i] = true;

    LP lp;
    lp.objective = Vec(p.dim + 1, 0.0);
    lp.objective[p.dim] = 1.0;
    lp.goal = LPGoal::Maximize;
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
        Vec row = p.constraints[i].normal;
        row.push_back(is_impl[i] ? 0.0 : std::max(1e-12, norm2(p.constraints[i].normal)));
        lp.constraints.push_back(lp_leq(std::move(row), p.constraints[i].offset));
    }
    Vec tcap(p.dim + 1, 0.0);
    tcap[p.dim] = 1.0;
    lp.constraints.push_back(lp_leq(std::move(tcap), 1.0));
    LPResult r = solve_lp(lp);
    if (r.status != LPStatus::Optimal) return std::nullopt;
    if (!implicit.empty() || r.value > 1e-10) {
        Vec x(r.point.begin(), r.point.begin() + p.dim);
        return x;
    }
    // no implicit rows found yet slack stuck at zero: empty or degenerate
    return std::nullopt;
}

// Subspace spanned by `basis` as an equality-constrained polyhedron.
inline Polyhedron subspace_polyhedron(const std::vector<Vec>& basis, std::size_t n) {
    Polyhedron p = Polyhedron::universe(n);
    for (const Vec& c : orthogonal_complement(basis, n)) {
        p.constraints.push_back({c, 0.0, false});
        p.constraints.push_back({scale(-1.0, c), 0.0, false});
    }
    return p;
}

} // namespace supdiff
