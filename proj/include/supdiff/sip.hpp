#pragma once

// Kelley cutting-plane solver for min_x sup_t f_t(x) over a compact box.
// Each iterate contributes one cut built from a single active index: the
// lexicographically smallest maximizer t_k and the lexicographically smallest
// subgradient vertex of f_{t_k} at x_k, so repeated runs give identical
// histories. Iterates outside the family domain are cut off with the violated
// domain row instead of an objective cut.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "convex_function.hpp"
#include "family.hpp"
#include "gen_set.hpp"
#include "numeric.hpp"
#include "polyhedron.hpp"
#include "simplex.hpp"

namespace supdiff {

struct SIPProblem {
    IndexedFamily family;
    Polyhedron box;           // compact: every coordinate bounded
    double target_tol = 1e-6; // stop when upper - lower <= target_tol
};

enum class SIPStatus { Converged, IterationLimit };

inline const char* sip_status_name(SIPStatus s) {
    return s == SIPStatus::Converged ? "converged" : "iteration-limit";
}

struct SIPCut {
    Vec t; // generating index
    Vec g;
    double offset = 0.0;
    // objective cut: f(x) >= <g, x> + offset
    // feasibility cut: <g, x> <= offset, a closure row of a member domain
    bool feasibility = false;
};

struct SIPResult {
    Vec x_star;
    double value = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    std::vector<SIPCut> cut_history;
    SIPStatus status = SIPStatus::IterationLimit;
    std::vector<double> lower_history; // master optimum after each objective cut
    std::vector<double> upper_history; // incumbent value after each evaluation
};

namespace detail {

inline void require_compact_box(const Polyhedron& box) {
    for (std::size_t i = 0; i < box.dim; ++i) {
        for (double s : {1.0, -1.0}) {
            LP lp;
            lp.objective = Vec(box.dim, 0.0);
            lp.objective[i] = s;
            lp.goal = LPGoal::Maximize;
            for (const auto& c : box.constraints)
                lp.constraints.push_back(lp_leq(c.normal, c.offset));
            LPResult r = solve_lp(lp);
            if (r.status != LPStatus::Optimal)
                throw std::invalid_argument("sip: box must be compact, coordinate " +
                                            std::to_string(i) + " is unbounded or empty");
        }
    }
}

} // namespace detail

inline SIPResult solve(const SIPProblem& P, std::size_t max_iter = 500) {
    const std::size_t n = P.box.dim;
    detail::require_compact_box(P.box);

    Vec probe_t = P.family.index_set.kind == IndexSet::Kind::Finite ? Vec{0.0}
                                                                    : P.family.index_set.lower;
    if (P.family.member(probe_t).dim != n)
        throw std::invalid_argument("sip: family dimension does not match the box");

    // master rows over (x, z); box rows and feasibility walls leave z free,
    // objective cuts read z >= <g, x> + offset
    std::vector<LPConstraint> master_rows;
    std::size_t n_cuts = 0;
    Polyhedron shrunk = P.box; // box plus accumulated walls, used before any cut exists
    auto add_wall = [&](const Vec& a, double b) {
        Vec row = a;
        row.push_back(0.0);
        master_rows.push_back(lp_leq(std::move(row), b));
        shrunk.constraints.push_back({a, b, false});
    };
    auto add_cut = [&](const Vec& g, double offset) {
        Vec row = g;
        row.push_back(-1.0);
        master_rows.push_back(lp_leq(std::move(row), -offset));
        ++n_cuts;
    };
    for (const auto& c : P.box.constraints) {
        Vec row = c.normal;
        row.push_back(0.0);
        master_rows.push_back(lp_leq(std::move(row), c.offset));
    }

    auto master = [&]() -> std::pair<Vec, double> {
        LP lp;
        lp.objective = Vec(n + 1, 0.0);
        lp.objective[n] = 1.0;
        lp.goal = LPGoal::Minimize;
        lp.constraints = master_rows;
        LPResult r = solve_lp(lp);
        if (r.status == LPStatus::Unbounded)
            throw std::runtime_error("sip: master LP unbounded, box does not cap the iterates");
        if (r.status != LPStatus::Optimal)
            throw std::runtime_error("sip: master LP infeasible, domain walls emptied the box");
        Vec x(r.point.begin(), r.point.begin() + n);
        return {std::move(x), r.value};
    };

    auto start = relative_interior_point(P.box);
    if (!start) throw std::invalid_argument("sip: box is empty");
    Vec x = *start;

    SIPResult out;
    double best_upper = std::numeric_limits<double>::infinity();
    Vec best_x = x;
    double lower = -std::numeric_limits<double>::infinity();

    for (std::size_t it = 0; it < max_iter; ++it) {
        out.iterations = it + 1;
        SupEvalResult se = sup_eval_detailed(P.family, x);

        if (se.value.is_pos_inf()) {
            const Polyhedron d = domain_of(P.family.member(se.arg_t));
            std::size_t worst = d.constraints.size();
            double worst_gap = 0.0;
            for (std::size_t i = 0; i < d.constraints.size(); ++i) {
                double gap = dot(d.constraints[i].normal, x) - d.constraints[i].offset;
                if (gap > worst_gap) {
                    worst_gap = gap;
                    worst = i;
                }
            }
            if (worst == d.constraints.size())
                throw std::runtime_error("sip: iterate pinned to an open domain face");
            add_wall(d.constraints[worst].normal, d.constraints[worst].offset);
            out.cut_history.push_back(
                {se.arg_t, d.constraints[worst].normal, d.constraints[worst].offset, true});
            if (n_cuts == 0) {
                // no objective cut yet, the master would be unbounded in z
                auto p = relative_interior_point(shrunk);
                if (!p) throw std::runtime_error("sip: family domain does not meet the box");
                x = *p;
            } else {
                auto [xm, lo] = master();
                lower = std::max(lower, lo);
                x = std::move(xm);
            }
            continue;
        }

        const double fx = se.value.v;
        if (fx < best_upper) {
            best_upper = fx;
            best_x = x;
        }
        out.upper_history.push_back(best_upper);

        GenSet sd = subdiff(P.family.member(se.arg_t), x).set;
        if (sd.points.empty())
            throw std::runtime_error("sip: no subgradient available at the iterate");
        Vec g = *std::min_element(sd.points.begin(), sd.points.end(), lex_less);
        const double offset = fx - dot(g, x);
        add_cut(g, offset);
        out.cut_history.push_back({se.arg_t, g, offset, false});

        auto [xm, lo] = master();
        lower = std::max(lower, lo); // guards against simplex jitter, exact value is monotone
        out.lower_history.push_back(lower);
        if (best_upper - lower <= P.target_tol) {
            out.status = SIPStatus::Converged;
            break;
        }
        x = std::move(xm);
    }

    out.x_star = best_x;
    out.value = best_upper;
    return out;
}

} // namespace supdiff
