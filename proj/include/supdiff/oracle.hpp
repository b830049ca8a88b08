#pragma once

// Brute-force construction of subdifferentials of a family supremum, used as
// ground truth when certifying the exact formulas. Works only through
// sup_eval: per net direction the closed directional derivative (or its
// epsilon analogue) is measured from difference quotients, and the set is
// rebuilt from those support values. Nothing here looks at the member
// structure, so agreement with the structural computation is evidence, not
// circularity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "convex_function.hpp"
#include "family.hpp"
#include "gen_set.hpp"
#include "scalar_min.hpp"

namespace supdiff {

struct OracleConfig {
    std::size_t direction_net_size = 0; // 0: the dimension default, 32 n^2 + 2n
    std::vector<double> quotient_steps; // empty: 2^-1 .. 2^-40
    double reconstruction_tol = 1e-7;
};

namespace detail {

inline const std::vector<double>& oracle_steps(const OracleConfig& cfg) {
    if (cfg.quotient_steps.empty()) return default_quotient_steps();
    for (std::size_t i = 0; i + 1 < cfg.quotient_steps.size(); ++i)
        if (!(cfg.quotient_steps[i] > cfg.quotient_steps[i + 1]))
            throw std::invalid_argument("OracleConfig: steps must decrease strictly");
    if (cfg.quotient_steps.back() <= 0.0)
        throw std::invalid_argument("OracleConfig: steps must stay positive");
    return cfg.quotient_steps;
}

// support value of the (epsilon-)subdifferential in direction u, measured
// from difference quotients of the supremum alone
inline double oracle_support(const IndexedFamily& F, const Vec& x, double fx, double eps,
                             const Vec& u, const std::vector<double>& steps) {
    auto quotient = [&](double s) {
        ExtReal v = sup_eval(F, axpy(x, s, u));
        if (!v.is_finite()) return std::numeric_limits<double>::infinity();
        return (v.v - fx + eps) / s;
    };

    if (eps == 0.0) {
        // quotients decrease to the limit as s -> 0; recession shows up as a
        // blow-up already at the largest step
        double first = quotient(steps.front());
        if (std::isfinite(first) && first > 1e12) return std::numeric_limits<double>::infinity();
        return quotient_limit(quotient, std::fabs(fx), steps);
    }

    // the epsilon quotient is quasiconvex in s with its minimizer possibly far
    // from 0; refine over two overlapping ranges like the structural path
    double best = std::numeric_limits<double>::infinity();
    for (double hi : {1.0, std::ldexp(1.0, 40)}) {
        auto r = try_minimize_scalar(quotient, 0.0, hi);
        if (r && r->value < best) best = r->value;
    }
    for (double s : steps) best = std::min(best, quotient(s));
    if (best < -1e12) return -std::numeric_limits<double>::infinity();
    return best;
}

} // namespace detail

inline GenSet oracle_eps_subdiff(const IndexedFamily& F, const Vec& x, double eps,
                                 const OracleConfig& cfg = {}) {
    if (!(eps >= 0.0)) throw std::invalid_argument("oracle_eps_subdiff: eps must be >= 0");
    if (cfg.direction_net_size != 0 && cfg.direction_net_size != direction_net(x.size()).size())
        throw std::invalid_argument("OracleConfig: only the built-in net size is available");
    if (!(cfg.reconstruction_tol > 0.0))
        throw std::invalid_argument("OracleConfig: reconstruction_tol must be positive");
    const auto& steps = detail::oracle_steps(cfg);
    ExtReal fx = sup_eval(F, x);
    if (!fx.is_finite()) return GenSet::empty(x.size());

    ReconstructOptions opt;
    opt.validate_tol = std::min(opt.validate_tol, cfg.reconstruction_tol);
    return reconstruct_set_from_support(
        [&](const Vec& u) { return detail::oracle_support(F, x, fx.v, eps, u, steps); }, x.size(),
        opt);
}

inline GenSet oracle_subdiff(const IndexedFamily& F, const Vec& x, const OracleConfig& cfg = {}) {
    return oracle_eps_subdiff(F, x, 0.0, cfg);
}

// definitional spot check of a claimed subdifferential: every vertex must
// satisfy the subgradient inequality on random probes, and slightly inflated
// vertices should be caught violating it when the supremum is polyhedral
struct CrossValidationReport {
    std::size_t vertices_checked = 0;
    std::size_t probes_per_vertex = 0;
    double worst_slack = 0.0; // largest observed inequality violation
    bool vertex_checks_pass = true;
    std::size_t inflated_tested = 0;
    std::size_t inflated_caught = 0;
    bool family_polyhedral = false;
    bool pass = true;
};

inline CrossValidationReport cross_validate(const GenSet& A, const IndexedFamily& F, const Vec& x,
                                            std::size_t n_probes) {
    CrossValidationReport rep;
    rep.probes_per_vertex = n_probes;

    std::vector<Vec> member_probes;
    if (F.index_set.kind == IndexSet::Kind::Finite) {
        for (std::size_t i = 0; i < F.finite_count(); ++i)
            member_probes.push_back({static_cast<double>(i)});
    } else {
        member_probes = detail::box_samples(F.index_set.lower, F.index_set.upper);
    }
    rep.family_polyhedral = true;
    for (const Vec& t : member_probes)
        rep.family_polyhedral = rep.family_polyhedral && is_polyhedral(F.member(t));

    if (A.is_empty()) return rep; // nothing to refute: vacuous pass

    ExtReal fx = sup_eval(F, x);
    std::mt19937 rng(20240813u);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    std::vector<Vec> ys;
    for (std::size_t i = 0; i < n_probes; ++i) {
        Vec y(x.size());
        for (double& c : y) c = dist(rng);
        ys.push_back(std::move(y));
    }

    auto max_violation = [&](const Vec& g) {
        // sup over probes of <g, y-x> - (f(y) - f(x)); +inf probes never bind
        double worst = -std::numeric_limits<double>::infinity();
        for (const Vec& y : ys) {
            ExtReal fy = sup_eval(F, y);
            if (!fy.is_finite()) continue;
            double lhs = fy.v - (fx.is_finite() ? fx.v : 0.0);
            worst = std::max(worst, dot(g, sub(y, x)) - lhs);
        }
        return worst;
    };

    Vec center(x.size(), 0.0);
    for (const Vec& p : A.points) center = add(center, p);
    center = scale(1.0 / static_cast<double>(A.points.size()), center);

    for (const Vec& g : A.points) {
        ++rep.vertices_checked;
        double viol = max_violation(g);
        rep.worst_slack = std::max(rep.worst_slack, viol);
        if (viol > 1e-8) rep.vertex_checks_pass = false;

        Vec out = sub(g, center);
        double nn = norm2(out);
        if (nn < 1e-9) continue; // singleton: no outward direction to inflate
        Vec inflated = axpy(g, 1e-3 / nn, out);
        if (detail::hull_distance(A.points, A.rays, inflated, true) < 1e-4)
            continue; // inflation stayed inside the set

        ++rep.inflated_tested;
        if (max_violation(inflated) > 1e-8) ++rep.inflated_caught;
    }

    rep.pass = rep.vertex_checks_pass &&
               (!rep.family_polyhedral || rep.inflated_caught == rep.inflated_tested);
    return rep;
}

} // namespace supdiff
