#pragma once

// Convex function expression trees over R^n: affine, quadratic, norm and
// indicator leaves composed by finite max, sum, translation and truncation.
// Every tree splits as  phi = finite_part + indicator(domain)  with the finite
// part real-valued and continuous on all of R^n and the domain a polyhedron
// (possibly with strict faces). Evaluation, subdifferentials, epsilon-
// subdifferential supports and lsc envelopes are all computed through that
// split: by Moreau-Rockafellar with a continuous summand,
//   subdiff(phi, x) = subdiff(finite_part, x) + normal_cone(domain, x)
// holds with no extra qualification, and
//   (cl phi)(x) = finite_part(x) + indicator(closure of domain)(x).

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "extreal.hpp"
#include "gen_set.hpp"
#include "numeric.hpp"
#include "polyhedron.hpp"
#include "scalar_min.hpp"

namespace supdiff {

enum class NormKind { One, Two, Inf };
enum class Exactness { Exact, Sampled };

// membership tolerance for evaluation: tight enough that difference-quotient
// probes at steps down to 2^-40 cannot tunnel through a domain face, loose
// enough to absorb dot-product roundoff at the boundary
constexpr double kDomainEvalTol = 1e-13;

struct ConvexFunc {
    enum class Kind { Affine, Quad, Norm, Indicator, MaxFinite, Sum, Shifted, Truncated };

    Kind kind = Kind::Affine;
    std::size_t dim = 0;

    Matrix Q;                          // Quad
    Vec a;                             // Affine / Quad linear term
    double b = 0.0;                    // Affine / Quad constant, Truncated floor
    NormKind norm_kind = NormKind::Two;
    double scale = 1.0;                // Norm factor, >= 0
    Polyhedron P;                      // Indicator
    Vec translate;                     // Shifted
    std::vector<ConvexFunc> children;  // MaxFinite / Sum / Shifted / Truncated

    static ConvexFunc affine(Vec a, double b) {
        ConvexFunc f;
        f.kind = Kind::Affine;
        f.dim = a.size();
        f.a = std::move(a);
        f.b = b;
        return f;
    }

    static ConvexFunc quad(Matrix Q, Vec a, double b) {
        if (Q.rows != Q.cols || Q.rows != a.size())
            throw std::invalid_argument("ConvexFunc::quad: dimension mismatch");
        for (std::size_t i = 0; i < Q.rows; ++i)
            for (std::size_t j = i + 1; j < Q.cols; ++j)
                if (std::fabs(Q(i, j) - Q(j, i)) > 1e-12)
                    throw std::invalid_argument("ConvexFunc::quad: matrix not symmetric");
        if (!is_psd(Q)) throw std::invalid_argument("ConvexFunc::quad: matrix not positive semidefinite");
        ConvexFunc f;
        f.kind = Kind::Quad;
        f.dim = a.size();
        f.Q = std::move(Q);
        f.a = std::move(a);
        f.b = b;
        return f;
    }

    static ConvexFunc norm(std::size_t n, NormKind k, double scale) {
        if (!(scale >= 0.0)) throw std::invalid_argument("ConvexFunc::norm: scale must be >= 0");
        ConvexFunc f;
        f.kind = Kind::Norm;
        f.dim = n;
        f.norm_kind = k;
        f.scale = scale;
        return f;
    }

    static ConvexFunc indicator(Polyhedron P) {
        ConvexFunc f;
        f.kind = Kind::Indicator;
        f.dim = P.dim;
        f.P = std::move(P);
        return f;
    }

    static ConvexFunc max_of(std::vector<ConvexFunc> cs) {
        if (cs.empty()) throw std::invalid_argument("ConvexFunc::max_of: needs at least one child");
        ConvexFunc f;
        f.kind = Kind::MaxFinite;
        f.dim = cs.front().dim;
        for (const auto& c : cs)
            if (c.dim != f.dim) throw std::invalid_argument("ConvexFunc::max_of: dimension mismatch");
        f.children = std::move(cs);
        return f;
    }

    static ConvexFunc sum_of(std::vector<ConvexFunc> cs) {
        if (cs.empty()) throw std::invalid_argument("ConvexFunc::sum_of: needs at least one child");
        ConvexFunc f;
        f.kind = Kind::Sum;
        f.dim = cs.front().dim;
        for (const auto& c : cs)
            if (c.dim != f.dim) throw std::invalid_argument("ConvexFunc::sum_of: dimension mismatch");
        f.children = std::move(cs);
        return f;
    }

    static ConvexFunc shifted(ConvexFunc c, Vec t) {
        if (c.dim != t.size()) throw std::invalid_argument("ConvexFunc::shifted: dimension mismatch");
        ConvexFunc f;
        f.kind = Kind::Shifted;
        f.dim = c.dim;
        f.translate = std::move(t);
        f.children.push_back(std::move(c));
        return f;
    }

    // evaluates as max{child, floor_value}
    static ConvexFunc truncated(ConvexFunc c, double floor_value) {
        if (!std::isfinite(floor_value))
            throw std::invalid_argument("ConvexFunc::truncated: floor must be finite");
        ConvexFunc f;
        f.kind = Kind::Truncated;
        f.dim = c.dim;
        f.b = floor_value;
        f.children.push_back(std::move(c));
        return f;
    }
};

struct SubdiffResult {
    GenSet set;
    Exactness exactness = Exactness::Exact;
};

// value of the tree with every indicator replaced by 0; real-valued and
// continuous on all of R^n
inline double finite_part(const ConvexFunc& f, const Vec& x) {
    check_dim(x, f.dim, "finite_part");
    switch (f.kind) {
        case ConvexFunc::Kind::Affine: return dot(f.a, x) + f.b;
        case ConvexFunc::Kind::Quad: return 0.5 * quad_form(f.Q, x) + dot(f.a, x) + f.b;
        case ConvexFunc::Kind::Norm:
            switch (f.norm_kind) {
                case NormKind::One: return f.scale * norm1(x);
                case NormKind::Two: return f.scale * norm2(x);
                case NormKind::Inf: return f.scale * norm_inf(x);
            }
            return 0.0;
        case ConvexFunc::Kind::Indicator: return 0.0;
        case ConvexFunc::Kind::MaxFinite: {
            double m = -std::numeric_limits<double>::infinity();
            for (const auto& c : f.children) m = std::max(m, finite_part(c, x));
            return m;
        }
        case ConvexFunc::Kind::Sum: {
            double s = 0.0;
            for (const auto& c : f.children) s += finite_part(c, x);
            return s;
        }
        case ConvexFunc::Kind::Shifted: return finite_part(f.children.front(), sub(x, f.translate));
        case ConvexFunc::Kind::Truncated: return std::max(finite_part(f.children.front(), x), f.b);
    }
    throw std::logic_error("finite_part: unreachable");
}

inline Polyhedron domain_of(const ConvexFunc& f) {
    switch (f.kind) {
        case ConvexFunc::Kind::Affine:
        case ConvexFunc::Kind::Quad:
        case ConvexFunc::Kind::Norm: return Polyhedron::universe(f.dim);
        case ConvexFunc::Kind::Indicator: return f.P;
        case ConvexFunc::Kind::MaxFinite:
        case ConvexFunc::Kind::Sum: {
            Polyhedron d = Polyhedron::universe(f.dim);
            for (const auto& c : f.children) d = polyhedron_intersect(d, domain_of(c));
            return d;
        }
        case ConvexFunc::Kind::Shifted:
            return polyhedron_translate(domain_of(f.children.front()), f.translate);
        case ConvexFunc::Kind::Truncated: return domain_of(f.children.front());
    }
    throw std::logic_error("domain_of: unreachable");
}

inline ExtReal eval(const ConvexFunc& f, const Vec& x) {
    check_dim(x, f.dim, "eval");
    switch (f.kind) {
        case ConvexFunc::Kind::Affine:
        case ConvexFunc::Kind::Quad:
        case ConvexFunc::Kind::Norm: return ExtReal{finite_part(f, x)};
        case ConvexFunc::Kind::Indicator:
            return polyhedron_contains(f.P, x, kDomainEvalTol) ? ExtReal{0.0} : ExtReal::pos_inf();
        case ConvexFunc::Kind::MaxFinite: {
            ExtReal m = ExtReal::neg_inf();
            for (const auto& c : f.children) m = ext_max(m, eval(c, x));
            return m;
        }
        case ConvexFunc::Kind::Sum: {
            ExtReal s{0.0};
            for (const auto& c : f.children) s = s + eval(c, x);
            return s;
        }
        case ConvexFunc::Kind::Shifted: return eval(f.children.front(), sub(x, f.translate));
        case ConvexFunc::Kind::Truncated:
            return ext_max(eval(f.children.front(), x), ExtReal{f.b});
    }
    throw std::logic_error("eval: unreachable");
}

inline ExtReal lsc_envelope_value(const ConvexFunc& f, const Vec& x) {
    check_dim(x, f.dim, "lsc_envelope_value");
    Polyhedron cl = polyhedron_closure(domain_of(f));
    if (!polyhedron_contains(cl, x, kDomainEvalTol)) return ExtReal::pos_inf();
    return ExtReal{finite_part(f, x)};
}

// the tree with every indicator replaced by the zero function; evaluates to
// finite_part everywhere
inline ConvexFunc strip_indicators(const ConvexFunc& f) {
    if (f.kind == ConvexFunc::Kind::Indicator) return ConvexFunc::affine(Vec(f.dim, 0.0), 0.0);
    ConvexFunc g = f;
    for (auto& c : g.children) c = strip_indicators(c);
    return g;
}

// lsc envelope as a function object: the finite part plus the indicator of
// the closed domain, pointwise equal to lsc_envelope_value
inline ConvexFunc closure_of(const ConvexFunc& f) {
    return ConvexFunc::sum_of(
        {strip_indicators(f), ConvexFunc::indicator(polyhedron_closure(domain_of(f)))});
}

inline bool is_polyhedral(const ConvexFunc& f) {
    switch (f.kind) {
        case ConvexFunc::Kind::Affine:
        case ConvexFunc::Kind::Indicator: return true;
        case ConvexFunc::Kind::Quad: {
            for (double v : f.Q.a)
                if (v != 0.0) return false;
            return true;
        }
        case ConvexFunc::Kind::Norm: return f.norm_kind != NormKind::Two || f.scale == 0.0 || f.dim == 1;
        default:
            for (const auto& c : f.children)
                if (!is_polyhedral(c)) return false;
            return true;
    }
}

inline bool has_indicator(const ConvexFunc& f) {
    if (f.kind == ConvexFunc::Kind::Indicator) return true;
    for (const auto& c : f.children)
        if (has_indicator(c)) return true;
    return false;
}

// continuity test used as a sum-rule / theorem hypothesis: no indicator in the
// tree, or x interior to every indicator constraint by the given margin
inline bool is_continuous_at(const ConvexFunc& f, const Vec& x, double margin = 1e-9) {
    switch (f.kind) {
        case ConvexFunc::Kind::Indicator: return polyhedron_interior_contains(f.P, x, margin);
        case ConvexFunc::Kind::Shifted:
            return is_continuous_at(f.children.front(), sub(x, f.translate), margin);
        default:
            for (const auto& c : f.children)
                if (!is_continuous_at(c, x, margin)) return false;
            return true;
    }
}

namespace detail {

constexpr double kKinkTol = 1e-9;
constexpr double kActiveTol = 1e-10;

// subdifferential of the finite part (a finite continuous convex function);
// `sampled` flips when a Euclidean-norm kink forces a direction-net hull
inline GenSet finite_part_subdiff(const ConvexFunc& f, const Vec& x, bool& sampled) {
    const std::size_t n = f.dim;
    switch (f.kind) {
        case ConvexFunc::Kind::Affine: return GenSet::singleton(f.a);
        case ConvexFunc::Kind::Quad: return GenSet::singleton(add(f.Q.mul(x), f.a));
        case ConvexFunc::Kind::Indicator: return GenSet::singleton(Vec(n, 0.0));
        case ConvexFunc::Kind::Norm: {
            if (f.scale == 0.0) return GenSet::singleton(Vec(n, 0.0));
            switch (f.norm_kind) {
                case NormKind::Two: {
                    double nx = norm2(x);
                    if (nx > kKinkTol) return GenSet::singleton(scale(f.scale / nx, x));
                    if (n == 1) return GenSet::make(1, {{-f.scale}, {f.scale}}, {});
                    // dual ball: inner hull of the direction net on the sphere
                    sampled = true;
                    GenSet g = GenSet::empty(n);
                    for (const Vec& u : direction_net(n)) g.points.push_back(scale(f.scale, u));
                    std::sort(g.points.begin(), g.points.end(), lex_less);
                    return g;
                }
                case NormKind::One: {
                    // corner per sign pattern of the coordinates at zero
                    std::vector<std::size_t> free_idx;
                    Vec base(n, 0.0);
                    for (std::size_t i = 0; i < n; ++i) {
                        if (std::fabs(x[i]) <= kKinkTol) free_idx.push_back(i);
                        else base[i] = x[i] > 0 ? f.scale : -f.scale;
                    }
                    GenSet g = GenSet::empty(n);
                    const std::size_t m = free_idx.size();
                    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
                        Vec p = base;
                        for (std::size_t j = 0; j < m; ++j)
                            p[free_idx[j]] = (mask >> j) & 1 ? f.scale : -f.scale;
                        g.points.push_back(std::move(p));
                    }
                    std::sort(g.points.begin(), g.points.end(), lex_less);
                    return g;
                }
                case NormKind::Inf: {
                    double m = norm_inf(x);
                    GenSet g = GenSet::empty(n);
                    if (m <= kKinkTol) {
                        for (std::size_t i = 0; i < n; ++i) {
                            g.points.push_back(scale(f.scale, unit_vec(n, i)));
                            g.points.push_back(scale(-f.scale, unit_vec(n, i)));
                        }
                    } else {
                        for (std::size_t i = 0; i < n; ++i)
                            if (std::fabs(x[i]) >= m - kKinkTol * std::max(1.0, m))
                                g.points.push_back(scale(x[i] > 0 ? f.scale : -f.scale, unit_vec(n, i)));
                    }
                    std::sort(g.points.begin(), g.points.end(), lex_less);
                    return g;
                }
            }
            throw std::logic_error("finite_part_subdiff: unreachable norm kind");
        }
        case ConvexFunc::Kind::MaxFinite: {
            double m = finite_part(f, x);
            std::vector<GenSet> parts;
            for (const auto& c : f.children)
                if (finite_part(c, x) >= m - kActiveTol * std::max(1.0, std::fabs(m)))
                    parts.push_back(finite_part_subdiff(c, x, sampled));
            return hull_union(parts);
        }
        case ConvexFunc::Kind::Sum: {
            GenSet g = GenSet::singleton(Vec(n, 0.0));
            for (const auto& c : f.children)
                g = minkowski_sum(g, finite_part_subdiff(c, x, sampled));
            return g;
        }
        case ConvexFunc::Kind::Shifted:
            return finite_part_subdiff(f.children.front(), sub(x, f.translate), sampled);
        case ConvexFunc::Kind::Truncated: {
            double v = finite_part(f.children.front(), x);
            double s = kActiveTol * std::max(1.0, std::fabs(f.b));
            if (v > f.b + s) return finite_part_subdiff(f.children.front(), x, sampled);
            if (v < f.b - s) return GenSet::singleton(Vec(n, 0.0));
            return hull_union({finite_part_subdiff(f.children.front(), x, sampled),
                               GenSet::singleton(Vec(n, 0.0))});
        }
    }
    throw std::logic_error("finite_part_subdiff: unreachable");
}

} // namespace detail

inline SubdiffResult subdiff(const ConvexFunc& f, const Vec& x) {
    check_dim(x, f.dim, "subdiff");
    if (!eval(f, x).is_finite()) return {GenSet::empty(f.dim), Exactness::Exact};
    bool sampled = false;
    GenSet grad = detail::finite_part_subdiff(f, x, sampled);
    GenSet cone = normal_cone(domain_of(f), x);
    GenSet result = canonicalize(minkowski_sum(grad, cone));
    return {std::move(result), sampled ? Exactness::Sampled : Exactness::Exact};
}

namespace detail {

inline const std::vector<double>& default_quotient_steps() {
    static const std::vector<double> steps = [] {
        std::vector<double> s;
        double v = 0.5;
        for (int k = 1; k <= 40; ++k, v *= 0.5) s.push_back(v);
        return s;
    }();
    return steps;
}

// limit of a nonincreasing difference quotient over a strictly decreasing
// step grid (default 2^-1..2^-40). Stops when consecutive values stabilize
// relative to `value_scale` or when two consecutive Richardson extrapolations
// (accepted only while the decrements halve) agree; deep steps are otherwise
// dominated by cancellation noise of order value_scale / s * ulp.
inline double quotient_limit(const std::function<double(double)>& q, double value_scale,
                             const std::vector<double>& steps) {
    constexpr double kStabTol = 1e-11;
    const double noise_unit = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, value_scale);

    double prev = std::numeric_limits<double>::infinity();
    double d_prev = std::numeric_limits<double>::quiet_NaN();
    double extr = std::numeric_limits<double>::quiet_NaN();
    bool have_extr = false;

    for (double s : steps) {
        double v = q(s);
        if (!std::isfinite(v)) {
            if (v < 0) return -std::numeric_limits<double>::infinity();
            continue; // outside the domain along the ray; smaller steps may enter
        }
        if (v < -1e12) return -std::numeric_limits<double>::infinity();
        if (std::isfinite(prev)) {
            double d = prev - v;
            double stab = std::max(kStabTol * std::max(1.0, std::fabs(v)), noise_unit / s);
            if (std::fabs(d) <= stab) return v;
            if (d > 0 && std::isfinite(d_prev)) {
                double r = d_prev / d;
                if (r >= 1.8 && r <= 2.2) {
                    double cand = v - d;
                    if (have_extr && std::fabs(cand - extr) <= 1e-9 * std::max(1.0, std::fabs(cand)))
                        return cand;
                    extr = cand;
                    have_extr = true;
                } else {
                    have_extr = false;
                }
            }
            d_prev = d;
        }
        prev = v;
    }
    if (have_extr) return extr;
    return prev; // +inf when the ray never entered the domain
}

inline double quotient_limit(const std::function<double(double)>& q, double value_scale) {
    return quotient_limit(q, value_scale, default_quotient_steps());
}

} // namespace detail

// support of the epsilon-subdifferential:
//   sigma(u) = inf_{s>0} (phi(x+su) - phi(x) + eps) / s
// For eps = 0 the quotient decreases to the closed directional derivative as
// s -> 0 and is computed by the guarded limit above; for eps > 0 the objective
// is quasiconvex with its minimizer away from 0 and scalar minimization over
// two overlapping ranges covers minimizers from 2^-50 up to 2^40.
inline ExtReal eps_subdiff_support(const ConvexFunc& f, const Vec& x, double eps, const Vec& u) {
    check_dim(x, f.dim, "eps_subdiff_support");
    check_dim(u, f.dim, "eps_subdiff_support");
    if (!(eps >= 0.0)) throw std::invalid_argument("eps_subdiff_support: eps must be >= 0");
    ExtReal fx = eval(f, x);
    if (!fx.is_finite()) return ExtReal::neg_inf(); // empty set supports -inf

    auto quotient = [&](double s) {
        ExtReal v = eval(f, axpy(x, s, u));
        if (!v.is_finite()) return std::numeric_limits<double>::infinity();
        return (v.v - fx.v + eps) / s;
    };

    if (eps == 0.0) {
        double lim = detail::quotient_limit(quotient, std::fabs(fx.v));
        if (lim == std::numeric_limits<double>::infinity()) return ExtReal::pos_inf();
        if (lim == -std::numeric_limits<double>::infinity()) return ExtReal::neg_inf();
        return ExtReal{lim};
    }

    double best = std::numeric_limits<double>::infinity();
    for (double hi : {1.0, std::ldexp(1.0, 40)}) {
        auto r = try_minimize_scalar(quotient, 0.0, hi);
        if (r) best = std::min(best, r->value);
    }
    if (best == std::numeric_limits<double>::infinity()) return ExtReal::pos_inf();
    if (best < -1e12) return ExtReal::neg_inf();
    return ExtReal{best};
}

inline SubdiffResult eps_subdiff_set(const ConvexFunc& f, const Vec& x, double eps) {
    check_dim(x, f.dim, "eps_subdiff_set");
    if (!eval(f, x).is_finite()) return {GenSet::empty(f.dim), Exactness::Exact};
    auto sigma = [&](const Vec& u) {
        ExtReal s = eps_subdiff_support(f, x, eps, u);
        if (s.is_pos_inf()) return std::numeric_limits<double>::infinity();
        if (s.is_neg_inf()) return -std::numeric_limits<double>::infinity();
        return s.v;
    };
    GenSet g = reconstruct_set_from_support(sigma, f.dim);
    return {std::move(g), is_polyhedral(f) ? Exactness::Exact : Exactness::Sampled};
}

} // namespace supdiff
