#pragma once

// Compactly indexed families {f_t} and their supremum function. Index sets are
// finite label lists or boxes in R^m (m <= 2); members come from a template
// tree whose leaf coefficients are polynomials in t, from an explicit member
// list, or from an arbitrary instantiation callback (test fixtures). Box
// suprema and epsilon-active covers run a deterministic branch-and-bound on
// interval bounds of the template; sub-box corners and centers are sampled so
// boundary maxima are hit exactly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "convex_function.hpp"
#include "directions.hpp"
#include "extreal.hpp"
#include "numeric.hpp"
#include "polyhedron.hpp"

namespace supdiff {

constexpr double kTolSup = 1e-10;
constexpr double kTolActive = 1e-10;

// ---------------------------------------------------------------------------
// polynomials in the index variable, with interval range bounds
// ---------------------------------------------------------------------------

struct PolyTerm {
    std::vector<unsigned> expo; // one exponent per index coordinate
    double value = 0.0;
};

struct IndexPolynomial {
    std::size_t arity = 0;
    std::vector<PolyTerm> terms;

    static IndexPolynomial constant(std::size_t arity, double v) {
        IndexPolynomial p;
        p.arity = arity;
        if (v != 0.0) p.terms.push_back({std::vector<unsigned>(arity, 0), v});
        return p;
    }

    bool is_constant() const {
        for (const auto& t : terms)
            for (unsigned e : t.expo)
                if (e != 0) return false;
        return true;
    }

    double eval(const Vec& t) const {
        check_dim(t, arity, "IndexPolynomial::eval");
        double s = 0.0;
        for (const auto& term : terms) {
            double m = term.value;
            for (std::size_t i = 0; i < arity; ++i)
                for (unsigned e = 0; e < term.expo[i]; ++e) m *= t[i];
            s += m;
        }
        return s;
    }
};

namespace detail {

struct Interval {
    double lo = 0.0, hi = 0.0;

    static Interval point(double v) { return {v, v}; }
    static Interval top_inf() {
        return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    }

    Interval operator+(const Interval& o) const { return {lo + o.lo, hi + o.hi}; }
    Interval max_with(const Interval& o) const { return {std::max(lo, o.lo), std::max(hi, o.hi)}; }
};

inline Interval interval_scale(const Interval& a, double c) {
    return c >= 0 ? Interval{c * a.lo, c * a.hi} : Interval{c * a.hi, c * a.lo};
}

inline Interval interval_mul(const Interval& a, const Interval& b) {
    double c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
    return {std::min(std::min(c[0], c[1]), std::min(c[2], c[3])),
            std::max(std::max(c[0], c[1]), std::max(c[2], c[3]))};
}

inline Interval interval_pow(double lo, double hi, unsigned e) {
    if (e == 0) return Interval::point(1.0);
    double pl = std::pow(lo, static_cast<double>(e));
    double ph = std::pow(hi, static_cast<double>(e));
    if (e % 2 == 1) return {pl, ph};
    double m = std::max(pl, ph);
    if (lo <= 0.0 && hi >= 0.0) return {0.0, m};
    return {std::min(pl, ph), m};
}

inline Interval poly_interval(const IndexPolynomial& p, const Vec& lo, const Vec& hi) {
    Interval s = Interval::point(0.0);
    for (const auto& term : p.terms) {
        Interval m = Interval::point(term.value);
        for (std::size_t i = 0; i < p.arity; ++i)
            if (term.expo[i] > 0) m = interval_mul(m, interval_pow(lo[i], hi[i], term.expo[i]));
        s = s + m;
    }
    return s;
}

inline IndexPolynomial poly_axpy(IndexPolynomial acc, double c, const IndexPolynomial& p) {
    for (const auto& term : p.terms) {
        bool merged = false;
        for (auto& dst : acc.terms) {
            if (dst.expo == term.expo) {
                dst.value += c * term.value;
                merged = true;
                break;
            }
        }
        if (!merged) acc.terms.push_back({term.expo, c * term.value});
    }
    return acc;
}

} // namespace detail

// ---------------------------------------------------------------------------
// index sets and parametric templates
// ---------------------------------------------------------------------------

struct IndexSet {
    enum class Kind { Finite, Box };
    Kind kind = Kind::Finite;
    std::vector<std::string> labels; // Finite
    Vec lower, upper;                // Box, componentwise lower <= upper
    int base_resolution = 256;       // Box; adaptive refinement down to span / 2^16

    static IndexSet finite(std::vector<std::string> names) {
        if (names.empty()) throw std::invalid_argument("IndexSet::finite: needs at least one label");
        IndexSet s;
        s.kind = Kind::Finite;
        s.labels = std::move(names);
        return s;
    }

    static IndexSet box(Vec lo, Vec hi, int base_resolution = 256) {
        if (lo.size() != hi.size() || lo.empty() || lo.size() > 2)
            throw std::invalid_argument("IndexSet::box: index dimension must be 1 or 2");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (!(lo[i] <= hi[i])) throw std::invalid_argument("IndexSet::box: needs lower <= upper");
        if (base_resolution < 2) throw std::invalid_argument("IndexSet::box: resolution too small");
        IndexSet s;
        s.kind = Kind::Box;
        s.lower = std::move(lo);
        s.upper = std::move(hi);
        s.base_resolution = base_resolution;
        return s;
    }

    std::size_t arity() const { return kind == Kind::Finite ? 1 : lower.size(); }
};

// ConvexFunc skeleton with polynomial leaf coefficients
struct TemplateNode {
    ConvexFunc::Kind kind = ConvexFunc::Kind::Affine;
    std::size_t dim = 0;

    std::vector<std::vector<IndexPolynomial>> qrows; // Quad
    std::vector<IndexPolynomial> a;                  // Affine / Quad linear term
    IndexPolynomial b;                               // constant / Truncated floor
    NormKind norm_kind = NormKind::Two;
    IndexPolynomial scale;
    struct Row {
        std::vector<IndexPolynomial> normal;
        IndexPolynomial offset;
        bool strict = false;
    };
    std::vector<Row> rows; // Indicator
    std::vector<IndexPolynomial> translate;
    std::vector<TemplateNode> children;

    static TemplateNode affine(std::vector<IndexPolynomial> a, IndexPolynomial b) {
        TemplateNode n;
        n.kind = ConvexFunc::Kind::Affine;
        n.dim = a.size();
        n.a = std::move(a);
        n.b = std::move(b);
        return n;
    }

    static TemplateNode quad(std::vector<std::vector<IndexPolynomial>> Q,
                             std::vector<IndexPolynomial> a, IndexPolynomial b) {
        TemplateNode n;
        n.kind = ConvexFunc::Kind::Quad;
        n.dim = a.size();
        n.qrows = std::move(Q);
        n.a = std::move(a);
        n.b = std::move(b);
        return n;
    }

    static TemplateNode norm(std::size_t dim, NormKind k, IndexPolynomial scale) {
        TemplateNode n;
        n.kind = ConvexFunc::Kind::Norm;
        n.dim = dim;
        n.norm_kind = k;
        n.scale = std::move(scale);
        return n;
    }

    static TemplateNode indicator(std::size_t dim, std::vector<Row> rows) {
        TemplateNode n;
        n.kind = ConvexFunc::Kind::Indicator;
        n.dim = dim;
        n.rows = std::move(rows);
        return n;
    }

    static TemplateNode max_of(std::vector<TemplateNode> cs) {
        TemplateNode n;
        n.kind = ConvexFunc::Kind::MaxFinite;
        n.dim = cs.empty() ? 0 : cs.front().dim;
        n.children = std::move(cs);
        return n;
    }

    static TemplateNode sum_of(std::vector<TemplateNode> cs) {
        TemplateNode n;
        n.kind = ConvexFunc::Kind::Sum;
        n.dim = cs.empty() ? 0 : cs.front().dim;
        n.children = std::move(cs);
        return n;
    }

    static TemplateNode shifted(TemplateNode c, std::vector<IndexPolynomial> t) {
        TemplateNode n;
        n.kind = ConvexFunc::Kind::Shifted;
        n.dim = c.dim;
        n.translate = std::move(t);
        n.children.push_back(std::move(c));
        return n;
    }

    static TemplateNode truncated(TemplateNode c, IndexPolynomial floor_value) {
        TemplateNode n;
        n.kind = ConvexFunc::Kind::Truncated;
        n.dim = c.dim;
        n.b = std::move(floor_value);
        n.children.push_back(std::move(c));
        return n;
    }
};

inline ConvexFunc instantiate(const TemplateNode& n, const Vec& t) {
    switch (n.kind) {
        case ConvexFunc::Kind::Affine: {
            Vec a(n.dim);
            for (std::size_t i = 0; i < n.dim; ++i) a[i] = n.a[i].eval(t);
            return ConvexFunc::affine(std::move(a), n.b.eval(t));
        }
        case ConvexFunc::Kind::Quad: {
            Matrix Q(n.dim, n.dim);
            for (std::size_t i = 0; i < n.dim; ++i)
                for (std::size_t j = 0; j < n.dim; ++j) Q(i, j) = n.qrows[i][j].eval(t);
            Vec a(n.dim);
            for (std::size_t i = 0; i < n.dim; ++i) a[i] = n.a[i].eval(t);
            return ConvexFunc::quad(std::move(Q), std::move(a), n.b.eval(t));
        }
        case ConvexFunc::Kind::Norm: return ConvexFunc::norm(n.dim, n.norm_kind, n.scale.eval(t));
        case ConvexFunc::Kind::Indicator: {
            Polyhedron p{n.dim, {}};
            for (const auto& r : n.rows) {
                Vec normal(n.dim);
                for (std::size_t i = 0; i < n.dim; ++i) normal[i] = r.normal[i].eval(t);
                p.constraints.push_back({std::move(normal), r.offset.eval(t), r.strict});
            }
            return ConvexFunc::indicator(std::move(p));
        }
        case ConvexFunc::Kind::MaxFinite: {
            std::vector<ConvexFunc> cs;
            for (const auto& c : n.children) cs.push_back(instantiate(c, t));
            return ConvexFunc::max_of(std::move(cs));
        }
        case ConvexFunc::Kind::Sum: {
            std::vector<ConvexFunc> cs;
            for (const auto& c : n.children) cs.push_back(instantiate(c, t));
            return ConvexFunc::sum_of(std::move(cs));
        }
        case ConvexFunc::Kind::Shifted: {
            Vec tr(n.dim);
            for (std::size_t i = 0; i < n.dim; ++i) tr[i] = n.translate[i].eval(t);
            return ConvexFunc::shifted(instantiate(n.children.front(), t), std::move(tr));
        }
        case ConvexFunc::Kind::Truncated:
            return ConvexFunc::truncated(instantiate(n.children.front(), t), n.b.eval(t));
    }
    throw std::logic_error("instantiate: unreachable");
}

namespace detail {

// row residual <normal(t), x> - offset(t) as a polynomial in t
inline IndexPolynomial row_residual(const TemplateNode::Row& r, const Vec& x) {
    IndexPolynomial p = poly_axpy(IndexPolynomial::constant(r.offset.arity, 0.0), -1.0, r.offset);
    for (std::size_t i = 0; i < x.size(); ++i) p = poly_axpy(std::move(p), x[i], r.normal[i]);
    return p;
}

inline bool template_has_indicator(const TemplateNode& n) {
    if (n.kind == ConvexFunc::Kind::Indicator) return true;
    for (const auto& c : n.children)
        if (template_has_indicator(c)) return true;
    return false;
}

inline bool template_domain_t_dependent(const TemplateNode& n) {
    if (n.kind == ConvexFunc::Kind::Indicator) {
        for (const auto& r : n.rows) {
            if (!r.offset.is_constant()) return true;
            for (const auto& c : r.normal)
                if (!c.is_constant()) return true;
        }
        return false;
    }
    if (n.kind == ConvexFunc::Kind::Shifted) {
        bool moved = false;
        for (const auto& c : n.translate)
            if (!c.is_constant()) moved = true;
        // a moving translate only moves the domain if the subtree has one
        if (moved && template_has_indicator(n.children.front())) return true;
    }
    for (const auto& c : n.children)
        if (template_domain_t_dependent(c)) return true;
    return false;
}

// replace every Indicator node by the zero function, leaving the finite part
inline TemplateNode template_strip_rows(const TemplateNode& n) {
    if (n.kind == ConvexFunc::Kind::Indicator) {
        std::size_t arity = n.rows.empty() ? 0 : n.rows.front().offset.arity;
        return TemplateNode::affine(
            std::vector<IndexPolynomial>(n.dim, IndexPolynomial::constant(arity, 0.0)),
            IndexPolynomial::constant(arity, 0.0));
    }
    TemplateNode out = n;
    for (auto& c : out.children) c = template_strip_rows(c);
    return out;
}

// range bound for t |-> f_t(x) over an index sub-box. Affine and quadratic
// values collapse to a single polynomial in t before bounding; indicators
// contribute {0}, {+inf} or [0, +inf] depending on row feasibility over the
// sub-box. Shifted nodes require a t-independent translate (t-dependence
// belongs in the affine coefficients, which express the same families).
inline Interval template_value_interval(const TemplateNode& n, const Vec& x, const Vec& lo,
                                        const Vec& hi, bool closed_rows) {
    switch (n.kind) {
        case ConvexFunc::Kind::Affine:
        case ConvexFunc::Kind::Quad: {
            IndexPolynomial p = n.b;
            for (std::size_t i = 0; i < n.dim; ++i) p = poly_axpy(std::move(p), x[i], n.a[i]);
            if (n.kind == ConvexFunc::Kind::Quad)
                for (std::size_t i = 0; i < n.dim; ++i)
                    for (std::size_t j = 0; j < n.dim; ++j)
                        p = poly_axpy(std::move(p), 0.5 * x[i] * x[j], n.qrows[i][j]);
            return poly_interval(p, lo, hi);
        }
        case ConvexFunc::Kind::Norm: {
            double v = 0.0;
            switch (n.norm_kind) {
                case NormKind::One: v = norm1(x); break;
                case NormKind::Two: v = norm2(x); break;
                case NormKind::Inf: v = norm_inf(x); break;
            }
            return interval_mul(poly_interval(n.scale, lo, hi), Interval::point(v));
        }
        case ConvexFunc::Kind::Indicator: {
            bool mixed = false;
            for (const auto& r : n.rows) {
                Interval iv = poly_interval(row_residual(r, x), lo, hi);
                bool boundary_excluded = r.strict && !closed_rows;
                if (iv.lo > 0.0 || (boundary_excluded && iv.lo >= 0.0)) return Interval::top_inf();
                if (iv.hi > 0.0 || (boundary_excluded && iv.hi >= 0.0)) mixed = true;
            }
            return mixed ? Interval{0.0, std::numeric_limits<double>::infinity()}
                         : Interval::point(0.0);
        }
        case ConvexFunc::Kind::MaxFinite: {
            Interval m{-std::numeric_limits<double>::infinity(),
                       -std::numeric_limits<double>::infinity()};
            for (const auto& c : n.children)
                m = m.max_with(template_value_interval(c, x, lo, hi, closed_rows));
            return m;
        }
        case ConvexFunc::Kind::Sum: {
            Interval s = Interval::point(0.0);
            for (const auto& c : n.children)
                s = s + template_value_interval(c, x, lo, hi, closed_rows);
            return s;
        }
        case ConvexFunc::Kind::Shifted: {
            Vec moved = x;
            for (std::size_t i = 0; i < n.dim; ++i) {
                if (!n.translate[i].is_constant())
                    throw std::invalid_argument(
                        "template bounds need a t-independent translate; fold the dependence "
                        "into affine coefficients");
                moved[i] -= n.translate[i].eval(Vec(n.translate[i].arity, 0.0));
            }
            return template_value_interval(n.children.front(), moved, lo, hi, closed_rows);
        }
        case ConvexFunc::Kind::Truncated:
            return template_value_interval(n.children.front(), x, lo, hi, closed_rows)
                .max_with(poly_interval(n.b, lo, hi));
    }
    throw std::logic_error("template_value_interval: unreachable");
}

} // namespace detail

// ---------------------------------------------------------------------------
// families
// ---------------------------------------------------------------------------

struct IndexedFamily {
    IndexSet index_set;
    std::optional<TemplateNode> tmpl;
    std::vector<ConvexFunc> members; // finite families built member-by-member
    std::function<ConvexFunc(const Vec&)> override_fn;
    std::optional<Polyhedron> shared_domain_hint;

    static IndexedFamily finite(std::vector<std::string> labels, std::vector<ConvexFunc> ms) {
        if (labels.size() != ms.size())
            throw std::invalid_argument("IndexedFamily::finite: one member per label");
        IndexedFamily f;
        f.index_set = IndexSet::finite(std::move(labels));
        f.members = std::move(ms);
        return f;
    }

    static IndexedFamily box(Vec lo, Vec hi, TemplateNode t, int base_resolution = 256) {
        IndexedFamily f;
        f.index_set = IndexSet::box(std::move(lo), std::move(hi), base_resolution);
        f.tmpl = std::move(t);
        return f;
    }

    static IndexedFamily box_override(Vec lo, Vec hi, std::function<ConvexFunc(const Vec&)> fn,
                                      int base_resolution = 256) {
        IndexedFamily f;
        f.index_set = IndexSet::box(std::move(lo), std::move(hi), base_resolution);
        f.override_fn = std::move(fn);
        return f;
    }

    std::size_t finite_count() const { return index_set.labels.size(); }

    // t is a point of the index box, or {label position} for finite sets
    ConvexFunc member(const Vec& t) const {
        if (override_fn) return override_fn(t);
        if (index_set.kind == IndexSet::Kind::Finite) {
            auto i = static_cast<std::size_t>(std::llround(t.at(0)));
            if (i >= finite_count()) throw std::out_of_range("IndexedFamily::member: bad label index");
            if (!members.empty()) return members[i];
        }
        if (!tmpl) throw std::logic_error("IndexedFamily::member: no instantiation source");
        return instantiate(*tmpl, t);
    }

    // usc of t -> f_t(z) holds by construction for polynomial templates and
    // for finite index sets (discrete topology); overrides must be sampled
    bool continuity_certified() const {
        return !override_fn || index_set.kind == IndexSet::Kind::Finite;
    }
};

struct SupEvalResult {
    ExtReal value = ExtReal::neg_inf();
    Vec arg_t;          // a maximizing index (lexicographically smallest sampled tie)
    double bound_gap = 0.0; // residual certificate width from branch-and-bound
};

namespace detail {

struct BnBBox {
    Vec lo, hi;
};

inline std::vector<Vec> box_samples(const Vec& lo, const Vec& hi) {
    std::vector<Vec> pts;
    std::size_t m = lo.size();
    Vec c(m);
    for (std::size_t i = 0; i < m; ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    pts.push_back(c);
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
        Vec p(m);
        for (std::size_t i = 0; i < m; ++i) p[i] = (mask >> i) & 1 ? hi[i] : lo[i];
        pts.push_back(std::move(p));
    }
    std::sort(pts.begin(), pts.end(), lex_less);
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

constexpr int kBoxDepthLimit = 16; // width floor: span / 2^16
constexpr std::size_t kBoxBudget = 20000;

} // namespace detail

inline SupEvalResult sup_eval_detailed(const IndexedFamily& F, const Vec& x) {
    SupEvalResult res;
    auto consider = [&](const Vec& t) {
        ExtReal v = eval(F.member(t), x);
        if (v.is_pos_inf()) {
            res.value = ExtReal::pos_inf();
            res.arg_t = t;
            return true;
        }
        if (res.value.is_neg_inf() || v.v > res.value.v + 1e-15) {
            res.value = v;
            res.arg_t = t;
        } else if (std::fabs(v.v - res.value.v) <= 1e-15 && lex_less(t, res.arg_t)) {
            res.arg_t = t;
        }
        return false;
    };

    if (F.index_set.kind == IndexSet::Kind::Finite) {
        for (std::size_t i = 0; i < F.finite_count(); ++i)
            if (consider({static_cast<double>(i)})) return res;
        return res;
    }

    const Vec &L = F.index_set.lower, &U = F.index_set.upper;
    double span = 0.0;
    for (std::size_t i = 0; i < L.size(); ++i) span = std::max(span, U[i] - L[i]);
    const double width_floor = span / std::ldexp(1.0, detail::kBoxDepthLimit);

    if (!F.tmpl) {
        // no interval bounds available: uniform scan at the base resolution,
        // then rescans of a shrinking window around the best point
        const int r = F.index_set.base_resolution;
        detail::BnBBox win{L, U};
        for (int round = 0; round < 3; ++round) {
            std::size_t m = L.size();
            std::vector<std::size_t> idx(m, 0);
            bool done = false;
            while (!done) {
                Vec t(m);
                for (std::size_t i = 0; i < m; ++i)
                    t[i] = win.lo[i] + (win.hi[i] - win.lo[i]) * static_cast<double>(idx[i]) /
                                           static_cast<double>(r);
                if (consider(t)) return res;
                for (std::size_t i = 0;; ++i) {
                    if (i == m) { done = true; break; }
                    if (++idx[i] <= static_cast<std::size_t>(r)) break;
                    idx[i] = 0;
                }
            }
            detail::BnBBox next{res.arg_t, res.arg_t};
            for (std::size_t i = 0; i < m; ++i) {
                double w = (win.hi[i] - win.lo[i]) / static_cast<double>(r);
                next.lo[i] = std::max(L[i], next.lo[i] - w);
                next.hi[i] = std::min(U[i], next.hi[i] + w);
            }
            win = next;
        }
        res.bound_gap = std::numeric_limits<double>::quiet_NaN(); // uncertified
        return res;
    }

    // best-first search: the sub-box with the largest upper bound pops first.
    // Depth-first order can starve the true maximizer when a flat region ties
    // the incumbent exactly, since tie boxes neither prune nor improve.
    struct ScoredBox {
        double hi;
        detail::BnBBox box;
    };
    auto worse = [](const ScoredBox& a, const ScoredBox& b) {
        if (a.hi != b.hi) return a.hi < b.hi;
        if (a.box.lo != b.box.lo) return lex_less(b.box.lo, a.box.lo);
        return lex_less(b.box.hi, a.box.hi);
    };
    std::vector<ScoredBox> heap;
    bool domain_everywhere_violated = false;
    auto push_box = [&](detail::BnBBox b) {
        detail::Interval bound = detail::template_value_interval(*F.tmpl, x, b.lo, b.hi, false);
        if (bound.lo == std::numeric_limits<double>::infinity()) {
            // every index in the sub-box leaves x outside its domain
            res.value = ExtReal::pos_inf();
            res.arg_t = b.lo;
            domain_everywhere_violated = true;
            return;
        }
        heap.push_back({bound.hi, std::move(b)});
        std::push_heap(heap.begin(), heap.end(), worse);
    };
    std::size_t processed = 0;
    double residual = 0.0;
    push_box({L, U});
    while (!heap.empty() && !domain_everywhere_violated) {
        std::pop_heap(heap.begin(), heap.end(), worse);
        ScoredBox top = std::move(heap.back());
        heap.pop_back();
        if (++processed > detail::kBoxBudget) {
            residual = std::numeric_limits<double>::infinity();
            break;
        }
        double best_so_far =
            res.value.is_neg_inf() ? -std::numeric_limits<double>::infinity() : res.value.v;
        if (top.hi <= best_so_far + kTolSup) continue;
        for (const Vec& t : detail::box_samples(top.box.lo, top.box.hi))
            if (consider(t)) return res;

        std::size_t axis = 0;
        double w = 0.0;
        for (std::size_t i = 0; i < top.box.lo.size(); ++i)
            if (top.box.hi[i] - top.box.lo[i] > w) { w = top.box.hi[i] - top.box.lo[i]; axis = i; }
        if (w <= width_floor) {
            double cur = res.value.is_neg_inf() ? -std::numeric_limits<double>::infinity()
                                                : res.value.v;
            if (std::isfinite(top.hi)) residual = std::max(residual, top.hi - cur);
            continue;
        }
        double mid = 0.5 * (top.box.lo[axis] + top.box.hi[axis]);
        detail::BnBBox lo_half = top.box, hi_half = top.box;
        lo_half.hi[axis] = mid;
        hi_half.lo[axis] = mid;
        push_box(std::move(lo_half));
        if (!domain_everywhere_violated) push_box(std::move(hi_half));
    }
    res.bound_gap = std::max(0.0, residual);
    return res;
}

inline ExtReal sup_eval(const IndexedFamily& F, const Vec& x) {
    return sup_eval_detailed(F, x).value;
}

// ---------------------------------------------------------------------------
// epsilon-active index sets
// ---------------------------------------------------------------------------

struct ActiveSet {
    double epsilon = 0.0;
    bool finite = true;
    std::vector<std::size_t> labels; // finite families
    struct SubBox {
        Vec lo, hi;
        double slack = 0.0; // certified bound defect: (threshold - lower bound)+
    };
    std::vector<SubBox> cover;       // box families
    std::vector<Vec> representatives; // sampled indices verified eps-active
};

inline ActiveSet active_set(const IndexedFamily& F, const Vec& x, double eps) {
    if (!(eps >= 0.0)) throw std::invalid_argument("active_set: eps must be >= 0");
    ExtReal fx = sup_eval(F, x);
    if (!fx.is_finite()) throw std::runtime_error("active set undefined: supremum not finite at x");
    const double threshold = fx.v - eps;

    ActiveSet out;
    out.epsilon = eps;

    if (F.index_set.kind == IndexSet::Kind::Finite) {
        for (std::size_t i = 0; i < F.finite_count(); ++i) {
            Vec t{static_cast<double>(i)};
            ExtReal v = eval(F.member(t), x);
            if (v.is_finite() && v.v >= threshold - kTolActive * std::max(1.0, std::fabs(fx.v))) {
                out.labels.push_back(i);
                out.representatives.push_back(t);
            }
        }
        return out;
    }

    out.finite = false;
    const Vec &L = F.index_set.lower, &U = F.index_set.upper;
    double span = 0.0;
    for (std::size_t i = 0; i < L.size(); ++i) span = std::max(span, U[i] - L[i]);
    const double width_floor = span / std::ldexp(1.0, detail::kBoxDepthLimit);
    const double tol = kTolActive * std::max(1.0, std::fabs(fx.v));

    auto bound_of = [&](const detail::BnBBox& b) -> detail::Interval {
        if (F.tmpl) return detail::template_value_interval(*F.tmpl, x, b.lo, b.hi, false);
        // no certificates without a template: sample-based heuristic bound
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const Vec& t : detail::box_samples(b.lo, b.hi)) {
            ExtReal v = eval(F.member(t), x);
            double d = v.is_finite() ? v.v : std::numeric_limits<double>::infinity();
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        return {lo, hi};
    };

    std::vector<detail::BnBBox> stack{{L, U}};
    std::size_t processed = 0;
    while (!stack.empty()) {
        detail::BnBBox box = stack.back();
        stack.pop_back();
        ++processed;
        detail::Interval bound = bound_of(box);
        if (bound.hi < threshold - tol) continue; // certainly inactive
        std::size_t axis = 0;
        double w = 0.0;
        for (std::size_t i = 0; i < box.lo.size(); ++i)
            if (box.hi[i] - box.lo[i] > w) { w = box.hi[i] - box.lo[i]; axis = i; }
        bool settled = bound.lo >= threshold - tol;
        if (settled || w <= width_floor || processed > detail::kBoxBudget) {
            out.cover.push_back({box.lo, box.hi, std::max(0.0, threshold - bound.lo)});
            continue;
        }
        double mid = 0.5 * (box.lo[axis] + box.hi[axis]);
        detail::BnBBox lo_half = box, hi_half = box;
        lo_half.hi[axis] = mid;
        hi_half.lo[axis] = mid;
        stack.push_back(std::move(hi_half));
        stack.push_back(std::move(lo_half));
    }

    // merge adjacent sub-boxes along each axis to keep the cover small
    bool merged = true;
    while (merged) {
        merged = false;
        for (std::size_t i = 0; i < out.cover.size() && !merged; ++i) {
            for (std::size_t j = i + 1; j < out.cover.size() && !merged; ++j) {
                auto &A = out.cover[i], &B = out.cover[j];
                std::size_t diff_axis = L.size();
                bool mergeable = true;
                for (std::size_t k = 0; k < L.size(); ++k) {
                    if (A.lo[k] == B.lo[k] && A.hi[k] == B.hi[k]) continue;
                    if (diff_axis != L.size()) { mergeable = false; break; }
                    if (A.hi[k] == B.lo[k] || B.hi[k] == A.lo[k]) diff_axis = k;
                    else { mergeable = false; break; }
                }
                if (!mergeable || diff_axis == L.size()) continue;
                auto merged_box = A;
                merged_box.lo[diff_axis] = std::min(A.lo[diff_axis], B.lo[diff_axis]);
                merged_box.hi[diff_axis] = std::max(A.hi[diff_axis], B.hi[diff_axis]);
                merged_box.slack = std::max(A.slack, B.slack);
                out.cover[i] = std::move(merged_box);
                out.cover.erase(out.cover.begin() + static_cast<std::ptrdiff_t>(j));
                merged = true;
            }
        }
    }
    std::sort(out.cover.begin(), out.cover.end(),
              [](const ActiveSet::SubBox& a, const ActiveSet::SubBox& b) {
                  return lex_less(a.lo, b.lo);
              });

    // representatives: corners and centers of the cover, validated pointwise
    std::vector<Vec> cand;
    for (const auto& b : out.cover)
        for (const Vec& t : detail::box_samples(b.lo, b.hi)) cand.push_back(t);
    std::sort(cand.begin(), cand.end(), lex_less);
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (const Vec& t : cand) {
        ExtReal v = eval(F.member(t), x);
        if (v.is_finite() && v.v >= threshold - tol) out.representatives.push_back(t);
    }
    return out;
}

// does the cover of `a` fit inside the cover of `b` (finite: label subset)?
inline bool active_set_nested_in(const ActiveSet& a, const ActiveSet& b, double tol = 1e-12) {
    if (a.finite != b.finite) return false;
    if (a.finite) {
        for (std::size_t l : a.labels)
            if (std::find(b.labels.begin(), b.labels.end(), l) == b.labels.end()) return false;
        return true;
    }
    for (const auto& box : a.cover) {
        // every corner of every box of `a` must lie in some box of `b`
        for (const Vec& c : detail::box_samples(box.lo, box.hi)) {
            bool inside = false;
            for (const auto& other : b.cover) {
                bool in = true;
                for (std::size_t i = 0; i < c.size(); ++i)
                    if (c[i] < other.lo[i] - tol || c[i] > other.hi[i] + tol) { in = false; break; }
                if (in) { inside = true; break; }
            }
            if (!inside) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// family domain and truncation
// ---------------------------------------------------------------------------

struct FamilyDomain {
    Polyhedron domain;
    bool t_dependent = false; // sampling detected index-dependent member domains
};

inline FamilyDomain family_domain(const IndexedFamily& F) {
    std::vector<Vec> samples;
    if (F.index_set.kind == IndexSet::Kind::Finite) {
        for (std::size_t i = 0; i < F.finite_count(); ++i)
            samples.push_back({static_cast<double>(i)});
    } else {
        samples = detail::box_samples(F.index_set.lower, F.index_set.upper);
    }

    FamilyDomain out{domain_of(F.member(samples.front())), false};
    bool same_everywhere = true;
    if (F.index_set.kind == IndexSet::Kind::Box && F.tmpl)
        same_everywhere = !detail::template_domain_t_dependent(*F.tmpl);

    for (std::size_t k = 1; k < samples.size(); ++k) {
        Polyhedron d = domain_of(F.member(samples[k]));
        bool equal = d.constraints.size() == out.domain.constraints.size();
        for (std::size_t i = 0; equal && i < d.constraints.size(); ++i) {
            const auto &p = d.constraints[i], &q = out.domain.constraints[i];
            equal = p.normal == q.normal && p.offset == q.offset && p.strict == q.strict;
        }
        if (!equal) {
            same_everywhere = false;
            out.domain = polyhedron_intersect(out.domain, d);
        }
    }
    // a finite family's domain is exactly the intersection of its members';
    // for boxes the sampled intersection is only a superset unless the
    // template certifies the rows never move with t
    if (F.index_set.kind == IndexSet::Kind::Box && !same_everywhere) out.t_dependent = true;
    if (F.shared_domain_hint) out.domain = polyhedron_intersect(out.domain, *F.shared_domain_hint);
    return out;
}

inline IndexedFamily truncate_family(const IndexedFamily& F, const Vec& x0, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("truncate_family: c must be positive");
    ExtReal fx0 = sup_eval(F, x0);
    if (!fx0.is_finite())
        throw std::runtime_error("truncate_family: supremum not finite at the anchor point");
    const double floor_value = fx0.v - c;

    IndexedFamily out = F;
    if (out.tmpl)
        out.tmpl = TemplateNode::truncated(
            std::move(*out.tmpl), IndexPolynomial::constant(F.index_set.arity(), floor_value));
    for (auto& m : out.members) m = ConvexFunc::truncated(std::move(m), floor_value);
    if (out.override_fn) {
        auto inner = F.override_fn;
        out.override_fn = [inner, floor_value](const Vec& t) {
            return ConvexFunc::truncated(inner(t), floor_value);
        };
    }
    return out;
}

// ---------------------------------------------------------------------------
// closure condition: cl f = sup_t cl f_t
// ---------------------------------------------------------------------------

struct ClosureProbe {
    Vec z;
    ExtReal lhs;  // (cl f)(z)
    ExtReal rhs;  // sup_t (cl f_t)(z)
    bool holds = true;
    double gap = 0.0;
};

struct ClosureReport {
    bool holds = true;
    bool certified = true; // false when either side relied on sampling
    std::vector<ClosureProbe> probes;
};

namespace detail {

// certified (cl f)(z) for a box family whose member domains do not move with
// t: cl f = (sup of finite parts) + indicator of the closed common domain
inline ExtReal box_closure_exact(const IndexedFamily& F, const Vec& z) {
    Polyhedron common =
        domain_of(F.member(box_samples(F.index_set.lower, F.index_set.upper).front()));
    if (F.shared_domain_hint) common = polyhedron_intersect(common, *F.shared_domain_hint);
    if (!polyhedron_contains(polyhedron_closure(common), z, kDomainEvalTol))
        return ExtReal::pos_inf();
    IndexedFamily bare = F;
    bare.tmpl = template_strip_rows(*F.tmpl);
    bare.shared_domain_hint.reset();
    return sup_eval_detailed(bare, z).value;
}

// liminf of f along rings around z; sampling only, cannot certify
inline ExtReal closure_value_sampled(const IndexedFamily& F, const Vec& z) {
    ExtReal here = sup_eval(F, z);
    double best = here.is_finite() ? here.v : std::numeric_limits<double>::infinity();
    for (double rho : {1e-3, 1e-4, 1e-5, 1e-6}) {
        for (const Vec& u : direction_net(z.size())) {
            ExtReal v = sup_eval(F, axpy(z, rho, u));
            if (v.is_finite()) best = std::min(best, v.v);
        }
    }
    return std::isfinite(best) ? ExtReal{best} : ExtReal::pos_inf();
}

} // namespace detail

inline ClosureReport closure_condition_check(const IndexedFamily& F, const std::vector<Vec>& probes) {
    ClosureReport rep;
    for (const Vec& z : probes) {
        ClosureProbe pr;
        pr.z = z;

        if (F.index_set.kind == IndexSet::Kind::Finite) {
            std::vector<ConvexFunc> ms;
            for (std::size_t i = 0; i < F.finite_count(); ++i)
                ms.push_back(F.member({static_cast<double>(i)}));
            ConvexFunc sup_fn = ms.size() == 1 ? ms.front() : ConvexFunc::max_of(ms);
            pr.lhs = lsc_envelope_value(sup_fn, z);
            pr.rhs = ExtReal::neg_inf();
            for (const auto& m : ms) pr.rhs = ext_max(pr.rhs, lsc_envelope_value(m, z));
        } else if (F.tmpl && !detail::template_domain_t_dependent(*F.tmpl)) {
            // with a common domain D, both cl f and sup_t cl f_t equal
            // (sup of finite parts) + indicator of cl D, so compare the
            // certified value against the sampled envelope supremum
            pr.lhs = detail::box_closure_exact(F, z);
            pr.rhs = ExtReal::neg_inf();
            for (const Vec& t : detail::box_samples(F.index_set.lower, F.index_set.upper))
                pr.rhs = ext_max(pr.rhs, lsc_envelope_value(F.member(t), z));
            if (pr.lhs.is_finite()) {
                IndexedFamily bare = F;
                bare.tmpl = detail::template_strip_rows(*F.tmpl);
                bare.shared_domain_hint.reset();
                pr.rhs = ext_max(pr.rhs, sup_eval_detailed(bare, z).value);
            }
        } else {
            rep.certified = false;
            pr.lhs = detail::closure_value_sampled(F, z);
            // sampled envelope supremum over a coarse index grid
            ExtReal best = ExtReal::neg_inf();
            int n = std::min(F.index_set.base_resolution, 256);
            std::size_t m = F.index_set.arity();
            std::vector<std::size_t> idx(m, 0);
            bool done = false;
            while (!done) {
                Vec t(m);
                for (std::size_t i = 0; i < m; ++i)
                    t[i] = F.index_set.lower[i] +
                           (F.index_set.upper[i] - F.index_set.lower[i]) *
                               static_cast<double>(idx[i]) / static_cast<double>(n);
                best = ext_max(best, lsc_envelope_value(F.member(t), z));
                for (std::size_t i = 0;; ++i) {
                    if (i == m) { done = true; break; }
                    if (++idx[i] <= static_cast<std::size_t>(n)) break;
                    idx[i] = 0;
                }
            }
            pr.rhs = best;
        }

        if (pr.lhs.is_finite() && pr.rhs.is_finite()) {
            pr.gap = pr.lhs.v - pr.rhs.v;
            pr.holds = std::fabs(pr.gap) <= 1e-9 * std::max(1.0, std::fabs(pr.lhs.v));
        } else {
            pr.holds = pr.lhs.is_pos_inf() == pr.rhs.is_pos_inf() &&
                       pr.lhs.is_neg_inf() == pr.rhs.is_neg_inf();
            pr.gap = pr.holds ? 0.0 : std::numeric_limits<double>::infinity();
        }
        if (!pr.holds) rep.holds = false;
        rep.probes.push_back(std::move(pr));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// upper semicontinuity of t -> f_t(z)
// ---------------------------------------------------------------------------

struct UscViolation {
    Vec t;
    Vec approach; // direction of the witnessing index sequence
    double gap = 0.0;
};

struct UscReport {
    bool certified = false; // true when continuity holds by construction
    std::vector<UscViolation> violations;
    bool ok() const { return violations.empty(); }
};

inline UscReport usc_check(const IndexedFamily& F, const Vec& z, const ActiveSet& tested) {
    UscReport rep;
    if (F.continuity_certified()) {
        rep.certified = true;
        return rep;
    }
    const Vec &L = F.index_set.lower, &U = F.index_set.upper;
    for (const Vec& t : tested.representatives) {
        ExtReal here = eval(F.member(t), z);
        double base = here.is_finite() ? here.v : std::numeric_limits<double>::infinity();
        for (std::size_t axis = 0; axis < t.size(); ++axis) {
            for (double sgn : {-1.0, 1.0}) {
                // limsup along t_k = t + sgn * 2^-k e_axis, staying in the box
                double limsup = -std::numeric_limits<double>::infinity();
                bool any = false;
                for (int k = 16; k <= 24; ++k) {
                    Vec tk = t;
                    tk[axis] += sgn * std::ldexp(1.0, -k);
                    if (tk[axis] < L[axis] || tk[axis] > U[axis]) continue;
                    ExtReal v = eval(F.member(tk), z);
                    any = true;
                    limsup = std::max(
                        limsup, v.is_finite() ? v.v : std::numeric_limits<double>::infinity());
                }
                if (any && limsup > base + 1e-7) {
                    Vec dir(t.size(), 0.0);
                    dir[axis] = sgn;
                    rep.violations.push_back({t, dir, limsup - base});
                }
            }
        }
    }
    return rep;
}

} // namespace supdiff
