#pragma once

// Finitely generated convex sets  S = conv(points) + cone(rays)  and the geometry
// kernel around them: canonicalization (LP-based generator pruning), Minkowski sums,
// convex hulls of unions, support functions, normal cones, containment and Hausdorff
// gap tests, halfspace intersection, and conversions between generator and halfspace
// form via an incremental double-description method.
//
// Conventions: the empty set has no generators and support -inf; a nonempty set
// always carries at least one point generator; rays are unit length after
// canonicalization; generator lists are sorted lexicographically so equal sets
// compare equal and output is reproducible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "directions.hpp"
#include "extreal.hpp"
#include "numeric.hpp"
#include "polyhedron.hpp"
#include "simplex.hpp"

namespace supdiff {

struct GenSet {
    std::size_t dim = 0;
    std::vector<Vec> points;
    std::vector<Vec> rays;

    bool is_empty() const { return points.empty(); }

    static GenSet empty(std::size_t n) { return {n, {}, {}}; }

    static GenSet singleton(Vec x) {
        GenSet g{x.size(), {}, {}};
        g.points.push_back(std::move(x));
        return g;
    }

    static GenSet make(std::size_t n, std::vector<Vec> pts, std::vector<Vec> rys) {
        return {n, std::move(pts), std::move(rys)};
    }

    friend std::ostream& operator<<(std::ostream& os, const GenSet& g) {
        if (g.is_empty()) return os << "(empty set)";
        auto print_vec = [&os](const Vec& v) {
            os << "(";
            for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
            os << ")";
        };
        os << "conv{";
        for (std::size_t i = 0; i < g.points.size(); ++i) {
            if (i) os << ", ";
            print_vec(g.points[i]);
        }
        os << "}";
        if (!g.rays.empty()) {
            os << " + cone{";
            for (std::size_t i = 0; i < g.rays.size(); ++i) {
                if (i) os << ", ";
                print_vec(g.rays[i]);
            }
            os << "}";
        }
        return os;
    }
};

// ---------------------------------------------------------------------------
// double description: extreme rays of {y : <m_i, y> <= 0} maintained under
// incremental row insertion, with explicit lineality handling
// ---------------------------------------------------------------------------

namespace detail {

constexpr double kDDActiveTol = 1e-9;

class DoubleDescription {
public:
    explicit DoubleDescription(std::size_t dim) : dim_(dim) {
        for (std::size_t i = 0; i < dim; ++i) lineality_.push_back(unit_vec(dim, i));
    }

    void add_row(Vec m) {
        double nm = norm2(m);
        if (nm < 1e-14) return;
        m = scale(1.0 / nm, m);

        // does the row see the lineality space?
        std::size_t pivot = lineality_.size();
        double best = kDDActiveTol;
        for (std::size_t i = 0; i < lineality_.size(); ++i) {
            double d = std::fabs(dot(m, lineality_[i]));
            if (d > best) { best = d; pivot = i; }
        }
        rows_.push_back(m);
        const std::size_t row_idx = rows_.size() - 1;

        if (pivot < lineality_.size()) {
            Vec l = lineality_[pivot];
            lineality_.erase(lineality_.begin() + pivot);
            double ml = dot(m, l);
            if (ml > 0) { l = scale(-1.0, l); ml = -ml; }
            for (Vec& o : lineality_) {
                o = axpy(o, -dot(m, o) / ml, l);
                double n = norm2(o);
                if (n > 1e-14) o = scale(1.0 / n, o);
            }
            for (Ray& r : rays_) {
                r.v = axpy(r.v, -dot(m, r.v) / ml, l);
                double n = norm2(r.v);
                if (n > 1e-14) r.v = scale(1.0 / n, r.v);
                recompute_bits(r);
            }
            Ray nr;
            nr.v = l;
            recompute_bits(nr);
            rays_.push_back(std::move(nr));
            return;
        }

        // pointed-part insertion
        std::vector<std::size_t> plus, minus, zero;
        std::vector<double> s(rays_.size());
        for (std::size_t i = 0; i < rays_.size(); ++i) {
            s[i] = dot(m, rays_[i].v);
            if (s[i] > kDDActiveTol) plus.push_back(i);
            else if (s[i] < -kDDActiveTol) minus.push_back(i);
            else zero.push_back(i);
        }
        if (plus.empty()) {
            for (std::size_t i : zero) set_bit(rays_[i], row_idx);
            return;
        }

        const std::size_t d_eff = dim_ - lineality_.size();
        std::vector<Ray> created;
        for (std::size_t ip : plus) {
            for (std::size_t iq : minus) {
                if (!adjacent(ip, iq, d_eff)) continue;
                // positive combination landing on the new hyperplane
                Vec y = axpy(scale(s[ip], rays_[iq].v), -s[iq], rays_[ip].v);
                double ny = norm2(y);
                if (ny < 1e-12) continue;
                Ray nr;
                nr.v = scale(1.0 / ny, y);
                recompute_bits(nr);
                created.push_back(std::move(nr));
            }
        }
        std::vector<Ray> kept;
        kept.reserve(minus.size() + zero.size() + created.size());
        for (std::size_t i = 0; i < rays_.size(); ++i) {
            if (s[i] > kDDActiveTol) continue;
            if (s[i] >= -kDDActiveTol) set_bit(rays_[i], row_idx);
            kept.push_back(std::move(rays_[i]));
        }
        for (Ray& r : created) kept.push_back(std::move(r));
        rays_ = std::move(kept);
    }

    std::vector<Vec> extreme_rays() const {
        std::vector<Vec> out;
        out.reserve(rays_.size());
        for (const Ray& r : rays_) out.push_back(r.v);
        return out;
    }
    const std::vector<Vec>& lineality() const { return lineality_; }

private:
    struct Ray {
        Vec v;
        std::vector<std::uint64_t> bits;
    };

    void set_bit(Ray& r, std::size_t idx) {
        std::size_t blocks = (rows_.size() + 63) / 64;
        if (r.bits.size() < blocks) r.bits.resize(blocks, 0);
        r.bits[idx / 64] |= (std::uint64_t{1} << (idx % 64));
    }

    void recompute_bits(Ray& r) {
        std::size_t blocks = (rows_.size() + 63) / 64;
        r.bits.assign(blocks, 0);
        for (std::size_t j = 0; j < rows_.size(); ++j)
            if (std::fabs(dot(rows_[j], r.v)) <= kDDActiveTol)
                r.bits[j / 64] |= (std::uint64_t{1} << (j % 64));
    }

    // combinatorial adjacency: no third ray's active set contains the
    // intersection of the pair's active sets
    bool adjacent(std::size_t ip, std::size_t iq, std::size_t d_eff) const {
        const std::size_t blocks = (rows_.size() + 63) / 64;
        std::vector<std::uint64_t> z(blocks, 0);
        std::size_t popcount = 0;
        for (std::size_t b = 0; b < blocks; ++b) {
            std::uint64_t bp = b < rays_[ip].bits.size() ? rays_[ip].bits[b] : 0;
            std::uint64_t bq = b < rays_[iq].bits.size() ? rays_[iq].bits[b] : 0;
            z[b] = bp & bq;
            popcount += static_cast<std::size_t>(__builtin_popcountll(z[b]));
        }
        if (d_eff >= 2 && popcount + 2 < d_eff) return false;
        for (std::size_t k = 0; k < rays_.size(); ++k) {
            if (k == ip || k == iq) continue;
            bool superset = true;
            for (std::size_t b = 0; b < blocks; ++b) {
                std::uint64_t bk = b < rays_[k].bits.size() ? rays_[k].bits[b] : 0;
                if ((z[b] & ~bk) != 0) { superset = false; break; }
            }
            if (superset) return false;
        }
        return true;
    }

    std::size_t dim_;
    std::vector<Vec> rows_;
    std::vector<Vec> lineality_;
    std::vector<Ray> rays_;
};

} // namespace detail

// ---------------------------------------------------------------------------
// generator-form <-> halfspace-form conversions
// ---------------------------------------------------------------------------

struct Halfspace {
    Vec normal;
    double offset = 0.0;
};

// Vertices and recession rays of the intersection of halfspaces, through the
// homogenization cone {(x, x0) : <a_i,x> - b_i x0 <= 0, x0 >= 0}.
inline GenSet vertex_enum(const std::vector<Halfspace>& hs, std::size_t n) {
    detail::DoubleDescription dd(n + 1);
    {
        Vec last(n + 1, 0.0);
        last[n] = -1.0;
        dd.add_row(std::move(last));
    }
    for (const auto& h : hs) {
        Vec row = h.normal;
        row.push_back(-h.offset);
        dd.add_row(std::move(row));
    }
    GenSet g = GenSet::empty(n);
    auto push = [&](const Vec& y, bool both_signs) {
        double y0 = y[n];
        Vec x(y.begin(), y.begin() + n);
        if (y0 > 1e-9) {
            g.points.push_back(scale(1.0 / y0, x));
        } else if (norm2(x) > 1e-12) {
            g.rays.push_back(x);
            if (both_signs) g.rays.push_back(scale(-1.0, x));
        }
    };
    for (const Vec& r : dd.extreme_rays()) push(r, false);
    for (const Vec& l : dd.lineality()) push(l, true);
    if (g.points.empty()) return GenSet::empty(n);
    return g;
}

// Facets of a generated set via the dual cone of its homogenization.
inline std::vector<Halfspace> facet_enum(const GenSet& g) {
    const std::size_t n = g.dim;
    std::vector<Halfspace> out;
    if (g.is_empty()) {
        out.push_back({Vec(n, 0.0), -1.0});
        return out;
    }
    detail::DoubleDescription dd(n + 1);
    for (const Vec& p : g.points) {
        Vec row = p;
        row.push_back(1.0);
        dd.add_row(std::move(row));
    }
    for (const Vec& r : g.rays) {
        Vec row = r;
        row.push_back(0.0);
        dd.add_row(std::move(row));
    }
    auto push = [&](const Vec& z, bool both_signs) {
        Vec w(z.begin(), z.begin() + n);
        double nw = norm2(w);
        if (nw < 1e-12) return;
        out.push_back({scale(1.0 / nw, w), -z[n] / nw});
        if (both_signs) out.push_back({scale(-1.0 / nw, w), z[n] / nw});
    };
    for (const Vec& r : dd.extreme_rays()) push(r, false);
    for (const Vec& l : dd.lineality()) push(l, true);
    return out;
}

// ---------------------------------------------------------------------------
// canonicalization
// ---------------------------------------------------------------------------

namespace detail {

// L_inf distance from target to conv(points)+cone(rays), by LP; +inf if empty hull
inline double hull_distance(const std::vector<Vec>& pts, const std::vector<Vec>& rys,
                            const Vec& target, bool affine_combination) {
    const std::size_t n = target.size();
    if (pts.empty() && affine_combination) return std::numeric_limits<double>::infinity();
    const std::size_t k = pts.size(), r = rys.size();
    // variables: lambda_1..k, mu_1..r, tau  (all >= 0)
    LP lp;
    lp.nonneg_vars = true;
    lp.objective = Vec(k + r + 1, 0.0);
    lp.objective[k + r] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        Vec row_hi(k + r + 1, 0.0), row_lo(k + r + 1, 0.0);
        for (std::size_t j = 0; j < k; ++j) { row_hi[j] = pts[j][i]; row_lo[j] = -pts[j][i]; }
        for (std::size_t j = 0; j < r; ++j) { row_hi[k + j] = rys[j][i]; row_lo[k + j] = -rys[j][i]; }
        row_hi[k + r] = -1.0;
        row_lo[k + r] = -1.0;
        lp.constraints.push_back(lp_leq(std::move(row_hi), target[i]));
        lp.constraints.push_back(lp_leq(std::move(row_lo), -target[i]));
    }
    if (affine_combination) {
        Vec sum(k + r + 1, 0.0);
        for (std::size_t j = 0; j < k; ++j) sum[j] = 1.0;
        lp.constraints.push_back(lp_eq(std::move(sum), 1.0));
    }
    LPResult res = solve_lp(lp);
    if (res.status != LPStatus::Optimal) return std::numeric_limits<double>::infinity();
    return res.value;
}

} // namespace detail

inline bool point_in_gen_set(const GenSet& g, const Vec& x, double tol = 1e-9) {
    if (g.is_empty()) return false;
    return detail::hull_distance(g.points, g.rays, x, true) <= tol;
}

inline bool ray_in_recession_cone(const GenSet& g, const Vec& r, double tol = 1e-9) {
    if (g.is_empty()) return false;
    double nr = norm2(r);
    if (nr < 1e-14) return true;
    return detail::hull_distance({}, g.rays, scale(1.0 / nr, r), false) <= tol;
}

inline GenSet canonicalize(GenSet g, double tol = 1e-9) {
    if (g.is_empty()) return GenSet::empty(g.dim);

    // rays: unit length, dedup, prune conic-redundant
    for (Vec& r : g.rays) {
        double n = norm2(r);
        if (n > 1e-14) r = scale(1.0 / n, r);
    }
    std::erase_if(g.rays, [](const Vec& r) { return norm2(r) < 1e-14; });
    std::sort(g.rays.begin(), g.rays.end(), lex_less);
    {
        std::vector<Vec> kept;
        for (const Vec& r : g.rays) {
            bool dup = false;
            for (const Vec& k : kept)
                if (norm_inf(sub(r, k)) <= tol) { dup = true; break; }
            if (!dup) kept.push_back(r);
        }
        g.rays = std::move(kept);
    }
    for (std::size_t i = g.rays.size(); i-- > 0;) {
        std::vector<Vec> others;
        for (std::size_t j = 0; j < g.rays.size(); ++j)
            if (j != i) others.push_back(g.rays[j]);
        if (others.empty()) break;
        if (detail::hull_distance({}, others, g.rays[i], false) <= tol)
            g.rays.erase(g.rays.begin() + i);
    }

    // points: dedup, prune those inside the hull of the rest
    std::sort(g.points.begin(), g.points.end(), lex_less);
    {
        std::vector<Vec> kept;
        for (const Vec& p : g.points) {
            bool dup = false;
            for (const Vec& k : kept)
                if (norm_inf(sub(p, k)) <= tol) { dup = true; break; }
            if (!dup) kept.push_back(p);
        }
        g.points = std::move(kept);
    }
    for (std::size_t i = g.points.size(); i-- > 0;) {
        if (g.points.size() == 1) break;
        std::vector<Vec> others;
        for (std::size_t j = 0; j < g.points.size(); ++j)
            if (j != i) others.push_back(g.points[j]);
        if (detail::hull_distance(others, g.rays, g.points[i], true) <= tol)
            g.points.erase(g.points.begin() + i);
    }

    std::sort(g.points.begin(), g.points.end(), lex_less);
    std::sort(g.rays.begin(), g.rays.end(), lex_less);
    return g;
}

// ---------------------------------------------------------------------------
// set algebra
// ---------------------------------------------------------------------------

inline GenSet hull_union(const std::vector<GenSet>& parts, double tol = 1e-9) {
    std::size_t n = parts.empty() ? 0 : parts.front().dim;
    GenSet g = GenSet::empty(n);
    for (const GenSet& p : parts) {
        if (p.is_empty()) continue;
        if (p.dim != n) throw std::invalid_argument("hull_union: dimension mismatch");
        g.points.insert(g.points.end(), p.points.begin(), p.points.end());
        g.rays.insert(g.rays.end(), p.rays.begin(), p.rays.end());
    }
    return canonicalize(std::move(g), tol);
}

inline GenSet minkowski_sum(const GenSet& a, const GenSet& b, double tol = 1e-9) {
    if (a.dim != b.dim) throw std::invalid_argument("minkowski_sum: dimension mismatch");
    if (a.is_empty() || b.is_empty()) return GenSet::empty(a.dim);
    GenSet g = GenSet::empty(a.dim);
    for (const Vec& p : a.points)
        for (const Vec& q : b.points) g.points.push_back(add(p, q));
    g.rays = a.rays;
    g.rays.insert(g.rays.end(), b.rays.begin(), b.rays.end());
    return canonicalize(std::move(g), tol);
}

inline GenSet translate_set(const GenSet& a, const Vec& t) {
    GenSet g = a;
    for (Vec& p : g.points) p = add(p, t);
    return g;
}

inline GenSet scale_set(const GenSet& a, double c) {
    if (c < 0) throw std::invalid_argument("scale_set: negative factor");
    GenSet g = a;
    for (Vec& p : g.points) p = scale(c, p);
    if (c == 0.0) g.rays.clear();
    return g;
}

// sigma_S(u); -inf for the empty set, +inf when u fails to be bounded on S
inline ExtReal support(const GenSet& g, const Vec& u) {
    if (g.is_empty()) return ExtReal::neg_inf();
    check_dim(u, g.dim, "support");
    double nu = std::max(1.0, norm2(u));
    for (const Vec& r : g.rays)
        if (dot(u, r) > 1e-10 * nu) return ExtReal::pos_inf();
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec& p : g.points) best = std::max(best, dot(u, p));
    return ExtReal(best);
}

// Normal cone of the closure of p at x: cone of active constraint normals,
// {0} at interior points, empty off the set.
inline GenSet normal_cone(const Polyhedron& p, const Vec& x, double tol = 1e-9) {
    check_dim(x, p.dim, "normal_cone");
    Polyhedron cl = polyhedron_closure(p);
    if (!polyhedron_contains(cl, x, tol)) return GenSet::empty(p.dim);
    GenSet g = GenSet::singleton(Vec(p.dim, 0.0));
    for (const auto& c : cl.constraints) {
        double nn = norm2(c.normal);
        if (nn < 1e-14) continue;
        double slack = c.offset - dot(c.normal, x);
        if (std::fabs(slack) <= tol * std::max(1.0, std::fabs(c.offset)) * std::max(1.0, nn))
            g.rays.push_back(scale(1.0 / nn, c.normal));
    }
    return canonicalize(std::move(g), tol);
}

// B subset of A within per-generator LP slack tol
inline bool set_contains(const GenSet& a, const GenSet& b, double tol = 1e-7) {
    if (b.is_empty()) return true;
    if (a.is_empty()) return false;
    if (a.dim != b.dim) throw std::invalid_argument("set_contains: dimension mismatch");
    for (const Vec& p : b.points)
        if (detail::hull_distance(a.points, a.rays, p, true) > tol) return false;
    for (const Vec& r : b.rays)
        if (!ray_in_recession_cone(a, r, tol)) return false;
    return true;
}

// Support-gap over the direction net; +inf when recession cones differ or only
// one side is empty.
inline double hausdorff_gap(const GenSet& a, const GenSet& b) {
    if (a.is_empty() && b.is_empty()) return 0.0;
    if (a.is_empty() || b.is_empty()) return std::numeric_limits<double>::infinity();
    if (a.dim != b.dim) throw std::invalid_argument("hausdorff_gap: dimension mismatch");
    const double rec_tol = 1e-8;
    for (const Vec& r : a.rays)
        if (!ray_in_recession_cone(b, r, rec_tol)) return std::numeric_limits<double>::infinity();
    for (const Vec& r : b.rays)
        if (!ray_in_recession_cone(a, r, rec_tol)) return std::numeric_limits<double>::infinity();
    double gap = 0.0;
    for (const Vec& u : direction_net(a.dim)) {
        ExtReal sa = support(a, u), sb = support(b, u);
        bool fa = sa.is_finite(), fb = sb.is_finite();
        if (fa != fb) return std::numeric_limits<double>::infinity();
        if (fa && fb) gap = std::max(gap, std::fabs(sa.v - sb.v));
    }
    return gap;
}

// Exact for polyhedral inputs: facet halfspaces of every operand (plus tangent
// halfspaces over the net for good measure) are intersected and re-enumerated.
inline GenSet intersect_sets(const std::vector<GenSet>& parts, double tol = 1e-9) {
    if (parts.empty()) throw std::invalid_argument("intersect_sets: no operands");
    const std::size_t n = parts.front().dim;
    std::vector<Halfspace> hs;
    for (const GenSet& p : parts) {
        if (p.dim != n) throw std::invalid_argument("intersect_sets: dimension mismatch");
        if (p.is_empty()) return GenSet::empty(n);
        for (auto& h : facet_enum(p)) hs.push_back(std::move(h));
        for (const Vec& u : direction_net(n)) {
            ExtReal s = support(p, u);
            if (s.is_finite()) hs.push_back({u, s.v});
        }
    }
    return canonicalize(vertex_enum(hs, n), tol);
}

inline GenSet intersect_with_halfspaces(const GenSet& g, const std::vector<Halfspace>& cuts,
                                        double tol = 1e-9) {
    if (g.is_empty()) return GenSet::empty(g.dim);
    std::vector<Halfspace> hs = facet_enum(g);
    hs.insert(hs.end(), cuts.begin(), cuts.end());
    return canonicalize(vertex_enum(hs, g.dim), tol);
}

// ---------------------------------------------------------------------------
// adaptive reconstruction of a closed convex set from its support function
// ---------------------------------------------------------------------------

struct ReconstructOptions {
    int max_rounds = 60;
    // curved boundaries admit no finite exact shell and every validation
    // round doubles the generator count, so refinement stops once this many
    // generators accumulate and keeps the outer approximation
    std::size_t max_generators = 512;
    // when a curved shell violates everywhere, inserting every cut makes the
    // double description intractable; only the deepest ones go in per round
    std::size_t max_cuts_per_round = 128;
    double validate_tol = 3e-10;
    double canon_tol = 1e-9;
    // a tentative vertex this close to the hull of the others is treated as
    // shell noise and dropped; support queries cannot certify features below
    // roughly sqrt(eps_machine) anyway
    double spurious_tol = 1e-8;
};

// sigma(u) may return +inf (unbounded direction). The net gives an outer
// polyhedral shell; validation rounds then re-query sigma along each tentative
// vertex / ray exposure direction and cut until no generator sticks out. The
// double description state persists across rounds, so each cut is one
// incremental insertion rather than a rebuild. Cuts whose violation falls
// below the double description activity tolerance no longer move the shell,
// so a final polish projects each remaining vertex onto its supporting
// halfspace before canonicalization; the output can therefore sit marginally
// inside the source set, never outside it by more than validate_tol.
template <typename SupportF>
GenSet reconstruct_set_from_support(SupportF&& sigma, std::size_t n,
                                    const ReconstructOptions& opt = {}) {
    detail::DoubleDescription dd(n + 1);
    {
        Vec last(n + 1, 0.0);
        last[n] = -1.0;
        dd.add_row(std::move(last));
    }
    std::vector<Halfspace> hs;
    auto insert = [&](const Vec& u, double s) {
        hs.push_back({u, s});
        Vec row = u;
        row.push_back(-s);
        dd.add_row(std::move(row));
    };
    auto extract = [&]() {
        GenSet g = GenSet::empty(n);
        auto push = [&](const Vec& y, bool both_signs) {
            double y0 = y[n];
            Vec x(y.begin(), y.begin() + n);
            if (y0 > 1e-9) {
                g.points.push_back(scale(1.0 / y0, x));
            } else if (norm2(x) > 1e-12) {
                g.rays.push_back(x);
                if (both_signs) g.rays.push_back(scale(-1.0, x));
            }
        };
        for (const Vec& r : dd.extreme_rays()) push(r, false);
        for (const Vec& l : dd.lineality()) push(l, true);
        if (g.points.empty()) return GenSet::empty(n);
        return g;
    };

    for (const Vec& u : direction_net(n)) {
        double s = sigma(u);
        if (s < -1e12) return GenSet::empty(n); // sigma = -inf: empty set
        if (std::isfinite(s)) insert(u, s);
    }
    GenSet cur = extract();
    if (cur.is_empty()) return cur;

    auto exposure = [&](const Vec& v, const Vec& center) -> std::optional<Vec> {
        // mean of active halfspace normals at v, falling back to the ray from
        // the vertex centroid
        Vec u(n, 0.0);
        for (const auto& h : hs) {
            double sc = std::max(1.0, std::fabs(h.offset));
            if (std::fabs(dot(h.normal, v) - h.offset) <= 1e-8 * sc)
                u = add(u, h.normal);
        }
        if (norm2(u) < 1e-10) u = sub(v, center);
        double nu = norm2(u);
        if (nu < 1e-12) return std::nullopt;
        return scale(1.0 / nu, u);
    };
    auto centroid = [&]() {
        Vec center(n, 0.0);
        for (const Vec& p : cur.points) center = add(center, p);
        return scale(1.0 / static_cast<double>(cur.points.size()), center);
    };

    for (int round = 0; round < opt.max_rounds; ++round) {
        Vec center = centroid();
        std::vector<std::pair<double, Halfspace>> cuts; // keyed by violation depth
        for (const Vec& v : cur.points) {
            auto u = exposure(v, center);
            if (!u) continue;
            double s = sigma(*u);
            if (std::isfinite(s) && dot(*u, v) > s + opt.validate_tol)
                cuts.push_back({dot(*u, v) - s, {*u, s}});
        }
        for (const Vec& r : cur.rays) {
            double nr = norm2(r);
            if (nr < 1e-12) continue;
            Vec u = scale(1.0 / nr, r);
            double s = sigma(u);
            // a finite support along a tentative ray means the ray is junk;
            // such cuts always go in
            if (std::isfinite(s)) cuts.push_back({std::numeric_limits<double>::infinity(), {u, s}});
        }
        if (cuts.empty()) break;
        if (cuts.size() > opt.max_cuts_per_round) {
            std::partial_sort(cuts.begin(), cuts.begin() + opt.max_cuts_per_round, cuts.end(),
                              [](const auto& a, const auto& b) { return a.first > b.first; });
            cuts.resize(opt.max_cuts_per_round);
        }
        for (const auto& c : cuts) insert(c.second.normal, c.second.offset);
        GenSet next = extract();
        // cuts shallower than the double description activity tolerance leave
        // the shell as it was; stop instead of reissuing them
        bool stalled = next.points == cur.points && next.rays == cur.rays;
        cur = std::move(next);
        if (cur.is_empty() || stalled) break;
        // a smooth boundary keeps producing valid cuts forever; give up once
        // the shell carries enough generators and accept the outer hull
        if (cur.points.size() + cur.rays.size() > opt.max_generators) break;
    }

    if (!cur.is_empty()) {
        for (int sweep = 0; sweep < 4; ++sweep) {
            Vec center = centroid();
            bool moved = false;
            for (Vec& v : cur.points) {
                auto u = exposure(v, center);
                if (!u) continue;
                double viol = dot(*u, v) - sigma(*u);
                if (viol > 0.0 && viol <= 1e-6) {
                    v = axpy(v, -viol, *u);
                    if (viol > opt.validate_tol) moved = true;
                }
            }
            if (!moved) break;
        }
    }
    return canonicalize(std::move(cur), std::max(opt.canon_tol, opt.spurious_tol));
}

} // namespace supdiff
