#pragma once

// Scalar minimization over a half-open interval (a, b], intended for convex /
// quasiconvex objectives such as difference quotients. Geometric sweep from b
// toward a locates a bracket, golden-section refines it. Infima attained only
// in the limit s -> a are reported through `at_lower_limit`.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace supdiff {

struct ScalarMinResult {
    double arg = 0.0;
    double value = 0.0;
    bool at_lower_limit = false;
};

namespace detail {

constexpr double kGoldenWidth = 1e-12;
constexpr int kMaxHalvings = 96;

inline double golden_refine(const std::function<double(double)>& g, double lo, double hi,
                            double& best_arg, double& best_val) {
    const double invphi = 0.6180339887498949;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = g(x1), f2 = g(x2);
    auto consider = [&](double x, double f) {
        if (f < best_val) { best_val = f; best_arg = x; }
    };
    consider(x1, f1);
    consider(x2, f2);
    while (hi - lo > kGoldenWidth * std::max(1.0, std::fabs(hi))) {
        if (f1 <= f2) {
            hi = x2; x2 = x1; f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = g(x1);
            consider(x1, f1);
        } else {
            lo = x1; x1 = x2; f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = g(x2);
            consider(x2, f2);
        }
    }
    return best_val;
}

} // namespace detail

// Returns nullopt when g is non-finite at every probe point.
inline std::optional<ScalarMinResult> try_minimize_scalar(const std::function<double(double)>& g,
                                                          double a, double b) {
    if (!(a >= 0.0) || !(b > a)) throw std::invalid_argument("minimize_scalar: need 0 <= a < b");

    // geometric descent from b toward a
    std::vector<double> ss, vs;
    ss.reserve(detail::kMaxHalvings + 1);
    double s = b;
    for (int j = 0; j <= detail::kMaxHalvings; ++j) {
        ss.push_back(s);
        vs.push_back(g(s));
        double next = a + (s - a) * 0.5;
        if (next - a <= 1e-15 * b || next >= s) break;
        s = next;
    }

    std::size_t best = ss.size();
    for (std::size_t j = 0; j < ss.size(); ++j) {
        if (std::isfinite(vs[j]) && (best == ss.size() || vs[j] < vs[best])) best = j;
    }
    if (best == ss.size()) return std::nullopt;

    ScalarMinResult res;
    res.arg = ss[best];
    res.value = vs[best];

    const bool deepest = best + 1 == ss.size();
    if (deepest && best > 0 && vs[best] < vs[best - 1] - 1e-15 * std::max(1.0, std::fabs(vs[best]))) {
        // still descending at the bottom of the grid: infimum is the limit s -> a
        res.at_lower_limit = true;
        return res;
    }

    double lo = deepest ? ss[best] : ss[best + 1];
    double hi = best == 0 ? b : ss[best - 1];
    detail::golden_refine(g, lo, hi, res.arg, res.value);
    return res;
}

inline ScalarMinResult minimize_scalar(const std::function<double(double)>& g, double a, double b) {
    auto r = try_minimize_scalar(g, a, b);
    if (!r) throw std::runtime_error("minimize_scalar: objective non-finite at every probe");
    return *r;
}

} // namespace supdiff
