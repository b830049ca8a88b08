#pragma once

// Deterministic unit-direction nets on S^{n-1}: 32*n^2 quasi-uniform directions
// plus every +/- coordinate axis. n = 1 degenerates to {-1, +1}. The same net
// backs support sampling, Hausdorff gaps and oracle reconstruction, so results
// are reproducible across runs by construction.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "numeric.hpp"

namespace supdiff {

namespace detail {

// Halton radical inverse, used as a deterministic low-discrepancy source.
inline double radical_inverse(unsigned base, unsigned long long i) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

inline double inverse_normal_cdf(double p) {
    // Acklam's rational approximation; plenty for quasi-uniform sphere points
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p <= phigh) {
        q = p - 0.5;
        r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    }
    q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
}

inline std::vector<Vec> build_net(std::size_t n) {
    std::vector<Vec> net;
    if (n == 1) {
        net.push_back({-1.0});
        net.push_back({1.0});
        return net;
    }
    const std::size_t count = 32 * n * n;
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    if (n == 2) {
        for (std::size_t k = 0; k < count; ++k) {
            double theta = 2.0 * M_PI * std::fmod(static_cast<double>(k) / golden, 1.0);
            net.push_back({std::cos(theta), std::sin(theta)});
        }
    } else if (n == 3) {
        // classic Fibonacci sphere
        for (std::size_t k = 0; k < count; ++k) {
            double z = 1.0 - (2.0 * k + 1.0) / count;
            double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
            double theta = 2.0 * M_PI * std::fmod(static_cast<double>(k) / golden, 1.0);
            net.push_back({rad * std::cos(theta), rad * std::sin(theta), z});
        }
    } else {
        // Halton points through the inverse normal map, normalized to the sphere
        static const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
        for (std::size_t k = 0; k < count; ++k) {
            Vec v(n);
            for (std::size_t i = 0; i < n; ++i) {
                double u = radical_inverse(primes[i % 8], k + 1);
                u = std::min(std::max(u, 1e-12), 1.0 - 1e-12);
                v[i] = inverse_normal_cdf(u);
            }
            double nv = norm2(v);
            if (nv < 1e-9) continue;
            net.push_back(scale(1.0 / nv, v));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        net.push_back(unit_vec(n, i, 1.0));
        net.push_back(unit_vec(n, i, -1.0));
    }
    return net;
}

} // namespace detail

inline const std::vector<Vec>& direction_net(std::size_t n) {
    // eager build for all small n keeps this callable from worker threads
    static const std::vector<std::vector<Vec>> cache = [] {
        std::vector<std::vector<Vec>> c(9);
        for (std::size_t k = 1; k < c.size(); ++k) c[k] = detail::build_net(k);
        return c;
    }();
    if (n == 0 || n >= cache.size())
        throw std::invalid_argument("direction_net: dimension out of supported range");
    return cache[n];
}

} // namespace supdiff
