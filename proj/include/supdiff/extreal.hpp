#pragma once

// Extended reals R u {-inf, +inf} with the convention (+inf) + (-inf) = +inf.
// Plain IEEE doubles would turn that sum into NaN, so addition goes through here.

#include <cmath>
#include <limits>
#include <ostream>

namespace supdiff {

struct ExtReal {
    double v = 0.0;

    ExtReal() = default;
    explicit ExtReal(double x) : v(x) {}

    static ExtReal pos_inf() { return ExtReal(std::numeric_limits<double>::infinity()); }
    static ExtReal neg_inf() { return ExtReal(-std::numeric_limits<double>::infinity()); }

    bool is_finite() const { return std::isfinite(v); }
    bool is_pos_inf() const { return std::isinf(v) && v > 0; }
    bool is_neg_inf() const { return std::isinf(v) && v < 0; }

    friend ExtReal operator+(ExtReal a, ExtReal b) {
        if (a.is_pos_inf() || b.is_pos_inf()) return pos_inf();
        if (a.is_neg_inf() || b.is_neg_inf()) return neg_inf();
        return ExtReal(a.v + b.v);
    }
    ExtReal& operator+=(ExtReal b) { *this = *this + b; return *this; }

    // scaling by a nonnegative finite factor; 0 * inf is never needed here
    friend ExtReal operator*(double c, ExtReal a) { return ExtReal(c * a.v); }

    friend bool operator<(ExtReal a, ExtReal b) { return a.v < b.v; }
    friend bool operator>(ExtReal a, ExtReal b) { return a.v > b.v; }
    friend bool operator<=(ExtReal a, ExtReal b) { return a.v <= b.v; }
    friend bool operator>=(ExtReal a, ExtReal b) { return a.v >= b.v; }
    friend bool operator==(ExtReal a, ExtReal b) { return a.v == b.v; }

    friend ExtReal ext_max(ExtReal a, ExtReal b) { return a.v >= b.v ? a : b; }
    friend ExtReal ext_min(ExtReal a, ExtReal b) { return a.v <= b.v ? a : b; }

    friend std::ostream& operator<<(std::ostream& os, ExtReal a) {
        if (a.is_pos_inf()) return os << "+inf";
        if (a.is_neg_inf()) return os << "-inf";
        return os << a.v;
    }
};

} // namespace supdiff
