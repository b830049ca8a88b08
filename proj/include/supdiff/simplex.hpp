#pragma once

// Dense two-phase simplex with Bland's anti-cycling rule. Variables are free by
// default (split into positive/negative parts); set LP::nonneg_vars for x >= 0
// models where splitting would double a very wide column set for nothing.
//
// Determinism: Bland's rule (lowest eligible index enters, lowest basic index
// breaks ratio ties) makes repeated solves bit-identical.

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "numeric.hpp"

namespace supdiff {

enum class ConSense { Leq, Eq };

struct LPConstraint {
    Vec normal;
    double offset = 0.0;
    ConSense sense = ConSense::Leq;
};

enum class LPGoal { Minimize, Maximize };

struct LP {
    Vec objective;
    std::vector<LPConstraint> constraints;
    LPGoal goal = LPGoal::Minimize;
    bool nonneg_vars = false;
};

enum class LPStatus { Optimal, Infeasible, Unbounded };

struct LPResult {
    LPStatus status = LPStatus::Infeasible;
    Vec point;
    double value = 0.0;
};

inline LPConstraint lp_leq(Vec a, double b) { return {std::move(a), b, ConSense::Leq}; }
inline LPConstraint lp_eq(Vec a, double b) { return {std::move(a), b, ConSense::Eq}; }

namespace detail {

constexpr double kSimplexTol = 1e-10;

class SimplexTableau {
public:
    // columns: structural columns given by their per-row coefficients and cost
    SimplexTableau(std::size_t m) : m_(m), rhs_(m, 0.0) {}

    void add_column(const std::vector<double>& col, double cost) {
        cols_.push_back(col);
        costs_.push_back(cost);
    }
    void set_rhs(std::size_t i, double b) { rhs_[i] = b; }

    // returns false when infeasible (phase-1 optimum stays positive)
    bool solve(std::vector<double>& out_x, double& out_value) {
        const std::size_t n_struct = cols_.size();
        // sign-flip rows so rhs >= 0, then append one artificial per row
        for (std::size_t i = 0; i < m_; ++i) {
            if (rhs_[i] < 0.0) {
                rhs_[i] = -rhs_[i];
                for (auto& c : cols_) c[i] = -c[i];
            }
        }
        n_total_ = n_struct + m_;
        tab_.assign(m_, std::vector<double>(n_total_ + 1, 0.0));
        basis_.assign(m_, 0);
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_struct; ++j) tab_[i][j] = cols_[j][i];
            tab_[i][n_struct + i] = 1.0;
            tab_[i][n_total_] = rhs_[i];
            basis_[i] = n_struct + i;
        }

        // phase 1: minimize sum of artificials
        std::vector<double> phase1_cost(n_total_, 0.0);
        for (std::size_t j = n_struct; j < n_total_; ++j) phase1_cost[j] = 1.0;
        double p1 = run_phase(phase1_cost, n_total_, nullptr);
        if (p1 > kSimplexTol * std::max<double>(1.0, m_)) return false;

        // drive leftover artificials out of the basis where possible
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_struct) continue;
            std::size_t enter = n_struct;
            for (std::size_t j = 0; j < n_struct; ++j) {
                if (std::fabs(tab_[i][j]) > kSimplexTol) { enter = j; break; }
            }
            if (enter < n_struct) pivot(i, enter);
            // else: redundant row, artificial stays basic at level zero
        }

        // phase 2 over structural columns only
        std::vector<double> phase2_cost(n_total_, 0.0);
        for (std::size_t j = 0; j < n_struct; ++j) phase2_cost[j] = costs_[j];
        bool bounded = true;
        out_value = run_phase(phase2_cost, n_struct, &bounded);
        if (!bounded) { unbounded_ = true; return true; }

        out_x.assign(n_struct, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < n_struct) out_x[basis_[i]] = tab_[i][n_total_];
        return true;
    }

    bool unbounded() const { return unbounded_; }

private:
    // minimizes cost over the current tableau; candidate columns are [0, n_candidates)
    double run_phase(const std::vector<double>& cost, std::size_t n_candidates, bool* bounded) {
        while (true) {
            // reduced costs r_j = c_j - c_B * B^-1 A_j, computed on the fly
            std::size_t enter = n_total_;
            for (std::size_t j = 0; j < n_candidates; ++j) {
                double r = cost[j];
                for (std::size_t i = 0; i < m_; ++i) {
                    double cb = cost[basis_[i]];
                    if (cb != 0.0) r -= cb * tab_[i][j];
                }
                if (r < -kSimplexTol) { enter = j; break; } // Bland: lowest index
            }
            if (enter == n_total_) break;

            std::size_t leave = m_;
            double best_ratio = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                if (tab_[i][enter] > kSimplexTol) {
                    double ratio = tab_[i][n_total_] / tab_[i][enter];
                    if (leave == m_ || ratio < best_ratio - kSimplexTol ||
                        (ratio < best_ratio + kSimplexTol && basis_[i] < basis_[leave])) {
                        leave = i;
                        best_ratio = ratio;
                    }
                }
            }
            if (leave == m_) {
                if (bounded) *bounded = false;
                return 0.0;
            }
            pivot(leave, enter);
        }
        double z = 0.0;
        for (std::size_t i = 0; i < m_; ++i) z += cost[basis_[i]] * tab_[i][n_total_];
        return z;
    }

    void pivot(std::size_t row, std::size_t col) {
        double p = tab_[row][col];
        for (double& x : tab_[row]) x /= p;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == row) continue;
            double f = tab_[i][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n_total_; ++j) tab_[i][j] -= f * tab_[row][j];
        }
        basis_[row] = col;
    }

    std::size_t m_;
    std::size_t n_total_ = 0;
    std::vector<double> rhs_;
    std::vector<std::vector<double>> cols_;
    std::vector<double> costs_;
    std::vector<std::vector<double>> tab_;
    std::vector<std::size_t> basis_;
    bool unbounded_ = false;
};

} // namespace detail

inline LPResult solve_lp(const LP& lp) {
    const std::size_t n = lp.objective.size();
    for (const auto& c : lp.constraints)
        if (c.normal.size() != n)
            throw std::invalid_argument("solve_lp: constraint dimension does not match objective");

    const std::size_t m = lp.constraints.size();
    const double sign = lp.goal == LPGoal::Maximize ? -1.0 : 1.0;

    detail::SimplexTableau tab(m);
    // structural variables: x (or x+ / x-), then one slack per Leq row
    std::vector<double> col(m);
    const std::size_t parts = lp.nonneg_vars ? 1 : 2;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t part = 0; part < parts; ++part) {
            double s = part == 0 ? 1.0 : -1.0;
            for (std::size_t i = 0; i < m; ++i) col[i] = s * lp.constraints[i].normal[j];
            tab.add_column(col, sign * s * lp.objective[j]);
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (lp.constraints[i].sense != ConSense::Leq) continue;
        std::fill(col.begin(), col.end(), 0.0);
        col[i] = 1.0;
        tab.add_column(col, 0.0);
    }
    for (std::size_t i = 0; i < m; ++i) tab.set_rhs(i, lp.constraints[i].offset);

    std::vector<double> raw;
    double value = 0.0;
    LPResult res;
    if (!tab.solve(raw, value)) {
        res.status = LPStatus::Infeasible;
        return res;
    }
    if (tab.unbounded()) {
        res.status = LPStatus::Unbounded;
        return res;
    }
    res.status = LPStatus::Optimal;
    res.point.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        res.point[j] = lp.nonneg_vars ? raw[j] : raw[2 * j] - raw[2 * j + 1];
    res.value = sign * value;
    return res;
}

} // namespace supdiff
