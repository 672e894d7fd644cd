#ifndef GRIDMESH_SIMPLEX_HPP
#define GRIDMESH_SIMPLEX_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "gridmesh/milp.hpp"

namespace gridmesh {

/// Revised primal simplex over bounded variables with a dense basis inverse.
/// Two phases: artificials start basic on every row, phase 1 drives their sum
/// to zero, phase 2 pins them at zero and minimizes the real objective.
/// Dantzig pricing switches to Bland's rule after a degeneracy streak.
class SimplexSolver {
public:
    SimplexSolver(const MilpModel& model, const SolveOptions& opts)
        : model_(model), opts_(opts) {}

    // Bounds arrays override the model's (branch-and-bound tightens them).
    MilpSolution solve(const std::vector<double>& lb, const std::vector<double>& ub) {
        build_columns(lb, ub);
        MilpSolution sol;
        sol.status = run(sol.simplex_iters);
        if (sol.status == SolveStatus::Optimal) {
            sol.values.assign(x_.begin(), x_.begin() + nstruct_);
            sol.objective = 0.0;
            for (int j = 0; j < nstruct_; ++j)
                sol.objective += model_.variables[static_cast<size_t>(j)].obj * x_[static_cast<size_t>(j)];
            sol.best_bound = sol.objective;
        }
        return sol;
    }

    MilpSolution solve() {
        std::vector<double> lb(model_.num_vars()), ub(model_.num_vars());
        for (size_t j = 0; j < model_.num_vars(); ++j) {
            lb[j] = model_.variables[j].lower;
            ub[j] = model_.variables[j].upper;
        }
        return solve(lb, ub);
    }

private:
    enum class VStat { Basic, AtLower, AtUpper, FreeZero };

    const MilpModel& model_;
    const SolveOptions& opts_;

    int nstruct_ = 0;
    int ncols_ = 0;   // structural + slacks + artificials
    int m_ = 0;
    int art0_ = 0;    // first artificial column

    std::vector<std::vector<std::pair<int, double>>> cols_;
    std::vector<double> lo_, up_, cost_, x_, rhs_;
    std::vector<int> basis_;
    std::vector<VStat> stat_;
    std::vector<double> binv_;  // m x m row-major

    double& binv(int i, int k) { return binv_[static_cast<size_t>(i) * m_ + k]; }

    void build_columns(const std::vector<double>& lb, const std::vector<double>& ub) {
        nstruct_ = static_cast<int>(model_.num_vars());
        m_ = static_cast<int>(model_.num_rows());
        cols_.assign(static_cast<size_t>(nstruct_), {});
        lo_.assign(lb.begin(), lb.end());
        up_.assign(ub.begin(), ub.end());
        rhs_.resize(static_cast<size_t>(m_));
        for (int i = 0; i < m_; ++i) {
            const Row& row = model_.constraints[static_cast<size_t>(i)];
            rhs_[static_cast<size_t>(i)] = row.rhs;
            for (const auto& [j, a] : row.coeffs)
                cols_[static_cast<size_t>(j)].push_back({i, a});
        }
        // slack / surplus columns
        for (int i = 0; i < m_; ++i) {
            const Row& row = model_.constraints[static_cast<size_t>(i)];
            if (row.sense == RowSense::EQ) continue;
            cols_.push_back({{i, row.sense == RowSense::LE ? 1.0 : -1.0}});
            lo_.push_back(0.0);
            up_.push_back(kInf);
        }
        art0_ = static_cast<int>(cols_.size());
        // artificial columns (sign picked at init so their value is |residual|)
        for (int i = 0; i < m_; ++i) {
            cols_.push_back({{i, 1.0}});
            lo_.push_back(0.0);
            up_.push_back(kInf);
        }
        ncols_ = static_cast<int>(cols_.size());
    }

    void set_nonbasic_start() {
        stat_.assign(static_cast<size_t>(ncols_), VStat::AtLower);
        x_.assign(static_cast<size_t>(ncols_), 0.0);
        for (int j = 0; j < art0_; ++j) {
            if (std::isfinite(lo_[static_cast<size_t>(j)])) {
                stat_[static_cast<size_t>(j)] = VStat::AtLower;
                x_[static_cast<size_t>(j)] = lo_[static_cast<size_t>(j)];
            } else if (std::isfinite(up_[static_cast<size_t>(j)])) {
                stat_[static_cast<size_t>(j)] = VStat::AtUpper;
                x_[static_cast<size_t>(j)] = up_[static_cast<size_t>(j)];
            } else {
                stat_[static_cast<size_t>(j)] = VStat::FreeZero;
                x_[static_cast<size_t>(j)] = 0.0;
            }
        }
    }

    std::vector<double> nonbasic_residual() const {
        std::vector<double> r(rhs_);
        for (int j = 0; j < art0_; ++j) {
            if (stat_[static_cast<size_t>(j)] == VStat::Basic) continue;
            const double v = x_[static_cast<size_t>(j)];
            if (v == 0.0) continue;
            for (const auto& [i, a] : cols_[static_cast<size_t>(j)])
                r[static_cast<size_t>(i)] -= a * v;
        }
        return r;
    }

    // Gauss-Jordan inverse of the current basis matrix; also refreshes x_B.
    bool refactorize() {
        std::vector<double> B(static_cast<size_t>(m_) * m_, 0.0);
        for (int k = 0; k < m_; ++k)
            for (const auto& [i, a] : cols_[static_cast<size_t>(basis_[static_cast<size_t>(k)])])
                B[static_cast<size_t>(i) * m_ + k] = a;
        binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; ++i) binv(i, i) = 1.0;
        for (int c = 0; c < m_; ++c) {
            int piv = -1;
            double best = 1e-11;
            for (int i = c; i < m_; ++i) {
                const double v = std::fabs(B[static_cast<size_t>(i) * m_ + c]);
                if (v > best) { best = v; piv = i; }
            }
            if (piv < 0) return false;
            if (piv != c) {
                for (int k = 0; k < m_; ++k) {
                    std::swap(B[static_cast<size_t>(piv) * m_ + k], B[static_cast<size_t>(c) * m_ + k]);
                    std::swap(binv(piv, k), binv(c, k));
                }
            }
            const double d = B[static_cast<size_t>(c) * m_ + c];
            for (int k = 0; k < m_; ++k) {
                B[static_cast<size_t>(c) * m_ + k] /= d;
                binv(c, k) /= d;
            }
            for (int i = 0; i < m_; ++i) {
                if (i == c) continue;
                const double f = B[static_cast<size_t>(i) * m_ + c];
                if (f == 0.0) continue;
                for (int k = 0; k < m_; ++k) {
                    B[static_cast<size_t>(i) * m_ + k] -= f * B[static_cast<size_t>(c) * m_ + k];
                    binv(i, k) -= f * binv(c, k);
                }
            }
        }
        refresh_basic_values();
        return true;
    }

    void refresh_basic_values() {
        const std::vector<double> r = nonbasic_residual();
        for (int k = 0; k < m_; ++k) {
            double v = 0.0;
            for (int i = 0; i < m_; ++i) v += binv(k, i) * r[static_cast<size_t>(i)];
            x_[static_cast<size_t>(basis_[static_cast<size_t>(k)])] = v;
        }
    }

    SolveStatus run(std::int64_t& iters) {
        set_nonbasic_start();
        // artificial basis: flip column signs so artificial values are >= 0
        basis_.resize(static_cast<size_t>(m_));
        std::vector<double> r = nonbasic_residual();
        for (int i = 0; i < m_; ++i) {
            const int aj = art0_ + i;
            if (r[static_cast<size_t>(i)] < 0.0) cols_[static_cast<size_t>(aj)][0].second = -1.0;
            basis_[static_cast<size_t>(i)] = aj;
            stat_[static_cast<size_t>(aj)] = VStat::Basic;
            x_[static_cast<size_t>(aj)] = std::fabs(r[static_cast<size_t>(i)]);
        }
        binv_.assign(static_cast<size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; ++i) binv(i, i) = cols_[static_cast<size_t>(art0_ + i)][0].second;

        // phase 1
        cost_.assign(static_cast<size_t>(ncols_), 0.0);
        for (int j = art0_; j < ncols_; ++j) cost_[static_cast<size_t>(j)] = 1.0;
        SolveStatus st = iterate(iters, true);
        if (st != SolveStatus::Optimal) return st;
        double art_sum = 0.0;
        for (int j = art0_; j < ncols_; ++j) art_sum += x_[static_cast<size_t>(j)];
        if (art_sum > 1e-7 * (1.0 + rhs_scale())) return SolveStatus::Infeasible;

        // phase 2: artificials pinned to zero
        for (int j = art0_; j < ncols_; ++j) { lo_[static_cast<size_t>(j)] = 0.0; up_[static_cast<size_t>(j)] = 0.0; }
        cost_.assign(static_cast<size_t>(ncols_), 0.0);
        for (int j = 0; j < nstruct_; ++j) cost_[static_cast<size_t>(j)] = model_.variables[static_cast<size_t>(j)].obj;
        st = iterate(iters, false);
        // basic values drift under the product-form updates; recompute them
        // from the inverse before anyone reads the solution
        if (st == SolveStatus::Optimal) refresh_basic_values();
        return st;
    }

    double rhs_scale() const {
        double s = 0.0;
        for (double b : rhs_) s = std::max(s, std::fabs(b));
        return s;
    }

    SolveStatus iterate(std::int64_t& iters, bool phase1) {
        constexpr double kDualTol = 1e-9;
        constexpr double kPivTol = 1e-9;
        int degen_streak = 0;
        int since_refactor = 0;
        const int refactor_interval = 500;
        std::vector<double> y(static_cast<size_t>(m_));
        std::vector<double> w(static_cast<size_t>(m_));

        while (true) {
            if (iters++ > opts_.simplex_iter_limit) return SolveStatus::IterLimit;
            // y = c_B^T * Binv
            for (int i = 0; i < m_; ++i) {
                double v = 0.0;
                for (int k = 0; k < m_; ++k) {
                    const double cb = cost_[static_cast<size_t>(basis_[static_cast<size_t>(k)])];
                    if (cb != 0.0) v += cb * binv(k, i);
                }
                y[static_cast<size_t>(i)] = v;
            }
            // hot loop rewritten: accumulate over basic rows first
            // (the loop above is O(m^2); fine at our sizes)

            const bool bland = degen_streak > 60;
            int enter = -1;
            double best_score = kDualTol;
            int enter_dir = 0;  // +1 increase, -1 decrease
            for (int j = 0; j < ncols_; ++j) {
                const VStat s = stat_[static_cast<size_t>(j)];
                if (s == VStat::Basic) continue;
                if (lo_[static_cast<size_t>(j)] == up_[static_cast<size_t>(j)]) continue;
                double d = cost_[static_cast<size_t>(j)];
                for (const auto& [i, a] : cols_[static_cast<size_t>(j)]) d -= y[static_cast<size_t>(i)] * a;
                int dir = 0;
                if (s == VStat::AtLower && d < -kDualTol) dir = +1;
                else if (s == VStat::AtUpper && d > kDualTol) dir = -1;
                else if (s == VStat::FreeZero && std::fabs(d) > kDualTol) dir = d < 0 ? +1 : -1;
                if (dir == 0) continue;
                if (bland) { enter = j; enter_dir = dir; break; }
                if (std::fabs(d) > best_score) { best_score = std::fabs(d); enter = j; enter_dir = dir; }
            }
            if (enter < 0) return SolveStatus::Optimal;

            // w = Binv * a_enter
            std::fill(w.begin(), w.end(), 0.0);
            for (const auto& [i, a] : cols_[static_cast<size_t>(enter)])
                for (int k = 0; k < m_; ++k) w[static_cast<size_t>(k)] += a * binv(k, i);

            // ratio test; basic k moves by -enter_dir * w_k per unit step.
            // two passes: find the tightest step, then among near-ties take
            // the largest pivot element so the product-form inverse stays sane
            double limit = up_[static_cast<size_t>(enter)] - lo_[static_cast<size_t>(enter)];  // own span
            int leave = -1;       // basis position
            int leave_to = 0;     // -1 hits lower, +1 hits upper
            for (int k = 0; k < m_; ++k) {
                const double rate = -enter_dir * w[static_cast<size_t>(k)];
                if (std::fabs(rate) < kPivTol) continue;
                const int bj = basis_[static_cast<size_t>(k)];
                const double xv = x_[static_cast<size_t>(bj)];
                double room;
                if (rate > 0) room = up_[static_cast<size_t>(bj)] - xv;
                else          room = xv - lo_[static_cast<size_t>(bj)];
                if (!std::isfinite(room)) continue;
                const double step = std::max(room, 0.0) / std::fabs(rate);
                if (step < limit) limit = step;
            }
            const double slack_tol = 1e-9 * (1.0 + std::fabs(limit));
            double best_piv = bland ? -1.0 : 0.0;
            for (int k = 0; k < m_; ++k) {
                const double rate = -enter_dir * w[static_cast<size_t>(k)];
                if (std::fabs(rate) < kPivTol) continue;
                const int bj = basis_[static_cast<size_t>(k)];
                const double xv = x_[static_cast<size_t>(bj)];
                double room, to;
                if (rate > 0) { room = up_[static_cast<size_t>(bj)] - xv; to = +1; }
                else          { room = xv - lo_[static_cast<size_t>(bj)]; to = -1; }
                if (!std::isfinite(room)) continue;
                const double step = std::max(room, 0.0) / std::fabs(rate);
                if (step > limit + slack_tol) continue;
                const bool better =
                    bland ? (leave < 0 || bj < basis_[static_cast<size_t>(leave)])
                          : std::fabs(rate) > best_piv;
                if (better) {
                    best_piv = std::fabs(rate);
                    leave = k;
                    leave_to = static_cast<int>(to);
                }
            }
            if (!std::isfinite(limit)) return phase1 ? SolveStatus::Infeasible : SolveStatus::Unbounded;

            degen_streak = limit < 1e-11 ? degen_streak + 1 : 0;

            // apply step
            x_[static_cast<size_t>(enter)] += enter_dir * limit;
            for (int k = 0; k < m_; ++k) {
                const double rate = -enter_dir * w[static_cast<size_t>(k)];
                if (rate != 0.0)
                    x_[static_cast<size_t>(basis_[static_cast<size_t>(k)])] += rate * limit;
            }

            if (leave < 0) {
                // bound flip, basis unchanged
                stat_[static_cast<size_t>(enter)] =
                    enter_dir > 0 ? VStat::AtUpper : VStat::AtLower;
                x_[static_cast<size_t>(enter)] = enter_dir > 0 ? up_[static_cast<size_t>(enter)]
                                                               : lo_[static_cast<size_t>(enter)];
                continue;
            }

            const int out = basis_[static_cast<size_t>(leave)];
            stat_[static_cast<size_t>(out)] = leave_to > 0 ? VStat::AtUpper : VStat::AtLower;
            x_[static_cast<size_t>(out)] = leave_to > 0 ? up_[static_cast<size_t>(out)]
                                                        : lo_[static_cast<size_t>(out)];
            basis_[static_cast<size_t>(leave)] = enter;
            stat_[static_cast<size_t>(enter)] = VStat::Basic;

            // Binv update: eliminate w in all rows but `leave`
            const double piv = w[static_cast<size_t>(leave)];
            for (int k = 0; k < m_; ++k) binv(leave, k) /= piv;
            for (int i = 0; i < m_; ++i) {
                if (i == leave) continue;
                const double f = w[static_cast<size_t>(i)];
                if (f == 0.0) continue;
                for (int k = 0; k < m_; ++k) binv(i, k) -= f * binv(leave, k);
            }

            if (++since_refactor >= refactor_interval) {
                since_refactor = 0;
                if (!refactorize()) return SolveStatus::IterLimit;
            }
        }
    }
};

/// LP relaxation solve (integrality ignored).
inline MilpSolution solve_lp(const MilpModel& model, const SolveOptions& opts = {}) {
    model.validate();
    SimplexSolver s(model, opts);
    return s.solve();
}

}  // namespace gridmesh

#endif
