#ifndef GRIDMESH_MILP_SOLVER_HPP
#define GRIDMESH_MILP_SOLVER_HPP

#include <chrono>
#include <cmath>
#include <memory>
#include <queue>
#include <vector>

#include "gridmesh/milp.hpp"
#include "gridmesh/simplex.hpp"

namespace gridmesh {

/// Branch-and-bound MILP solve: best-bound node selection, most-fractional
/// branching with lowest-index tie break. Deterministic for a fixed model.
inline MilpSolution solve_milp(const MilpModel& model, const SolveOptions& opts = {}) {
    model.validate();

    const size_t n = model.num_vars();
    std::vector<double> root_lb(n), root_ub(n);
    std::vector<int> int_vars;
    for (size_t j = 0; j < n; ++j) {
        root_lb[j] = model.variables[j].lower;
        root_ub[j] = model.variables[j].upper;
        if (model.variables[j].kind != VarKind::Continuous) int_vars.push_back(static_cast<int>(j));
    }

    MilpSolution result;
    result.status = SolveStatus::Infeasible;
    result.best_bound = -kInf;

    struct Node {
        double bound;
        std::int64_t seq;
        std::vector<std::pair<int, std::pair<double, double>>> tighten;  // var -> (lb,ub)
    };
    struct NodeCmp {
        bool operator()(const Node& a, const Node& b) const {
            if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
            // among equal bounds dive into the newest node; flat landscapes
            // then behave depth-first and reach an incumbent quickly
            return a.seq < b.seq;
        }
    };
    std::priority_queue<Node, std::vector<Node>, NodeCmp> open;
    std::int64_t seq = 0;
    open.push({-kInf, seq++, {}});

    // `cut` is the pruning level: the caller's cutoff until a strictly
    // better integral point shows up
    double cut = opts.cutoff;
    double incumbent = kInf;
    std::vector<double> incumbent_x;
    bool have_incumbent = false;
    bool hit_limit = false;

    {
        // diving heuristic: each pass pins every near-integral integer at its
        // rounded value, then rounds the most fractional one to the nearest
        // integer and re-solves; an infeasible fix is retried once flipped.
        // Lands on a feasible integral point for most models and seeds the
        // incumbent so best-bound search can prune from the start.
        std::vector<double> dl = root_lb, du = root_ub;
        int last_pick = -1;
        bool flipped = false;
        for (size_t pass = 0; pass <= int_vars.size(); ++pass) {
            SimplexSolver lps(model, opts);
            MilpSolution rel = lps.solve(dl, du);
            result.simplex_iters += rel.simplex_iters;
            if (rel.status != SolveStatus::Optimal) {
                if (last_pick < 0 || flipped) break;
                // flip the latest fix to the other neighbouring integer
                const size_t p = static_cast<size_t>(last_pick);
                const double other = dl[p] > root_lb[p] + 0.5 ? dl[p] - 1.0 : dl[p] + 1.0;
                if (other < root_lb[p] - 1e-9 || other > root_ub[p] + 1e-9) break;
                dl[p] = du[p] = other;
                flipped = true;
                continue;
            }
            flipped = false;
            int pick = -1;
            double pick_dist = opts.int_tol;
            for (int j : int_vars) {
                const size_t sj = static_cast<size_t>(j);
                const double v = rel.values[sj];
                const double r = std::round(v);
                const double dist = std::fabs(v - r);
                if (dist <= opts.int_tol) {
                    if (dl[sj] < du[sj] && r >= dl[sj] && r <= du[sj]) dl[sj] = du[sj] = r;
                    continue;
                }
                if (dist > pick_dist) {
                    pick_dist = dist;
                    pick = j;
                }
            }
            if (pick < 0) {
                if (rel.objective < cut - 1e-12) {
                    incumbent = rel.objective;
                    incumbent_x = rel.values;
                    have_incumbent = true;
                    cut = incumbent;
                }
                break;
            }
            const size_t sp = static_cast<size_t>(pick);
            double r = std::round(rel.values[sp]);
            r = std::min(std::max(r, dl[sp]), du[sp]);
            dl[sp] = du[sp] = r;
            last_pick = pick;
        }
    }

    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    std::vector<double> lb(n), ub(n);
    while (!open.empty()) {
        if (result.node_count >= opts.node_limit ||
            (opts.time_limit_sec > 0.0 && elapsed() > opts.time_limit_sec)) {
            hit_limit = true;
            break;
        }
        Node node = open.top();
        open.pop();
        // best-bound order: once the weakest bound is within gap_tol of the
        // incumbent the whole tree is closed
        if (std::isfinite(cut) && std::isfinite(node.bound) &&
            cut - node.bound <= opts.gap_tol * std::max(1.0, std::fabs(cut))) {
            open.push(std::move(node));
            break;
        }
        if (std::isfinite(cut) && node.bound >= cut - 1e-12) continue;

        lb = root_lb;
        ub = root_ub;
        for (const auto& [j, b] : node.tighten) {
            lb[static_cast<size_t>(j)] = std::max(lb[static_cast<size_t>(j)], b.first);
            ub[static_cast<size_t>(j)] = std::min(ub[static_cast<size_t>(j)], b.second);
        }
        bool crossed = false;
        for (const auto& [j, b] : node.tighten)
            if (lb[static_cast<size_t>(j)] > ub[static_cast<size_t>(j)]) crossed = true;
        result.node_count++;
        if (crossed) continue;

        SimplexSolver lps(model, opts);
        MilpSolution rel = lps.solve(lb, ub);
        result.simplex_iters += rel.simplex_iters;
        if (rel.status == SolveStatus::IterLimit) { hit_limit = true; break; }
        if (rel.status == SolveStatus::Unbounded) {
            // an unbounded relaxation at the root means the MILP is unbounded
            if (node.tighten.empty() && !have_incumbent) {
                result.status = SolveStatus::Unbounded;
                return result;
            }
            continue;
        }
        if (rel.status == SolveStatus::Infeasible) continue;
        // a child relaxation can never be better than its parent; clamping
        // keeps one slightly drifted LP from poisoning the global bound
        if (std::isfinite(node.bound)) rel.objective = std::max(rel.objective, node.bound);
        if (std::isfinite(cut) && rel.objective >= cut - 1e-12) continue;

        // pick most-fractional integer variable, ties to lowest index
        int branch_var = -1;
        double best_frac_dist = opts.int_tol;
        for (int j : int_vars) {
            const double v = rel.values[static_cast<size_t>(j)];
            const double frac = v - std::floor(v);
            const double dist = std::min(frac, 1.0 - frac);
            if (dist > best_frac_dist + 1e-15) {
                best_frac_dist = dist;
                branch_var = j;
            }
        }
        if (branch_var >= 0) {
            // prefer SOS1 range branching: zeroing half of a one-hot level
            // range moves the relaxation much further than one binary flip
            int best_set = -1;
            double best_spread = 0.0;
            for (size_t si = 0; si < model.sos1.size(); ++si) {
                int active = 0;
                double maxv = 0.0;
                for (int j : model.sos1[si]) {
                    const double v = rel.values[static_cast<size_t>(j)];
                    if (v > opts.int_tol) {
                        ++active;
                        maxv = std::max(maxv, v);
                    }
                }
                if (active < 2) continue;
                const double spread = 1.0 - maxv;
                if (spread > best_spread + 1e-15) {
                    best_spread = spread;
                    best_set = static_cast<int>(si);
                }
            }
            if (best_set >= 0) {
                const auto& set = model.sos1[static_cast<size_t>(best_set)];
                double num = 0.0, den = 0.0;
                for (size_t k = 0; k < set.size(); ++k) {
                    const double v =
                        std::max(rel.values[static_cast<size_t>(set[k])], 0.0);
                    num += static_cast<double>(k) * v;
                    den += v;
                }
                size_t split = den > 0.0 ? static_cast<size_t>(num / den)
                                         : set.size() / 2;
                if (split >= set.size() - 1) split = set.size() - 2;
                Node left{rel.objective, seq++, node.tighten};
                for (size_t k = split + 1; k < set.size(); ++k)
                    left.tighten.push_back({set[k], {-kInf, 0.0}});
                Node right{rel.objective, seq++, node.tighten};
                for (size_t k = 0; k <= split; ++k)
                    right.tighten.push_back({set[k], {-kInf, 0.0}});
                open.push(std::move(left));
                open.push(std::move(right));
                continue;
            }
        }
        if (branch_var < 0) {
            // integral: new incumbent
            if (rel.objective < cut - 1e-12) {
                incumbent = rel.objective;
                incumbent_x = rel.values;
                have_incumbent = true;
                cut = incumbent;
            }
            continue;
        }
        const double v = rel.values[static_cast<size_t>(branch_var)];
        Node down{rel.objective, seq++, node.tighten};
        down.tighten.push_back({branch_var, {-kInf, std::floor(v)}});
        Node up_node{rel.objective, seq++, node.tighten};
        up_node.tighten.push_back({branch_var, {std::ceil(v), kInf}});
        open.push(std::move(down));
        open.push(std::move(up_node));
    }

    double bound = have_incumbent ? incumbent : kInf;
    if (!open.empty()) {
        bound = open.top().bound;
        if (!std::isfinite(bound) && have_incumbent) bound = -kInf;
    }
    if (have_incumbent) {
        result.status = (!hit_limit && open.empty()) ||
                                (std::isfinite(bound) &&
                                 incumbent - bound <= opts.gap_tol * std::max(1.0, std::fabs(incumbent)))
                            ? SolveStatus::Optimal
                            : SolveStatus::IterLimit;
        result.objective = incumbent;
        result.values = std::move(incumbent_x);
        result.best_bound = std::min(bound, incumbent);
        // snap near-integral values exactly
        for (int j : int_vars) {
            double& x = result.values[static_cast<size_t>(j)];
            x = std::round(x);
        }
    } else {
        // with a finite cutoff, an exhausted tree proves nothing beats the
        // caller's solution; Infeasible is that proof
        result.status = hit_limit ? SolveStatus::IterLimit : SolveStatus::Infeasible;
        if (!open.empty() && std::isfinite(open.top().bound))
            result.best_bound = open.top().bound;
    }
    return result;
}

/// Pluggable solver seam: callers go through this interface so an external
/// MILP engine can replace the kernel without touching call sites.
class MilpBackend {
public:
    virtual ~MilpBackend() = default;
    virtual MilpSolution solve(const MilpModel& model, const SolveOptions& opts) = 0;
};

class KernelBackend final : public MilpBackend {
public:
    MilpSolution solve(const MilpModel& model, const SolveOptions& opts) override {
        return model.has_integers() ? solve_milp(model, opts) : solve_lp(model, opts);
    }
};

inline std::shared_ptr<MilpBackend> default_backend() {
    return std::make_shared<KernelBackend>();
}

}  // namespace gridmesh

#endif
