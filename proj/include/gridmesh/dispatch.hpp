#ifndef GRIDMESH_DISPATCH_HPP
#define GRIDMESH_DISPATCH_HPP

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gridmesh/milp_solver.hpp"
#include "gridmesh/model_builder.hpp"
#include "gridmesh/schedule.hpp"

namespace gridmesh {

struct SolveReport {
    SolveStatus status = SolveStatus::Optimal;
    double objective = 0.0;
    double bound = 0.0;  // accumulated lower bound; valid even when a period hit a limit
    Schedule schedule;
};

namespace dispatch_detail {

inline void append(Schedule& into, Schedule&& part) {
    if (into.mg.empty()) {
        into = std::move(part);
        return;
    }
    for (int t : part.periods) into.periods.push_back(t);
    for (size_t mi = 0; mi < into.mg.size(); ++mi)
        for (auto& p : part.mg[mi]) into.mg[mi].push_back(std::move(p));
}

inline void merge_status(SolveStatus& into, SolveStatus s) {
    if (s != SolveStatus::Optimal && into == SolveStatus::Optimal) into = s;
}

/// One link's exchange after netting, seen from mg_a's side.
struct NettedLink {
    std::array<double, 4> side_a{};  // Pbuy, Psell, Qbuy, Qsell
    bool u_a = false, u_b = false;
};

// Nets simultaneous buy/sell into a single direction. The mode binary forbids
// selling Q while buying P, so when the two components disagree the smaller
// one is dropped on both sides.
inline NettedLink net_link(double pb_a, double ps_a, double qb_a, double qs_a) {
    const double tol = 1e-9;
    double np = pb_a - ps_a;
    double nq = qb_a - qs_a;
    if (std::fabs(np) < tol) np = 0.0;
    if (std::fabs(nq) < tol) nq = 0.0;
    if (np != 0.0 && nq != 0.0 && (np > 0.0) != (nq > 0.0)) {
        if (std::fabs(nq) > std::fabs(np))
            np = 0.0;
        else
            nq = 0.0;
    }
    NettedLink out;
    out.side_a = {std::max(np, 0.0), std::max(-np, 0.0), std::max(nq, 0.0),
                  std::max(-nq, 0.0)};
    out.u_a = np > 0.0 || (np == 0.0 && nq > 0.0);
    out.u_b = np < 0.0 || (np == 0.0 && nq < 0.0);
    return out;
}

inline void fix_link(MilpModel& m, const MgPeriodVars& v, int l,
                     const std::array<double, 4>& x, bool u) {
    m.fix_var(v.p_buy.at(l), x[0]);
    m.fix_var(v.p_sell.at(l), x[1]);
    m.fix_var(v.q_buy.at(l), x[2]);
    m.fix_var(v.q_sell.at(l), x[3]);
    m.fix_var(v.u_buy.at(l), u ? 1.0 : 0.0);
}

inline std::array<double, 4> mirror(const std::array<double, 4>& a) {
    return {a[1], a[0], a[3], a[2]};
}

}  // namespace dispatch_detail

// The day-ahead formulation carries no constraint linking two periods, so
// every full-horizon solve decomposes into one MILP per period. All solvers
// below use that split; it changes nothing but the model sizes.

/// One period of the joint problem. The root LP prices the whole network;
/// its interchange, netted per link, splits the MILP into per-MG blocks that
/// close fast. The joint tree runs only when that split leaves a gap, with
/// the decomposed cost as a cutoff.
inline SolveReport solve_centralized_period(const NetworkCase& c, int t,
                                            MilpBackend& backend,
                                            const SolveOptions& opts = {}) {
    using namespace dispatch_detail;
    BuildResult jb = build_centralized_period(c, t);
    SolveReport rep;
    if (!c.interfaces.empty()) {
        MilpSolution root = solve_lp(jb.model, opts);
        if (root.status == SolveStatus::Optimal) {
            auto net_from = [&](const std::vector<double>& vals) {
                std::vector<NettedLink> out(c.interfaces.size());
                for (size_t li = 0; li < c.interfaces.size(); ++li) {
                    const int a = c.mg_index(c.interfaces[li].mg_a);
                    const auto& va = jb.vars.per_mg[static_cast<size_t>(a)][0];
                    const int l = static_cast<int>(li);
                    auto rv = [&](int idx) { return vals[static_cast<size_t>(idx)]; };
                    out[li] = net_link(rv(va.p_buy.at(l)), rv(va.p_sell.at(l)),
                                       rv(va.q_buy.at(l)), rv(va.q_sell.at(l)));
                }
                return out;
            };
            const Multipliers lam = Multipliers::zeros(c);
            // solves every MG block with the given interchange pinned; the
            // blocks close fast and their sum is a feasible joint cost
            auto eval_nets = [&](const std::vector<NettedLink>& nets, double& upper,
                                 Schedule& merged) {
                upper = 0.0;
                merged.periods = {t};
                merged.mg.assign(c.microgrids.size(), {});
                for (size_t mi = 0; mi < c.microgrids.size(); ++mi) {
                    BuildResult sb =
                        build_subproblem_period(c, c.microgrids[mi].id, lam, t);
                    const auto& vs = sb.vars.per_mg[mi][0];
                    for (size_t li = 0; li < c.interfaces.size(); ++li) {
                        const InterfaceLink& lk = c.interfaces[li];
                        const int l = static_cast<int>(li);
                        if (lk.mg_a == c.microgrids[mi].id)
                            fix_link(sb.model, vs, l, nets[li].side_a, nets[li].u_a);
                        else if (lk.mg_b == c.microgrids[mi].id)
                            fix_link(sb.model, vs, l, mirror(nets[li].side_a),
                                     nets[li].u_b);
                    }
                    MilpSolution sol = backend.solve(sb.model, opts);
                    // a limited solve with an incumbent still gives a feasible
                    // block; only a block with no integral point sinks the split
                    if (sol.status != SolveStatus::Optimal &&
                        !(sol.status == SolveStatus::IterLimit && !sol.values.empty()))
                        return false;
                    upper += sol.objective;
                    Schedule part = extract_schedule(c, sb.vars, sol.values);
                    merged.mg[mi] = std::move(part.mg[mi]);
                }
                return true;
            };
            auto close_enough = [&](double upper) {
                return upper - root.objective <=
                       opts.gap_tol * std::max(1.0, std::fabs(upper));
            };

            std::vector<NettedLink> nets = net_from(root.values);
            double upper = 0.0;
            Schedule merged;
            bool ok = eval_nets(nets, upper, merged);
            if (!ok || !close_enough(upper)) {
                // second candidate: re-price with the trade directions pinned
                // so the exchange quantities come out mutually consistent
                MilpModel jm2 = jb.model;
                for (size_t li = 0; li < c.interfaces.size(); ++li) {
                    const InterfaceLink& lk = c.interfaces[li];
                    const int a = c.mg_index(lk.mg_a), b = c.mg_index(lk.mg_b);
                    const int l = static_cast<int>(li);
                    jm2.fix_var(jb.vars.per_mg[static_cast<size_t>(a)][0].u_buy.at(l),
                                nets[li].u_a ? 1.0 : 0.0);
                    jm2.fix_var(jb.vars.per_mg[static_cast<size_t>(b)][0].u_buy.at(l),
                                nets[li].u_b ? 1.0 : 0.0);
                }
                MilpSolution second = solve_lp(jm2, opts);
                if (second.status == SolveStatus::Optimal) {
                    double upper2 = 0.0;
                    Schedule merged2;
                    if (eval_nets(net_from(second.values), upper2, merged2) &&
                        (!ok || upper2 < upper)) {
                        ok = true;
                        upper = upper2;
                        merged = std::move(merged2);
                    }
                }
            }
            if (ok) {
                if (close_enough(upper)) {
                    rep.status = SolveStatus::Optimal;
                    rep.objective = upper;
                    rep.bound = root.objective;
                    rep.schedule = std::move(merged);
                    return rep;
                }
                SolveOptions pruned = opts;
                pruned.cutoff = upper;
                MilpSolution sol = backend.solve(jb.model, pruned);
                if (!sol.values.empty() && sol.objective < upper) {
                    rep.status = sol.status;
                    rep.objective = sol.objective;
                    rep.bound = std::isfinite(sol.best_bound)
                                    ? std::max(sol.best_bound, root.objective)
                                    : root.objective;
                    rep.schedule = extract_schedule(c, jb.vars, sol.values);
                    return rep;
                }
                // Infeasible below the cutoff proves the decomposed
                // solution optimal; a hit limit leaves it approximate
                rep.status = sol.status == SolveStatus::Infeasible
                                 ? SolveStatus::Optimal
                                 : SolveStatus::IterLimit;
                rep.objective = upper;
                rep.bound = rep.status == SolveStatus::Optimal
                                ? upper
                                : (std::isfinite(sol.best_bound)
                                       ? std::max(sol.best_bound, root.objective)
                                       : root.objective);
                rep.schedule = std::move(merged);
                return rep;
            }
        }
    }
    MilpSolution sol = backend.solve(jb.model, opts);
    rep.status = sol.status;
    if (!sol.values.empty()) {
        rep.objective = sol.objective;
        rep.bound = std::isfinite(sol.best_bound) ? sol.best_bound : sol.objective;
        rep.schedule = extract_schedule(c, jb.vars, sol.values);
    }
    return rep;
}

inline SolveReport solve_centralized(const NetworkCase& c, MilpBackend& backend,
                                     const SolveOptions& opts = {}) {
    SolveReport rep;
    for (int t = 0; t < c.horizon; ++t) {
        SolveReport part = solve_centralized_period(c, t, backend, opts);
        dispatch_detail::merge_status(rep.status, part.status);
        if (part.schedule.mg.empty())
            throw ModelError("no feasible point found for period " + std::to_string(t) +
                             "; raise the node or time limit");
        rep.objective += part.objective;
        rep.bound += part.bound;
        dispatch_detail::append(rep.schedule, std::move(part.schedule));
    }
    return rep;
}

inline SolveReport solve_centralized(const NetworkCase& c, const SolveOptions& opts = {}) {
    KernelBackend backend;
    return solve_centralized(c, backend, opts);
}

/// Exact minimum of one microgrid's Lagrangian subproblem over the horizon.
inline SolveReport solve_subproblem(const NetworkCase& c, const std::string& mg_id,
                                    const Multipliers& lam, MilpBackend& backend,
                                    const SolveOptions& opts = {}) {
    SolveReport rep;
    for (int t = 0; t < c.horizon; ++t) {
        BuildResult b = build_subproblem_period(c, mg_id, lam, t);
        MilpSolution sol = backend.solve(b.model, opts);
        dispatch_detail::merge_status(rep.status, sol.status);
        if (sol.values.empty()) {
            // no incumbent for this period: keep the bound honest rather than
            // silently counting the period as free
            rep.bound += std::isfinite(sol.best_bound)
                             ? sol.best_bound
                             : -std::numeric_limits<double>::infinity();
            continue;
        }
        rep.objective += sol.objective;
        rep.bound += std::isfinite(sol.best_bound) ? sol.best_bound : sol.objective;
        dispatch_detail::append(rep.schedule, extract_schedule(c, b.vars, sol.values));
    }
    return rep;
}

inline SolveReport solve_subproblem(const NetworkCase& c, const std::string& mg_id,
                                    const Multipliers& lam, const SolveOptions& opts = {}) {
    KernelBackend backend;
    return solve_subproblem(c, mg_id, lam, backend, opts);
}

}  // namespace gridmesh

#endif
