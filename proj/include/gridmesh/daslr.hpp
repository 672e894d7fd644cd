#ifndef GRIDMESH_DASLR_HPP
#define GRIDMESH_DASLR_HPP

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "gridmesh/dispatch.hpp"

namespace gridmesh {

class NoFeasibleYet : public ModelError {
public:
    explicit NoFeasibleYet(const std::string& what) : ModelError(what) {}
};

/// Stepsize contraction schedule gamma^r = 1 - 1/(M * r^(1 - 1/r^p)),
/// clamped away from 0 and 1.
struct GammaParams {
    double M = 20.0;
    double p = 0.04;
    double lo = 0.01;
    double hi = 0.999;
};

inline double gamma_step(int r, const GammaParams& gp) {
    const double rr = static_cast<double>(r < 1 ? 1 : r);
    const double expo = 1.0 - 1.0 / std::pow(rr, gp.p);
    const double g = 1.0 - 1.0 / (gp.M * std::pow(rr, expo));
    return std::min(gp.hi, std::max(gp.lo, g));
}

struct DaslrConfig {
    GammaParams gamma;
    double e0_coeff = 0.1;   // e0 = e0_coeff * cost_scale / ||g0||
    double gap_tol = 0.002;
    int max_iters = 200;
    int restore_every = 0;   // feasibility-search trigger; 0 -> one per MG count
    SolveOptions solver;
};

/// Exchange quantities for one MG over the horizon: link -> per-period
/// {Pbuy, Psell, Qbuy, Qsell}. This (plus a cost scalar) is the only payload
/// an MG ever sends the coordinator.
struct ExchangeProfile {
    std::map<int, std::vector<std::array<double, 4>>> links;
};

struct MgMessage {
    int mg = -1;
    SolveStatus status = SolveStatus::Optimal;
    double cost = 0.0;  // price cost of the proposal, lambda terms excluded
    ExchangeProfile exch;
};

struct CoordinatorState {
    Multipliers lambda;
    double e = 0.0;
    double last_norm = 0.0;   // ||g^{r-1}|| at the last nonzero update
    bool step_init = false;
    int r = 0;                // processed arrivals
    std::vector<ExchangeProfile> latest;  // per MG index
    std::vector<double> latest_cost;
    std::vector<int> stamp;   // arrival iteration per MG, -1 before first
    bool have_feasible = false;
    double best_feasible = kInf;
    Schedule best_schedule;
    bool have_dual = false;
    double dual_bound = -kInf;
};

inline CoordinatorState init_coordinator(const NetworkCase& c) {
    CoordinatorState s;
    s.lambda = Multipliers::zeros(c);
    s.latest.resize(c.microgrids.size());
    s.latest_cost.assign(c.microgrids.size(), 0.0);
    s.stamp.assign(c.microgrids.size(), -1);
    return s;
}

namespace daslr_detail {

/// Lambda-weighted exchange terms of one MG's proposal, matching the signs
/// the subproblem objective carries.
inline double lambda_dot(const NetworkCase& c, int mi, const ExchangeProfile& ex,
                         const Multipliers& lam) {
    const Microgrid& mg = c.microgrids[static_cast<size_t>(mi)];
    double acc = 0.0;
    for (const auto& [l, series] : ex.links) {
        const InterfaceLink& lk = c.interfaces[static_cast<size_t>(l)];
        const bool side_a = lk.mg_a == mg.id;
        for (size_t t = 0; t < series.size(); ++t) {
            const auto& lp = lam.p[t][static_cast<size_t>(l)];
            const auto& lq = lam.q[t][static_cast<size_t>(l)];
            const double buy_p = side_a ? lp[0] : lp[1];
            const double sell_p = side_a ? lp[1] : lp[0];
            const double buy_q = side_a ? lq[0] : lq[1];
            const double sell_q = side_a ? lq[1] : lq[0];
            acc += buy_p * series[t][0] - sell_p * series[t][1] +
                   buy_q * series[t][2] - sell_q * series[t][3];
        }
    }
    return acc;
}

inline std::array<double, 4> side_values(const CoordinatorState& s, int mi, int l, int t) {
    if (mi < 0 || s.stamp[static_cast<size_t>(mi)] < 0) return {0.0, 0.0, 0.0, 0.0};
    const auto& links = s.latest[static_cast<size_t>(mi)].links;
    auto it = links.find(l);
    if (it == links.end() || static_cast<size_t>(t) >= it->second.size())
        return {0.0, 0.0, 0.0, 0.0};
    return it->second[static_cast<size_t>(t)];
}

}  // namespace daslr_detail

/// Violation of the relaxed coupling rows assembled from the latest stamped
/// values; MGs that have not reported yet count as zero exchange.
inline Multipliers violation_vector(const CoordinatorState& s, const NetworkCase& c) {
    Multipliers g = Multipliers::zeros(c);
    for (size_t li = 0; li < c.interfaces.size(); ++li) {
        const int a = c.mg_index(c.interfaces[li].mg_a);
        const int b = c.mg_index(c.interfaces[li].mg_b);
        const int l = static_cast<int>(li);
        for (int t = 0; t < c.horizon; ++t) {
            const auto xa = daslr_detail::side_values(s, a, l, t);
            const auto xb = daslr_detail::side_values(s, b, l, t);
            g.p[static_cast<size_t>(t)][li][0] = xa[0] - xb[1];
            g.p[static_cast<size_t>(t)][li][1] = xb[0] - xa[1];
            g.q[static_cast<size_t>(t)][li][0] = xa[2] - xb[3];
            g.q[static_cast<size_t>(t)][li][1] = xb[2] - xa[3];
        }
    }
    return g;
}

inline double violation_norm(const Multipliers& g) {
    double acc = 0.0;
    for (size_t t = 0; t < g.p.size(); ++t)
        for (size_t l = 0; l < g.p[t].size(); ++l)
            for (int d = 0; d < 2; ++d)
                acc += g.p[t][l][d] * g.p[t][l][d] + g.q[t][l][d] * g.q[t][l][d];
    return std::sqrt(acc);
}

/// Worker side: exact subproblem minimum under a lambda snapshot, reduced to
/// the exchange-only message the coordinator is allowed to see.
inline MgMessage solve_mg(const NetworkCase& c, int mi, const Multipliers& lam,
                          MilpBackend& backend, const SolveOptions& opts = {}) {
    SolveReport rep = solve_subproblem(c, c.microgrids[static_cast<size_t>(mi)].id,
                                       lam, backend, opts);
    MgMessage msg;
    msg.mg = mi;
    msg.status = rep.status;
    msg.cost = schedule_cost(c, rep.schedule, mi);
    for (size_t k = 0; k < rep.schedule.periods.size(); ++k)
        for (const auto& [l, x] : rep.schedule.mg[static_cast<size_t>(mi)][k].exch) {
            auto& series = msg.exch.links[l];
            if (series.size() <= k) series.resize(k + 1, {0.0, 0.0, 0.0, 0.0});
            series[k] = x;
        }
    return msg;
}

struct ArrivalOutcome {
    bool zero_violation = false;
    bool resolved = false;  // surrogate condition forced one re-solve
    double norm = 0.0;
};

/// Algorithm step on one arrival: surrogate-condition check (with at most one
/// re-solve at the current lambda), ledger patch, then
/// lambda <- lambda + e^r * g with the surrogate stepsize.
inline ArrivalOutcome update_multipliers(CoordinatorState& s, const NetworkCase& c,
                                         MgMessage msg, MilpBackend& backend,
                                         const DaslrConfig& cfg = {}) {
    if (msg.mg < 0 || static_cast<size_t>(msg.mg) >= c.microgrids.size())
        throw ModelBuildError("arrival from unknown microgrid index " +
                              std::to_string(msg.mg));
    s.r += 1;
    ArrivalOutcome out;
    const size_t m = static_cast<size_t>(msg.mg);
    if (s.stamp[m] >= 0) {
        // surrogate optimality: the new proposal must beat the old one at the
        // current multipliers, otherwise re-solve once with those multipliers
        const double l_new = msg.cost + daslr_detail::lambda_dot(c, msg.mg, msg.exch, s.lambda);
        const double l_old =
            s.latest_cost[m] + daslr_detail::lambda_dot(c, msg.mg, s.latest[m], s.lambda);
        if (l_new >= l_old) {
            msg = solve_mg(c, msg.mg, s.lambda, backend, cfg.solver);
            out.resolved = true;
        }
    }
    s.latest[m] = std::move(msg.exch);
    s.latest_cost[m] = msg.cost;
    s.stamp[m] = s.r;

    const Multipliers g = violation_vector(s, c);
    const double norm = violation_norm(g);
    out.norm = norm;
    if (norm == 0.0) {
        out.zero_violation = true;
        return out;
    }
    if (!s.step_init) {
        s.e = cfg.e0_coeff * build_detail::cost_scale(c) / norm;
        s.step_init = true;
    } else {
        s.e = gamma_step(s.r, cfg.gamma) * s.e * s.last_norm / norm;
    }
    for (size_t t = 0; t < s.lambda.p.size(); ++t)
        for (size_t l = 0; l < s.lambda.p[t].size(); ++l)
            for (int d = 0; d < 2; ++d) {
                s.lambda.p[t][l][d] += s.e * g.p[t][l][d];
                s.lambda.q[t][l][d] += s.e * g.q[t][l][d];
            }
    s.last_norm = norm;
    return out;
}

/// Heuristic feasible-cost search: every link is pinned to the average of the
/// two sides' latest values (netted so the mode binaries stay consistent) and
/// each MG re-solves. Returns the restored cost, or nothing if some block
/// came back infeasible.
inline std::optional<double> restore_feasibility(CoordinatorState& s, const NetworkCase& c,
                                                 MilpBackend& backend,
                                                 const DaslrConfig& cfg = {}) {
    using dispatch_detail::fix_link;
    using dispatch_detail::mirror;
    using dispatch_detail::net_link;
    std::vector<std::vector<dispatch_detail::NettedLink>> nets(
        static_cast<size_t>(c.horizon),
        std::vector<dispatch_detail::NettedLink>(c.interfaces.size()));
    for (size_t li = 0; li < c.interfaces.size(); ++li) {
        const int a = c.mg_index(c.interfaces[li].mg_a);
        const int b = c.mg_index(c.interfaces[li].mg_b);
        const int l = static_cast<int>(li);
        for (int t = 0; t < c.horizon; ++t) {
            const auto xa = daslr_detail::side_values(s, a, l, t);
            const auto xb = daslr_detail::side_values(s, b, l, t);
            nets[static_cast<size_t>(t)][li] =
                net_link(0.5 * (xa[0] + xb[1]), 0.5 * (xa[1] + xb[0]),
                         0.5 * (xa[2] + xb[3]), 0.5 * (xa[3] + xb[2]));
        }
    }
    const Multipliers zero = Multipliers::zeros(c);
    double cost = 0.0;
    Schedule merged;
    merged.mg.resize(c.microgrids.size());
    for (int t = 0; t < c.horizon; ++t) merged.periods.push_back(t);
    for (size_t mi = 0; mi < c.microgrids.size(); ++mi) {
        for (int t = 0; t < c.horizon; ++t) {
            BuildResult sb = build_subproblem_period(c, c.microgrids[mi].id, zero, t);
            const auto& vs = sb.vars.per_mg[mi][0];
            for (size_t li = 0; li < c.interfaces.size(); ++li) {
                const InterfaceLink& lk = c.interfaces[li];
                const int l = static_cast<int>(li);
                const auto& n = nets[static_cast<size_t>(t)][li];
                if (lk.mg_a == c.microgrids[mi].id)
                    fix_link(sb.model, vs, l, n.side_a, n.u_a);
                else if (lk.mg_b == c.microgrids[mi].id)
                    fix_link(sb.model, vs, l, mirror(n.side_a), n.u_b);
            }
            MilpSolution sol = backend.solve(sb.model, cfg.solver);
            // a node/time-limited solve that carries an incumbent is still a
            // feasible point; only a solve with no integral solution aborts
            const bool usable =
                sol.status == SolveStatus::Optimal ||
                (sol.status == SolveStatus::IterLimit && !sol.values.empty());
            if (!usable) return std::nullopt;
            cost += sol.objective;
            Schedule part = extract_schedule(c, sb.vars, sol.values);
            merged.mg[mi].push_back(std::move(part.mg[mi][0]));
        }
    }
    if (!s.have_feasible || cost < s.best_feasible) {
        s.best_feasible = cost;
        s.best_schedule = std::move(merged);
        s.have_feasible = true;
    }
    return cost;
}

/// q(lambda) as the sum of exact subproblem lower bounds; tracks the best
/// bound seen so far.
inline double dual_value(CoordinatorState& s, const NetworkCase& c, MilpBackend& backend,
                         const DaslrConfig& cfg = {}) {
    double q = 0.0;
    for (const auto& mg : c.microgrids)
        q += solve_subproblem(c, mg.id, s.lambda, backend, cfg.solver).bound;
    if (!s.have_dual || q > s.dual_bound) s.dual_bound = q;
    s.have_dual = true;
    return q;
}

inline double gap(const CoordinatorState& s) {
    if (!s.have_feasible || !s.have_dual)
        throw NoFeasibleYet("gap undefined before a feasible cost and a dual bound exist");
    return (s.best_feasible - s.dual_bound) / std::max(std::fabs(s.best_feasible), 1e-12);
}

}  // namespace gridmesh

#endif
