#ifndef GRIDMESH_ADMM_HPP
#define GRIDMESH_ADMM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "gridmesh/daslr.hpp"
#include "gridmesh/dispatch.hpp"

namespace gridmesh {

struct AdmmConfig {
    double rho = 1.0;              // penalty weight, price units per p.u.
    int segments = 8;              // piecewise-linear pieces of the quadratic
    double diverge_ceiling = 1.0;  // primal residual ceiling
    int diverge_window = 5;        // consecutive rounds over the ceiling
    bool relax = false;            // drop integrality (continuous baseline)
    SolveOptions solver;
};

/// Synchronous consensus-ADMM state over the coupling rows. `z` holds the
/// consensus target per (t, link, direction); `mu` the matching dual.
struct AdmmState {
    Multipliers z;
    Multipliers mu;
    int round = 0;
    std::vector<ExchangeProfile> latest;  // this round's values per MG
    std::vector<double> primal_hist, dual_hist;
    int rounds_over = 0;
    bool diverged = false;
    bool have_solution = false;
    double last_cost = 0.0;  // price cost of the latest round
    Schedule last_schedule;
};

inline AdmmState init_admm(const NetworkCase& c) {
    AdmmState s;
    s.z = Multipliers::zeros(c);
    s.mu = Multipliers::zeros(c);
    s.latest.resize(c.microgrids.size());
    return s;
}

namespace admm_detail {

/// Secant epigraph of (x - z)^2 over [lo, hi]: the convex piecewise-linear
/// interpolant through the breakpoints, exact there and never below the
/// parabola in between. z joins the grid so the penalty has a kink at the
/// consensus itself; a tangent cut there would be flat and let the linear
/// price terms drag x a whole grid cell away from agreement.
inline int add_quadratic_penalty(MilpModel& m, int x_var, double z, double lo, double hi,
                                 int segments, const std::string& tag) {
    const double worst = std::max((lo - z) * (lo - z), (hi - z) * (hi - z));
    const int s = m.add_var(tag, 0.0, worst, VarKind::Continuous, 0.0);
    const int k_count = std::max(segments, 1);
    std::vector<double> bp;
    for (int k = 0; k <= k_count; ++k)
        bp.push_back(lo + (hi - lo) * static_cast<double>(k) / k_count);
    const double zc = std::min(std::max(z, lo), hi);
    bp.push_back(zc);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end(),
                         [&](double a, double b) { return b - a < 1e-12 * (hi - lo + 1.0); }),
             bp.end());
    for (size_t k = 0; k + 1 < bp.size(); ++k) {
        const double slope = bp[k] + bp[k + 1] - 2.0 * z;  // chord of d^2
        const double f0 = (bp[k] - z) * (bp[k] - z);
        // s >= f0 + slope*(x - bp[k])
        m.add_row({{s, 1.0}, {x_var, -slope}}, RowSense::GE, f0 - slope * bp[k],
                  tag + ".c" + std::to_string(k));
    }
    return s;
}

inline void relax_integrality(MilpModel& m) {
    for (auto& v : m.variables) v.kind = VarKind::Continuous;
}

inline std::array<double, 4> side_values(const std::vector<ExchangeProfile>& latest,
                                         int mi, int l, int t) {
    const auto& links = latest[static_cast<size_t>(mi)].links;
    auto it = links.find(l);
    if (it == links.end() || static_cast<size_t>(t) >= it->second.size())
        return {0.0, 0.0, 0.0, 0.0};
    return it->second[static_cast<size_t>(t)];
}

}  // namespace admm_detail

struct AdmmRoundReport {
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double cost = 0.0;
    bool diverged = false;
};

/// Consensus and dual step over `s.latest`: z moves to the pair averages and
/// the duals absorb rho times the remaining violation. Residual norms are
/// recorded and checked against the divergence ceiling.
inline AdmmRoundReport consensus_update(AdmmState& s, const NetworkCase& c,
                                        const AdmmConfig& cfg = {}) {
    using namespace admm_detail;
    AdmmRoundReport rep;
    double primal_sq = 0.0, dual_sq = 0.0;
    for (size_t li = 0; li < c.interfaces.size(); ++li) {
        const int a = c.mg_index(c.interfaces[li].mg_a);
        const int b = c.mg_index(c.interfaces[li].mg_b);
        const int l = static_cast<int>(li);
        for (int t = 0; t < c.horizon; ++t) {
            const auto xa = side_values(s.latest, a, l, t);
            const auto xb = side_values(s.latest, b, l, t);
            const size_t st = static_cast<size_t>(t);
            // dir 0 pairs a's buy with b's sell; dir 1 the reverse
            const std::array<std::array<double, 2>, 2> res = {{
                {xa[0] - xb[1], xb[0] - xa[1]},  // p
                {xa[2] - xb[3], xb[2] - xa[3]},  // q
            }};
            const std::array<std::array<double, 2>, 2> avg = {{
                {0.5 * (xa[0] + xb[1]), 0.5 * (xb[0] + xa[1])},
                {0.5 * (xa[2] + xb[3]), 0.5 * (xb[2] + xa[3])},
            }};
            for (size_t d = 0; d < 2; ++d) {
                primal_sq += res[0][d] * res[0][d] + res[1][d] * res[1][d];
                const double dz_p = avg[0][d] - s.z.p[st][li][d];
                const double dz_q = avg[1][d] - s.z.q[st][li][d];
                dual_sq += cfg.rho * cfg.rho * (dz_p * dz_p + dz_q * dz_q);
                s.z.p[st][li][d] = avg[0][d];
                s.z.q[st][li][d] = avg[1][d];
                s.mu.p[st][li][d] += cfg.rho * res[0][d];
                s.mu.q[st][li][d] += cfg.rho * res[1][d];
            }
        }
    }
    rep.primal_residual = std::sqrt(primal_sq);
    rep.dual_residual = std::sqrt(dual_sq);
    s.primal_hist.push_back(rep.primal_residual);
    s.dual_hist.push_back(rep.dual_residual);
    if (rep.primal_residual > cfg.diverge_ceiling) {
        if (++s.rounds_over >= cfg.diverge_window) s.diverged = true;
    } else {
        s.rounds_over = 0;
    }
    rep.diverged = s.diverged;
    return rep;
}

/// One synchronous round: every MG solves against the round-start consensus
/// and duals, then the consensus and dual step runs on the fresh values.
inline AdmmRoundReport admm_iterate(AdmmState& s, const NetworkCase& c,
                                    MilpBackend& backend, const AdmmConfig& cfg = {}) {
    using namespace admm_detail;
    const Multipliers zero = Multipliers::zeros(c);
    const double sc = build_detail::cost_scale(c);
    s.round += 1;

    Schedule merged;
    merged.mg.resize(c.microgrids.size());
    for (int t = 0; t < c.horizon; ++t) merged.periods.push_back(t);
    std::vector<ExchangeProfile> fresh(c.microgrids.size());
    for (size_t mi = 0; mi < c.microgrids.size(); ++mi) {
        for (int t = 0; t < c.horizon; ++t) {
            BuildResult sb = build_subproblem_period(c, c.microgrids[mi].id, zero, t);
            const auto& vs = sb.vars.per_mg[mi][0];
            for (const auto& [l, pb] : vs.p_buy) {
                const InterfaceLink& lk = c.interfaces[static_cast<size_t>(l)];
                const bool side_a = lk.mg_a == c.microgrids[mi].id;
                const size_t li = static_cast<size_t>(l);
                const size_t st = static_cast<size_t>(t);
                struct Copy {
                    int var;
                    size_t dir;
                    double sign;  // +1 on the buying copy, -1 on the selling copy
                    bool is_q;
                    double cap;
                };
                const std::array<Copy, 4> copies = {{
                    {pb, side_a ? 0u : 1u, +1.0, false, lk.p_buy_max},
                    {vs.p_sell.at(l), side_a ? 1u : 0u, -1.0, false, lk.p_sell_max},
                    {vs.q_buy.at(l), side_a ? 0u : 1u, +1.0, true, lk.q_buy_max},
                    {vs.q_sell.at(l), side_a ? 1u : 0u, -1.0, true, lk.q_sell_max},
                }};
                int cn = 0;
                for (const auto& cp : copies) {
                    const double mu = (cp.is_q ? s.mu.q : s.mu.p)[st][li][cp.dir];
                    const double zt = (cp.is_q ? s.z.q : s.z.p)[st][li][cp.dir];
                    sb.model.add_obj(cp.var, cp.sign * mu * sc);
                    if (cp.cap > 0.0) {
                        const int pen = add_quadratic_penalty(
                            sb.model, cp.var, zt, 0.0, cp.cap, cfg.segments,
                            c.microgrids[mi].id + ".pen" + std::to_string(t) + "." +
                                std::to_string(l) + "." + std::to_string(cn));
                        sb.model.add_obj(pen, 0.5 * cfg.rho * sc);
                    }
                    ++cn;
                }
            }
            if (cfg.relax) relax_integrality(sb.model);
            MilpSolution sol = backend.solve(sb.model, cfg.solver);
            if (sol.values.empty())
                throw ModelBuildError("admm round " + std::to_string(s.round) +
                                      ": subproblem for " + c.microgrids[mi].id +
                                      " period " + std::to_string(t) +
                                      " failed: " + to_string(sol.status));
            Schedule part = extract_schedule(c, sb.vars, sol.values);
            for (const auto& [l, x] : part.mg[mi][0].exch) {
                auto& series = fresh[mi].links[l];
                if (series.empty())
                    series.assign(static_cast<size_t>(c.horizon), {0.0, 0.0, 0.0, 0.0});
                series[static_cast<size_t>(t)] = x;
            }
            merged.mg[mi].push_back(std::move(part.mg[mi][0]));
        }
    }

    s.latest = std::move(fresh);
    AdmmRoundReport rep = consensus_update(s, c, cfg);
    rep.cost = schedule_cost(c, merged);
    s.last_cost = rep.cost;
    s.last_schedule = std::move(merged);
    s.have_solution = true;
    return rep;
}

}  // namespace gridmesh

#endif
