#ifndef GRIDMESH_SCHEDULE_HPP
#define GRIDMESH_SCHEDULE_HPP

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "gridmesh/model_builder.hpp"

namespace gridmesh {

/// Numeric dispatch for one microgrid in one period, in p.u.
struct MgPeriodSchedule {
    std::vector<double> gen_p, gen_q;      // per DER (renewables: profile values)
    std::vector<double> droop_p, droop_q;  // droop injections per DER
    std::vector<double> bat_ch, bat_dch;   // per battery
    std::vector<double> shed_p, shed_q;    // per bus
    std::vector<double> volt;              // per bus
    std::vector<double> flow_p, flow_q;    // per line
    double freq = 0.0;
    std::map<int, std::array<double, 4>> exch;  // link -> {Pbuy, Psell, Qbuy, Qsell}
};

struct Schedule {
    std::vector<int> periods;
    std::vector<std::vector<MgPeriodSchedule>> mg;  // [mg][period slot]

    int slot(int t) const {
        for (size_t k = 0; k < periods.size(); ++k)
            if (periods[k] == t) return static_cast<int>(k);
        return -1;
    }
};

/// Pulls a solved model's values back into case terms. Microgrids absent from
/// the variable map (subproblem builds) get empty slots.
inline Schedule extract_schedule(const NetworkCase& c, const VariableMap& vars,
                                 const std::vector<double>& values) {
    Schedule s;
    s.periods = vars.periods;
    s.mg.resize(c.microgrids.size());
    auto val = [&](int idx) { return values[static_cast<size_t>(idx)]; };
    for (size_t mi = 0; mi < c.microgrids.size(); ++mi) {
        const Microgrid& mg = c.microgrids[mi];
        for (size_t k = 0; k < vars.per_mg[mi].size(); ++k) {
            const MgPeriodVars& v = vars.per_mg[mi][k];
            const int t = vars.periods[k];
            MgPeriodSchedule out;
            if (!v.built()) {
                s.mg[mi].push_back(std::move(out));
                continue;
            }
            out.freq = val(v.freq);
            const size_t nd = mg.ders.size();
            out.gen_p.assign(nd, 0.0);
            out.gen_q.assign(nd, 0.0);
            out.droop_p.assign(nd, 0.0);
            out.droop_q.assign(nd, 0.0);
            for (size_t i = 0; i < nd; ++i) {
                const Der& d = mg.ders[i];
                if (!d.dispatchable()) {
                    out.gen_p[i] = d.profile_p[static_cast<size_t>(t)];
                    out.gen_q[i] = d.profile_q[static_cast<size_t>(t)];
                    continue;
                }
                out.gen_p[i] = val(v.p_gen[i]);
                out.gen_q[i] = val(v.q_gen[i]);
                if (v.droop_pz[i] >= 0) {
                    const auto kg = build_detail::reciprocal_grid(droop_grid_p(*d.droop));
                    double inj = -val(v.droop_pz[i]);
                    for (size_t l = 0; l < kg.size(); ++l)
                        inj += kg[l] * mg.f_ref_hz * val(v.droop_pw[i][l]);
                    out.droop_p[i] = inj;
                }
                if (v.droop_qz[i] >= 0) {
                    const auto kg = build_detail::reciprocal_grid(droop_grid_q(*d.droop));
                    const double vref =
                        mg.buses[static_cast<size_t>(mg.bus_index(d.bus))].v_ref_pu;
                    double inj = -val(v.droop_qz[i]);
                    for (size_t l = 0; l < kg.size(); ++l)
                        inj += kg[l] * vref * val(v.droop_qw[i][l]);
                    out.droop_q[i] = inj;
                }
            }
            out.bat_ch.resize(mg.batteries.size());
            out.bat_dch.resize(mg.batteries.size());
            for (size_t b = 0; b < mg.batteries.size(); ++b) {
                out.bat_ch[b] = val(v.p_ch[b]);
                out.bat_dch[b] = val(v.p_dch[b]);
            }
            out.shed_p.resize(mg.buses.size());
            out.shed_q.resize(mg.buses.size());
            out.volt.resize(mg.buses.size());
            for (size_t n = 0; n < mg.buses.size(); ++n) {
                out.shed_p[n] = val(v.shed_p[n]);
                out.shed_q[n] = val(v.shed_q[n]);
                out.volt[n] = val(v.volt[n]);
            }
            out.flow_p.resize(mg.lines.size());
            out.flow_q.resize(mg.lines.size());
            for (size_t e = 0; e < mg.lines.size(); ++e) {
                out.flow_p[e] = val(v.flow_p[e]);
                out.flow_q[e] = val(v.flow_q[e]);
            }
            for (const auto& [l, idx] : v.p_buy)
                out.exch[l] = {val(idx), val(v.p_sell.at(l)), val(v.q_buy.at(l)),
                               val(v.q_sell.at(l))};
            s.mg[mi].push_back(std::move(out));
        }
    }
    return s;
}

/// Objective value of a schedule under the case prices; `only_mg` < 0 sums
/// every microgrid.
inline double schedule_cost(const NetworkCase& c, const Schedule& s, int only_mg = -1) {
    const double sc = build_detail::cost_scale(c);
    double total = 0.0;
    for (size_t mi = 0; mi < c.microgrids.size(); ++mi) {
        if (only_mg >= 0 && static_cast<int>(mi) != only_mg) continue;
        const Microgrid& mg = c.microgrids[mi];
        for (const auto& p : s.mg[mi]) {
            if (p.gen_p.empty()) continue;
            for (size_t i = 0; i < mg.ders.size(); ++i)
                if (mg.ders[i].dispatchable())
                    total += mg.ders[i].gen_price * p.gen_p[i] * sc;
            for (size_t b = 0; b < mg.batteries.size(); ++b)
                total += (mg.batteries[b].dch_price * p.bat_dch[b] -
                          mg.batteries[b].ch_price * p.bat_ch[b]) *
                         sc;
            for (size_t n = 0; n < mg.buses.size(); ++n)
                total += c.prices.shed_price * (p.shed_p[n] + p.shed_q[n]) * sc;
        }
    }
    return total;
}

struct BalanceResidual {
    // [mg][period slot][bus] -> (P, Q) imbalance, LHS minus RHS
    std::vector<std::vector<std::vector<std::pair<double, double>>>> per_bus;
    double max_abs = 0.0;
};

/// Evaluates the nodal P/Q balances against a schedule.
inline BalanceResidual flow_conservation_residual(const NetworkCase& c, const Schedule& s) {
    if (s.mg.size() != c.microgrids.size())
        throw DimensionMismatch("schedule has " + std::to_string(s.mg.size()) +
                                " microgrids, case has " +
                                std::to_string(c.microgrids.size()));
    BalanceResidual res;
    res.per_bus.resize(c.microgrids.size());
    for (size_t mi = 0; mi < c.microgrids.size(); ++mi) {
        const Microgrid& mg = c.microgrids[mi];
        const RadialLayout lay = RadialLayout::build(mg);
        for (size_t k = 0; k < s.mg[mi].size(); ++k) {
            const MgPeriodSchedule& p = s.mg[mi][k];
            const int t = s.periods[k];
            std::vector<std::pair<double, double>> bus_res(mg.buses.size(), {0.0, 0.0});
            if (!p.gen_p.empty()) {
                if (p.shed_p.size() != mg.buses.size() ||
                    p.flow_p.size() != mg.lines.size())
                    throw DimensionMismatch("schedule shape mismatch in " + mg.id);
                for (size_t n = 0; n < mg.buses.size(); ++n) {
                    const Bus& bus = mg.buses[n];
                    const auto& load = mg.loads.at(bus.id);
                    double rp = -load.p[static_cast<size_t>(t)];
                    double rq = -load.q[static_cast<size_t>(t)];
                    for (size_t i = 0; i < mg.ders.size(); ++i)
                        if (mg.bus_index(mg.ders[i].bus) == static_cast<int>(n)) {
                            rp += p.gen_p[i] + p.droop_p[i];
                            rq += p.gen_q[i] + p.droop_q[i];
                        }
                    for (size_t b = 0; b < mg.batteries.size(); ++b)
                        if (mg.bus_index(mg.batteries[b].bus) == static_cast<int>(n))
                            rp += p.bat_dch[b] - p.bat_ch[b];
                    rp += p.shed_p[n];
                    rq += p.shed_q[n];
                    if (lay.inflow_line[n] >= 0) {
                        rp += p.flow_p[static_cast<size_t>(lay.inflow_line[n])];
                        rq += p.flow_q[static_cast<size_t>(lay.inflow_line[n])];
                    }
                    for (int e : lay.child_lines[n]) {
                        rp -= p.flow_p[static_cast<size_t>(e)];
                        rq -= p.flow_q[static_cast<size_t>(e)];
                    }
                    for (size_t li = 0; li < c.interfaces.size(); ++li) {
                        const InterfaceLink& lk = c.interfaces[li];
                        const bool here = (lk.mg_a == mg.id && lk.bus_a == bus.id) ||
                                          (lk.mg_b == mg.id && lk.bus_b == bus.id);
                        if (!here) continue;
                        auto it = p.exch.find(static_cast<int>(li));
                        if (it != p.exch.end())
                            rp += it->second[0] - it->second[1],
                                rq += it->second[2] - it->second[3];
                    }
                    bus_res[n] = {rp, rq};
                    res.max_abs =
                        std::max({res.max_abs, std::fabs(rp), std::fabs(rq)});
                }
            }
            res.per_bus[mi].push_back(std::move(bus_res));
        }
    }
    return res;
}

/// Largest mismatch across the interface coupling equalities.
inline double coupling_residual(const NetworkCase& c, const Schedule& s) {
    double worst = 0.0;
    for (size_t li = 0; li < c.interfaces.size(); ++li) {
        const InterfaceLink& lk = c.interfaces[li];
        const int a = c.mg_index(lk.mg_a), b = c.mg_index(lk.mg_b);
        for (size_t k = 0; k < s.periods.size(); ++k) {
            if (s.mg[static_cast<size_t>(a)].size() <= k ||
                s.mg[static_cast<size_t>(b)].size() <= k)
                continue;
            const auto& pa = s.mg[static_cast<size_t>(a)][k];
            const auto& pb = s.mg[static_cast<size_t>(b)][k];
            auto ia = pa.exch.find(static_cast<int>(li));
            auto ib = pb.exch.find(static_cast<int>(li));
            if (ia == pa.exch.end() || ib == pb.exch.end()) continue;
            worst = std::max(worst, std::fabs(ia->second[0] - ib->second[1]));
            worst = std::max(worst, std::fabs(ib->second[0] - ia->second[1]));
            worst = std::max(worst, std::fabs(ia->second[2] - ib->second[3]));
            worst = std::max(worst, std::fabs(ib->second[2] - ia->second[3]));
        }
    }
    return worst;
}

}  // namespace gridmesh

#endif
