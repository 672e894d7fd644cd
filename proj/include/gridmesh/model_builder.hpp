#ifndef GRIDMESH_MODEL_BUILDER_HPP
#define GRIDMESH_MODEL_BUILDER_HPP

#include <array>
#include <map>
#include <string>
#include <vector>

#include "gridmesh/case.hpp"
#include "gridmesh/linearize.hpp"
#include "gridmesh/milp.hpp"

namespace gridmesh {

class ModelBuildError : public ModelError {
public:
    explicit ModelBuildError(const std::string& what) : ModelError(what) {}
};
class MissingMultiplier : public ModelBuildError {
public:
    explicit MissingMultiplier(const std::string& what) : ModelBuildError(what) {}
};
class DimensionMismatch : public ModelBuildError {
public:
    explicit DimensionMismatch(const std::string& what) : ModelBuildError(what) {}
};

constexpr double kFreqMin = 59.5;
constexpr double kFreqMax = 60.5;

/// Multipliers on the coupling equalities, one per (period, interface,
/// direction). Direction 0 prices the row "mg_a buys = mg_b sells",
/// direction 1 the reverse row.
struct Multipliers {
    std::vector<std::vector<std::array<double, 2>>> p;  // [t][link][dir]
    std::vector<std::vector<std::array<double, 2>>> q;

    static Multipliers zeros(const NetworkCase& c) {
        Multipliers l;
        l.p.assign(static_cast<size_t>(c.horizon),
                   std::vector<std::array<double, 2>>(c.interfaces.size(), {0.0, 0.0}));
        l.q = l.p;
        return l;
    }

    void check(const NetworkCase& c) const {
        if (p.size() != static_cast<size_t>(c.horizon) || q.size() != p.size())
            throw MissingMultiplier("multiplier horizon mismatch for case " + c.name);
        for (const auto& row : p)
            if (row.size() != c.interfaces.size())
                throw MissingMultiplier("multiplier interface count mismatch");
        for (const auto& row : q)
            if (row.size() != c.interfaces.size())
                throw MissingMultiplier("multiplier interface count mismatch");
    }
};

/// Variable handles for one microgrid in one period. Renewable DER slots hold
/// -1 in the dispatch columns (their injection is a fixed profile).
struct MgPeriodVars {
    std::vector<int> p_gen, q_gen, u_gen;              // per DER
    std::vector<int> droop_pz, droop_qz;               // per DER, -1 if absent
    std::vector<std::vector<int>> droop_pw, droop_qw;  // selector binaries
    std::vector<int> p_ch, p_dch, u_ch;                // per battery
    std::vector<int> shed_p, shed_q, volt;             // per bus
    std::vector<int> flow_p, flow_q;                   // per line
    int freq = -1;
    std::map<int, int> p_buy, p_sell, q_buy, q_sell, u_buy;  // per incident link

    bool built() const { return freq >= 0; }
};

struct VariableMap {
    std::vector<int> periods;                       // model periods, ascending
    std::vector<std::vector<MgPeriodVars>> per_mg;  // [mg][period slot]

    const MgPeriodVars& at(int mi, int t) const {
        for (size_t k = 0; k < periods.size(); ++k)
            if (periods[k] == t) return per_mg[static_cast<size_t>(mi)][k];
        throw DimensionMismatch("period " + std::to_string(t) + " not in model");
    }
};

struct BuildResult {
    MilpModel model;
    VariableMap vars;
};

namespace build_detail {

// objective scale turning p.u. power into $ per period: price[$/kWh] * h * kW
inline double cost_scale(const NetworkCase& c) { return c.period_hours * c.base_kw(); }

inline std::vector<double> reciprocal_grid(const std::vector<double>& g) {
    std::vector<double> k(g.size());
    for (size_t i = 0; i < g.size(); ++i) k[i] = 1.0 / g[i];
    return k;
}

inline void build_mg_period(MilpModel& m, const NetworkCase& c, int mi, int t,
                            MgPeriodVars& v) {
    const Microgrid& mg = c.microgrids[static_cast<size_t>(mi)];
    const RadialLayout lay = RadialLayout::build(mg);
    const double sc = cost_scale(c);
    const std::string pre = mg.id + ".t" + std::to_string(t) + ".";
    const size_t nb = mg.buses.size();

    v.freq = m.add_var(pre + "f", kFreqMin, kFreqMax, VarKind::Continuous, 0.0);

    v.volt.resize(nb);
    v.shed_p.resize(nb);
    v.shed_q.resize(nb);
    for (size_t n = 0; n < nb; ++n) {
        const Bus& b = mg.buses[n];
        v.volt[n] = m.add_var(pre + "V." + b.id, b.v_min_pu, b.v_max_pu,
                              VarKind::Continuous, 0.0);
        const auto& load = mg.loads.at(b.id);
        const double lp = load.p[static_cast<size_t>(t)];
        const double lq = load.q[static_cast<size_t>(t)];
        v.shed_p[n] = m.add_var(pre + "Pil." + b.id, 0.0, std::min(b.shed_p_max, lp),
                                VarKind::Continuous, c.prices.shed_price * sc);
        v.shed_q[n] = m.add_var(pre + "Qil." + b.id, 0.0, std::min(b.shed_q_max, lq),
                                VarKind::Continuous, c.prices.shed_price * sc);
    }
    // the PCC holds the reference voltage
    m.fix_var(v.volt[0], mg.pcc_voltage_pu);

    v.flow_p.resize(mg.lines.size());
    v.flow_q.resize(mg.lines.size());
    for (size_t e = 0; e < mg.lines.size(); ++e) {
        const Line& ln = mg.lines[e];
        const double plo = c.symmetric_flows ? -ln.p_flow_max : 0.0;
        const double qlo = c.symmetric_flows ? -ln.q_flow_max : 0.0;
        v.flow_p[e] = m.add_var(pre + "Pf." + ln.from_bus + "-" + ln.to_bus, plo,
                                ln.p_flow_max, VarKind::Continuous, 0.0);
        v.flow_q[e] = m.add_var(pre + "Qf." + ln.from_bus + "-" + ln.to_bus, qlo,
                                ln.q_flow_max, VarKind::Continuous, 0.0);
        // voltage recursion: V[child] = V[parent] - (r*Pf + x*Qf)/V0
        const int pb = lay.parent_bus[e], cb = lay.child_bus[e];
        m.add_row({{v.volt[static_cast<size_t>(cb)], 1.0},
                   {v.volt[static_cast<size_t>(pb)], -1.0},
                   {v.flow_p[e], ln.r_pu / mg.pcc_voltage_pu},
                   {v.flow_q[e], ln.x_pu / mg.pcc_voltage_pu}},
                  RowSense::EQ, 0.0, pre + "vdrop." + ln.from_bus + "-" + ln.to_bus);
    }

    const size_t nd = mg.ders.size();
    v.p_gen.assign(nd, -1);
    v.q_gen.assign(nd, -1);
    v.u_gen.assign(nd, -1);
    v.droop_pz.assign(nd, -1);
    v.droop_qz.assign(nd, -1);
    v.droop_pw.resize(nd);
    v.droop_qw.resize(nd);
    for (size_t i = 0; i < nd; ++i) {
        const Der& d = mg.ders[i];
        if (!d.dispatchable()) continue;
        const std::string dp = pre + d.id;
        // commitment is only meaningful with a positive minimum output
        const int u = m.add_var(dp + ".u", d.p_min > 0.0 ? 0.0 : 1.0, 1.0,
                                VarKind::Binary, 0.0);
        v.u_gen[i] = u;
        v.p_gen[i] = m.add_var(dp + ".P", 0.0, d.p_max, VarKind::Continuous,
                               d.gen_price * sc);
        v.q_gen[i] = m.add_var(dp + ".Q", std::min(d.q_min, 0.0), d.q_max,
                               VarKind::Continuous, 0.0);
        m.add_row({{v.p_gen[i], 1.0}, {u, -d.p_max}}, RowSense::LE, 0.0, dp + ".pcap");
        if (d.p_min > 0.0)
            m.add_row({{v.p_gen[i], 1.0}, {u, -d.p_min}}, RowSense::GE, 0.0, dp + ".pmin");
        m.add_row({{v.q_gen[i], 1.0}, {u, -d.q_max}}, RowSense::LE, 0.0, dp + ".qcap");
        m.add_row({{v.q_gen[i], 1.0}, {u, -d.q_min}}, RowSense::GE, 0.0, dp + ".qmin");

        const DroopSpec& dr = *d.droop;
        const double pcap = dr.contribution_frac * d.p_max;
        if (pcap > 0.0) {
            auto prod = linearize_integer_product(
                m, v.freq, reciprocal_grid(droop_grid_p(dr)), dp + ".zp");
            v.droop_pz[i] = prod.z;
            v.droop_pw[i] = prod.selectors;
            // |k*(f_ref - f)| <= frac * p_max, written on k*f_ref - z
            const auto kg = reciprocal_grid(droop_grid_p(dr));
            std::vector<std::pair<int, double>> expr{{prod.z, -1.0}};
            for (size_t l = 0; l < kg.size(); ++l)
                expr.push_back({prod.selectors[l], kg[l] * mg.f_ref_hz});
            m.add_row(expr, RowSense::LE, pcap, dp + ".dpub");
            m.add_row(expr, RowSense::GE, -pcap, dp + ".dplb");
        }
        const double qcap = dr.contribution_frac * std::max(d.q_max, -d.q_min);
        if (qcap > 0.0) {
            const int bus = mg.bus_index(d.bus);
            auto prod = linearize_integer_product(
                m, v.volt[static_cast<size_t>(bus)], reciprocal_grid(droop_grid_q(dr)),
                dp + ".zq");
            v.droop_qz[i] = prod.z;
            v.droop_qw[i] = prod.selectors;
            const auto kg = reciprocal_grid(droop_grid_q(dr));
            const double vref = mg.buses[static_cast<size_t>(bus)].v_ref_pu;
            std::vector<std::pair<int, double>> expr{{prod.z, -1.0}};
            for (size_t l = 0; l < kg.size(); ++l)
                expr.push_back({prod.selectors[l], kg[l] * vref});
            m.add_row(expr, RowSense::LE, qcap, dp + ".dqub");
            m.add_row(expr, RowSense::GE, -qcap, dp + ".dqlb");
        }
    }

    const size_t nbat = mg.batteries.size();
    v.p_ch.resize(nbat);
    v.p_dch.resize(nbat);
    v.u_ch.resize(nbat);
    for (size_t b = 0; b < nbat; ++b) {
        const Battery& bat = mg.batteries[b];
        const std::string bp = pre + bat.id;
        v.u_ch[b] = m.add_var(bp + ".uch", 0.0, 1.0, VarKind::Binary, 0.0);
        v.p_ch[b] = m.add_var(bp + ".Pch", 0.0, bat.ch_max, VarKind::Continuous,
                              -bat.ch_price * sc);
        v.p_dch[b] = m.add_var(bp + ".Pdch", 0.0, bat.dch_max, VarKind::Continuous,
                               bat.dch_price * sc);
        m.add_row({{v.p_ch[b], 1.0}, {v.u_ch[b], -bat.ch_max}}, RowSense::LE, 0.0,
                  bp + ".chcap");
        m.add_row({{v.p_dch[b], 1.0}, {v.u_ch[b], bat.dch_max}}, RowSense::LE,
                  bat.dch_max, bp + ".dchcap");
    }

    for (size_t li = 0; li < c.interfaces.size(); ++li) {
        const InterfaceLink& lk = c.interfaces[li];
        if (lk.mg_a != mg.id && lk.mg_b != mg.id) continue;
        const std::string ep = pre + "x" + std::to_string(li);
        const int u = m.add_var(ep + ".ubuy", 0.0, 1.0, VarKind::Binary, 0.0);
        const int pb = m.add_var(ep + ".Pbuy", 0.0, lk.p_buy_max, VarKind::Continuous, 0.0);
        const int ps = m.add_var(ep + ".Psell", 0.0, lk.p_sell_max, VarKind::Continuous, 0.0);
        const int qb = m.add_var(ep + ".Qbuy", 0.0, lk.q_buy_max, VarKind::Continuous, 0.0);
        const int qs = m.add_var(ep + ".Qsell", 0.0, lk.q_sell_max, VarKind::Continuous, 0.0);
        m.add_row({{pb, 1.0}, {u, -lk.p_buy_max}}, RowSense::LE, 0.0, ep + ".buycap");
        m.add_row({{ps, 1.0}, {u, lk.p_sell_max}}, RowSense::LE, lk.p_sell_max,
                  ep + ".sellcap");
        m.add_row({{qb, 1.0}, {u, -lk.q_buy_max}}, RowSense::LE, 0.0, ep + ".qbuycap");
        m.add_row({{qs, 1.0}, {u, lk.q_sell_max}}, RowSense::LE, lk.q_sell_max,
                  ep + ".qsellcap");
        const int l = static_cast<int>(li);
        v.u_buy[l] = u;
        v.p_buy[l] = pb;
        v.p_sell[l] = ps;
        v.q_buy[l] = qb;
        v.q_sell[l] = qs;
    }

    // nodal balances
    for (size_t n = 0; n < nb; ++n) {
        const Bus& bus = mg.buses[n];
        Row prow, qrow;
        prow.sense = qrow.sense = RowSense::EQ;
        prow.name = pre + "pbal." + bus.id;
        qrow.name = pre + "qbal." + bus.id;
        const auto& load = mg.loads.at(bus.id);
        prow.rhs = load.p[static_cast<size_t>(t)];
        qrow.rhs = load.q[static_cast<size_t>(t)];

        for (size_t i = 0; i < nd; ++i) {
            const Der& d = mg.ders[i];
            if (mg.bus_index(d.bus) != static_cast<int>(n)) continue;
            if (!d.dispatchable()) {
                prow.rhs -= d.profile_p[static_cast<size_t>(t)];
                qrow.rhs -= d.profile_q[static_cast<size_t>(t)];
                continue;
            }
            prow.coeffs.push_back({v.p_gen[i], 1.0});
            qrow.coeffs.push_back({v.q_gen[i], 1.0});
            if (v.droop_pz[i] >= 0) {
                const auto kg = reciprocal_grid(droop_grid_p(*d.droop));
                for (size_t l = 0; l < kg.size(); ++l)
                    prow.coeffs.push_back({v.droop_pw[i][l], kg[l] * mg.f_ref_hz});
                prow.coeffs.push_back({v.droop_pz[i], -1.0});
            }
            if (v.droop_qz[i] >= 0) {
                const auto kg = reciprocal_grid(droop_grid_q(*d.droop));
                for (size_t l = 0; l < kg.size(); ++l)
                    qrow.coeffs.push_back({v.droop_qw[i][l], kg[l] * bus.v_ref_pu});
                qrow.coeffs.push_back({v.droop_qz[i], -1.0});
            }
        }
        for (size_t b = 0; b < nbat; ++b)
            if (mg.bus_index(mg.batteries[b].bus) == static_cast<int>(n)) {
                prow.coeffs.push_back({v.p_dch[b], 1.0});
                prow.coeffs.push_back({v.p_ch[b], -1.0});
            }
        prow.coeffs.push_back({v.shed_p[n], 1.0});
        qrow.coeffs.push_back({v.shed_q[n], 1.0});
        if (lay.inflow_line[n] >= 0) {
            prow.coeffs.push_back({v.flow_p[static_cast<size_t>(lay.inflow_line[n])], 1.0});
            qrow.coeffs.push_back({v.flow_q[static_cast<size_t>(lay.inflow_line[n])], 1.0});
        }
        for (int e : lay.child_lines[n]) {
            prow.coeffs.push_back({v.flow_p[static_cast<size_t>(e)], -1.0});
            qrow.coeffs.push_back({v.flow_q[static_cast<size_t>(e)], -1.0});
        }
        for (size_t li = 0; li < c.interfaces.size(); ++li) {
            const InterfaceLink& lk = c.interfaces[li];
            const bool here = (lk.mg_a == mg.id && lk.bus_a == bus.id) ||
                              (lk.mg_b == mg.id && lk.bus_b == bus.id);
            if (!here) continue;
            const int l = static_cast<int>(li);
            prow.coeffs.push_back({v.p_buy.at(l), 1.0});
            prow.coeffs.push_back({v.p_sell.at(l), -1.0});
            qrow.coeffs.push_back({v.q_buy.at(l), 1.0});
            qrow.coeffs.push_back({v.q_sell.at(l), -1.0});
        }
        m.add_row(std::move(prow));
        m.add_row(std::move(qrow));
    }
}

inline void add_coupling_rows(MilpModel& m, const NetworkCase& c,
                              const std::vector<MgPeriodVars>& blocks, int t) {
    for (size_t li = 0; li < c.interfaces.size(); ++li) {
        const InterfaceLink& lk = c.interfaces[li];
        const int a = c.mg_index(lk.mg_a), b = c.mg_index(lk.mg_b);
        const auto& va = blocks[static_cast<size_t>(a)];
        const auto& vb = blocks[static_cast<size_t>(b)];
        const int l = static_cast<int>(li);
        const std::string nm =
            lk.mg_a + "-" + lk.mg_b + ".t" + std::to_string(t) + ".couple";
        m.add_row({{va.p_buy.at(l), 1.0}, {vb.p_sell.at(l), -1.0}}, RowSense::EQ, 0.0,
                  nm + ".p0");
        m.add_row({{vb.p_buy.at(l), 1.0}, {va.p_sell.at(l), -1.0}}, RowSense::EQ, 0.0,
                  nm + ".p1");
        m.add_row({{va.q_buy.at(l), 1.0}, {vb.q_sell.at(l), -1.0}}, RowSense::EQ, 0.0,
                  nm + ".q0");
        m.add_row({{vb.q_buy.at(l), 1.0}, {va.q_sell.at(l), -1.0}}, RowSense::EQ, 0.0,
                  nm + ".q1");
    }
}

// Lagrangian terms for one microgrid: +lambda on its buy variables, -lambda on
// its sell variables, using the multiplier of the coupling row each variable
// appears in.
inline void add_lambda_terms(MilpModel& m, const NetworkCase& c, int mi,
                             const MgPeriodVars& v, const Multipliers& lam, int t) {
    const Microgrid& mg = c.microgrids[static_cast<size_t>(mi)];
    for (size_t li = 0; li < c.interfaces.size(); ++li) {
        const InterfaceLink& lk = c.interfaces[li];
        if (lk.mg_a != mg.id && lk.mg_b != mg.id) continue;
        const int l = static_cast<int>(li);
        const bool side_a = lk.mg_a == mg.id;
        const auto& lp = lam.p[static_cast<size_t>(t)][li];
        const auto& lq = lam.q[static_cast<size_t>(t)][li];
        // dir 0: a buys from b; dir 1: b buys from a
        const double buy_p = side_a ? lp[0] : lp[1];
        const double sell_p = side_a ? lp[1] : lp[0];
        const double buy_q = side_a ? lq[0] : lq[1];
        const double sell_q = side_a ? lq[1] : lq[0];
        m.add_obj(v.p_buy.at(l), buy_p);
        m.add_obj(v.p_sell.at(l), -sell_p);
        m.add_obj(v.q_buy.at(l), buy_q);
        m.add_obj(v.q_sell.at(l), -sell_q);
    }
}

}  // namespace build_detail

inline BuildResult build_centralized_period(const NetworkCase& c, int t) {
    if (t < 0 || t >= c.horizon)
        throw DimensionMismatch("period " + std::to_string(t) + " outside horizon");
    BuildResult r;
    r.vars.periods = {t};
    r.vars.per_mg.resize(c.microgrids.size());
    std::vector<MgPeriodVars> blocks(c.microgrids.size());
    for (size_t mi = 0; mi < c.microgrids.size(); ++mi)
        build_detail::build_mg_period(r.model, c, static_cast<int>(mi), t, blocks[mi]);
    build_detail::add_coupling_rows(r.model, c, blocks, t);
    for (size_t mi = 0; mi < c.microgrids.size(); ++mi)
        r.vars.per_mg[mi].push_back(std::move(blocks[mi]));
    r.model.validate();
    return r;
}

inline BuildResult build_centralized(const NetworkCase& c) {
    BuildResult r;
    r.vars.per_mg.resize(c.microgrids.size());
    for (int t = 0; t < c.horizon; ++t) {
        r.vars.periods.push_back(t);
        std::vector<MgPeriodVars> blocks(c.microgrids.size());
        for (size_t mi = 0; mi < c.microgrids.size(); ++mi)
            build_detail::build_mg_period(r.model, c, static_cast<int>(mi), t, blocks[mi]);
        build_detail::add_coupling_rows(r.model, c, blocks, t);
        for (size_t mi = 0; mi < c.microgrids.size(); ++mi)
            r.vars.per_mg[mi].push_back(std::move(blocks[mi]));
    }
    r.model.validate();
    return r;
}

inline BuildResult build_subproblem_period(const NetworkCase& c, const std::string& mg_id,
                                           const Multipliers& lam, int t) {
    lam.check(c);
    const int mi = c.mg_index(mg_id);
    if (mi < 0) throw ModelBuildError("unknown microgrid " + mg_id);
    BuildResult r;
    r.vars.periods = {t};
    r.vars.per_mg.resize(c.microgrids.size());
    MgPeriodVars v;
    build_detail::build_mg_period(r.model, c, mi, t, v);
    build_detail::add_lambda_terms(r.model, c, mi, v, lam, t);
    r.vars.per_mg[static_cast<size_t>(mi)].push_back(std::move(v));
    r.model.validate();
    return r;
}

inline BuildResult build_subproblem(const NetworkCase& c, const std::string& mg_id,
                                    const Multipliers& lam) {
    lam.check(c);
    const int mi = c.mg_index(mg_id);
    if (mi < 0) throw ModelBuildError("unknown microgrid " + mg_id);
    BuildResult r;
    r.vars.per_mg.resize(c.microgrids.size());
    for (int t = 0; t < c.horizon; ++t) {
        r.vars.periods.push_back(t);
        MgPeriodVars v;
        build_detail::build_mg_period(r.model, c, mi, t, v);
        build_detail::add_lambda_terms(r.model, c, mi, v, lam, t);
        r.vars.per_mg[static_cast<size_t>(mi)].push_back(std::move(v));
    }
    r.model.validate();
    return r;
}

}  // namespace gridmesh

#endif
