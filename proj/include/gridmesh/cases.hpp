#ifndef GRIDMESH_CASES_HPP
#define GRIDMESH_CASES_HPP

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "gridmesh/case.hpp"

namespace gridmesh {

// Bundled study cases. All data are deterministic formulas, no RNG involved,
// so repeated construction is bit-identical.

namespace cases_detail {

inline std::string bus_name(int n) { return "b" + std::to_string(n); }

inline double load_shape(int t) {
    static const std::array<double, 24> s = {
        0.55, 0.50, 0.48, 0.47, 0.48, 0.52, 0.60, 0.70, 0.78, 0.82, 0.85, 0.88,
        0.90, 0.88, 0.85, 0.84, 0.86, 0.92, 1.00, 0.97, 0.90, 0.80, 0.70, 0.60};
    return s[static_cast<size_t>(t % 24)];
}

inline double pv_shape(int t) {
    const int h = t % 24;
    if (h < 6 || h > 18) return 0.0;
    const double x = 3.14159265358979323846 * (h - 6) / 12.0;
    return std::sin(x);
}

inline double wt_shape(int t) {
    const double x = 2.0 * 3.14159265358979323846 * ((t % 24) + 3) / 24.0;
    return 0.45 + 0.25 * std::sin(x);
}

inline std::vector<double> profile(int horizon, double peak_pu, double (*shape)(int)) {
    std::vector<double> v(static_cast<size_t>(horizon));
    for (int t = 0; t < horizon; ++t) v[static_cast<size_t>(t)] = peak_pu * shape(t);
    return v;
}

inline LoadSeries bus_load(int horizon, double base_p_pu, double q_ratio) {
    LoadSeries ls;
    ls.p.resize(static_cast<size_t>(horizon));
    ls.q.resize(static_cast<size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
        ls.p[static_cast<size_t>(t)] = base_p_pu * load_shape(t);
        ls.q[static_cast<size_t>(t)] = q_ratio * ls.p[static_cast<size_t>(t)];
    }
    return ls;
}

// branch impedances of the standard 33-bus feeder, in ohms
inline const std::map<std::pair<int, int>, std::pair<double, double>>& feeder33_ohms() {
    static const std::map<std::pair<int, int>, std::pair<double, double>> z = {
        {{1, 2}, {0.0922, 0.0470}},   {{2, 3}, {0.4930, 0.2511}},
        {{3, 4}, {0.3660, 0.1864}},   {{4, 5}, {0.3811, 0.1941}},
        {{5, 6}, {0.8190, 0.7070}},   {{6, 7}, {0.1872, 0.6188}},
        {{7, 8}, {0.7114, 0.2351}},   {{8, 9}, {1.0300, 0.7400}},
        {{9, 10}, {1.0440, 0.7400}},  {{10, 11}, {0.1966, 0.0650}},
        {{11, 12}, {0.3744, 0.1238}}, {{12, 13}, {1.4680, 1.1550}},
        {{13, 14}, {0.5416, 0.7129}}, {{14, 15}, {0.5910, 0.5260}},
        {{15, 16}, {0.7463, 0.5450}}, {{16, 17}, {1.2890, 1.7210}},
        {{17, 18}, {0.7320, 0.5740}}, {{2, 19}, {0.1640, 0.1565}},
        {{19, 20}, {1.5042, 1.3554}}, {{20, 21}, {0.4095, 0.4784}},
        {{21, 22}, {0.7089, 0.9373}}, {{3, 23}, {0.4512, 0.3083}},
        {{23, 24}, {0.8980, 0.7091}}, {{24, 25}, {0.8960, 0.7011}},
        {{6, 26}, {0.2030, 0.1034}},  {{26, 27}, {0.2842, 0.1447}},
        {{27, 28}, {1.0590, 0.9337}}, {{28, 29}, {0.8042, 0.7006}},
        {{29, 30}, {0.5075, 0.2585}}, {{30, 31}, {0.9744, 0.9630}},
        {{31, 32}, {0.3105, 0.3619}}, {{32, 33}, {0.3410, 0.5302}}};
    return z;
}

inline Line chain_line(int a, int b, double z_base_ohm) {
    Line l;
    l.from_bus = bus_name(a);
    l.to_bus = bus_name(b);
    const auto& tab = feeder33_ohms();
    auto it = tab.find({std::min(a, b), std::max(a, b)});
    if (it != tab.end()) {
        l.r_pu = it->second.first / z_base_ohm;
        l.x_pu = it->second.second / z_base_ohm;
    } else {
        l.r_pu = 0.006;
        l.x_pu = 0.01;
    }
    return l;
}

inline DroopSpec droop5() {
    DroopSpec d;
    d.mp_min = 0.02;
    d.mp_max = 0.2;
    d.mp_step = 0.045;  // 5 levels
    // voltage droop is kept shallow so the implied voltage band around the
    // reference stays compatible with feeder-scale drops
    d.mq_min = 0.5;
    d.mq_max = 5.0;
    d.mq_step = 1.125;  // 5 levels
    return d;
}

inline Der dispatchable(const std::string& id, DerKind kind, int bus, double p_max_pu,
                        double q_max_pu, double price, double droop_cap_pu = -1.0) {
    Der d;
    d.id = id;
    d.kind = kind;
    d.bus = bus_name(bus);
    d.p_max = p_max_pu;
    d.q_min = -q_max_pu;
    d.q_max = q_max_pu;
    d.gen_price = price;
    d.droop = droop5();
    // aligning the droop caps of co-located units lets a single frequency
    // deviation exhaust every cap, which keeps the MILP close to its LP bound
    if (droop_cap_pu > 0.0) d.droop->contribution_frac = droop_cap_pu / p_max_pu;
    return d;
}

inline Der renewable(const std::string& id, DerKind kind, int bus, double p_rate_pu,
                     double q_rate_pu, int horizon) {
    Der d;
    d.id = id;
    d.kind = kind;
    d.bus = bus_name(bus);
    d.p_max = p_rate_pu;
    d.q_max = q_rate_pu;
    auto shape = kind == DerKind::PV ? pv_shape : wt_shape;
    d.profile_p = profile(horizon, p_rate_pu, shape);
    d.profile_q = profile(horizon, 0.5 * q_rate_pu, shape);
    return d;
}

}  // namespace cases_detail

/// Two microgrids with a single tie, small enough for exhaustive checks.
/// MG1 generates cheaply and exports; MG2 is expensive and imports at the cap.
inline NetworkCase make_case_mini2() {
    using namespace cases_detail;
    NetworkCase c;
    c.name = "case_mini2";
    c.power_base_mva = 1.0;
    c.horizon = 4;
    c.period_hours = 1.0;
    c.symmetric_flows = true;

    auto mk_bus = [](const std::string& id) {
        Bus b;
        b.id = id;
        b.shed_p_max = 1.0;
        b.shed_q_max = 1.0;
        return b;
    };
    auto mk_line = [](const std::string& a, const std::string& b) {
        Line l;
        l.from_bus = a;
        l.to_bus = b;
        l.r_pu = 0.006;
        l.x_pu = 0.01;
        return l;
    };

    DroopSpec dr3;
    dr3.mp_min = 0.02;
    dr3.mp_max = 0.2;
    dr3.mp_step = 0.09;  // 3 levels
    dr3.mq_min = 0.5;
    dr3.mq_max = 0.5;
    dr3.mq_step = 1.0;  // single level

    Microgrid m1;
    m1.id = "MG1";
    m1.buses = {mk_bus("b1"), mk_bus("b2"), mk_bus("b3")};
    m1.lines = {mk_line("b1", "b2"), mk_line("b2", "b3")};
    {
        Der g;
        g.id = "G1";
        g.kind = DerKind::MT;
        g.bus = "b2";
        g.p_max = 0.8;
        g.q_min = -0.4;
        g.q_max = 0.4;
        g.gen_price = 0.05;
        g.droop = dr3;
        m1.ders.push_back(g);
    }
    {
        Battery b;
        b.id = "B1";
        b.bus = "b3";
        b.ch_max = 0.2;
        b.dch_max = 0.2;
        b.ch_price = 0.0;
        b.dch_price = 0.2;
        m1.batteries.push_back(b);
    }
    m1.loads["b1"] = {{0.05, 0.06, 0.05, 0.04}, {0.02, 0.02, 0.02, 0.01}};
    m1.loads["b2"] = {{0.20, 0.25, 0.30, 0.22}, {0.08, 0.10, 0.12, 0.09}};
    m1.loads["b3"] = {{0.10, 0.12, 0.15, 0.11}, {0.04, 0.05, 0.06, 0.04}};

    Microgrid m2;
    m2.id = "MG2";
    m2.buses = {mk_bus("c1"), mk_bus("c2"), mk_bus("c3")};
    m2.lines = {mk_line("c1", "c2"), mk_line("c2", "c3")};
    {
        Der g;
        g.id = "G2";
        g.kind = DerKind::MT;
        g.bus = "c2";
        g.p_max = 0.8;
        g.q_min = -0.4;
        g.q_max = 0.4;
        g.gen_price = 0.15;
        g.droop = dr3;
        m2.ders.push_back(g);
    }
    m2.loads["c1"] = {{0.10, 0.12, 0.10, 0.08}, {0.04, 0.05, 0.04, 0.03}};
    m2.loads["c2"] = {{0.35, 0.45, 0.50, 0.40}, {0.14, 0.18, 0.20, 0.16}};
    m2.loads["c3"] = {{0.15, 0.18, 0.20, 0.16}, {0.06, 0.07, 0.08, 0.06}};

    c.microgrids = {std::move(m1), std::move(m2)};

    InterfaceLink tie;
    tie.mg_a = "MG1";
    tie.mg_b = "MG2";
    tie.bus_a = "b1";
    tie.bus_b = "c1";
    tie.p_buy_max = 0.25;
    tie.p_sell_max = 0.25;
    tie.q_buy_max = 0.10;
    tie.q_sell_max = 0.10;
    c.interfaces.push_back(tie);

    validate_case(c);
    return c;
}

/// Four microgrids carved out of a 53-bus system. Where a bus pair matches a
/// branch of the standard 33-bus feeder the original impedance is used
/// (Z_base = 12.66^2 / 10 ohm); the remaining ties carry 0.006 + j0.01 p.u.
/// Cost tiers rise around the ring MG1 < MG2 < MG3 < MG4 so every interface
/// trades at its cap.
inline NetworkCase make_case33_4mg() {
    using namespace cases_detail;
    const double z_base = 12.66 * 12.66 / 10.0;
    NetworkCase c;
    c.name = "case33_4mg";
    c.power_base_mva = 10.0;
    c.horizon = 24;
    c.period_hours = 1.0;
    c.symmetric_flows = true;
    const double kw = 1.0 / c.base_kw();  // kW -> p.u.

    struct Span { const char* id; int lo; int hi; double base_kw_lo; double base_kw_span; };
    const std::array<Span, 4> spans = {{{"MG1", 1, 17, 25.0, 2.0},
                                        {"MG2", 18, 33, 70.0, 3.0},
                                        {"MG3", 34, 44, 80.0, 3.0},
                                        {"MG4", 45, 53, 120.0, 6.0}}};

    for (const auto& sp : spans) {
        Microgrid mg;
        mg.id = sp.id;
        for (int b = sp.lo; b <= sp.hi; ++b) {
            Bus bus;
            bus.id = bus_name(b);
            bus.shed_p_max = 1.0;
            bus.shed_q_max = 1.0;
            mg.buses.push_back(bus);
            if (b > sp.lo) mg.lines.push_back(chain_line(b - 1, b, z_base));
            const double base_p = (sp.base_kw_lo + sp.base_kw_span * (b % 7)) * kw;
            mg.loads[bus_name(b)] = bus_load(c.horizon, base_p, 0.35);
        }
        c.microgrids.push_back(std::move(mg));
    }

    auto& mg1 = c.microgrids[0];
    auto& mg2 = c.microgrids[1];
    auto& mg3 = c.microgrids[2];
    auto& mg4 = c.microgrids[3];

    mg1.ders.push_back(renewable("PV1", DerKind::PV, 2, 200 * kw, 80 * kw, c.horizon));
    mg1.ders.push_back(renewable("WT1", DerKind::WT, 5, 150 * kw, 60 * kw, c.horizon));
    mg1.ders.push_back(dispatchable("CHP1", DerKind::CHP, 6, 400 * kw, 300 * kw, 0.045));
    mg1.ders.push_back(renewable("WT2", DerKind::WT, 7, 150 * kw, 60 * kw, c.horizon));
    mg1.ders.push_back(renewable("WT3", DerKind::WT, 14, 150 * kw, 60 * kw, c.horizon));
    mg1.ders.push_back(dispatchable("CHP2", DerKind::CHP, 16, 400 * kw, 300 * kw, 0.05));
    {
        Battery b;
        b.id = "BAT1";
        b.bus = bus_name(10);
        b.ch_max = 100 * kw;
        b.dch_max = 100 * kw;
        b.ch_price = 0.0;
        b.dch_price = 0.3;
        mg1.batteries.push_back(b);
    }

    mg2.ders.push_back(dispatchable("FC1", DerKind::FC, 19, 300 * kw, 0.0, 0.07, 80 * kw));
    mg2.ders.push_back(dispatchable("CHP3", DerKind::CHP, 21, 400 * kw, 300 * kw, 0.065));
    mg2.ders.push_back(dispatchable("MT1", DerKind::MT, 24, 400 * kw, 200 * kw, 0.075));
    mg2.ders.push_back(dispatchable("MT2", DerKind::MT, 32, 400 * kw, 200 * kw, 0.075));
    {
        Battery b;
        b.id = "BAT2";
        b.bus = bus_name(29);
        b.ch_max = 100 * kw;
        b.dch_max = 100 * kw;
        b.ch_price = 0.0;
        b.dch_price = 0.3;
        mg2.batteries.push_back(b);
    }

    mg3.ders.push_back(renewable("PV2", DerKind::PV, 34, 200 * kw, 80 * kw, c.horizon));
    mg3.ders.push_back(dispatchable("CHP4", DerKind::CHP, 37, 400 * kw, 300 * kw, 0.09));
    mg3.ders.push_back(dispatchable("FC2", DerKind::FC, 39, 300 * kw, 0.0, 0.095, 80 * kw));
    mg3.ders.push_back(renewable("WT4", DerKind::WT, 40, 150 * kw, 60 * kw, c.horizon));
    mg3.ders.push_back(dispatchable("CHP5", DerKind::CHP, 44, 400 * kw, 300 * kw, 0.09));

    mg4.ders.push_back(renewable("PV3", DerKind::PV, 45, 200 * kw, 80 * kw, c.horizon));
    mg4.ders.push_back(dispatchable("MT3", DerKind::MT, 47, 400 * kw, 200 * kw, 0.11));
    mg4.ders.push_back(dispatchable("FC3", DerKind::FC, 49, 300 * kw, 0.0, 0.115, 80 * kw));
    mg4.ders.push_back(dispatchable("MT4", DerKind::MT, 51, 400 * kw, 200 * kw, 0.11));
    mg4.ders.push_back(renewable("PV4", DerKind::PV, 53, 200 * kw, 80 * kw, c.horizon));

    auto link = [&](const char* ma, const char* mb, int ba, int bb) {
        InterfaceLink l;
        l.mg_a = ma;
        l.mg_b = mb;
        l.bus_a = bus_name(ba);
        l.bus_b = bus_name(bb);
        l.p_buy_max = 150 * kw;
        l.p_sell_max = 150 * kw;
        l.q_buy_max = 60 * kw;
        l.q_sell_max = 60 * kw;
        c.interfaces.push_back(l);
    };
    link("MG1", "MG2", 17, 18);
    link("MG2", "MG3", 33, 34);
    link("MG3", "MG4", 44, 45);
    link("MG4", "MG1", 53, 1);

    validate_case(c);
    return c;
}

/// Nine chain-feeder microgrids over 123 buses, daisy-chained by eight ties.
/// Cost tier rises with the microgrid index.
inline NetworkCase make_case123_9mg() {
    using namespace cases_detail;
    NetworkCase c;
    c.name = "case123_9mg";
    c.power_base_mva = 10.0;
    c.horizon = 24;
    c.period_hours = 1.0;
    c.symmetric_flows = true;
    const double kw = 1.0 / c.base_kw();

    int bus_no = 1;
    for (int g = 1; g <= 9; ++g) {
        const int nbus = g <= 6 ? 14 : 13;
        Microgrid mg;
        mg.id = "MG" + std::to_string(g);
        const int lo = bus_no;
        for (int i = 0; i < nbus; ++i, ++bus_no) {
            Bus b;
            b.id = bus_name(bus_no);
            b.shed_p_max = 1.0;
            b.shed_q_max = 1.0;
            mg.buses.push_back(b);
            if (i > 0) {
                Line l;
                l.from_bus = bus_name(bus_no - 1);
                l.to_bus = bus_name(bus_no);
                l.r_pu = 0.006;
                l.x_pu = 0.01;
                mg.lines.push_back(l);
            }
            const double base_p = (20.0 + 2.0 * (bus_no % 5)) * kw;
            mg.loads[b.id] = bus_load(c.horizon, base_p, 0.35);
        }
        const double price = 0.05 + 0.01 * (g - 1);
        Der mt = dispatchable("MT" + std::to_string(g), DerKind::MT, lo + 1, 500 * kw,
                              250 * kw, price);
        mt.droop->mp_step = 0.09;  // 3 levels
        mt.droop->mq_step = 2.25;
        mg.ders.push_back(mt);
        if (g % 2 == 0) {
            Der fc = dispatchable("FC" + std::to_string(g), DerKind::FC, lo + 4, 300 * kw,
                                  0.0, price + 0.005, 100 * kw);
            fc.droop->mp_step = 0.09;
            fc.droop->mq_step = 2.25;
            mg.ders.push_back(fc);
        }
        mg.ders.push_back(renewable("PV" + std::to_string(g), DerKind::PV, bus_no - 1,
                                    150 * kw, 60 * kw, c.horizon));
        c.microgrids.push_back(std::move(mg));
    }

    bus_no = 1;
    for (int g = 1; g <= 8; ++g) {
        const int nbus = g <= 6 ? 14 : 13;
        InterfaceLink l;
        l.mg_a = "MG" + std::to_string(g);
        l.mg_b = "MG" + std::to_string(g + 1);
        l.bus_a = bus_name(bus_no + nbus - 1);  // last bus of g
        l.bus_b = bus_name(bus_no + nbus);      // first bus of g+1
        l.p_buy_max = 100 * kw;
        l.p_sell_max = 100 * kw;
        l.q_buy_max = 40 * kw;
        l.q_sell_max = 40 * kw;
        c.interfaces.push_back(l);
        bus_no += nbus;
    }

    validate_case(c);
    return c;
}

/// Preset lookup used by the CLI and tests.
inline NetworkCase bundled_case(const std::string& name) {
    if (name == "case_mini2") return make_case_mini2();
    if (name == "case33_4mg") return make_case33_4mg();
    if (name == "case123_9mg") return make_case123_9mg();
    throw ParseError("unknown bundled case: " + name);
}

}  // namespace gridmesh

#endif
