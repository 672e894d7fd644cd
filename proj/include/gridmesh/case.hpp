#ifndef GRIDMESH_CASE_HPP
#define GRIDMESH_CASE_HPP

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridmesh {

class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};
class NonRadialError : public ValidationError {
public:
    explicit NonRadialError(const std::string& what) : ValidationError(what) {}
};

enum class DerKind { MT, FC, CHP, WT, PV };

inline const char* to_string(DerKind k) {
    switch (k) {
        case DerKind::MT: return "MT";
        case DerKind::FC: return "FC";
        case DerKind::CHP: return "CHP";
        case DerKind::WT: return "WT";
        case DerKind::PV: return "PV";
    }
    return "?";
}

inline DerKind der_kind_from(const std::string& s) {
    if (s == "MT") return DerKind::MT;
    if (s == "FC") return DerKind::FC;
    if (s == "CHP") return DerKind::CHP;
    if (s == "WT") return DerKind::WT;
    if (s == "PV") return DerKind::PV;
    throw ParseError("unknown DER kind: " + s);
}

inline bool is_dispatchable(DerKind k) {
    return k == DerKind::MT || k == DerKind::FC || k == DerKind::CHP;
}

struct Bus {
    std::string id;
    double v_min_pu = 0.95;
    double v_max_pu = 1.05;
    double v_ref_pu = 1.0;
    double shed_p_max = 0.0;  // p.u.
    double shed_q_max = 0.0;
};

struct Line {
    std::string from_bus, to_bus;
    double r_pu = 0.0;
    double x_pu = 0.0;
    double p_flow_max = 1.0;
    double q_flow_max = 1.0;
};

struct DroopSpec {
    double mp_min = 0.02, mp_max = 0.2, mp_step = 0.0018;
    double mq_min = 0.05, mq_max = 0.5, mq_step = 0.0045;
    double contribution_frac = 0.20;
};

struct Der {
    std::string id;
    DerKind kind = DerKind::MT;
    std::string bus;
    double p_min = 0.0, p_max = 0.0;  // p.u.
    double q_min = 0.0, q_max = 0.0;
    double gen_price = 0.0;           // $/kWh
    std::optional<DroopSpec> droop;
    std::vector<double> profile_p;    // renewables only, length = horizon
    std::vector<double> profile_q;

    bool dispatchable() const { return is_dispatchable(kind); }
};

struct Battery {
    std::string id;
    std::string bus;
    double ch_max = 0.0, dch_max = 0.0;   // p.u.
    double ch_price = 0.0, dch_price = 0.0;
};

struct LoadSeries {
    std::vector<double> p;  // p.u., length = horizon
    std::vector<double> q;
};

struct Microgrid {
    std::string id;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Der> ders;
    std::vector<Battery> batteries;
    double pcc_voltage_pu = 1.0;
    double f_ref_hz = 60.0;
    std::map<std::string, LoadSeries> loads;  // keyed by bus id

    int bus_index(const std::string& id_) const {
        for (size_t i = 0; i < buses.size(); ++i)
            if (buses[i].id == id_) return static_cast<int>(i);
        return -1;
    }
};

struct InterfaceLink {
    std::string mg_a, mg_b;
    std::string bus_a, bus_b;
    double p_buy_max = 0.0, p_sell_max = 0.0;
    double q_buy_max = 0.0, q_sell_max = 0.0;
};

struct PriceTable {
    double shed_price = 10.0;  // $/kWh, applied to both P and Q shedding
    std::map<std::string, double> gen_price_defaults;  // by DER kind name
};

struct NetworkCase {
    std::string name;
    double power_base_mva = 10.0;
    int horizon = 24;
    double period_hours = 1.0;
    std::vector<Microgrid> microgrids;
    std::vector<InterfaceLink> interfaces;
    PriceTable prices;

    // When false, line flows use the paper-literal [0, max] bounds; when true,
    // flows may reverse within [-max, max].
    bool symmetric_flows = false;

    int mg_index(const std::string& id) const {
        for (size_t i = 0; i < microgrids.size(); ++i)
            if (microgrids[i].id == id) return static_cast<int>(i);
        return -1;
    }

    double base_kw() const { return power_base_mva * 1000.0; }
};

/// Discrete droop-coefficient grid: {min + l*step : l = 0..D}, both endpoints
/// included. Grid well-formedness is enforced at load.
inline std::vector<double> droop_grid(double lo, double hi, double step) {
    if (hi <= lo + 1e-15) return {lo};
    const long d = std::lround((hi - lo) / step);
    std::vector<double> g(static_cast<size_t>(d) + 1);
    for (long l = 0; l <= d; ++l) g[static_cast<size_t>(l)] = lo + static_cast<double>(l) * step;
    g.back() = hi;  // pin the endpoint against fp drift
    return g;
}

inline std::vector<double> droop_grid_p(const DroopSpec& s) {
    return droop_grid(s.mp_min, s.mp_max, s.mp_step);
}
inline std::vector<double> droop_grid_q(const DroopSpec& s) {
    return droop_grid(s.mq_min, s.mq_max, s.mq_step);
}

/// Tree layout of a microgrid's line graph rooted at the PCC (first bus).
/// Throws NonRadialError on cycles or disconnection.
struct RadialLayout {
    // per line index: parent bus index, child bus index (orientation from the
    // root, independent of the from/to order in the case file)
    std::vector<int> parent_bus, child_bus;
    std::vector<std::vector<int>> child_lines;  // per bus: outgoing line idx
    std::vector<int> inflow_line;               // per bus: line from its parent, -1 at root

    static RadialLayout build(const Microgrid& mg) {
        const int nb = static_cast<int>(mg.buses.size());
        const int nl = static_cast<int>(mg.lines.size());
        if (nl != nb - 1)
            throw NonRadialError("microgrid " + mg.id + ": " + std::to_string(nl) +
                                 " lines for " + std::to_string(nb) +
                                 " buses (tree requires buses-1)");
        std::vector<std::vector<std::pair<int, int>>> adj(static_cast<size_t>(nb));
        for (int e = 0; e < nl; ++e) {
            const int a = mg.bus_index(mg.lines[static_cast<size_t>(e)].from_bus);
            const int b = mg.bus_index(mg.lines[static_cast<size_t>(e)].to_bus);
            adj[static_cast<size_t>(a)].push_back({b, e});
            adj[static_cast<size_t>(b)].push_back({a, e});
        }
        RadialLayout lay;
        lay.parent_bus.assign(static_cast<size_t>(nl), -1);
        lay.child_bus.assign(static_cast<size_t>(nl), -1);
        lay.child_lines.assign(static_cast<size_t>(nb), {});
        lay.inflow_line.assign(static_cast<size_t>(nb), -1);
        std::vector<bool> seen(static_cast<size_t>(nb), false);
        std::vector<int> stack{0};
        seen[0] = true;
        int visited = 0;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            ++visited;
            for (const auto& [v, e] : adj[static_cast<size_t>(u)]) {
                if (seen[static_cast<size_t>(v)]) continue;
                seen[static_cast<size_t>(v)] = true;
                lay.parent_bus[static_cast<size_t>(e)] = u;
                lay.child_bus[static_cast<size_t>(e)] = v;
                lay.child_lines[static_cast<size_t>(u)].push_back(e);
                lay.inflow_line[static_cast<size_t>(v)] = e;
                stack.push_back(v);
            }
        }
        if (visited != nb)
            throw NonRadialError("microgrid " + mg.id + ": line graph is disconnected");
        for (int e = 0; e < nl; ++e)
            if (lay.parent_bus[static_cast<size_t>(e)] < 0)
                throw NonRadialError("microgrid " + mg.id + ": line graph has a cycle");
        return lay;
    }
};

namespace detail {

inline void check(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

}  // namespace detail

inline void validate_droop(const DroopSpec& d, const std::string& who) {
    using detail::check;
    auto grid_ok = [](double lo, double hi, double step) {
        if (hi < lo || lo <= 0.0 || step <= 0.0) return false;
        if (hi == lo) return true;
        const double steps = (hi - lo) / step;
        return std::fabs(steps - std::round(steps)) < 1e-6 * std::max(1.0, steps);
    };
    check(grid_ok(d.mp_min, d.mp_max, d.mp_step), who + ": malformed m_p droop grid");
    check(grid_ok(d.mq_min, d.mq_max, d.mq_step), who + ": malformed m_q droop grid");
    check(d.contribution_frac > 0.0 && d.contribution_frac <= 1.0,
          who + ": contribution_frac outside (0,1]");
}

inline void validate_case(const NetworkCase& c) {
    using detail::check;
    check(c.horizon >= 1, "case " + c.name + ": horizon must be >= 1");
    check(c.power_base_mva > 0.0, "case " + c.name + ": power_base_mva must be positive");
    check(c.period_hours > 0.0, "case " + c.name + ": period_hours must be positive");
    check(c.prices.shed_price >= 0.0, "case " + c.name + ": negative shed_price");
    for (const auto& [k, p] : c.prices.gen_price_defaults)
        check(p >= 0.0, "case " + c.name + ": negative gen price default for " + k);

    std::map<std::string, int> mg_seen;
    for (const auto& mg : c.microgrids) {
        check(mg_seen.emplace(mg.id, 1).second, "duplicate microgrid id " + mg.id);
        check(!mg.buses.empty(), "microgrid " + mg.id + " has no buses");
        check(mg.pcc_voltage_pu > 0.0, "microgrid " + mg.id + ": pcc_voltage_pu must be positive");
        std::map<std::string, int> bus_seen;
        for (const auto& b : mg.buses) {
            check(bus_seen.emplace(b.id, 1).second,
                  "microgrid " + mg.id + ": duplicate bus id " + b.id);
            check(b.v_min_pu > 0.0 && b.v_min_pu <= b.v_ref_pu && b.v_ref_pu <= b.v_max_pu,
                  "bus " + b.id + ": need 0 < v_min <= v_ref <= v_max");
            check(b.shed_p_max >= 0.0 && b.shed_q_max >= 0.0,
                  "bus " + b.id + ": negative shed limit");
        }
        for (const auto& l : mg.lines) {
            check(mg.bus_index(l.from_bus) >= 0,
                  "microgrid " + mg.id + ": line endpoint " + l.from_bus + " missing");
            check(mg.bus_index(l.to_bus) >= 0,
                  "microgrid " + mg.id + ": line endpoint " + l.to_bus + " missing");
            check(l.r_pu >= 0.0 && l.x_pu >= 0.0,
                  "line " + l.from_bus + "-" + l.to_bus + ": negative impedance");
            check(l.p_flow_max > 0.0 && l.q_flow_max > 0.0,
                  "line " + l.from_bus + "-" + l.to_bus + ": flow limits must be positive");
        }
        RadialLayout::build(mg);  // throws NonRadialError on violation
        for (const auto& d : mg.ders) {
            check(mg.bus_index(d.bus) >= 0, "DER " + d.id + ": bus " + d.bus + " missing");
            check(d.p_min <= d.p_max, "DER " + d.id + ": p_min > p_max");
            check(d.q_min <= d.q_max, "DER " + d.id + ": q_min > q_max");
            check(d.gen_price >= 0.0, "DER " + d.id + ": negative gen_price");
            if (d.dispatchable()) {
                check(d.droop.has_value(), "DER " + d.id + ": dispatchable unit needs droop spec");
                validate_droop(*d.droop, "DER " + d.id);
                check(d.profile_p.empty() && d.profile_q.empty(),
                      "DER " + d.id + ": dispatchable unit must not carry a profile");
            } else {
                check(d.profile_p.size() == static_cast<size_t>(c.horizon) &&
                          d.profile_q.size() == static_cast<size_t>(c.horizon),
                      "DER " + d.id + ": renewable profile length must equal horizon");
            }
        }
        for (const auto& b : mg.batteries) {
            check(mg.bus_index(b.bus) >= 0, "battery " + b.id + ": bus " + b.bus + " missing");
            check(b.ch_max >= 0.0 && b.dch_max >= 0.0, "battery " + b.id + ": negative limit");
            check(b.ch_price >= 0.0 && b.dch_price >= 0.0, "battery " + b.id + ": negative price");
        }
        for (const auto& b : mg.buses) {
            auto it = mg.loads.find(b.id);
            check(it != mg.loads.end(), "microgrid " + mg.id + ": bus " + b.id + " has no load series");
            check(it->second.p.size() == static_cast<size_t>(c.horizon) &&
                      it->second.q.size() == static_cast<size_t>(c.horizon),
                  "microgrid " + mg.id + ": load series at " + b.id +
                      " must have horizon entries");
        }
        for (const auto& [bid, unused] : mg.loads)
            check(mg.bus_index(bid) >= 0,
                  "microgrid " + mg.id + ": load series for unknown bus " + bid);
    }

    std::map<std::pair<std::string, std::string>, int> link_seen;
    for (const auto& l : c.interfaces) {
        check(l.mg_a != l.mg_b, "interface links microgrid " + l.mg_a + " to itself");
        const int a = c.mg_index(l.mg_a);
        const int b = c.mg_index(l.mg_b);
        check(a >= 0, "interface references unknown microgrid " + l.mg_a);
        check(b >= 0, "interface references unknown microgrid " + l.mg_b);
        check(c.microgrids[static_cast<size_t>(a)].bus_index(l.bus_a) >= 0,
              "interface bus " + l.bus_a + " missing in " + l.mg_a);
        check(c.microgrids[static_cast<size_t>(b)].bus_index(l.bus_b) >= 0,
              "interface bus " + l.bus_b + " missing in " + l.mg_b);
        check(l.p_buy_max >= 0.0 && l.p_sell_max >= 0.0 && l.q_buy_max >= 0.0 &&
                  l.q_sell_max >= 0.0,
              "interface " + l.mg_a + "-" + l.mg_b + ": negative limit");
        auto key = l.mg_a < l.mg_b ? std::make_pair(l.mg_a, l.mg_b)
                                   : std::make_pair(l.mg_b, l.mg_a);
        check(link_seen.emplace(key, 1).second,
              "duplicate interface between " + l.mg_a + " and " + l.mg_b);
    }
}

/// Copy of the case with every droop grid coarsened to at most `levels`
/// values (endpoints kept) and, optionally, contribution_frac overridden.
/// Used by experiment presets; the droop step is re-derived from the span.
inline NetworkCase with_droop_settings(const NetworkCase& c, int levels,
                                       double contribution_frac = -1.0) {
    NetworkCase out = c;
    for (auto& mg : out.microgrids) {
        for (auto& d : mg.ders) {
            if (!d.droop) continue;
            auto& dr = *d.droop;
            if (levels >= 1) {
                if (levels == 1) {
                    dr.mp_min = dr.mp_max;
                    dr.mq_min = dr.mq_max;
                    dr.mp_step = dr.mq_step = 1.0;
                } else {
                    dr.mp_step = (dr.mp_max - dr.mp_min) / (levels - 1);
                    dr.mq_step = (dr.mq_max - dr.mq_min) / (levels - 1);
                    if (dr.mp_step <= 0.0) dr.mp_step = 1.0;
                    if (dr.mq_step <= 0.0) dr.mq_step = 1.0;
                }
            }
            if (contribution_frac > 0.0) dr.contribution_frac = contribution_frac;
        }
    }
    return out;
}

/// Copy of the case truncated to the first `horizon` periods.
inline NetworkCase with_horizon(const NetworkCase& c, int horizon) {
    NetworkCase out = c;
    if (horizon >= c.horizon) return out;
    out.horizon = horizon;
    auto trunc = [&](std::vector<double>& v) {
        if (v.size() > static_cast<size_t>(horizon)) v.resize(static_cast<size_t>(horizon));
    };
    for (auto& mg : out.microgrids) {
        for (auto& d : mg.ders) { trunc(d.profile_p); trunc(d.profile_q); }
        for (auto& [bid, ls] : mg.loads) { trunc(ls.p); trunc(ls.q); }
    }
    return out;
}

}  // namespace gridmesh

#endif
