#ifndef GRIDMESH_CASE_IO_HPP
#define GRIDMESH_CASE_IO_HPP

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gridmesh/case.hpp"

namespace gridmesh {

// Case files are a single JSON document with sections `system`,
// `microgrids[]`, `interfaces[]`, `prices`. Powers may be given in p.u.
// (default) or in kW/kVAR by setting system.units to "kw"; they are converted
// onto power_base_mva at load. Impedances and voltages are always p.u.

namespace caseio_detail {

using nlohmann::json;

inline double num(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_number())
        throw ParseError(ctx + ": missing or non-numeric field '" + key + "'");
    return j[key].get<double>();
}

inline double num_or(const json& j, const char* key, double dflt) {
    return j.contains(key) ? j[key].get<double>() : dflt;
}

inline std::string str(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_string())
        throw ParseError(ctx + ": missing or non-string field '" + key + "'");
    return j[key].get<std::string>();
}

inline std::vector<double> series(const json& j, const char* key, const std::string& ctx,
                                  double divisor) {
    if (!j.contains(key) || !j[key].is_array())
        throw ParseError(ctx + ": missing or non-array field '" + key + "'");
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) throw ParseError(ctx + ": non-numeric entry in '" + key + "'");
        out.push_back(v.get<double>() / divisor);
    }
    return out;
}

}  // namespace caseio_detail

inline NetworkCase parse_case(const std::string& text, const std::string& origin = "<memory>") {
    using namespace caseio_detail;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("system") || !doc.contains("microgrids"))
        throw ParseError(origin + ": case document needs 'system' and 'microgrids' sections");

    NetworkCase c;
    const json& sys = doc["system"];
    c.name = sys.contains("name") ? sys["name"].get<std::string>() : origin;
    c.power_base_mva = num(sys, "power_base_mva", "system");
    c.horizon = static_cast<int>(num(sys, "horizon", "system"));
    c.period_hours = num_or(sys, "period_hours", 1.0);
    c.symmetric_flows = sys.contains("symmetric_flows") && sys["symmetric_flows"].get<bool>();
    double pdiv = 1.0;
    if (sys.contains("units")) {
        const std::string u = sys["units"].get<std::string>();
        if (u == "kw") pdiv = c.power_base_mva * 1000.0;
        else if (u != "pu") throw ParseError("system.units must be 'pu' or 'kw'");
    }

    if (doc.contains("prices")) {
        const json& pr = doc["prices"];
        c.prices.shed_price = num_or(pr, "shed_price", c.prices.shed_price);
        if (pr.contains("gen_price_defaults"))
            for (const auto& [k, v] : pr["gen_price_defaults"].items())
                c.prices.gen_price_defaults[k] = v.get<double>();
    }

    for (const auto& jm : doc["microgrids"]) {
        Microgrid mg;
        mg.id = str(jm, "id", "microgrid");
        mg.pcc_voltage_pu = num_or(jm, "pcc_voltage_pu", 1.0);
        mg.f_ref_hz = num_or(jm, "f_ref_hz", 60.0);
        for (const auto& jb : jm.value("buses", json::array())) {
            Bus b;
            b.id = str(jb, "id", "bus in " + mg.id);
            b.v_min_pu = num_or(jb, "v_min_pu", 0.95);
            b.v_max_pu = num_or(jb, "v_max_pu", 1.05);
            b.v_ref_pu = num_or(jb, "v_ref_pu", 1.0);
            b.shed_p_max = num_or(jb, "shed_p_max", 0.0) / pdiv;
            b.shed_q_max = num_or(jb, "shed_q_max", 0.0) / pdiv;
            mg.buses.push_back(std::move(b));
        }
        for (const auto& jl : jm.value("lines", json::array())) {
            Line l;
            l.from_bus = str(jl, "from", "line in " + mg.id);
            l.to_bus = str(jl, "to", "line in " + mg.id);
            l.r_pu = num(jl, "r_pu", "line " + l.from_bus + "-" + l.to_bus);
            l.x_pu = num(jl, "x_pu", "line " + l.from_bus + "-" + l.to_bus);
            l.p_flow_max = num_or(jl, "p_flow_max", 1.0) / pdiv;
            l.q_flow_max = num_or(jl, "q_flow_max", 1.0) / pdiv;
            mg.lines.push_back(std::move(l));
        }
        for (const auto& jd : jm.value("ders", json::array())) {
            Der d;
            d.id = str(jd, "id", "der in " + mg.id);
            d.kind = der_kind_from(str(jd, "kind", "der " + d.id));
            d.bus = str(jd, "bus", "der " + d.id);
            d.p_min = num_or(jd, "p_min", 0.0) / pdiv;
            d.p_max = num_or(jd, "p_max", 0.0) / pdiv;
            d.q_min = num_or(jd, "q_min", 0.0) / pdiv;
            d.q_max = num_or(jd, "q_max", 0.0) / pdiv;
            if (jd.contains("gen_price")) d.gen_price = jd["gen_price"].get<double>();
            else {
                auto it = c.prices.gen_price_defaults.find(to_string(d.kind));
                d.gen_price = it == c.prices.gen_price_defaults.end() ? 0.0 : it->second;
            }
            if (jd.contains("droop")) {
                const json& jr = jd["droop"];
                DroopSpec dr;
                dr.mp_min = num_or(jr, "mp_min", dr.mp_min);
                dr.mp_max = num_or(jr, "mp_max", dr.mp_max);
                dr.mp_step = num_or(jr, "mp_step", dr.mp_step);
                dr.mq_min = num_or(jr, "mq_min", dr.mq_min);
                dr.mq_max = num_or(jr, "mq_max", dr.mq_max);
                dr.mq_step = num_or(jr, "mq_step", dr.mq_step);
                dr.contribution_frac = num_or(jr, "contribution_frac", dr.contribution_frac);
                d.droop = dr;
            } else if (d.dispatchable()) {
                d.droop = DroopSpec{};  // defaults
            }
            if (jd.contains("profile_p")) d.profile_p = series(jd, "profile_p", "der " + d.id, pdiv);
            if (jd.contains("profile_q")) d.profile_q = series(jd, "profile_q", "der " + d.id, pdiv);
            mg.ders.push_back(std::move(d));
        }
        for (const auto& jb : jm.value("batteries", json::array())) {
            Battery b;
            b.id = str(jb, "id", "battery in " + mg.id);
            b.bus = str(jb, "bus", "battery " + b.id);
            b.ch_max = num_or(jb, "ch_max", 0.0) / pdiv;
            b.dch_max = num_or(jb, "dch_max", 0.0) / pdiv;
            b.ch_price = num_or(jb, "ch_price", 0.0);
            b.dch_price = num_or(jb, "dch_price", 0.0);
            mg.batteries.push_back(std::move(b));
        }
        if (jm.contains("loads"))
            for (const auto& [bid, js] : jm["loads"].items()) {
                LoadSeries ls;
                ls.p = series(js, "p", "loads at " + bid, pdiv);
                ls.q = series(js, "q", "loads at " + bid, pdiv);
                mg.loads[bid] = std::move(ls);
            }
        c.microgrids.push_back(std::move(mg));
    }

    for (const auto& jl : doc.value("interfaces", json::array())) {
        InterfaceLink l;
        l.mg_a = str(jl, "mg_a", "interface");
        l.mg_b = str(jl, "mg_b", "interface");
        l.bus_a = str(jl, "bus_a", "interface " + l.mg_a + "-" + l.mg_b);
        l.bus_b = str(jl, "bus_b", "interface " + l.mg_a + "-" + l.mg_b);
        l.p_buy_max = num_or(jl, "p_buy_max", 0.0) / pdiv;
        l.p_sell_max = num_or(jl, "p_sell_max", 0.0) / pdiv;
        l.q_buy_max = num_or(jl, "q_buy_max", 0.0) / pdiv;
        l.q_sell_max = num_or(jl, "q_sell_max", 0.0) / pdiv;
        c.interfaces.push_back(std::move(l));
    }

    validate_case(c);
    return c;
}

inline NetworkCase load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open case file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str(), path);
}

/// Serializes back to the case schema, always in p.u.
inline std::string serialize_case(const NetworkCase& c) {
    using nlohmann::json;
    json doc;
    doc["system"] = {{"name", c.name},
                     {"power_base_mva", c.power_base_mva},
                     {"horizon", c.horizon},
                     {"period_hours", c.period_hours},
                     {"units", "pu"},
                     {"symmetric_flows", c.symmetric_flows}};
    doc["prices"] = {{"shed_price", c.prices.shed_price},
                     {"gen_price_defaults", c.prices.gen_price_defaults}};
    doc["microgrids"] = json::array();
    for (const auto& mg : c.microgrids) {
        json jm;
        jm["id"] = mg.id;
        jm["pcc_voltage_pu"] = mg.pcc_voltage_pu;
        jm["f_ref_hz"] = mg.f_ref_hz;
        jm["buses"] = json::array();
        for (const auto& b : mg.buses)
            jm["buses"].push_back({{"id", b.id},
                                   {"v_min_pu", b.v_min_pu},
                                   {"v_max_pu", b.v_max_pu},
                                   {"v_ref_pu", b.v_ref_pu},
                                   {"shed_p_max", b.shed_p_max},
                                   {"shed_q_max", b.shed_q_max}});
        jm["lines"] = json::array();
        for (const auto& l : mg.lines)
            jm["lines"].push_back({{"from", l.from_bus},
                                   {"to", l.to_bus},
                                   {"r_pu", l.r_pu},
                                   {"x_pu", l.x_pu},
                                   {"p_flow_max", l.p_flow_max},
                                   {"q_flow_max", l.q_flow_max}});
        jm["ders"] = json::array();
        for (const auto& d : mg.ders) {
            json jd = {{"id", d.id},     {"kind", to_string(d.kind)}, {"bus", d.bus},
                       {"p_min", d.p_min}, {"p_max", d.p_max},
                       {"q_min", d.q_min}, {"q_max", d.q_max},
                       {"gen_price", d.gen_price}};
            if (d.droop)
                jd["droop"] = {{"mp_min", d.droop->mp_min}, {"mp_max", d.droop->mp_max},
                               {"mp_step", d.droop->mp_step}, {"mq_min", d.droop->mq_min},
                               {"mq_max", d.droop->mq_max}, {"mq_step", d.droop->mq_step},
                               {"contribution_frac", d.droop->contribution_frac}};
            if (!d.profile_p.empty()) jd["profile_p"] = d.profile_p;
            if (!d.profile_q.empty()) jd["profile_q"] = d.profile_q;
            jm["ders"].push_back(std::move(jd));
        }
        jm["batteries"] = json::array();
        for (const auto& b : mg.batteries)
            jm["batteries"].push_back({{"id", b.id}, {"bus", b.bus},
                                       {"ch_max", b.ch_max}, {"dch_max", b.dch_max},
                                       {"ch_price", b.ch_price}, {"dch_price", b.dch_price}});
        jm["loads"] = json::object();
        for (const auto& [bid, ls] : mg.loads)
            jm["loads"][bid] = {{"p", ls.p}, {"q", ls.q}};
        doc["microgrids"].push_back(std::move(jm));
    }
    doc["interfaces"] = json::array();
    for (const auto& l : c.interfaces)
        doc["interfaces"].push_back({{"mg_a", l.mg_a}, {"mg_b", l.mg_b},
                                     {"bus_a", l.bus_a}, {"bus_b", l.bus_b},
                                     {"p_buy_max", l.p_buy_max}, {"p_sell_max", l.p_sell_max},
                                     {"q_buy_max", l.q_buy_max}, {"q_sell_max", l.q_sell_max}});
    return doc.dump(2);
}

}  // namespace gridmesh

#endif
