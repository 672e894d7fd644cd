#ifndef GRIDMESH_REPORT_HPP
#define GRIDMESH_REPORT_HPP

#include <cstdio>
#include <string>
#include <vector>

#include "gridmesh/daslr.hpp"
#include "gridmesh/runlog.hpp"
#include "gridmesh/schedule.hpp"

namespace gridmesh {

/// Long-format dump of every dispatch decision:
/// `mg,t,kind,entity,value`, one row per decision, p.u. except freq (Hz).
inline std::string schedule_csv(const NetworkCase& c, const Schedule& s) {
    std::string out = "mg,t,kind,entity,value\n";
    char buf[256];
    auto row = [&](const std::string& mg, int t, const char* kind,
                   const std::string& entity, double v) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%s,%s,%.17g\n", mg.c_str(), t, kind,
                      entity.c_str(), v);
        out += buf;
    };
    for (size_t mi = 0; mi < c.microgrids.size(); ++mi) {
        const Microgrid& mg = c.microgrids[mi];
        for (size_t k = 0; k < s.periods.size() && k < s.mg[mi].size(); ++k) {
            const int t = s.periods[k];
            const MgPeriodSchedule& p = s.mg[mi][k];
            if (p.gen_p.empty() && p.volt.empty()) continue;
            row(mg.id, t, "freq", "-", p.freq);
            for (size_t i = 0; i < mg.ders.size(); ++i) {
                row(mg.id, t, "gen_p", mg.ders[i].id, p.gen_p[i]);
                row(mg.id, t, "gen_q", mg.ders[i].id, p.gen_q[i]);
                if (mg.ders[i].droop) {
                    row(mg.id, t, "droop_p", mg.ders[i].id, p.droop_p[i]);
                    row(mg.id, t, "droop_q", mg.ders[i].id, p.droop_q[i]);
                }
            }
            for (size_t i = 0; i < mg.batteries.size(); ++i) {
                row(mg.id, t, "bat_ch", mg.batteries[i].id, p.bat_ch[i]);
                row(mg.id, t, "bat_dch", mg.batteries[i].id, p.bat_dch[i]);
            }
            for (size_t i = 0; i < mg.buses.size(); ++i) {
                row(mg.id, t, "volt", mg.buses[i].id, p.volt[i]);
                row(mg.id, t, "shed_p", mg.buses[i].id, p.shed_p[i]);
                row(mg.id, t, "shed_q", mg.buses[i].id, p.shed_q[i]);
            }
            for (size_t i = 0; i < mg.lines.size(); ++i) {
                const std::string ln = mg.lines[i].from_bus + ">" + mg.lines[i].to_bus;
                row(mg.id, t, "flow_p", ln, p.flow_p[i]);
                row(mg.id, t, "flow_q", ln, p.flow_q[i]);
            }
            for (const auto& [l, x] : p.exch) {
                const std::string link = "link" + std::to_string(l);
                row(mg.id, t, "exch_pbuy", link, x[0]);
                row(mg.id, t, "exch_psell", link, x[1]);
                row(mg.id, t, "exch_qbuy", link, x[2]);
                row(mg.id, t, "exch_qsell", link, x[3]);
            }
        }
    }
    return out;
}

/// Table-III-style attribution: each MG carries its own generation, battery
/// and shedding cost, and exchanges settle at the final coordination prices.
/// Settlements cancel pairwise on a coupling-consistent schedule, so the
/// column sum equals the plain schedule cost.
inline std::vector<double> per_mg_costs(const NetworkCase& c, const Schedule& s,
                                        const Multipliers& prices) {
    std::vector<double> out(c.microgrids.size(), 0.0);
    for (size_t mi = 0; mi < c.microgrids.size(); ++mi) {
        ExchangeProfile ex;
        for (size_t k = 0; k < s.mg[mi].size(); ++k)
            for (const auto& [l, x] : s.mg[mi][k].exch) {
                auto& series = ex.links[l];
                if (series.size() <= k) series.resize(k + 1, {0.0, 0.0, 0.0, 0.0});
                series[k] = x;
            }
        out[mi] = schedule_cost(c, s, static_cast<int>(mi)) +
                  daslr_detail::lambda_dot(c, static_cast<int>(mi), ex, prices);
    }
    return out;
}

/// Per-MG and total cost rows, one per method, as CSV plus aligned text.
struct CostTable {
    std::vector<std::string> methods;
    std::vector<std::vector<double>> per_mg;  // [row][mg]
    std::vector<double> totals;

    void add_row(const std::string& method, std::vector<double> costs) {
        double total = 0.0;
        for (double v : costs) total += v;
        methods.push_back(method);
        per_mg.push_back(std::move(costs));
        totals.push_back(total);
    }

    std::string csv(const NetworkCase& c) const {
        std::string out = "method";
        for (const auto& mg : c.microgrids) out += "," + mg.id;
        out += ",total\n";
        char buf[64];
        for (size_t r = 0; r < methods.size(); ++r) {
            out += methods[r];
            for (double v : per_mg[r]) {
                std::snprintf(buf, sizeof(buf), ",%.17g", v);
                out += buf;
            }
            std::snprintf(buf, sizeof(buf), ",%.17g\n", totals[r]);
            out += buf;
        }
        return out;
    }

    std::string text(const NetworkCase& c) const {
        std::string out;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%-14s", "method");
        out += buf;
        for (const auto& mg : c.microgrids) {
            std::snprintf(buf, sizeof(buf), "%12s", mg.id.c_str());
            out += buf;
        }
        std::snprintf(buf, sizeof(buf), "%12s\n", "total");
        out += buf;
        for (size_t r = 0; r < methods.size(); ++r) {
            std::snprintf(buf, sizeof(buf), "%-14s", methods[r].c_str());
            out += buf;
            for (double v : per_mg[r]) {
                std::snprintf(buf, sizeof(buf), "%12.4f", v);
                out += buf;
            }
            std::snprintf(buf, sizeof(buf), "%12.4f\n", totals[r]);
            out += buf;
        }
        return out;
    }
};

/// One row per feasibility search in the log: iteration vs cost, the data
/// behind the convergence plots.
inline std::string convergence_trace_csv(const RunLog& log) {
    std::string out = "r,sim_time,event,feasible_cost,dual_bound,gap\n";
    char buf[256];
    for (const auto& e : log.entries) {
        if (e.event != "restore" && e.event != "restore_fail") continue;
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%s,%.17g,%.17g,%.17g\n", e.r, e.sim_time,
                      e.event.c_str(), e.feasible_cost, e.dual_bound, e.gap);
        out += buf;
    }
    return out;
}

}  // namespace gridmesh

#endif
