#ifndef GRIDMESH_RUNLOG_HPP
#define GRIDMESH_RUNLOG_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridmesh {

class RunLogParseError : public std::runtime_error {
public:
    explicit RunLogParseError(const std::string& what) : std::runtime_error(what) {}
};

/// One append-only record of coordinator activity. Costs and bounds are NaN
/// until the first feasible solution / dual solve exists.
struct RunLogEntry {
    std::int64_t event_seq = 0;
    double sim_time = 0.0;
    std::string actor;  // "coordinator" or a microgrid id
    std::string event;  // solve | arrival | arrival_zero | restore | restore_fail | dual | final
    int r = 0;
    double stepsize = 0.0;
    double violation_norm = 0.0;
    double feasible_cost = std::numeric_limits<double>::quiet_NaN();
    double dual_bound = std::numeric_limits<double>::quiet_NaN();
    double gap = std::numeric_limits<double>::quiet_NaN();
};

struct RunLog {
    std::vector<RunLogEntry> entries;
};

inline std::string runlog_csv_header() {
    return "event_seq,sim_time,actor,event,r,stepsize,violation_norm,feasible_cost,"
           "dual_bound,gap";
}

inline std::string to_csv(const RunLog& log) {
    std::string out = runlog_csv_header() + "\n";
    char buf[512];
    for (const auto& e : log.entries) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%s,%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(e.event_seq), e.sim_time, e.actor.c_str(),
                      e.event.c_str(), e.r, e.stepsize, e.violation_norm,
                      e.feasible_cost, e.dual_bound, e.gap);
        out += buf;
    }
    return out;
}

inline RunLog parse_runlog_csv(const std::string& text) {
    RunLog log;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != runlog_csv_header())
        throw RunLogParseError("missing or unexpected runlog header");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                f.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        f.push_back(cur);
        if (f.size() != 10)
            throw RunLogParseError("line " + std::to_string(lineno) + ": expected 10 fields, got " +
                                   std::to_string(f.size()));
        RunLogEntry e;
        try {
            e.event_seq = std::stoll(f[0]);
            e.sim_time = std::stod(f[1]);
            e.actor = f[2];
            e.event = f[3];
            e.r = std::stoi(f[4]);
            e.stepsize = std::stod(f[5]);
            e.violation_norm = std::stod(f[6]);
            e.feasible_cost = std::stod(f[7]);
            e.dual_bound = std::stod(f[8]);
            e.gap = std::stod(f[9]);
        } catch (const std::exception&) {
            throw RunLogParseError("line " + std::to_string(lineno) + ": bad numeric field");
        }
        log.entries.push_back(std::move(e));
    }
    return log;
}

}  // namespace gridmesh

#endif
