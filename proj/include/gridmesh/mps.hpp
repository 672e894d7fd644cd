#ifndef GRIDMESH_MPS_HPP
#define GRIDMESH_MPS_HPP

#include <cstdio>
#include <ostream>
#include <string>

#include "gridmesh/milp.hpp"

namespace gridmesh {

/// Fixed-column MPS writer, for debugging models against external solvers.
/// Names are synthesized (C0001.., R0001..) so column alignment always holds.
inline void write_mps(const MilpModel& model, std::ostream& os,
                      const std::string& name = "GRIDMESH") {
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%-12.6g", v);
        return std::string(buf);
    };
    auto rname = [](size_t i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "R%07zu", i + 1);
        return std::string(buf);
    };
    auto cname = [](size_t j) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "C%07zu", j + 1);
        return std::string(buf);
    };

    os << "NAME          " << name << "\n";
    os << "ROWS\n";
    os << " N  COST\n";
    for (size_t i = 0; i < model.constraints.size(); ++i) {
        char s = 'E';
        if (model.constraints[i].sense == RowSense::LE) s = 'L';
        else if (model.constraints[i].sense == RowSense::GE) s = 'G';
        os << " " << s << "  " << rname(i) << "\n";
    }

    // column-major entries
    std::vector<std::vector<std::pair<size_t, double>>> bycol(model.num_vars());
    for (size_t i = 0; i < model.constraints.size(); ++i)
        for (const auto& [j, a] : model.constraints[i].coeffs)
            bycol[static_cast<size_t>(j)].push_back({i, a});

    os << "COLUMNS\n";
    bool in_int = false;
    for (size_t j = 0; j < model.num_vars(); ++j) {
        const auto& v = model.variables[j];
        const bool is_int = v.kind != VarKind::Continuous;
        if (is_int != in_int) {
            os << "    MARKER                 'MARKER'                 '"
               << (is_int ? "INTORG" : "INTEND") << "'\n";
            in_int = is_int;
        }
        if (v.obj != 0.0)
            os << "    " << cname(j) << "  COST      " << num(v.obj) << "\n";
        for (const auto& [i, a] : bycol[j])
            os << "    " << cname(j) << "  " << rname(i) << "  " << num(a) << "\n";
    }
    if (in_int)
        os << "    MARKER                 'MARKER'                 'INTEND'\n";

    os << "RHS\n";
    for (size_t i = 0; i < model.constraints.size(); ++i)
        if (model.constraints[i].rhs != 0.0)
            os << "    RHS       " << rname(i) << "  " << num(model.constraints[i].rhs) << "\n";

    os << "BOUNDS\n";
    for (size_t j = 0; j < model.num_vars(); ++j) {
        const auto& v = model.variables[j];
        if (v.lower == 0.0 && v.upper == kInf) continue;
        if (v.lower == v.upper) {
            os << " FX BND       " << cname(j) << "  " << num(v.lower) << "\n";
            continue;
        }
        if (v.lower == -kInf && v.upper == kInf) {
            os << " FR BND       " << cname(j) << "\n";
            continue;
        }
        if (v.lower != 0.0) {
            if (v.lower == -kInf) os << " MI BND       " << cname(j) << "\n";
            else os << " LO BND       " << cname(j) << "  " << num(v.lower) << "\n";
        }
        if (v.upper != kInf)
            os << " UP BND       " << cname(j) << "  " << num(v.upper) << "\n";
    }
    os << "ENDATA\n";
}

}  // namespace gridmesh

#endif
