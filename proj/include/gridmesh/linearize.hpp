#ifndef GRIDMESH_LINEARIZE_HPP
#define GRIDMESH_LINEARIZE_HPP

#include <cmath>
#include <string>
#include <vector>

#include "gridmesh/milp.hpp"

namespace gridmesh {

class UnboundedFactor : public ModelError {
public:
    explicit UnboundedFactor(const std::string& what) : ModelError(what) {}
};
class EmptyGrid : public ModelError {
public:
    explicit EmptyGrid(const std::string& what) : ModelError(what) {}
};

/// Exact product z = A * d for a bounded continuous A and binary d, via the
/// four standard inequalities. Returns the index of the new z variable.
inline int linearize_binary_product(MilpModel& m, int a_var, int d_var,
                                    const std::string& tag) {
    const VarMeta& a = m.variables[static_cast<size_t>(a_var)];
    if (!std::isfinite(a.lower) || !std::isfinite(a.upper))
        throw UnboundedFactor("linearize " + tag + ": factor " + a.name +
                              " needs finite bounds");
    const double lo = a.lower, hi = a.upper;
    const int z = m.add_var(tag, std::min(0.0, lo), std::max(0.0, hi),
                            VarKind::Continuous, 0.0);
    // z <= hi*d ; z >= lo*d ; z <= A - lo*(1-d) ; z >= A - hi*(1-d)
    m.add_row({{z, 1.0}, {d_var, -hi}}, RowSense::LE, 0.0, tag + ".ub0");
    m.add_row({{z, 1.0}, {d_var, -lo}}, RowSense::GE, 0.0, tag + ".lb0");
    m.add_row({{z, 1.0}, {a_var, -1.0}, {d_var, -lo}}, RowSense::LE, -lo, tag + ".ubA");
    m.add_row({{z, 1.0}, {a_var, -1.0}, {d_var, -hi}}, RowSense::GE, -hi, tag + ".lbA");
    return z;
}

struct IntegerProduct {
    std::vector<int> selectors;  // one-hot binaries, one per grid level
    int z = -1;                  // z = grid[selected] * A
    std::vector<int> level_products;
};

/// Product of a bounded continuous A with a value chosen from a discrete grid:
/// one-hot selectors w_l, per-level products y_l = A*w_l, and
/// z = sum_l grid[l]*y_l. In any feasible integer point z = grid[l*]*A where
/// l* is the selected level.
inline IntegerProduct linearize_integer_product(MilpModel& m, int a_var,
                                                const std::vector<double>& grid,
                                                const std::string& tag) {
    if (grid.empty()) throw EmptyGrid("linearize " + tag + ": empty grid");
    // copy the bounds: add_var below may reallocate the variable table
    const double alo = m.variables[static_cast<size_t>(a_var)].lower;
    const double ahi = m.variables[static_cast<size_t>(a_var)].upper;
    if (!std::isfinite(alo) || !std::isfinite(ahi))
        throw UnboundedFactor("linearize " + tag + ": factor " +
                              m.variables[static_cast<size_t>(a_var)].name +
                              " needs finite bounds");
    IntegerProduct out;
    Row onehot;
    onehot.sense = RowSense::EQ;
    onehot.rhs = 1.0;
    onehot.name = tag + ".onehot";
    double zlo = 0.0, zhi = 0.0;
    for (size_t l = 0; l < grid.size(); ++l) {
        const int w = m.add_var(tag + ".w" + std::to_string(l), 0.0, 1.0,
                                VarKind::Binary, 0.0);
        out.selectors.push_back(w);
        onehot.coeffs.push_back({w, 1.0});
        const int y = linearize_binary_product(m, a_var, w, tag + ".y" + std::to_string(l));
        out.level_products.push_back(y);
        const double c1 = grid[l] * alo, c2 = grid[l] * ahi;
        zlo = std::min({zlo, c1, c2});
        zhi = std::max({zhi, c1, c2});
    }
    m.add_row(std::move(onehot));
    m.add_sos1(out.selectors);
    out.z = m.add_var(tag, zlo, zhi, VarKind::Continuous, 0.0);
    Row def;
    def.sense = RowSense::EQ;
    def.rhs = 0.0;
    def.name = tag + ".def";
    def.coeffs.push_back({out.z, 1.0});
    for (size_t l = 0; l < grid.size(); ++l)
        def.coeffs.push_back({out.level_products[l], -grid[l]});
    m.add_row(std::move(def));
    return out;
}

}  // namespace gridmesh

#endif
