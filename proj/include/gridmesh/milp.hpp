#ifndef GRIDMESH_MILP_HPP
#define GRIDMESH_MILP_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gridmesh {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Binary, Integer };
enum class RowSense { LE, EQ, GE };

struct VarMeta {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    VarKind kind = VarKind::Continuous;
    double obj = 0.0;
};

struct Row {
    std::vector<std::pair<int, double>> coeffs;  // (var index, coefficient)
    RowSense sense = RowSense::LE;
    double rhs = 0.0;
    std::string name;
};

class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

/// Sparse minimization model. Variables carry their bounds and objective
/// coefficients; rows are sparse with an explicit sense.
struct MilpModel {
    std::vector<VarMeta> variables;
    std::vector<Row> constraints;
    // ordered one-hot groups (at most one member nonzero); branch-and-bound
    // splits these by range instead of branching member by member
    std::vector<std::vector<int>> sos1;

    int add_var(std::string name, double lower, double upper, VarKind kind, double obj = 0.0) {
        if (kind == VarKind::Binary) {
            lower = std::max(lower, 0.0);
            upper = std::min(upper, 1.0);
        }
        variables.push_back({std::move(name), lower, upper, kind, obj});
        return static_cast<int>(variables.size()) - 1;
    }

    int add_row(Row row) {
        constraints.push_back(std::move(row));
        return static_cast<int>(constraints.size()) - 1;
    }

    int add_row(std::vector<std::pair<int, double>> coeffs, RowSense sense, double rhs,
                std::string name = {}) {
        return add_row(Row{std::move(coeffs), sense, rhs, std::move(name)});
    }

    void add_sos1(std::vector<int> members) {
        if (members.size() > 1) sos1.push_back(std::move(members));
    }

    void set_obj(int var, double c) { variables[static_cast<size_t>(var)].obj = c; }
    void add_obj(int var, double c) { variables[static_cast<size_t>(var)].obj += c; }

    void fix_var(int var, double value) {
        auto& v = variables[static_cast<size_t>(var)];
        v.lower = value;
        v.upper = value;
    }

    size_t num_vars() const { return variables.size(); }
    size_t num_rows() const { return constraints.size(); }

    bool has_integers() const {
        for (const auto& v : variables)
            if (v.kind != VarKind::Continuous) return true;
        return false;
    }

    void validate() const {
        const int n = static_cast<int>(variables.size());
        for (const auto& v : variables) {
            if (std::isnan(v.lower) || std::isnan(v.upper))
                throw ModelError("variable " + v.name + " has NaN bound");
            if (v.lower > v.upper)
                throw ModelError("variable " + v.name + " has crossed bounds");
            if (v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0))
                throw ModelError("binary variable " + v.name + " has bounds outside [0,1]");
            if (v.kind == VarKind::Integer &&
                (!std::isfinite(v.lower) || !std::isfinite(v.upper)))
                throw ModelError("integer variable " + v.name + " needs finite bounds");
            if (std::isnan(v.obj) || std::isinf(v.obj))
                throw ModelError("variable " + v.name + " has bad objective coefficient");
        }
        for (const auto& set : sos1)
            for (int j : set)
                if (j < 0 || j >= n) throw ModelError("sos1 set references unknown variable");
        for (size_t r = 0; r < constraints.size(); ++r) {
            const auto& row = constraints[r];
            if (std::isnan(row.rhs) || std::isinf(row.rhs))
                throw ModelError("row " + std::to_string(r) + " has bad rhs");
            for (const auto& [j, a] : row.coeffs) {
                if (j < 0 || j >= n)
                    throw ModelError("row " + std::to_string(r) + " references unknown variable");
                if (std::isnan(a) || std::isinf(a))
                    throw ModelError("row " + std::to_string(r) + " has bad coefficient");
            }
        }
    }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::Unbounded: return "Unbounded";
        case SolveStatus::IterLimit: return "IterLimit";
    }
    return "?";
}

struct MilpSolution {
    SolveStatus status = SolveStatus::Infeasible;
    double objective = 0.0;
    double best_bound = -kInf;
    std::vector<double> values;
    std::int64_t node_count = 0;
    std::int64_t simplex_iters = 0;
};

struct SolveOptions {
    double feas_tol = 1e-7;
    double int_tol = 1e-6;
    double gap_tol = 1e-6;          // relative incumbent-vs-bound gap
    std::int64_t node_limit = 500000;
    std::int64_t simplex_iter_limit = 2000000;
    double time_limit_sec = 0.0;    // 0 = unlimited
    double cutoff = kInf;           // prune nodes at or above this objective
};

/// Residual of a single row at a point (LHS minus the bound in the violated
/// direction; 0 when satisfied).
inline double row_violation(const Row& row, const std::vector<double>& x) {
    double lhs = 0.0;
    for (const auto& [j, a] : row.coeffs) lhs += a * x[static_cast<size_t>(j)];
    switch (row.sense) {
        case RowSense::LE: return std::max(0.0, lhs - row.rhs);
        case RowSense::GE: return std::max(0.0, row.rhs - lhs);
        case RowSense::EQ: return std::fabs(lhs - row.rhs);
    }
    return 0.0;
}

inline double max_violation(const MilpModel& model, const std::vector<double>& x) {
    double worst = 0.0;
    for (const auto& row : model.constraints)
        worst = std::max(worst, row_violation(row, x));
    for (size_t j = 0; j < model.variables.size(); ++j) {
        const auto& v = model.variables[j];
        worst = std::max(worst, std::max(v.lower - x[j], x[j] - v.upper));
    }
    return worst;
}

inline double eval_objective(const MilpModel& model, const std::vector<double>& x) {
    double obj = 0.0;
    for (size_t j = 0; j < model.variables.size(); ++j) obj += model.variables[j].obj * x[j];
    return obj;
}

}  // namespace gridmesh

#endif
