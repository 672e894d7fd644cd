#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridmesh/case_io.hpp"
#include "gridmesh/cases.hpp"
#include "gridmesh/harness.hpp"
#include "gridmesh/report.hpp"

namespace {

using namespace gridmesh;
namespace fs = std::filesystem;
using nlohmann::json;

struct CommonFlags {
    std::string case_ref = "case_mini2";
    std::string method = "daslr";
    int max_iters = 200;
    double gap_tol = 0.002;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string delay_spec;
    double contribution_frac = -1.0;
    int droop_levels = 0;
    int horizon = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--case", f.case_ref, "bundled case name or path to a case file");
    cmd->add_option("--max-iters", f.max_iters, "coordinator iteration budget")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--gap-tol", f.gap_tol, "relative optimality gap target");
    cmd->add_option("--seed", f.seed, "RNG seed for the delay model");
    cmd->add_option("--out", f.out_dir, "artifact directory");
    cmd->add_option("--delay-model", f.delay_spec,
                    "fixed:SEC | uniform:LO:HI | permg:S1,S2,...");
    cmd->add_option("--contribution-frac", f.contribution_frac,
                    "override droop contribution fraction");
    cmd->add_option("--droop-levels", f.droop_levels, "coarsen droop grids to N levels");
    cmd->add_option("--horizon", f.horizon, "truncate the case to the first N periods");
}

NetworkCase resolve_case(const CommonFlags& f) {
    NetworkCase c;
    if (fs::exists(f.case_ref))
        c = load_case(f.case_ref);
    else
        c = bundled_case(f.case_ref);
    if (f.horizon > 0) c = with_horizon(c, f.horizon);
    if (f.droop_levels > 0 || f.contribution_frac > 0.0)
        c = with_droop_settings(c, f.droop_levels, f.contribution_frac);
    validate_case(c);
    return c;
}

DelayModel parse_delay(const std::string& spec) {
    DelayModel d;
    if (spec.empty()) return d;
    auto split = [](const std::string& s, char sep) {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : s) {
            if (ch == sep) {
                out.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        out.push_back(cur);
        return out;
    };
    const auto parts = split(spec, ':');
    if (parts[0] == "fixed" && parts.size() == 2) {
        d.kind = DelayModel::Kind::Fixed;
        d.fixed = std::stod(parts[1]);
    } else if (parts[0] == "uniform" && parts.size() == 3) {
        d.kind = DelayModel::Kind::Uniform;
        d.lo = std::stod(parts[1]);
        d.hi = std::stod(parts[2]);
    } else if (parts[0] == "permg" && parts.size() == 2) {
        d.kind = DelayModel::Kind::PerMg;
        for (const auto& v : split(parts[1], ',')) d.per_mg.push_back(std::stod(v));
    } else {
        throw ParseError("bad --delay-model '" + spec +
                         "', expected fixed:SEC | uniform:LO:HI | permg:S1,S2,...");
    }
    return d;
}

RunOptions make_opts(const CommonFlags& f) {
    RunOptions opts;
    opts.seed = f.seed;
    opts.max_iters = f.max_iters;
    opts.gap_tol = f.gap_tol;
    opts.delay = parse_delay(f.delay_spec);
    opts.solver.gap_tol = 1e-4;
    opts.solver.node_limit = 200000;
    opts.solver.time_limit_sec = 120;
    return opts;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ParseError("cannot write " + p.string());
    out << text;
}

json summary_json(const NetworkCase& c, const std::string& method,
                  const CommonFlags& f, const RunResult& res) {
    json per;
    const auto costs = per_mg_costs(c, res.schedule, res.lambda);
    for (size_t mi = 0; mi < c.microgrids.size(); ++mi)
        per[c.microgrids[mi].id] = costs[mi];
    return json{{"method", method},
                {"case", c.name},
                {"seed", f.seed},
                {"iterations", res.iterations},
                {"feasible_cost", res.feasible_cost},
                {"dual_bound", res.dual_bound},
                {"gap", res.gap},
                {"diverged", res.diverged},
                {"sim_clock", res.sim_clock},
                {"total_compute", res.total_compute},
                {"per_mg_costs", per}};
}

void emit_artifacts(const fs::path& dir, const NetworkCase& c, const std::string& method,
                    const CommonFlags& f, const RunResult& res) {
    fs::create_directories(dir);
    write_file(dir / "schedule.csv", schedule_csv(c, res.schedule));
    write_file(dir / "runlog.csv", to_csv(res.log));
    write_file(dir / "summary.json", summary_json(c, method, f, res).dump(2) + "\n");
}

int cmd_solve(const CommonFlags& f) {
    NetworkCase c = resolve_case(f);
    RunResult res = run(c, parse_method(f.method), make_opts(f));
    const fs::path dir = f.out_dir.empty() ? fs::path("out") / c.name : fs::path(f.out_dir);
    emit_artifacts(dir, c, f.method, f, res);
    std::cout << "case " << c.name << " method " << f.method << ": cost "
              << res.feasible_cost << " bound " << res.dual_bound << " gap " << res.gap
              << " iters " << res.iterations << "\n"
              << "artifacts in " << dir.string() << "\n";
    return 0;
}

int cmd_compare(const CommonFlags& f) {
    NetworkCase c = resolve_case(f);
    const fs::path dir =
        f.out_dir.empty() ? fs::path("out") / (c.name + "_compare") : fs::path(f.out_dir);
    fs::create_directories(dir);
    CostTable table;
    for (const std::string method : {"daslr", "admm"}) {
        RunResult res = run(c, parse_method(method), make_opts(f));
        table.add_row(method, per_mg_costs(c, res.schedule, res.lambda));
        write_file(dir / ("trace_" + method + ".csv"), convergence_trace_csv(res.log));
        write_file(dir / ("runlog_" + method + ".csv"), to_csv(res.log));
        if (res.diverged)
            std::cout << "note: admm primal residual stayed above the divergence "
                         "ceiling\n";
    }
    write_file(dir / "compare.csv", table.csv(c));
    write_file(dir / "compare.txt", table.text(c));
    std::cout << table.text(c) << "artifacts in " << dir.string() << "\n";
    return 0;
}

int cmd_sweep_droop(const CommonFlags& f, std::vector<double> fractions) {
    if (fractions.empty()) fractions = {0.20, 0.30};
    NetworkCase base = resolve_case(f);
    const fs::path dir =
        f.out_dir.empty() ? fs::path("out") / (base.name + "_sweep") : fs::path(f.out_dir);
    fs::create_directories(dir);
    std::string csv = "contribution_frac";
    for (const auto& mg : base.microgrids) csv += "," + mg.id;
    csv += ",total,reduction_pct\n";
    char buf[64];
    double first_total = 0.0;
    std::cout << "droop contribution sweep on " << base.name << "\n";
    for (size_t k = 0; k < fractions.size(); ++k) {
        NetworkCase c = with_droop_settings(base, 0, fractions[k]);
        RunResult res = run(c, parse_method(f.method), make_opts(f));
        const auto costs = per_mg_costs(c, res.schedule, res.lambda);
        double total = 0.0;
        for (double v : costs) total += v;
        if (k == 0) first_total = total;
        const double red = first_total != 0.0 ? 100.0 * (first_total - total) / first_total
                                              : 0.0;
        std::snprintf(buf, sizeof(buf), "%g", fractions[k]);
        csv += buf;
        for (double v : costs) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            csv += buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g,%.6g\n", total, red);
        csv += buf;
        std::cout << "  frac " << fractions[k] << ": total " << total << " (reduction "
                  << red << "% vs first)\n";
    }
    write_file(dir / "sweep.csv", csv);
    std::cout << "artifacts in " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"networked-microgrid day-ahead scheduling"};
    app.require_subcommand(1);

    CommonFlags fs_, fc_, fw_;
    std::vector<double> fractions;

    CLI::App* solve = app.add_subcommand("solve", "run one method on one case");
    add_common(solve, fs_);
    solve->add_option("--method", fs_.method, "daslr | admm | centralized")
        ->check(CLI::IsMember({"daslr", "admm", "centralized"}));

    CLI::App* compare =
        app.add_subcommand("compare", "run daslr and admm under the same budget");
    add_common(compare, fc_);

    CLI::App* sweep =
        app.add_subcommand("sweep-droop", "cost vs droop contribution fraction");
    add_common(sweep, fw_);
    sweep->add_option("--method", fw_.method, "daslr | admm | centralized")
        ->check(CLI::IsMember({"daslr", "admm", "centralized"}));
    fw_.method = "centralized";
    sweep->add_option("--fractions", fractions, "contribution fractions to sweep");

    try {
        app.parse(argc, argv);
        if (solve->parsed()) return cmd_solve(fs_);
        if (compare->parsed()) return cmd_compare(fc_);
        return cmd_sweep_droop(fw_, fractions);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const gridmesh::NoFeasibleFound& e) {
        std::cerr << "no feasible schedule: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
