#ifndef GRIDMESH_HARNESS_HPP
#define GRIDMESH_HARNESS_HPP

#include <cstdlib>
#include <condition_variable>
#include <mutex>
#include <queue>
#include <random>
#include <thread>

#include "gridmesh/admm.hpp"
#include "gridmesh/daslr.hpp"
#include "gridmesh/runlog.hpp"

namespace gridmesh {

class NoFeasibleFound : public ModelError {
public:
    explicit NoFeasibleFound(const std::string& what) : ModelError(what) {}
};

class CorruptLog : public ModelError {
public:
    explicit CorruptLog(const std::string& what) : ModelError(what) {}
};

enum class Method { Daslr, Admm, Centralized };

inline Method parse_method(const std::string& s) {
    if (s == "daslr") return Method::Daslr;
    if (s == "admm") return Method::Admm;
    if (s == "centralized") return Method::Centralized;
    throw ParseError("unknown method: " + s);
}

inline const char* to_string(Method m) {
    switch (m) {
        case Method::Daslr: return "daslr";
        case Method::Admm: return "admm";
        default: return "centralized";
    }
}

/// Simulated seconds of compute per subproblem solve.
struct DelayModel {
    enum class Kind { Fixed, Uniform, PerMg };
    Kind kind = Kind::Fixed;
    double fixed = 1.0;
    double lo = 0.5, hi = 1.5;          // uniform range
    std::vector<double> per_mg;         // seconds by MG index

    double draw(std::mt19937_64& rng, int mi) const {
        double d = 0.0;
        switch (kind) {
            case Kind::Fixed:
                d = fixed;
                break;
            case Kind::Uniform:
                d = std::uniform_real_distribution<double>(lo, hi)(rng);
                break;
            case Kind::PerMg:
                if (mi < 0 || static_cast<size_t>(mi) >= per_mg.size())
                    throw ParseError("delay table has no entry for MG index " +
                                     std::to_string(mi));
                d = per_mg[static_cast<size_t>(mi)];
                break;
        }
        if (!(d > 0.0)) throw ParseError("compute delays must be positive");
        return d;
    }
};

struct RunOptions {
    std::uint64_t seed = 0;
    int max_iters = 200;
    double gap_tol = 0.002;
    DelayModel delay;
    double broadcast_latency = 0.0;  // coordinator -> MG
    GammaParams gamma;
    double e0_coeff = 0.1;
    double rho = 1.0;
    int admm_segments = 8;
    double admm_feas_tol = 1e-6;  // primal residual that counts as feasible
    SolveOptions solver;
};

struct RunResult {
    Schedule schedule;
    RunLog log;
    double feasible_cost = kInf;
    double dual_bound = -kInf;
    double gap = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    double sim_clock = 0.0;      // time of the last processed event
    double total_compute = 0.0;  // exact sum of drawn delays
    bool diverged = false;       // admm only
    Multipliers lambda;          // final prices (daslr: lambda, admm: mu)
};

namespace harness_detail {

struct Logger {
    RunLog& log;
    std::int64_t seq = 0;
    RunLogEntry& push(double time, const std::string& actor, const std::string& event) {
        RunLogEntry e;
        e.event_seq = seq++;
        e.sim_time = time;
        e.actor = actor;
        e.event = event;
        log.entries.push_back(std::move(e));
        return log.entries.back();
    }
};

inline void log_restore_and_dual(Logger& lg, double now, CoordinatorState& s,
                                 const NetworkCase& c, MilpBackend& backend,
                                 const DaslrConfig& cfg) {
    auto cost = restore_feasibility(s, c, backend, cfg);
    auto& re = lg.push(now, "coordinator", cost ? "restore" : "restore_fail");
    re.r = s.r;
    re.stepsize = s.e;
    if (s.have_feasible) re.feasible_cost = s.best_feasible;
    dual_value(s, c, backend, cfg);
    auto& de = lg.push(now, "coordinator", "dual");
    de.r = s.r;
    de.stepsize = s.e;
    de.dual_bound = s.dual_bound;
    if (s.have_feasible) {
        de.feasible_cost = s.best_feasible;
        de.gap = gap(s);
    }
}

inline RunResult run_daslr(const NetworkCase& c, const RunOptions& opts) {
    KernelBackend backend;
    DaslrConfig cfg;
    cfg.gamma = opts.gamma;
    cfg.e0_coeff = opts.e0_coeff;
    cfg.gap_tol = opts.gap_tol;
    cfg.max_iters = opts.max_iters;
    cfg.solver = opts.solver;
    const int K = static_cast<int>(c.microgrids.size());

    RunResult res;
    Logger lg{res.log};
    std::mt19937_64 rng(opts.seed);
    CoordinatorState s = init_coordinator(c);

    struct Pending {
        double time;
        int mg;
        std::int64_t order;
        MgMessage msg;
        bool operator>(const Pending& o) const {
            if (time != o.time) return time > o.time;
            if (mg != o.mg) return mg > o.mg;
            return order > o.order;
        }
    };
    std::priority_queue<Pending, std::vector<Pending>, std::greater<Pending>> pending;
    std::int64_t order = 0;
    auto dispatch = [&](int mi, double start) {
        MgMessage msg = solve_mg(c, mi, s.lambda, backend, cfg.solver);
        const double d = opts.delay.draw(rng, mi);
        res.total_compute += d;
        pending.push({start + d, mi, order++, std::move(msg)});
    };
    for (size_t mi = 0; mi < c.microgrids.size(); ++mi)
        dispatch(static_cast<int>(mi), 0.0);

    bool converged = false;
    while (!pending.empty() && s.r < opts.max_iters && !converged) {
        Pending ev = pending.top();
        pending.pop();
        res.sim_clock = ev.time;
        const std::string actor = c.microgrids[static_cast<size_t>(ev.mg)].id;
        auto& se = lg.push(ev.time, actor, "solve");
        se.r = s.r;
        se.stepsize = s.e;
        ArrivalOutcome out = update_multipliers(s, c, std::move(ev.msg), backend, cfg);
        auto& ae = lg.push(ev.time, actor, out.zero_violation ? "arrival_zero" : "arrival");
        ae.r = s.r;
        ae.stepsize = s.e;
        ae.violation_norm = out.norm;
        if (s.r % K == 0 || out.zero_violation) {
            log_restore_and_dual(lg, ev.time, s, c, backend, cfg);
            if (s.have_feasible && s.have_dual && gap(s) <= opts.gap_tol) converged = true;
        }
        if (!converged) dispatch(ev.mg, ev.time + opts.broadcast_latency);
    }
    if (!s.have_feasible) {
        log_restore_and_dual(lg, res.sim_clock, s, c, backend, cfg);
        if (!s.have_feasible)
            throw NoFeasibleFound("daslr: no restored feasible point within " +
                                  std::to_string(opts.max_iters) + " arrivals");
    }
    res.schedule = s.best_schedule;
    res.feasible_cost = s.best_feasible;
    res.dual_bound = s.dual_bound;
    res.gap = gap(s);
    res.iterations = s.r;
    res.lambda = s.lambda;
    auto& fe = lg.push(res.sim_clock, "coordinator", "final");
    fe.r = s.r;
    fe.stepsize = s.e;
    fe.feasible_cost = res.feasible_cost;
    fe.dual_bound = res.dual_bound;
    fe.gap = res.gap;
    return res;
}

inline RunResult run_admm(const NetworkCase& c, const RunOptions& opts) {
    KernelBackend backend;
    AdmmConfig cfg;
    cfg.rho = opts.rho;
    cfg.segments = opts.admm_segments;
    cfg.solver = opts.solver;

    RunResult res;
    Logger lg{res.log};
    std::mt19937_64 rng(opts.seed);
    AdmmState s = init_admm(c);
    double clock = 0.0;
    bool have_feasible = false;
    double best_cost = kInf;
    Schedule best_schedule;
    for (int round = 1; round <= opts.max_iters; ++round) {
        double barrier = 0.0;
        std::vector<double> finish(c.microgrids.size());
        for (size_t mi = 0; mi < c.microgrids.size(); ++mi) {
            const double d = opts.delay.draw(rng, static_cast<int>(mi));
            res.total_compute += d;
            finish[mi] = clock + d;
            barrier = std::max(barrier, finish[mi]);
        }
        AdmmRoundReport rep = admm_iterate(s, c, backend, cfg);
        for (size_t mi = 0; mi < c.microgrids.size(); ++mi) {
            auto& se = lg.push(finish[mi], c.microgrids[mi].id, "solve");
            se.r = round;
            se.stepsize = cfg.rho;
        }
        clock = barrier;
        res.sim_clock = clock;
        auto& ae = lg.push(clock, "coordinator", "arrival");
        ae.r = round;
        ae.stepsize = cfg.rho;
        ae.violation_norm = rep.primal_residual;
        res.iterations = round;
        if (rep.primal_residual <= opts.admm_feas_tol) {
            // the round's schedule already satisfies the coupling rows
            if (rep.cost < best_cost) {
                best_cost = rep.cost;
                best_schedule = s.last_schedule;
            }
            have_feasible = true;
            auto& re = lg.push(clock, "coordinator", "restore");
            re.r = round;
            re.stepsize = cfg.rho;
            re.feasible_cost = best_cost;
            break;
        }
    }
    res.diverged = s.diverged;
    if (!have_feasible) {
        // same averaging repair as daslr, run on the final round's values
        CoordinatorState cs = init_coordinator(c);
        cs.latest = s.latest;
        for (auto& st : cs.stamp) st = 0;
        DaslrConfig rcfg;
        rcfg.solver = opts.solver;
        auto cost = restore_feasibility(cs, c, backend, rcfg);
        auto& re = lg.push(clock, "coordinator", cost ? "restore" : "restore_fail");
        re.r = res.iterations;
        re.stepsize = cfg.rho;
        if (cost) {
            have_feasible = true;
            best_cost = *cost;
            best_schedule = cs.best_schedule;
            re.feasible_cost = best_cost;
        }
    }
    if (!have_feasible)
        throw NoFeasibleFound("admm: no coupling-consistent point within " +
                              std::to_string(opts.max_iters) + " rounds");
    // mu is a price vector like lambda, so q(mu) is a valid lower bound
    {
        CoordinatorState cs = init_coordinator(c);
        cs.lambda = s.mu;
        DaslrConfig rcfg;
        rcfg.solver = opts.solver;
        res.dual_bound = dual_value(cs, c, backend, rcfg);
        auto& de = lg.push(clock, "coordinator", "dual");
        de.r = res.iterations;
        de.stepsize = cfg.rho;
        de.dual_bound = res.dual_bound;
        de.feasible_cost = best_cost;
    }
    res.schedule = std::move(best_schedule);
    res.feasible_cost = best_cost;
    res.gap = (res.feasible_cost - res.dual_bound) /
              std::max(std::fabs(res.feasible_cost), 1e-12);
    res.lambda = s.mu;
    auto& fe = lg.push(clock, "coordinator", "final");
    fe.r = res.iterations;
    fe.stepsize = cfg.rho;
    fe.feasible_cost = res.feasible_cost;
    fe.dual_bound = res.dual_bound;
    fe.gap = res.gap;
    return res;
}

inline RunResult run_centralized(const NetworkCase& c, const RunOptions& opts) {
    KernelBackend backend;
    RunResult res;
    Logger lg{res.log};
    std::mt19937_64 rng(opts.seed);
    const double d = opts.delay.draw(rng, 0);
    res.total_compute = d;
    res.sim_clock = d;
    SolveReport rep = solve_centralized(c, backend, opts.solver);
    if (rep.schedule.mg.empty())
        throw NoFeasibleFound("centralized: " + std::string(to_string(rep.status)));
    res.schedule = rep.schedule;
    res.feasible_cost = rep.objective;
    res.dual_bound = rep.bound;
    res.gap = (rep.objective - rep.bound) / std::max(std::fabs(rep.objective), 1e-12);
    res.iterations = 1;
    res.lambda = Multipliers::zeros(c);
    auto& se = lg.push(d, "coordinator", "solve");
    se.r = 1;
    auto& fe = lg.push(d, "coordinator", "final");
    fe.r = 1;
    fe.feasible_cost = res.feasible_cost;
    fe.dual_bound = res.dual_bound;
    fe.gap = res.gap;
    return res;
}

/// Thread-backed daslr with the same message contract: one worker per MG and
/// a coordinator draining a shared mailbox. Arrival order depends on the OS
/// scheduler, so this path carries no determinism guarantee.
inline RunResult run_daslr_threaded(const NetworkCase& c, const RunOptions& opts) {
    DaslrConfig cfg;
    cfg.gamma = opts.gamma;
    cfg.e0_coeff = opts.e0_coeff;
    cfg.gap_tol = opts.gap_tol;
    cfg.max_iters = opts.max_iters;
    cfg.solver = opts.solver;
    const int K = static_cast<int>(c.microgrids.size());

    std::mutex mtx;
    std::condition_variable to_coord, to_workers;
    std::queue<MgMessage> mailbox;
    std::vector<Multipliers> inbox(c.microgrids.size(), Multipliers::zeros(c));
    std::vector<int> generation(c.microgrids.size(), 1);
    bool stop = false;

    std::vector<std::thread> workers;
    for (size_t mi = 0; mi < c.microgrids.size(); ++mi) {
        workers.emplace_back([&, mi] {
            KernelBackend backend;
            int seen = 0;
            while (true) {
                Multipliers lam;
                {
                    std::unique_lock<std::mutex> lk(mtx);
                    to_workers.wait(lk, [&] { return stop || generation[mi] > seen; });
                    if (stop) return;
                    seen = generation[mi];
                    lam = inbox[mi];
                }
                MgMessage msg = solve_mg(c, static_cast<int>(mi), lam, backend, cfg.solver);
                {
                    std::lock_guard<std::mutex> lk(mtx);
                    mailbox.push(std::move(msg));
                }
                to_coord.notify_one();
            }
        });
    }

    RunResult res;
    Logger lg{res.log};
    KernelBackend backend;
    CoordinatorState s = init_coordinator(c);
    bool converged = false;
    while (s.r < opts.max_iters && !converged) {
        MgMessage msg;
        {
            std::unique_lock<std::mutex> lk(mtx);
            to_coord.wait(lk, [&] { return !mailbox.empty(); });
            msg = std::move(mailbox.front());
            mailbox.pop();
        }
        const int mi = msg.mg;
        const std::string actor = c.microgrids[static_cast<size_t>(mi)].id;
        lg.push(0.0, actor, "solve").r = s.r;
        ArrivalOutcome out = update_multipliers(s, c, std::move(msg), backend, cfg);
        auto& ae = lg.push(0.0, actor, out.zero_violation ? "arrival_zero" : "arrival");
        ae.r = s.r;
        ae.stepsize = s.e;
        ae.violation_norm = out.norm;
        if (s.r % K == 0 || out.zero_violation) {
            log_restore_and_dual(lg, 0.0, s, c, backend, cfg);
            if (s.have_feasible && s.have_dual && gap(s) <= opts.gap_tol) converged = true;
        }
        if (!converged) {
            std::lock_guard<std::mutex> lk(mtx);
            inbox[static_cast<size_t>(mi)] = s.lambda;
            generation[static_cast<size_t>(mi)] += 1;
            to_workers.notify_all();
        }
    }
    {
        std::lock_guard<std::mutex> lk(mtx);
        stop = true;
    }
    to_workers.notify_all();
    for (auto& w : workers) w.join();

    if (!s.have_feasible) {
        log_restore_and_dual(lg, 0.0, s, c, backend, cfg);
        if (!s.have_feasible)
            throw NoFeasibleFound("daslr: no restored feasible point within " +
                                  std::to_string(opts.max_iters) + " arrivals");
    }
    res.schedule = s.best_schedule;
    res.feasible_cost = s.best_feasible;
    res.dual_bound = s.dual_bound;
    res.gap = gap(s);
    res.iterations = s.r;
    res.lambda = s.lambda;
    auto& fe = lg.push(0.0, "coordinator", "final");
    fe.r = s.r;
    fe.stepsize = s.e;
    fe.feasible_cost = res.feasible_cost;
    fe.dual_bound = res.dual_bound;
    fe.gap = res.gap;
    return res;
}

}  // namespace harness_detail

/// Seeded discrete-event execution of the chosen method to termination.
/// Identical inputs and seed give identical RunLogs. GRIDMESH_THREADS
/// switches daslr to the thread-backed runner, which does not.
inline RunResult run(const NetworkCase& c, Method method, const RunOptions& opts = {}) {
    validate_case(c);
    switch (method) {
        case Method::Daslr:
            if (const char* tv = std::getenv("GRIDMESH_THREADS"); tv && *tv && *tv != '0')
                return harness_detail::run_daslr_threaded(c, opts);
            return harness_detail::run_daslr(c, opts);
        case Method::Admm:
            return harness_detail::run_admm(c, opts);
        default:
            return harness_detail::run_centralized(c, opts);
    }
}

struct ReplayReport {
    bool ok = true;
    int mismatches = 0;
    std::int64_t first_bad_seq = -1;
    std::string message = "verified, 0 mismatches";
};

/// Re-derives the daslr stepsize chain from the logged arrivals and checks
/// every logged value bit for bit. Structural damage (broken sequence
/// numbers, time travel, unknown events) raises CorruptLog instead.
inline ReplayReport replay(const RunLog& log, const NetworkCase& c,
                           const DaslrConfig& cfg = {}) {
    static const std::vector<std::string> known = {
        "solve", "arrival", "arrival_zero", "restore", "restore_fail", "dual", "final"};
    if (log.entries.empty()) throw CorruptLog("empty log");
    std::int64_t seq = -1;
    double t = -kInf;
    for (const auto& e : log.entries) {
        if (e.event_seq != seq + 1)
            throw CorruptLog("event_seq jumps from " + std::to_string(seq) + " to " +
                             std::to_string(e.event_seq));
        seq = e.event_seq;
        if (e.sim_time < t)
            throw CorruptLog("sim_time decreases at event_seq " + std::to_string(seq));
        t = e.sim_time;
        bool found = false;
        for (const auto& k : known) found = found || k == e.event;
        if (!found) throw CorruptLog("unknown event '" + e.event + "'");
    }

    ReplayReport rep;
    const double sc = build_detail::cost_scale(c);
    bool init = false;
    double e_prev = 0.0, norm_prev = 0.0;
    int r_expect = 1;
    for (const auto& e : log.entries) {
        if (e.event != "arrival" && e.event != "arrival_zero") continue;
        if (e.r != r_expect)
            throw CorruptLog("arrival r=" + std::to_string(e.r) + " where " +
                             std::to_string(r_expect) + " was expected");
        ++r_expect;
        double want;
        if (e.event == "arrival_zero") {
            want = e_prev;  // zero violation leaves the stepsize alone
        } else if (!init) {
            want = cfg.e0_coeff * sc / e.violation_norm;
        } else {
            want = gamma_step(e.r, cfg.gamma) * e_prev * norm_prev / e.violation_norm;
        }
        if (e.stepsize != want) {
            rep.mismatches += 1;
            if (rep.first_bad_seq < 0) rep.first_bad_seq = e.event_seq;
        }
        // the chain continues from the logged value, so one bad entry is
        // reported once instead of poisoning everything after it
        if (e.event == "arrival") {
            init = true;
            e_prev = e.stepsize;
            norm_prev = e.violation_norm;
        }
    }
    if (rep.mismatches > 0) {
        rep.ok = false;
        rep.message = std::to_string(rep.mismatches) + " mismatch(es), first at event_seq " +
                      std::to_string(rep.first_bad_seq);
    }
    return rep;
}

}  // namespace gridmesh

#endif
