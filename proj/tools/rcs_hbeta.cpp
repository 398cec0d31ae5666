// rcs_hbeta: stability analysis and simulation of reset control systems.
//
// Exit codes: 0 stable / success, 2 stability not shown, 3 infeasible by delay, 1 error.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rcs/rcs.hpp"

namespace fs = std::filesystem;
using namespace rcs;

namespace {

std::vector<double> parse_number_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (tok.empty() || end != tok.c_str() + tok.size())
            throw Error(ErrorKind::Usage, std::string("bad number in ") + what + ": '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw Error(ErrorKind::ParseError, "cannot create " + p.string() + ": " + ec.message());
}

struct AnalyzeArgs {
    std::string system, out, delay_mode;
    std::optional<double> wmin, wmax;
    std::optional<std::size_t> points;
};

int cmd_analyze(const AnalyzeArgs& a) {
    const SystemConfig cfg = parse_system_config(a.system);
    AnalysisSettings s = cfg.analysis;
    if (!a.delay_mode.empty()) s.delay_mode = parse_delay_mode(a.delay_mode);
    if (a.wmin) s.omega_min = *a.wmin;
    if (a.wmax) s.omega_max = *a.wmax;
    const FrequencyGrid grid = a.points ? make_log_grid(s.omega_min, s.omega_max, *a.points) : grid_from(s);
    const AnalysisOptions opt = options_from(s);
    const AnalysisOutcome o = run_analysis(cfg.loop, grid, opt);

    ensure_dir(a.out);
    write_file_atomic(fs::path(a.out) / "report.json", report_json(o, a.system, opt).dump(2) + "\n");
    write_file_atomic(fs::path(a.out) / "theta_trace.csv", theta_trace_csv(o.report));

    std::cout << "verdict: " << to_string(o.report.verdict) << "\n";
    for (const auto& c : o.report.conditions) std::cout << "  " << c.name << ": " << to_string(c.status) << "  " << c.detail << "\n";
    for (const auto& n : o.report.notes) std::cout << "note: " << n << "\n";
    if (!o.precheck.feasible) std::cout << "delay: " << o.precheck.reason << "\n";
    return o.exit_code();
}

struct SimulateArgs {
    std::string system, input, x0, x0b, out;
    bool convergence = false;
    double t_end = 1.0;
    double dt = 1e-4;
};

Eigen::VectorXd parse_state(const std::string& s, Eigen::Index dim, const char* what) {
    if (s.empty()) return Eigen::VectorXd::Zero(dim);
    const auto v = parse_number_list(s, what);
    if (static_cast<Eigen::Index>(v.size()) != dim)
        throw Error(ErrorKind::Usage, std::string(what) + " has " + std::to_string(v.size()) + " entries, state dimension is " +
                                          std::to_string(dim));
    return Eigen::Map<const Eigen::VectorXd>(v.data(), dim);
}

int cmd_simulate(const SimulateArgs& a) {
    const SystemConfig cfg = parse_system_config(a.system);
    if (cfg.loop.plant.is_measured()) throw Error(ErrorKind::NotRealizable, "simulation needs a rational plant");
    const ClosedLoopHybrid h = assemble_closed_loop(cfg.loop, cfg.analysis.pade_order);
    const BohlInput input = parse_bohl(a.input);
    SimConfig sc;
    sc.t_end = a.t_end;
    sc.dt = a.dt;
    const Eigen::VectorXd x0 = parse_state(a.x0, h.dim(), "--x0");
    const SimResult r = simulate(h, input, x0, sc);

    nlohmann::json summary = {{"reset_count", r.reset_count()},
                              {"sup_norm_x", r.sup_norm()},
                              {"sup_abs_y", r.sup_abs_y()},
                              {"dwell_violations", r.dwell_violations},
                              {"diverged", r.diverged},
                              {"state_dim", h.dim()},
                              {"t_end", a.t_end},
                              {"dt", a.dt}};
    if (a.convergence) {
        Eigen::VectorXd x0b;
        if (!a.x0b.empty()) {
            x0b = parse_state(a.x0b, h.dim(), "--x0b");
        } else {
            x0b = x0;
            x0b(1) += 0.1;
        }
        const ConvergenceResult c = convergence_probe(h, input, x0, x0b, sc);
        summary["convergence"] = {{"ratio_at_tend", c.ratio_at_tend},
                                  {"decay_rate", c.decay_rate ? nlohmann::json(*c.decay_rate) : nlohmann::json()},
                                  {"delta0", c.delta0},
                                  {"delta_end", c.delta_end}};
        std::cout << "convergence ratio at t_end: " << c.ratio_at_tend << "\n";
    }
    ensure_dir(a.out);
    write_file_atomic(fs::path(a.out) / "trace.csv", format_trace_csv(r));
    write_file_atomic(fs::path(a.out) / "summary.json", summary.dump(2) + "\n");
    std::cout << "resets: " << r.reset_count() << "  sup|x|: " << r.sup_norm() << "\n";
    if (r.diverged) {
        std::cerr << r.message << "\n";
        return 1;
    }
    return 0;
}

int cmd_equiv_check(long long trials, std::uint64_t seed) {
    if (trials < 1) throw Error(ErrorKind::Usage, "--trials must be >= 1");
    const EquivalenceReport r = equivalence_check(static_cast<std::size_t>(trials), seed);
    const bool ok = r.max_rel_dev < 1e-8;
    std::cout << "trials " << trials << " seed " << seed << " max_rel_dev " << r.max_rel_dev << " worst_trial "
              << r.worst_trial << (ok ? " PASS" : " FAIL") << "\n";
    return ok ? 0 : 1;
}

int cmd_delay_study(const std::string& system, const std::string& delays, const std::string& out) {
    const SystemConfig cfg = parse_system_config(system);
    const auto ts = delays.empty() ? std::vector<double>{} : parse_number_list(delays, "--delays");
    const auto rows = delay_study(cfg.loop, ts, grid_from(cfg.analysis), options_from(cfg.analysis));
    ensure_dir(out);
    const std::string csv = delay_study_csv(rows);
    write_file_atomic(fs::path(out) / "delay_study.csv", csv);
    std::cout << csv;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency-domain stability analysis of reset control systems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    AnalyzeArgs an;
    auto* c_an = app.add_subcommand("analyze", "check the stability conditions on a frequency grid");
    c_an->add_option("--system", an.system, "system config file")->required();
    c_an->add_option("--wmin", an.wmin, "lowest grid frequency [rad/s]");
    c_an->add_option("--wmax", an.wmax, "highest grid frequency [rad/s]");
    c_an->add_option("--points", an.points, "number of log-spaced grid points");
    c_an->add_option("--delay-mode", an.delay_mode, "exact | pade:<k>");
    c_an->add_option("--out", an.out, "output directory")->required();

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "simulate the hybrid closed loop");
    c_sim->add_option("--system", sim.system, "system config file")->required();
    c_sim->add_option("--input", sim.input, "input spec, e.g. step:1+d:sine:0.5,10")->required();
    c_sim->add_option("--x0", sim.x0, "initial state, comma separated");
    c_sim->add_option("--x0b", sim.x0b, "second initial state for --convergence");
    c_sim->add_flag("--convergence", sim.convergence, "compare two initial states");
    c_sim->add_option("--t-end", sim.t_end, "horizon [s]");
    c_sim->add_option("--dt", sim.dt, "step [s]");
    c_sim->add_option("--out", sim.out, "output directory")->required();

    long long trials = 100;
    std::uint64_t seed = 42;
    auto* c_eq = app.add_subcommand("equiv-check", "compare matrix and FRF forms of H_beta on random systems");
    c_eq->add_option("--trials", trials, "number of random systems");
    c_eq->add_option("--seed", seed, "master seed");

    std::string ds_system, ds_delays, ds_out;
    auto* c_ds = app.add_subcommand("delay-study", "feasibility table over input delays");
    c_ds->add_option("--system", ds_system, "system config file")->required();
    c_ds->add_option("--delays", ds_delays, "comma separated delays [s]")->required();
    c_ds->add_option("--out", ds_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    try {
        if (*c_an) return cmd_analyze(an);
        if (*c_sim) return cmd_simulate(sim);
        if (*c_eq) return cmd_equiv_check(trials, seed);
        if (*c_ds) return cmd_delay_study(ds_system, ds_delays, ds_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
