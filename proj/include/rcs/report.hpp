#pragma once

// Analysis pipeline (delay precheck, frequency-domain conditions, SPR scan)
// and its JSON / CSV serialization.

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <optional>
#include <string>
#include <vector>

#include "rcs/config.hpp"
#include "rcs/delay_analysis.hpp"
#include "rcs/hbeta.hpp"
#include "rcs/hybrid_sim.hpp"
#include "rcs/io.hpp"

namespace rcs {

inline constexpr const char* kToolName = "rcs_hbeta";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kReportSchema = "rcs-hbeta-report/1";

struct AnalysisOutcome {
    FeasibilityVerdict precheck;
    StabilityReport report;
    std::optional<SprScan> spr;

    int exit_code() const {
        switch (report.verdict) {
            case Verdict::Stable: return 0;
            case Verdict::NotShown: return 2;
            case Verdict::InfeasibleByDelay: return 3;
        }
        return 1;
    }
};

inline AnalysisOutcome run_analysis(const LoopComponents& lc, const FrequencyGrid& grid, const AnalysisOptions& opt) {
    AnalysisOutcome out;
    out.precheck = ci_delay_precheck(lc, lc.plant.delay);
    out.report = check_hbeta_conditions(lc, grid, opt);
    if (out.report.xi_params) {
        Condition c{"spr_midpoint", CondStatus::Pass, {}, {}};
        try {
            out.spr = spr_scan(lc, *out.report.xi_params, grid.points, opt.delay_mode);
            c.status = out.spr->pass ? CondStatus::Pass : CondStatus::Fail;
            c.detail = "min Re(H_beta) over the grid = " + fmt_g(out.spr->min_re);
            if (!out.spr->pass) c.witness_omega = out.spr->argmin_omega;
        } catch (const Error& e) {
            c.status = CondStatus::Unverifiable;
            c.detail = e.what();
        }
        out.report.conditions.push_back(c);
    } else {
        out.report.conditions.push_back({"spr_midpoint", CondStatus::Unverifiable, "feasible interval is empty", {}});
    }
    out.report.recompute_verdict();
    if (!out.precheck.feasible) out.report.verdict = Verdict::InfeasibleByDelay;
    return out;
}

inline AnalysisOptions options_from(const AnalysisSettings& s) {
    AnalysisOptions o;
    o.delay_mode = s.delay_mode;
    o.pade_order = s.pade_order;
    return o;
}

inline FrequencyGrid grid_from(const AnalysisSettings& s) {
    return make_log_grid_density(s.omega_min, s.omega_max, s.points_per_decade);
}

namespace detail {

inline nlohmann::json opt_number(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline nlohmann::json probe_json(const OscillationProbe& p) {
    if (!p.applicable) return {{"applicable", false}};
    return {{"applicable", true},
            {"delay_s", p.T},
            {"window_rad_s", {p.window.lo, p.window.hi}},
            {"samples", p.samples.size()},
            {"sign_changes_nx", p.sign_changes_x},
            {"sign_changes_ny", p.sign_changes_y},
            {"envelope_decay_nx", p.envelope_decay_x},
            {"envelope_decay_ny", p.envelope_decay_y}};
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

/// Report body; everything non-deterministic lives under "metadata".
inline nlohmann::json report_json(const AnalysisOutcome& o, const std::string& system, const AnalysisOptions& opt) {
    using nlohmann::json;
    const StabilityReport& r = o.report;
    json conds = json::array();
    for (const auto& c : r.conditions) {
        json jc = {{"name", c.name}, {"status", to_string(c.status)}, {"detail", c.detail}};
        jc["witness_omega"] = detail::opt_number(c.witness_omega);
        conds.push_back(jc);
    }
    json j;
    j["schema"] = kReportSchema;
    j["system"] = system;
    j["verdict"] = to_string(r.verdict);
    j["exit_code"] = o.exit_code();
    j["band"] = {{"omega_min", r.band_lo}, {"omega_max", r.band_hi}, {"points_per_decade", r.density}, {"band_limited", r.band_limited}};
    j["delay_mode"] = opt.delay_mode.str();
    j["theta1"] = detail::opt_number(r.theta1);
    j["theta2"] = detail::opt_number(r.theta2);
    j["undefined_samples"] = r.undefined_count;
    j["feasible_xi"] = r.feasible_xi.empty ? json{{"empty", true}}
                                           : json{{"empty", false}, {"lo", r.feasible_xi.lo}, {"hi", r.feasible_xi.hi}};
    if (r.xi_params) j["xi_params"] = {{"beta_p", r.xi_params->beta_p()}, {"rho_p", r.xi_params->rho_p()}};
    j["conditions"] = conds;
    if (r.limit) {
        j["hf_limit"] = {{"relative_degree", r.limit->relative_degree},
                         {"predicted", r.limit->predicted},
                         {"numeric", r.limit->numeric},
                         {"numeric_omega", r.limit->numeric_omega},
                         {"numeric_agrees", r.limit->numeric_agrees}};
    }
    if (o.spr) j["spr"] = {{"pass", o.spr->pass}, {"min_re", o.spr->min_re}, {"argmin_omega", o.spr->argmin_omega}};
    j["delay_feasibility"] = {{"kind", o.precheck.kind()}, {"reason", o.precheck.reason}, {"probe", detail::probe_json(o.precheck.evidence)}};
    j["notes"] = r.notes;
    j["metadata"] = {{"tool", kToolName}, {"version", kToolVersion}, {"seed", nullptr}, {"timestamp", detail::utc_timestamp()}};
    return j;
}

inline std::string theta_trace_csv(const StabilityReport& r) {
    std::string out = "omega_rad_s,nx,ny,theta_rad,defined\n";
    for (const auto& s : r.samples) {
        out += fmt_double(s.omega) + ',' + fmt_double(s.nx) + ',' + fmt_double(s.ny) + ',' +
               (s.theta ? fmt_double(*s.theta) : std::string()) + ',' + (s.theta ? "1" : "0") + '\n';
    }
    return out;
}

/// Local extrema of the defined theta samples strictly above omega_from.
inline int theta_local_extrema(const std::vector<NsvSample>& samples, double omega_from) {
    std::vector<double> t;
    for (const auto& s : samples)
        if (s.omega > omega_from && s.theta) t.push_back(*s.theta);
    int n = 0;
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        if ((t[i] > t[i - 1] && t[i] > t[i + 1]) || (t[i] < t[i - 1] && t[i] < t[i + 1])) ++n;
    }
    return n;
}

struct DelayStudyRow {
    double T = 0.0;
    FeasibilityVerdict precheck;
    Verdict verdict = Verdict::NotShown;
    std::optional<double> theta_min, theta_max;
    double hf_from = 0.0;
    int hf_extrema = 0;
    std::string note;
};

/// One row per delay. High-frequency theta extrema are counted above 10 / T_max,
/// the same threshold for every row.
inline std::vector<DelayStudyRow> delay_study(const LoopComponents& base, const std::vector<double>& delays,
                                              const FrequencyGrid& grid, const AnalysisOptions& opt) {
    if (delays.empty()) throw Error(ErrorKind::Usage, "delay list is empty");
    double t_max = 0.0;
    for (double T : delays) {
        if (!(T >= 0.0) || !std::isfinite(T)) throw Error(ErrorKind::Usage, "delays must be finite and >= 0");
        t_max = std::max(t_max, T);
    }
    const double hf_from = t_max > 0.0 ? 10.0 / t_max : grid.back() / 100.0;
    std::vector<DelayStudyRow> rows;
    for (double T : delays) {
        LoopComponents lc = base;
        lc.plant.delay = T;
        const AnalysisOutcome o = run_analysis(lc, grid, opt);
        DelayStudyRow row;
        row.T = T;
        row.precheck = o.precheck;
        row.verdict = o.report.verdict;
        row.theta_min = o.report.theta1;
        row.theta_max = o.report.theta2;
        row.hf_from = hf_from;
        row.hf_extrema = theta_local_extrema(o.report.samples, hf_from);
        if (!o.precheck.feasible) {
            row.note = "CI-type element with delay";
        } else if (T > 0.0 && row.hf_extrema >= 5) {
            row.note = "theta oscillates about pi/2 at high frequency";
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string delay_study_csv(const std::vector<DelayStudyRow>& rows) {
    std::string out =
        "delay_s,precheck,verdict,sign_changes_nx,sign_changes_ny,envelope_decay_nx,envelope_decay_ny,"
        "theta_min_rad,theta_max_rad,hf_from_rad_s,hf_theta_extrema,note\n";
    auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
    for (const auto& r : rows) {
        const OscillationProbe& p = r.precheck.evidence;
        out += fmt_double(r.T) + ',' + r.precheck.kind() + ',' + to_string(r.verdict) + ',' +
               (p.applicable ? std::to_string(p.sign_changes_x) : std::string()) + ',' +
               (p.applicable ? std::to_string(p.sign_changes_y) : std::string()) + ',' +
               (p.applicable ? std::to_string(int(p.envelope_decay_x)) : std::string()) + ',' +
               (p.applicable ? std::to_string(int(p.envelope_decay_y)) : std::string()) + ',' + opt(r.theta_min) + ',' +
               opt(r.theta_max) + ',' + fmt_double(r.hf_from) + ',' + std::to_string(r.hf_extrema) + ',' + r.note + '\n';
    }
    return out;
}

}  // namespace rcs
