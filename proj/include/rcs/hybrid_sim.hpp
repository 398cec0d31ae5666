#pragma once

// Fixed-step RK4 simulation of the hybrid closed loop with zero-crossing
// detection on e_r, bisection event location and the reset jump x+ = Arho x.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcs/errors.hpp"
#include "rcs/io.hpp"
#include "rcs/parallel.hpp"
#include "rcs/reset_model.hpp"

namespace rcs {

enum class Channel { Reference, Disturbance };

struct BohlTerm {
    enum class Kind { Step, Ramp, Sine };
    Kind kind = Kind::Step;
    double amp = 0.0;  ///< step height, ramp slope or sine amplitude
    double omega = 0.0;
    double phase = 0.0;
    Channel channel = Channel::Reference;

    double eval(double t) const {
        switch (kind) {
            case Kind::Step: return amp;
            case Kind::Ramp: return amp * t;
            case Kind::Sine: return amp * std::sin(omega * t + phase);
        }
        return 0.0;
    }
};

/// Sum of steps, ramps and sinusoids on the reference and disturbance channels.
struct BohlInput {
    std::vector<BohlTerm> terms;

    Eigen::Vector2d eval(double t) const {
        Eigen::Vector2d w = Eigen::Vector2d::Zero();
        for (const auto& term : terms) w(term.channel == Channel::Reference ? 0 : 1) += term.eval(t);
        return w;
    }
    bool has_ramp() const {
        return std::any_of(terms.begin(), terms.end(), [](const BohlTerm& b) { return b.kind == BohlTerm::Kind::Ramp; });
    }
    BohlInput operator+(const BohlInput& o) const {
        BohlInput r = *this;
        r.terms.insert(r.terms.end(), o.terms.begin(), o.terms.end());
        return r;
    }
    BohlInput scaled(double k) const {
        BohlInput r = *this;
        for (auto& t : r.terms) t.amp *= k;
        return r;
    }
};

/// step: {A}; ramp: {slope}; sine: {A, omega[, phi]}.
inline BohlInput make_bohl(BohlTerm::Kind kind, const std::vector<double>& params, Channel ch = Channel::Reference) {
    for (double v : params)
        if (!std::isfinite(v)) throw Error(ErrorKind::BadParams, "Bohl parameters must be finite");
    BohlTerm t;
    t.kind = kind;
    t.channel = ch;
    switch (kind) {
        case BohlTerm::Kind::Step:
        case BohlTerm::Kind::Ramp:
            if (params.size() != 1) throw Error(ErrorKind::BadParams, "step/ramp take one parameter");
            t.amp = params[0];
            break;
        case BohlTerm::Kind::Sine:
            if (params.size() != 2 && params.size() != 3) throw Error(ErrorKind::BadParams, "sine takes A, omega[, phi]");
            t.amp = params[0];
            t.omega = params[1];
            t.phase = params.size() == 3 ? params[2] : 0.0;
            break;
    }
    return {{t}};
}

inline BohlInput make_step(double a, Channel ch = Channel::Reference) { return make_bohl(BohlTerm::Kind::Step, {a}, ch); }
inline BohlInput make_ramp(double s, Channel ch = Channel::Reference) { return make_bohl(BohlTerm::Kind::Ramp, {s}, ch); }
inline BohlInput make_sine(double a, double w, double phi = 0.0, Channel ch = Channel::Reference) {
    return make_bohl(BohlTerm::Kind::Sine, {a, w, phi}, ch);
}

/// Parses `[r:|d:]step:A | ramp:s | sine:A,w[,phi]` terms joined with '+'.
inline BohlInput parse_bohl(std::string_view spec) {
    BohlInput out;
    auto trim = [](std::string_view s) {
        while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
        while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
        return s;
    };
    auto bad = [&](std::string_view why) {
        return Error(ErrorKind::Usage, "bad input spec '" + std::string(spec) + "': " + std::string(why));
    };
    std::string_view rest = spec;
    if (trim(rest).empty()) throw bad("empty");
    while (!rest.empty()) {
        const auto plus = rest.find('+');
        std::string_view term = trim(rest.substr(0, plus));
        rest = plus == std::string_view::npos ? std::string_view{} : rest.substr(plus + 1);
        if (plus != std::string_view::npos && trim(rest).empty()) throw bad("dangling '+'");
        Channel ch = Channel::Reference;
        if (term.starts_with("r:")) {
            term.remove_prefix(2);
        } else if (term.starts_with("d:")) {
            ch = Channel::Disturbance;
            term.remove_prefix(2);
        }
        const auto colon = term.find(':');
        if (colon == std::string_view::npos) throw bad("missing ':'");
        const std::string_view name = term.substr(0, colon);
        std::vector<double> params;
        std::string_view args = term.substr(colon + 1);
        while (true) {
            const auto comma = args.find(',');
            const std::string field(trim(args.substr(0, comma)));
            char* end = nullptr;
            const double v = std::strtod(field.c_str(), &end);
            if (field.empty() || end != field.c_str() + field.size()) throw bad("bad number '" + field + "'");
            params.push_back(v);
            if (comma == std::string_view::npos) break;
            args = args.substr(comma + 1);
        }
        BohlTerm::Kind kind;
        if (name == "step") {
            kind = BohlTerm::Kind::Step;
        } else if (name == "ramp") {
            kind = BohlTerm::Kind::Ramp;
        } else if (name == "sine") {
            kind = BohlTerm::Kind::Sine;
        } else {
            throw bad("unknown kind '" + std::string(name) + "'");
        }
        try {
            out = out + make_bohl(kind, params, ch);
        } catch (const Error& e) {
            throw bad(e.what());
        }
    }
    return out;
}

struct SimConfig {
    double dt = 1e-4;
    double t_end = 1.0;
    double dwell_min = 1e-6;
    double event_tol = 1e-9;

    void validate() const {
        if (!(event_tol > 0.0 && event_tol < dt && dt <= t_end) || !std::isfinite(t_end))
            throw Error(ErrorKind::BadParams, "need 0 < event_tol < dt <= t_end");
        if (!(dwell_min >= 0.0)) throw Error(ErrorKind::BadParams, "dwell_min must be >= 0");
    }
};

/// Flags on trace rows: regular sample, state just before a jump, just after.
enum class RowKind { Regular = 0, PreJump = 1, PostJump = 2 };

inline constexpr double kJumpRel = 1e-12;
inline constexpr double kDivergenceBound = 1e12;

struct SimResult {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<double> y, e_r, u_r, u_1;
    std::vector<RowKind> kinds;
    std::vector<double> reset_instants;
    std::size_t dwell_violations = 0;
    std::size_t step_rejections = 0;  ///< fixed-step integrator: always 0
    bool diverged = false;
    std::string message;

    std::size_t reset_count() const { return reset_instants.size(); }
    double sup_norm() const {
        double m = 0.0;
        for (const auto& x : states) m = std::max(m, x.norm());
        return m;
    }
    double sup_abs_y() const {
        double m = 0.0;
        for (double v : y) m = std::max(m, std::abs(v));
        return m;
    }
    /// Rows of kind Regular only; one per grid time.
    std::vector<std::size_t> regular_rows() const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < kinds.size(); ++i)
            if (kinds[i] == RowKind::Regular) idx.push_back(i);
        return idx;
    }
};

namespace detail {

inline Eigen::VectorXd flow(const ClosedLoopHybrid& h, const BohlInput& in, double t, const Eigen::VectorXd& x) {
    return h.A_bar * x + h.B_bar * in.eval(t);
}

inline Eigen::VectorXd rk4(const ClosedLoopHybrid& h, const BohlInput& in, double t, const Eigen::VectorXd& x, double dt) {
    const Eigen::VectorXd k1 = flow(h, in, t, x);
    const Eigen::VectorXd k2 = flow(h, in, t + dt / 2, x + dt / 2 * k1);
    const Eigen::VectorXd k3 = flow(h, in, t + dt / 2, x + dt / 2 * k2);
    const Eigen::VectorXd k4 = flow(h, in, t + dt, x + dt * k3);
    return x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

inline bool crossed(double before, double after) {
    if (before == 0.0) return false;
    return after == 0.0 || (after > 0.0) != (before > 0.0);
}

}  // namespace detail

/// Integrates the flow with RK4 on the grid t_i = i dt. A sign change of e_r
/// within a step is located by bisection to event_tol (right end of the
/// bracket); the jump is applied when it changes the state and the dwell since
/// the previous reset is at least dwell_min. Grazing contacts are ignored.
inline SimResult simulate(const ClosedLoopHybrid& h, const BohlInput& input, const Eigen::VectorXd& x0, const SimConfig& cfg) {
    cfg.validate();
    if (x0.size() != h.dim())
        throw Error(ErrorKind::BadParams, "x0 has dimension " + std::to_string(x0.size()) + ", expected " + std::to_string(h.dim()));
    SimResult res;
    const double gamma = h.reset.gamma;
    auto record = [&](double t, const Eigen::VectorXd& x, RowKind k) {
        const Eigen::Vector2d w = input.eval(t);
        res.times.push_back(t);
        res.states.push_back(x);
        res.y.push_back(h.y(x));
        res.e_r.push_back(h.er(x, w));
        res.u_r.push_back(h.ur(x, w));
        res.u_1.push_back(h.u1(x, w));
        res.kinds.push_back(k);
    };
    auto er_at = [&](double t, const Eigen::VectorXd& x) { return h.er(x, input.eval(t)); };

    const auto steps = static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt));
    Eigen::VectorXd x = x0;
    std::optional<double> last_reset;
    record(0.0, x, RowKind::Regular);
    for (std::size_t i = 0; i < steps; ++i) {
        const double t_next = static_cast<double>(i + 1) * cfg.dt;
        double t = static_cast<double>(i) * cfg.dt;
        double e_prev = er_at(t, x);
        // A step may contain several crossings; each is handled and integration resumes from it.
        for (;;) {
            const Eigen::VectorXd x_next = detail::rk4(h, input, t, x, t_next - t);
            const double e_next = er_at(t_next, x_next);
            if (!detail::crossed(e_prev, e_next) || t_next - t <= cfg.event_tol) {
                x = x_next;
                break;
            }
            double lo = t, hi = t_next;
            Eigen::VectorXd x_hi = x_next;
            while (hi - lo > cfg.event_tol) {
                const double mid = 0.5 * (lo + hi);
                const Eigen::VectorXd xm = detail::rk4(h, input, t, x, mid - t);
                if (detail::crossed(e_prev, er_at(mid, xm))) {
                    hi = mid;
                    x_hi = xm;
                } else {
                    lo = mid;
                }
            }
            const double tk = hi;
            Eigen::VectorXd xk = x_hi;
            const bool changes = std::abs((1.0 - gamma) * xk(0)) > kJumpRel * xk.norm();
            if (changes) {
                if (last_reset && tk - *last_reset < cfg.dwell_min) {
                    ++res.dwell_violations;
                } else {
                    record(tk, xk, RowKind::PreJump);
                    xk(0) *= gamma;
                    record(tk, xk, RowKind::PostJump);
                    res.reset_instants.push_back(tk);
                    last_reset = tk;
                }
            }
            x = xk;
            t = tk;
            e_prev = er_at(t, x);
            if (e_prev == 0.0) e_prev = e_next;  // resume on the far side of an exact zero
        }
        if (!x.allFinite() || x.norm() > kDivergenceBound) {
            res.diverged = true;
            res.message = "NonFiniteState: |x| exceeded 1e12 at t = " + fmt_g(t_next);
            if (x.allFinite()) record(t_next, x, RowKind::Regular);
            break;
        }
        record(t_next, x, RowKind::Regular);
    }
    return res;
}

/// Same loop with resets disabled (gamma = 1, Arho = I).
inline ClosedLoopHybrid base_linear(const ClosedLoopHybrid& h) {
    ClosedLoopHybrid b = h;
    b.reset.gamma = 1.0;
    b.A_rho = Eigen::MatrixXd::Identity(h.dim(), h.dim());
    return b;
}

struct ConvergenceResult {
    std::optional<double> decay_rate;  ///< -slope of log delta over the second half; empty if not estimable
    double ratio_at_tend = 0.0;        ///< delta(t_end) / delta(0)
    double delta0 = 0.0;
    double delta_end = 0.0;
    bool diverged = false;
};

/// Runs the same input from two initial states and measures delta(t) = |x_a - x_b|.
inline ConvergenceResult convergence_probe(const ClosedLoopHybrid& h, const BohlInput& input, const Eigen::VectorXd& x0_a,
                                           const Eigen::VectorXd& x0_b, const SimConfig& cfg) {
    ConvergenceResult out;
    SimResult a, b;
    parallel_for(2, [&](std::size_t i) { (i == 0 ? a : b) = simulate(h, input, i == 0 ? x0_a : x0_b, cfg); });
    out.diverged = a.diverged || b.diverged;
    const auto ra = a.regular_rows();
    const auto rb = b.regular_rows();
    const std::size_t n = std::min(ra.size(), rb.size());
    if (n == 0) return out;
    std::vector<double> t(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = a.times[ra[i]];
        d[i] = (a.states[ra[i]] - b.states[rb[i]]).norm();
    }
    out.delta0 = d.front();
    out.delta_end = d.back();
    if (out.delta0 == 0.0) return out;
    out.ratio_at_tend = out.delta_end / out.delta0;
    double st = 0, sl = 0, stt = 0, stl = 0;
    std::size_t m = 0;
    for (std::size_t i = n / 2; i < n; ++i) {
        if (!(d[i] > 0.0)) continue;
        const double l = std::log(d[i]);
        st += t[i];
        sl += l;
        stt += t[i] * t[i];
        stl += t[i] * l;
        ++m;
    }
    const double den = static_cast<double>(m) * stt - st * st;
    if (m >= 2 && den > 0.0) out.decay_rate = -(static_cast<double>(m) * stl - st * sl) / den;
    return out;
}

struct UbibsEntry {
    bool pass = false;
    double sup_norm = 0.0;
    std::size_t resets = 0;
};

/// pass iff sup |x(t)| <= bound for the input; ramps are not bounded and are rejected.
inline std::vector<UbibsEntry> ubibs_probe(const ClosedLoopHybrid& h, const std::vector<BohlInput>& suite, const SimConfig& cfg,
                                           double bound, const std::optional<Eigen::VectorXd>& x0 = std::nullopt) {
    for (const auto& in : suite)
        if (in.has_ramp()) throw Error(ErrorKind::BadParams, "ramp inputs are unbounded; excluded from boundedness probing");
    const Eigen::VectorXd start = x0.value_or(Eigen::VectorXd::Zero(h.dim()));
    std::vector<UbibsEntry> out(suite.size());
    parallel_for(suite.size(), [&](std::size_t i) {
        const SimResult r = simulate(h, suite[i], start, cfg);
        out[i].sup_norm = r.sup_norm();
        out[i].resets = r.reset_count();
        out[i].pass = !r.diverged && out[i].sup_norm <= bound;
    });
    return out;
}

/// Ten times the largest sup |x| of the base-linear loop over the suite.
inline double base_linear_bound(const ClosedLoopHybrid& h, const std::vector<BohlInput>& suite, const SimConfig& cfg,
                                double factor = 10.0) {
    const ClosedLoopHybrid b = base_linear(h);
    double m = 0.0;
    for (const auto& in : suite) m = std::max(m, simulate(b, in, Eigen::VectorXd::Zero(h.dim()), cfg).sup_norm());
    return factor * m;
}

inline std::string format_trace_csv(const SimResult& r) {
    std::string out = "t,y,e_r,u_r,u_1,x_r,reset\n";
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        out += fmt_double(r.times[i]) + ',' + fmt_double(r.y[i]) + ',' + fmt_double(r.e_r[i]) + ',' + fmt_double(r.u_r[i]) +
               ',' + fmt_double(r.u_1[i]) + ',' + fmt_double(r.states[i](0)) + ',' +
               std::to_string(static_cast<int>(r.kinds[i])) + '\n';
    }
    return out;
}

}  // namespace rcs
