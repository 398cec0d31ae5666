#pragma once

// Frequency-domain H_beta analysis of a reset control loop.
//
// With L = C1 C2 G (delay folded in) and R the base-linear reset element,
//
//   M1 = 1 + L (R + C3)
//   M2 = L Cs (R - D_r)
//   M3 = (1 + L (C3 + D_r)) (R - D_r)
//   H_beta(jw) = (beta' M2 + rho' M3) / M1
//
// The Nyquist stability vector N = (Re(M1* M2), Re(M1* M3)) carries the sign
// of Re(H_beta) for every (beta', rho'), so the stability conditions reduce to
// sector conditions on its angle theta_N. The state-space H_beta
// C0 (sI - Abar)^-1 B0 is kept alongside as an independent route.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rcs/errors.hpp"
#include "rcs/frf.hpp"
#include "rcs/parallel.hpp"
#include "rcs/poly.hpp"
#include "rcs/reset_model.hpp"

namespace rcs {

inline constexpr double kPi = std::numbers::pi;
/// theta_N is undefined where |N| < kNsvRel * |M1| max(|M2|, |M3|), i.e. where
/// the products have cancelled down to rounding level.
inline constexpr double kNsvRel = 1e-12;
/// Open sector bounds are tightened by this margin.
inline constexpr double kSectorMargin = 1e-9;
/// Minimum grid density (points/decade) for a stable verdict.
inline constexpr double kMinStableDensity = 100.0;
/// Default frequency for the numeric high-frequency limit cross-check.
inline constexpr double kLimitOmega = 1e6;

struct MValues {
    cplx m1, m2, m3;
};

inline MValues compute_M(const LoopComponents& lc, double omega, const DelayMode& mode = DelayMode::exact()) {
    const cplx L = lc.loop_eval(omega, mode);
    const cplx c3 = rational_eval(lc.c3, omega);
    const cplx cs = rational_eval(lc.cs, omega);
    const cplx rd = reset_dynamic_eval(lc.reset, omega);  // R - D_r
    const double dr = lc.reset.D_r;
    return {1.0 + L * (rd + dr + c3), L * cs * rd, (1.0 + L * (c3 + dr)) * rd};
}

/// atan2(ny, nx) mapped into [-pi/2, 3pi/2).
inline double wrap_theta(double nx, double ny) {
    double t = std::atan2(ny, nx);
    if (t < -kPi / 2) t += 2 * kPi;
    return t;
}

struct NsvSample {
    double omega = 0.0;
    MValues m{};
    double nx = 0.0;
    double ny = 0.0;
    std::optional<double> theta;  ///< empty when |N| is below the undefined threshold

    double magnitude() const { return std::hypot(nx, ny); }
};

inline NsvSample nsv(const LoopComponents& lc, double omega, const DelayMode& mode = DelayMode::exact()) {
    NsvSample s;
    s.omega = omega;
    s.m = compute_M(lc, omega, mode);
    s.nx = (std::conj(s.m.m1) * s.m.m2).real();
    s.ny = (std::conj(s.m.m1) * s.m.m3).real();
    const double scale = std::abs(s.m.m1) * std::max(std::abs(s.m.m2), std::abs(s.m.m3));
    if (s.magnitude() > 0.0 && s.magnitude() >= kNsvRel * scale) s.theta = wrap_theta(s.nx, s.ny);
    return s;
}

inline std::vector<NsvSample> nsv_trace(const LoopComponents& lc, const std::vector<double>& omegas,
                                        const DelayMode& mode = DelayMode::exact()) {
    std::vector<NsvSample> out(omegas.size());
    parallel_for(omegas.size(), [&](std::size_t i) { out[i] = nsv(lc, omegas[i], mode); });
    return out;
}

/// (beta', rho') of the FRF form; rho' > 0.
class HbetaParams {
public:
    HbetaParams(double beta_p, double rho_p) : beta_p_(beta_p), rho_p_(rho_p) {
        if (!(rho_p > 0.0) || !std::isfinite(beta_p)) throw Error(ErrorKind::BadParams, "rho' must be > 0 and beta' finite");
    }
    /// From the matrix-side (beta, rho): beta' = -beta / B_r, rho' = rho / (C_r B_r).
    static HbetaParams from_matrix(double beta, double rho, const ResetElement& r) {
        return {-beta / r.B_r, rho / (r.C_r * r.B_r)};
    }
    /// Unit vector (cos theta, sin theta) for theta in (0, pi).
    static HbetaParams from_angle(double theta) { return {std::cos(theta), std::sin(theta)}; }

    double beta_p() const noexcept { return beta_p_; }
    double rho_p() const noexcept { return rho_p_; }
    double matrix_beta(const ResetElement& r) const { return -beta_p_ * r.B_r; }
    double matrix_rho(const ResetElement& r) const { return rho_p_ * r.C_r * r.B_r; }
    double angle() const { return std::atan2(rho_p_, beta_p_); }

private:
    double beta_p_;
    double rho_p_;
};

inline cplx frf_hbeta(const MValues& m, const HbetaParams& p) {
    if (std::abs(m.m1) < kDivEps) throw Error(ErrorKind::DividedByLoopZero, "M1 vanishes");
    return (p.beta_p() * m.m2 + p.rho_p() * m.m3) / m.m1;
}

inline cplx frf_hbeta(const LoopComponents& lc, double omega, const HbetaParams& p,
                      const DelayMode& mode = DelayMode::exact()) {
    const MValues m = compute_M(lc, omega, mode);
    if (std::abs(m.m1) < kDivEps) {
        throw Error(ErrorKind::DividedByLoopZero, "M1 vanishes at omega = " + fmt_g(omega));
    }
    return frf_hbeta(m, p);
}

/// C0 (sI - Abar)^-1 B0 in its raw matrix form.
struct MatrixHbeta {
    Eigen::MatrixXd A_bar;
    Eigen::VectorXd B0;
    Eigen::RowVectorXd C0;

    /// B0 = e_1, C0 = [rho, beta Ce].
    static MatrixHbeta from_closed_loop(const ClosedLoopHybrid& h, double beta, double rho) {
        if (!(rho > 0.0)) throw Error(ErrorKind::BadParams, "rho must be > 0");
        MatrixHbeta m;
        m.A_bar = h.A_bar;
        m.B0 = Eigen::VectorXd::Zero(h.dim());
        m.B0(0) = 1.0;
        m.C0 = beta * h.Ce_bar;
        m.C0(0) = rho;
        return m;
    }

    cplx eval(double omega) const {
        const Eigen::Index n = A_bar.rows();
        Eigen::MatrixXcd res = cplx(0.0, omega) * Eigen::MatrixXcd::Identity(n, n) - A_bar.cast<cplx>();
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(res);
        if (!(lu.rcond() > 1e-14)) {
            throw Error(ErrorKind::SingularResolvent, "jwI - Abar is singular at omega = " + fmt_g(omega));
        }
        const Eigen::VectorXcd x = lu.solve(B0.cast<cplx>());
        return (C0.cast<cplx>() * x)(0);
    }
};

inline cplx matrix_hbeta(const ClosedLoopHybrid& h, double beta, double rho, double omega) {
    return MatrixHbeta::from_closed_loop(h, beta, rho).eval(omega);
}

enum class CondStatus { Pass, Fail, NotApplicable, Unverifiable };

inline std::string to_string(CondStatus s) {
    switch (s) {
        case CondStatus::Pass: return "pass";
        case CondStatus::Fail: return "fail";
        case CondStatus::NotApplicable: return "not-applicable";
        case CondStatus::Unverifiable: return "unverifiable";
    }
    return "?";
}

struct Condition {
    std::string name;
    CondStatus status = CondStatus::NotApplicable;
    std::string detail;
    std::optional<double> witness_omega;

    bool blocks_stability() const { return status == CondStatus::Fail || status == CondStatus::Unverifiable; }
};

enum class Verdict { Stable, NotShown, InfeasibleByDelay };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "stable";
        case Verdict::NotShown: return "not-shown";
        case Verdict::InfeasibleByDelay: return "infeasible-by-delay";
    }
    return "?";
}

/// Admissible angles of (beta', rho'); closed bounds, emptiness explicit.
struct XiInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool empty = true;

    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double t) const { return !empty && t >= lo && t <= hi; }
};

/// [theta2 - pi/2, theta1 + pi/2] intersected with (0, pi).
inline XiInterval feasible_xi_interval(double theta1, double theta2) {
    XiInterval iv;
    if (theta2 - theta1 >= kPi) return iv;
    iv.lo = std::max(theta2 - kPi / 2, 0.0);
    iv.hi = std::min(theta1 + kPi / 2, kPi);
    // The upper and lower ends at 0 and pi are open.
    iv.empty = !(iv.hi > iv.lo) && !(iv.hi == iv.lo && iv.lo > 0.0 && iv.lo < kPi);
    return iv;
}

struct SprScan {
    bool pass = false;
    double min_re = std::numeric_limits<double>::infinity();
    double argmin_omega = 0.0;
};

/// min over the grid of Re(H_beta); pass iff strictly positive everywhere.
inline SprScan spr_scan(const LoopComponents& lc, const HbetaParams& p, const std::vector<double>& omegas,
                        const DelayMode& mode = DelayMode::exact()) {
    std::vector<double> re(omegas.size());
    parallel_for(omegas.size(), [&](std::size_t i) { re[i] = frf_hbeta(lc, omegas[i], p, mode).real(); });
    SprScan out;
    for (std::size_t i = 0; i < re.size(); ++i) {
        if (re[i] < out.min_re) {
            out.min_re = re[i];
            out.argmin_omega = omegas[i];
        }
    }
    out.pass = !re.empty() && out.min_re > 0.0;
    return out;
}

/// True when no right-half-plane (or imaginary-axis) root is shared between the
/// numerator and denominator of the uncancelled open loops L (R + C3) and L Cs.
inline bool cancellation_check(const LoopComponents& lc) {
    const RationalTf L = lc.loop_tf();
    const RationalTf open_loops[] = {L * (base_linear_tf(lc.reset) + lc.c3), L * lc.cs};
    for (const auto& ol : open_loops) {
        for (const cplx& r : shared_roots(ol.num(), ol.den())) {
            if (r.real() >= -kHurwitzEps * std::max(1.0, std::abs(r))) return false;
        }
    }
    return true;
}

struct LimitResult {
    Condition condition;
    int relative_degree = 0;
    double predicted = 0.0;  ///< analytic limit of w^2 Re(H_beta)
    double numeric = 0.0;    ///< w^2 Re(H_beta) at numeric_omega
    double numeric_omega = 0.0;
    bool numeric_agrees = false;  ///< within 1 % of predicted
};

/// High-frequency SPR condition: the limit of w^2 Re(H_beta(jw)) must be positive.
/// For a relative-degree-1 loop the leading term of L Cs (R - D_r) contributes
/// -beta' K with K = omega_k K_m / K_n, the leading-coefficient ratio of L Cs.
inline LimitResult limit_conditions(const LoopComponents& lc, const HbetaParams& p, const DelayMode& mode = DelayMode::exact(),
                                    double omega_check = kLimitOmega) {
    LimitResult out;
    out.condition.name = "hf_limit";
    if (lc.plant.is_measured()) {
        out.condition.status = CondStatus::NotApplicable;
        out.condition.detail = "measured plant: relative degree unknown, limit not evaluated";
        return out;
    }
    const RationalTf lcs = lc.loop_tf() * lc.cs;
    const int rd = relative_degree(lcs);
    out.relative_degree = rd;
    const ResetElement& r = lc.reset;
    const double K = r.omega_k() * lcs.num().leading() / lcs.den().leading();
    const double delayed = lc.plant.delay > 0.0;
    const std::string rd_text = "relative degree of L*Cs = " + std::to_string(rd);

    if (r.is_ci_family() && rd != 1) {
        out.condition.status = CondStatus::Fail;
        out.condition.detail = "relative degree must be 1 for a CI-type element (" + rd_text + ")";
        return out;
    }
    if (rd == 1) {
        // With exact delay the -beta' K term oscillates as cos(wT); its worst case must be covered.
        out.predicted = delayed ? p.rho_p() * r.omega_r() * r.omega_k() - std::abs(p.beta_p() * K)
                                : -p.beta_p() * K + p.rho_p() * r.omega_r() * r.omega_k();
    } else {
        out.predicted = p.rho_p() * r.omega_r() * r.omega_k();
    }
    out.numeric_omega = omega_check;
    out.numeric = omega_check * omega_check * frf_hbeta(lc, omega_check, p, mode).real();
    out.numeric_agrees = std::abs(out.numeric - out.predicted) <= 0.01 * std::abs(out.predicted);
    out.condition.status = out.predicted > 0.0 ? CondStatus::Pass : CondStatus::Fail;
    out.condition.detail = rd_text + "; limit " + fmt_g(out.predicted) + "; w^2 Re(H) at " +
                           fmt_g(omega_check) + " = " + fmt_g(out.numeric) +
                           (delayed && rd == 1 ? " (oscillating delay term bounded)" : "");
    return out;
}

namespace detail {

inline int zero_root_multiplicity(const Polynomial& p) {
    if (p.is_zero()) return 0;
    int k = 0;
    while (p[static_cast<std::size_t>(k)] == 0.0) ++k;
    return k;
}

inline int rhp_root_count(const Polynomial& p) {
    int n = 0;
    for (const cplx& r : roots(p)) {
        if (r.real() > kHurwitzEps * std::max(1.0, std::abs(r))) ++n;
    }
    return n;
}

}  // namespace detail

/// Argument-principle test of base-linear stability from sampled M1 = 1 + L (R + C3):
/// closed loop stable iff the unwrapped phase change of M1 over (0+, inf) equals
/// (q + 2 p) pi/2, with q open-loop integrators and p open-loop RHP poles. The
/// band must reach far enough that M1 -> 1 at the top and the low end sits in the
/// integrator (or DC) asymptote.
inline Condition nyquist_base_linear(const LoopComponents& lc, const std::vector<double>& omegas,
                                     const DelayMode& mode = DelayMode::exact()) {
    Condition c{"base_linear_stable", CondStatus::Unverifiable, {}, {}};
    const RationalTf fb = base_linear_tf(lc.reset) + lc.c3;
    const RationalTf ctrl = lc.c1 * lc.c2 * fb;
    int q = detail::zero_root_multiplicity(ctrl.den()) - detail::zero_root_multiplicity(ctrl.num());
    int p = detail::rhp_root_count(ctrl.den());
    if (lc.plant.is_measured()) {
        q += lc.plant.integrators;
        p += lc.plant.unstable_poles;
    } else {
        q += detail::zero_root_multiplicity(lc.plant.rational().den()) - detail::zero_root_multiplicity(lc.plant.rational().num());
        p += detail::rhp_root_count(lc.plant.rational().den());
    }
    if (omegas.size() < 2) {
        c.detail = "too few samples";
        return c;
    }
    std::vector<double> phase(omegas.size());
    cplx first_ol, last_m1;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const MValues m = compute_M(lc, omegas[i], mode);
        phase[i] = std::arg(m.m1);
        if (i == 0) first_ol = m.m1 - 1.0;
        last_m1 = m.m1;
    }
    double unwrapped = 0.0;
    for (std::size_t i = 1; i < phase.size(); ++i) {
        double d = phase[i] - phase[i - 1];
        while (d > kPi) d -= 2 * kPi;
        while (d < -kPi) d += 2 * kPi;
        unwrapped += d;
    }
    const double expected = (q + 2 * p) * kPi / 2;
    const bool top_ok = std::abs(last_m1 - 1.0) <= 0.1;
    const bool low_ok = q > 0 ? std::abs(first_ol) >= 10.0
                              : std::abs((1.0 + first_ol).imag()) <= 0.1 * std::abs(1.0 + first_ol);
    c.detail = "band-limited Nyquist: phase change of M1 " + fmt_g(unwrapped) + " rad, expected " +
               std::to_string(expected) + " (integrators " + std::to_string(q) + ", RHP poles " + std::to_string(p) + ")";
    if (!top_ok || !low_ok) {
        c.detail += "; band does not reach the loop asymptotes";
        return c;
    }
    c.status = std::abs(unwrapped - expected) < kPi / 4 ? CondStatus::Pass : CondStatus::Fail;
    return c;
}

struct AnalysisOptions {
    DelayMode delay_mode = DelayMode::exact();
    int pade_order = kDefaultPadeOrder;  ///< base-linear stability of delayed rational loops
    double min_density = kMinStableDensity;
    double limit_omega = kLimitOmega;
};

struct StabilityReport {
    std::vector<NsvSample> samples;
    std::optional<double> theta1, theta2;
    std::size_t undefined_count = 0;
    std::vector<Condition> conditions;
    XiInterval feasible_xi;
    std::optional<HbetaParams> xi_params;  ///< interval midpoint, unit length
    std::optional<LimitResult> limit;
    Verdict verdict = Verdict::NotShown;
    double band_lo = 0.0, band_hi = 0.0;
    double density = 0.0;
    bool band_limited = false;
    std::vector<std::string> notes;

    const Condition* find(const std::string& name) const {
        for (const auto& c : conditions)
            if (c.name == name) return &c;
        return nullptr;
    }
    void recompute_verdict() {
        if (verdict == Verdict::InfeasibleByDelay) return;
        const bool ok = std::none_of(conditions.begin(), conditions.end(), [](const Condition& c) { return c.blocks_stability(); });
        verdict = ok ? Verdict::Stable : Verdict::NotShown;
    }
};

namespace detail {

// Open interval (lo, hi) tightened by the sector margin.
inline bool in_sector(double t, double lo, double hi) { return t > lo + kSectorMargin && t < hi - kSectorMargin; }

inline Condition sector_condition(const std::string& name, const std::vector<NsvSample>& samples, double lo, double hi) {
    Condition c{name, CondStatus::Pass, {}, {}};
    for (const auto& s : samples) {
        if (s.theta && !in_sector(*s.theta, lo, hi)) {
            c.status = CondStatus::Fail;
            c.witness_omega = s.omega;
            c.detail = "theta_N = " + fmt_g(*s.theta) + " outside (" + fmt_g(lo) + ", " + fmt_g(hi) + ")";
            return c;
        }
    }
    c.detail = "all defined theta_N in (" + fmt_g(lo) + ", " + fmt_g(hi) + ")";
    return c;
}

}  // namespace detail

/// Evaluates every frequency-domain stability condition on the grid and combines
/// them into a verdict: stable only if no condition fails or is unverifiable.
inline StabilityReport check_hbeta_conditions(const LoopComponents& lc, const FrequencyGrid& grid,
                                      const AnalysisOptions& opt = {}) {
    StabilityReport rep;
    const ResetElement& r = lc.reset;
    const bool measured = lc.plant.is_measured();
    rep.band_lo = grid.front();
    rep.band_hi = grid.back();
    rep.density = grid.density();
    rep.band_limited = measured;

    std::vector<double> omegas;
    if (!measured) {
        // w = 0 joins the samples when every component is finite there.
        try {
            (void)compute_M(lc, 0.0, opt.delay_mode);
            omegas.push_back(0.0);
        } catch (const Error&) {
        }
    }
    omegas.insert(omegas.end(), grid.points.begin(), grid.points.end());
    rep.samples = nsv_trace(lc, omegas, opt.delay_mode);
    for (const auto& s : rep.samples) {
        if (!s.theta) {
            ++rep.undefined_count;
            continue;
        }
        rep.theta1 = rep.theta1 ? std::min(*rep.theta1, *s.theta) : *s.theta;
        rep.theta2 = rep.theta2 ? std::max(*rep.theta2, *s.theta) : *s.theta;
    }
    if (rep.undefined_count > 0) {
        rep.notes.push_back(std::to_string(rep.undefined_count) + " samples with |N| below threshold excluded from theta1/theta2");
    }

    // (1) base-linear stability and no unstable pole-zero cancellation
    if (measured) {
        rep.conditions.push_back(nyquist_base_linear(lc, grid.points, opt.delay_mode));
    } else {
        Condition c{"base_linear_stable", CondStatus::Pass, {}, {}};
        const auto h = is_hurwitz(base_linear_characteristic(lc, opt.pade_order));
        const bool no_cancel = cancellation_check(lc);
        c.detail = "max closed-loop pole real part " + fmt_g(h.margin);
        if (lc.plant.delay > 0.0) c.detail += " (Padé order " + std::to_string(opt.pade_order) + ")";
        if (!h.hurwitz) c.status = CondStatus::Fail;
        if (!no_cancel) {
            c.status = CondStatus::Fail;
            c.detail += "; unstable pole-zero cancellation in the open loop";
        }
        rep.conditions.push_back(c);
    }
    // (2) shaping filter proper and stable
    {
        Condition c{"shaping_filter", CondStatus::Pass, "Cs proper and stable", {}};
        if (!lc.cs.is_proper()) {
            c.status = CondStatus::Fail;
            c.detail = "Cs is improper";
        } else if (lc.cs.den().degree() >= 1 && !is_hurwitz(lc.cs.den()).hurwitz) {
            c.status = CondStatus::Fail;
            c.detail = "Cs has poles outside the open left half plane";
        }
        rep.conditions.push_back(c);
    }
    // (3) reset value
    rep.conditions.push_back({"gamma_range", (r.gamma > -1.0 && r.gamma < 1.0) ? CondStatus::Pass : CondStatus::Fail,
                              "gamma = " + fmt_g(r.gamma) + ", required in (-1, 1)", {}});
    // (4) sign of B_r C_r
    rep.conditions.push_back({"br_cr_positive", r.B_r * r.C_r > 0.0 ? CondStatus::Pass : CondStatus::Fail,
                              "B_r C_r = " + fmt_g(r.B_r * r.C_r), {}});
    // (5) angular span
    if (rep.theta1 && rep.theta2) {
        const double span = *rep.theta2 - *rep.theta1;
        rep.conditions.push_back({"theta_span", span < kPi ? CondStatus::Pass : CondStatus::Fail,
                                  "theta2 - theta1 = " + fmt_g(span), {}});
        rep.feasible_xi = feasible_xi_interval(*rep.theta1, *rep.theta2);
    } else {
        rep.conditions.push_back({"theta_span", CondStatus::Unverifiable, "no defined theta_N samples", {}});
    }
    // (6) sector conditions
    if (r.is_gfore()) {
        const Condition a = detail::sector_condition("gfore_sector", rep.samples, -kPi / 2, kPi);
        const Condition b = detail::sector_condition("gfore_sector", rep.samples, 0.0, 3 * kPi / 2);
        rep.conditions.push_back(a.status == CondStatus::Pass ? a : (b.status == CondStatus::Pass ? b : a));
        rep.conditions.push_back({"ci_relative_degree", CondStatus::NotApplicable, "GFORE element", {}});
        rep.conditions.push_back({"ci_sector", CondStatus::NotApplicable, "GFORE element", {}});
    } else {
        rep.conditions.push_back({"gfore_sector", CondStatus::NotApplicable, "CI-type element", {}});
        if (measured) {
            rep.conditions.push_back({"ci_relative_degree", CondStatus::Unverifiable, "relative degree of a measured loop is unknown", {}});
            rep.conditions.push_back({"ci_sector", CondStatus::Unverifiable, "sign of K_n/K_m unknown for a measured loop", {}});
        } else {
            const RationalTf lcs = lc.loop_tf() * lc.cs;
            const int rd = relative_degree(lcs);
            if (rd != 1) {
                rep.conditions.push_back({"ci_relative_degree", CondStatus::Fail,
                                          "relative degree must be 1, got " + std::to_string(rd), {}});
                rep.conditions.push_back({"ci_sector", CondStatus::NotApplicable, "relative degree condition failed", {}});
            } else {
                rep.conditions.push_back({"ci_relative_degree", CondStatus::Pass, "relative degree 1", {}});
                const double ratio = lcs.den().leading() / lcs.num().leading();
                rep.conditions.push_back(ratio > 0.0 ? detail::sector_condition("ci_sector", rep.samples, 0.0, 3 * kPi / 2)
                                                     : detail::sector_condition("ci_sector", rep.samples, -kPi / 2, kPi));
            }
        }
    }
    // high-frequency limit, evaluated at the feasible-interval midpoint
    if (!rep.feasible_xi.empty) {
        rep.xi_params = HbetaParams::from_angle(rep.feasible_xi.mid());
        LimitResult lim = limit_conditions(lc, *rep.xi_params, opt.delay_mode, opt.limit_omega);
        rep.conditions.push_back(lim.condition);
        rep.limit = std::move(lim);
    } else {
        rep.conditions.push_back({"hf_limit", CondStatus::Unverifiable, "no feasible (beta', rho') direction", {}});
    }
    // grid density
    rep.conditions.push_back({"grid_density", rep.density >= opt.min_density ? CondStatus::Pass : CondStatus::Fail,
                              fmt_g(rep.density) + " points/decade, minimum " + fmt_g(opt.min_density), {}});
    if (measured) {
        rep.notes.push_back("band-limited: conditions verified on [" + fmt_g(rep.band_lo) + ", " +
                            fmt_g(rep.band_hi) + "] rad/s only");
    }
    rep.recompute_verdict();
    return rep;
}

// ---------------------------------------------------------------------------
// Matrix-vs-FRF equivalence

struct RandomSystem {
    LoopComponents lc;
    double beta = 0.0;
    double rho = 1.0;
};

namespace detail {

inline Polynomial random_poly(std::mt19937_64& rng, int degree) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> c(static_cast<std::size_t>(degree) + 1);
    for (auto& v : c) v = u(rng);
    while (std::abs(c.back()) < 0.1) c.back() = u(rng);
    return Polynomial(std::move(c));
}

inline RationalTf random_tf(std::mt19937_64& rng, int max_order, bool strictly_proper, bool stable_den) {
    std::uniform_int_distribution<int> ord(strictly_proper ? 1 : 0, max_order);
    const int n = ord(rng);
    std::uniform_int_distribution<int> mdeg(0, strictly_proper ? n - 1 : n);
    const int m = mdeg(rng);
    Polynomial den = random_poly(rng, n);
    if (stable_den && n >= 1) {
        while (!is_hurwitz(den).hurwitz) den = random_poly(rng, n);
    }
    return {random_poly(rng, m), den};
}

}  // namespace detail

struct RandomSystemOptions {
    int max_order = 3;
    double delay = 0.0;  ///< plant delay (realized by Padé on the matrix side)
    int pade_order = kDefaultPadeOrder;
};

/// Random admissible loop: orders <= max_order, coefficients uniform in [-2, 2],
/// strictly proper plant, stable Cs, B_r C_r > 0, resampled until the
/// base-linear closed loop is Hurwitz. Half of the draws have D_r != 0, C3 != 0
/// and Cs != 1 independently.
inline RandomSystem random_admissible_system(std::mt19937_64& rng, const RandomSystemOptions& opt = {}) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (;;) {
        RandomSystem s;
        s.lc.plant.model = detail::random_tf(rng, opt.max_order, true, false);
        s.lc.plant.delay = opt.delay;
        s.lc.c1 = detail::random_tf(rng, opt.max_order, false, false);
        s.lc.c2 = detail::random_tf(rng, opt.max_order, false, false);
        s.lc.c3 = u01(rng) < 0.5 ? RationalTf::gain(0.0) : detail::random_tf(rng, opt.max_order, false, false);
        s.lc.cs = u01(rng) < 0.5 ? RationalTf::gain(1.0) : detail::random_tf(rng, opt.max_order, false, true);
        const double omega_r = u01(rng) < 0.2 ? 0.0 : 2.0 * u01(rng);
        const double omega_k = 0.5 + 1.5 * u01(rng);
        const double b_r = (u01(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + 1.5 * u01(rng));
        const double d_r = u01(rng) < 0.5 ? 0.0 : u(rng);
        s.lc.reset = ResetElement::gfore(omega_r, omega_k, d_r, u(rng) * 0.45, b_r);
        s.beta = u(rng);
        s.rho = 0.1 + 1.9 * u01(rng);
        try {
            const ClosedLoopHybrid h = assemble_closed_loop(s.lc, opt.pade_order);
            Eigen::EigenSolver<Eigen::MatrixXd> es(h.A_bar, false);
            if (es.info() != Eigen::Success) continue;
            if (es.eigenvalues().real().maxCoeff() < -1e-3) return s;
        } catch (const Error&) {
        }
    }
}

struct EquivalenceTrial {
    double max_rel_dev = 0.0;
    double worst_omega = 0.0;
    std::size_t compared = 0;
    bool has_dr = false, has_c3 = false, has_cs = false, ci = false;
};

struct EquivalenceReport {
    std::vector<EquivalenceTrial> trials;
    double max_rel_dev = 0.0;
    std::size_t worst_trial = 0;
};

struct EquivalenceOptions {
    std::size_t grid_points = 200;
    double omega_min = 1e-2;
    double omega_max = 1e3;
    RandomSystemOptions system{};
    /// Only compare where the Padé phase error is below this (delayed plants).
    double pade_phase_tol = 1e-7;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace detail

/// One trial: matrix H_beta of the assembled closed loop against the FRF form
/// with (beta', rho') mapped from (beta, rho).
inline EquivalenceTrial equivalence_trial(const RandomSystem& s, const std::vector<double>& omegas,
                                          const EquivalenceOptions& opt = {}) {
    EquivalenceTrial t;
    const ResetElement& r = s.lc.reset;
    t.has_dr = r.D_r != 0.0;
    t.has_c3 = !s.lc.c3.num().is_zero();
    t.has_cs = !(s.lc.cs.num() == Polynomial::constant(1.0) && s.lc.cs.den() == Polynomial::constant(1.0));
    t.ci = r.is_ci_family();
    const ClosedLoopHybrid h = assemble_closed_loop(s.lc, opt.system.pade_order);
    const MatrixHbeta mh = MatrixHbeta::from_closed_loop(h, s.beta, s.rho);
    const HbetaParams p = HbetaParams::from_matrix(s.beta, s.rho, r);
    const double T = s.lc.plant.delay;
    const RationalTf pade = pade_delay(T, opt.system.pade_order);
    for (double w : omegas) {
        if (T > 0.0) {
            const cplx err = rational_eval(pade, w) * cplx(std::cos(w * T), std::sin(w * T));
            if (std::abs(std::arg(err)) >= opt.pade_phase_tol) continue;
        }
        const cplx a = mh.eval(w);
        const cplx b = frf_hbeta(s.lc, w, p, DelayMode::exact());
        const double dev = std::abs(a - b) / std::max(std::abs(b), std::numeric_limits<double>::min());
        ++t.compared;
        if (dev > t.max_rel_dev) {
            t.max_rel_dev = dev;
            t.worst_omega = w;
        }
    }
    return t;
}

/// Runs `trials` independent random systems; per-trial seeds derive from `seed`.
inline EquivalenceReport equivalence_check(std::size_t trials, std::uint64_t seed, const EquivalenceOptions& opt = {}) {
    if (trials < 1) throw Error(ErrorKind::Usage, "trials must be >= 1");
    const FrequencyGrid grid = make_log_grid(opt.omega_min, opt.omega_max, opt.grid_points);
    EquivalenceReport rep;
    rep.trials.resize(trials);
    parallel_for(trials, [&](std::size_t i) {
        std::mt19937_64 rng(detail::splitmix64(seed + i));
        rep.trials[i] = equivalence_trial(random_admissible_system(rng, opt.system), grid.points, opt);
    });
    for (std::size_t i = 0; i < trials; ++i) {
        if (rep.trials[i].max_rel_dev > rep.max_rel_dev) {
            rep.max_rel_dev = rep.trials[i].max_rel_dev;
            rep.worst_trial = i;
        }
    }
    return rep;
}

}  // namespace rcs
