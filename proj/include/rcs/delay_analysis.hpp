#pragma once

// Input delay and the NSV: oscillation probes, the CI/GFORE feasibility rule,
// Padé order selection and sampled checks of decaying-oscillation closure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rcs/errors.hpp"
#include "rcs/frf.hpp"
#include "rcs/hbeta.hpp"
#include "rcs/parallel.hpp"
#include "rcs/poly.hpp"
#include "rcs/reset_model.hpp"

namespace rcs {

/// Minimum samples per delay period 2 pi / T in a probe window.
inline constexpr std::size_t kProbeSamplesPerPeriod = 64;

struct ProbeWindow {
    double lo = 0.0;
    double hi = 0.0;
};

/// [10/T, 100/T], the default high-frequency window.
inline ProbeWindow default_probe_window(double T) { return {10.0 / T, 100.0 / T}; }

struct ProbeSample {
    double omega, nx, ny;
};

struct OscillationProbe {
    bool applicable = false;  ///< false for T = 0
    double T = 0.0;
    ProbeWindow window;
    std::vector<ProbeSample> samples;
    int sign_changes_x = 0;
    int sign_changes_y = 0;
    bool envelope_decay_x = false;
    bool envelope_decay_y = false;

    bool both_oscillate(int min_changes) const {
        return sign_changes_x >= min_changes && sign_changes_y >= min_changes && envelope_decay_x && envelope_decay_y;
    }
};

namespace detail {

inline int strict_sign_changes(const std::vector<double>& v) {
    int n = 0;
    double last = 0.0;
    for (double x : v) {
        if (x == 0.0) continue;
        if (last != 0.0 && (x > 0.0) != (last > 0.0)) ++n;
        last = x;
    }
    return n;
}

// max |v| over the last quarter < max |v| over the first quarter
inline bool quarter_envelope_decays(const std::vector<double>& v) {
    const std::size_t q = v.size() / 4;
    if (q == 0) return false;
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < q; ++i) first = std::max(first, std::abs(v[i]));
    for (std::size_t i = v.size() - q; i < v.size(); ++i) last = std::max(last, std::abs(v[i]));
    return last < first;
}

}  // namespace detail

/// Samples N_x and N_y on a linear grid with the exact delay e^{-jwT}. The
/// sample count is raised to at least 64 per delay period, and the window is
/// widened to span at least five delay periods.
inline OscillationProbe sign_oscillation_probe(const LoopComponents& lc, double T, ProbeWindow window,
                                               std::size_t n_samples = 0) {
    OscillationProbe p;
    p.T = T;
    p.window = window;
    if (!(T > 0.0)) return p;
    p.applicable = true;
    p.window.hi = std::max(window.hi, window.lo + 10.0 * kPi / T);
    const double periods = (p.window.hi - p.window.lo) * T / (2.0 * kPi);
    const auto needed = static_cast<std::size_t>(std::ceil(periods * kProbeSamplesPerPeriod)) + 1;
    const std::size_t n = std::max(n_samples, needed);

    LoopComponents delayed = lc;
    delayed.plant.delay = T;
    p.samples.resize(n);
    parallel_for(n, [&](std::size_t i) {
        const double w = p.window.lo + (p.window.hi - p.window.lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        const NsvSample s = nsv(delayed, w, DelayMode::exact());
        p.samples[i] = {w, s.nx, s.ny};
    });
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = p.samples[i].nx;
        ys[i] = p.samples[i].ny;
    }
    p.sign_changes_x = detail::strict_sign_changes(xs);
    p.sign_changes_y = detail::strict_sign_changes(ys);
    p.envelope_decay_x = detail::quarter_envelope_decays(xs);
    p.envelope_decay_y = detail::quarter_envelope_decays(ys);
    return p;
}

struct FeasibilityVerdict {
    bool feasible = true;
    std::string reason;
    OscillationProbe evidence;

    std::string kind() const { return feasible ? "feasible" : "infeasible-by-delay"; }
};

/// A CI-type element (omega_r = 0) with any input delay makes both NSV
/// components decaying oscillations, so no sector condition can hold.
inline FeasibilityVerdict ci_delay_precheck(const LoopComponents& lc, double T) {
    FeasibilityVerdict v;
    if (!(T > 0.0)) {
        v.reason = "no delay";
        return v;
    }
    v.evidence = sign_oscillation_probe(lc, T, default_probe_window(T));
    if (lc.reset.is_ci_family()) {
        v.feasible = false;
        v.reason = "CI-type reset element (omega_r = 0) with delay T = " + fmt_g(T) +
                   " s: N_x and N_y both oscillate with decaying envelope (" + std::to_string(v.evidence.sign_changes_x) +
                   " and " + std::to_string(v.evidence.sign_changes_y) + " sign changes in the probe window)";
    } else {
        v.reason = "GFORE element: N_y keeps the term omega_k omega_r / (w^2 + omega_r^2); sector conditions decide";
    }
    return v;
}

/// omega_k omega_r / (w^2 + omega_r^2), the part of N_y that survives delay-induced oscillation.
inline double ny_highfreq_limit(double omega_r, double omega_k, double omega) {
    if (!(omega > 0.0)) throw Error(ErrorKind::BadParams, "omega must be > 0");
    return omega_k * omega_r / (omega * omega + omega_r * omega_r);
}

struct NySignStability {
    std::optional<double> omega_star;  ///< first w where the limit term beats the residual envelope
    bool positive_above = false;       ///< N_y > 0 for every sample at or above omega_star
};

/// Finds the first probe frequency where ny_highfreq_limit exceeds the suffix
/// envelope of |N_y - limit|, and checks N_y > 0 from there on.
inline NySignStability ny_sign_stability(const OscillationProbe& p, const ResetElement& r) {
    NySignStability out;
    const std::size_t n = p.samples.size();
    if (n == 0) return out;
    std::vector<double> suffix(n);
    double m = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        const auto& s = p.samples[i];
        m = std::max(m, std::abs(s.ny - ny_highfreq_limit(r.omega_r(), r.omega_k(), s.omega)));
        suffix[i] = m;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = p.samples[i];
        if (ny_highfreq_limit(r.omega_r(), r.omega_k(), s.omega) > suffix[i]) {
            out.omega_star = s.omega;
            out.positive_above = std::all_of(p.samples.begin() + static_cast<std::ptrdiff_t>(i), p.samples.end(),
                                             [](const ProbeSample& q) { return q.ny > 0.0; });
            break;
        }
    }
    return out;
}

/// max over a dense grid on (0, omega_max] of |arg P_k(jw) + wT|, with the
/// Padé phase unwrapped from low frequency.
inline double pade_phase_error(double T, int k, double omega_max, std::size_t n = 4000) {
    const RationalTf p = pade_delay(T, k);
    const double w_lo = std::min(omega_max, 1.0 / T) * 1e-4;
    const FrequencyGrid g = make_log_grid(w_lo, omega_max, n);
    double prev = 0.0, unwrapped = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double w = g.points[i];
        const double ph = std::arg(rational_eval(p, w));
        if (i == 0) {
            unwrapped = ph;
        } else {
            double d = ph - prev;
            while (d > kPi) d -= 2 * kPi;
            while (d < -kPi) d += 2 * kPi;
            unwrapped += d;
        }
        prev = ph;
        worst = std::max(worst, std::abs(unwrapped + w * T));
    }
    return worst;
}

inline constexpr int kMaxPadeOrder = 20;

/// Smallest k <= 20 whose phase error stays below tol_phase_rad up to omega_max.
inline int choose_pade_order(double T, double omega_max, double tol_phase_rad) {
    if (!(T > 0.0) || !(omega_max > 0.0) || !(tol_phase_rad > 0.0))
        throw Error(ErrorKind::BadParams, "choose_pade_order needs T > 0, omega_max > 0, tol > 0");
    for (int k = 1; k <= kMaxPadeOrder; ++k) {
        if (pade_phase_error(T, k, omega_max) < tol_phase_rad) return k;
    }
    throw Error(ErrorKind::OrderExceeded, "Padé order 20 cannot reach phase error " + fmt_g(tol_phase_rad) +
                                              " rad up to " + fmt_g(omega_max) + " rad/s for T = " + fmt_g(T));
}

// ---------------------------------------------------------------------------
// Decaying oscillations K(x) = c / (1 + x^p) sin(f x + phi)

struct ZlFunction {
    double c = 1.0, p = 1.0, f = 1.0, phi = 0.0;

    double envelope(double x) const { return c / (1.0 + std::pow(x, p)); }
    double operator()(double x) const { return envelope(x) * std::sin(f * x + phi); }
    bool same_as(const ZlFunction& o) const { return c == o.c && p == o.p && f == o.f && phi == o.phi; }
    /// -K: same envelope, phase shifted by pi.
    bool negation_of(const ZlFunction& o) const {
        return c == o.c && p == o.p && f == o.f && std::abs(std::remainder(phi - o.phi - kPi, 2 * kPi)) < 1e-12;
    }
};

struct ZlWindowStats {
    double max_abs = 0.0;
    int zero_crossings = 0;
};

inline ZlWindowStats zl_window(const auto& fn, double x0, std::size_t n = 8000) {
    ZlWindowStats st;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = fn(x0 + 100.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1));
        st.max_abs = std::max(st.max_abs, std::abs(v[i]));
    }
    st.zero_crossings = detail::strict_sign_changes(v);
    return st;
}

struct ZlClosureReport {
    std::size_t trials = 0;
    std::size_t failures = 0;
    std::vector<std::string> failure_notes;
};

inline constexpr int kZlMinCrossings = 50;
inline constexpr double kZlWindowStarts[] = {100.0, 1000.0, 10000.0};

/// Checks decaying envelope and persistent zero crossings of K1 + K2 and
/// K1 K2 over windows [x0, x0 + 100 pi] for growing x0. K1 = K2 and K1 = -K2
/// are excluded from the draws.
inline bool zl_check_pair(const ZlFunction& a, const ZlFunction& b, std::string* why = nullptr) {
    const auto sum = [&](double x) { return a(x) + b(x); };
    const auto prod = [&](double x) { return a(x) * b(x); };
    auto check = [&](const auto& fn, const char* name) {
        double prev_max = std::numeric_limits<double>::infinity();
        for (double x0 : kZlWindowStarts) {
            const ZlWindowStats st = zl_window(fn, x0);
            if (!(st.max_abs < prev_max) || st.zero_crossings < kZlMinCrossings) {
                if (why) {
                    *why = std::string(name) + " at x0 = " + fmt_g(x0) + ": max " + fmt_g(st.max_abs) +
                           ", crossings " + std::to_string(st.zero_crossings);
                }
                return false;
            }
            prev_max = st.max_abs;
        }
        return true;
    };
    return check(sum, "sum") && check(prod, "product");
}

inline ZlClosureReport zl_closure_property(std::size_t trials, std::uint64_t seed) {
    if (trials < 1) throw Error(ErrorKind::Usage, "trials must be >= 1");
    ZlClosureReport rep;
    rep.trials = trials;
    std::vector<std::string> notes(trials);
    parallel_for(trials, [&](std::size_t i) {
        std::mt19937_64 rng(detail::splitmix64(seed ^ (0xA5A5A5A5ull + i)));
        std::uniform_real_distribution<double> uc(0.5, 2.0), uf(1.0, 3.0), uphi(0.0, 2 * kPi);
        std::uniform_int_distribution<int> up(1, 2);
        auto draw = [&] { return ZlFunction{uc(rng), static_cast<double>(up(rng)), uf(rng), uphi(rng)}; };
        const ZlFunction a = draw();
        ZlFunction b = draw();
        while (b.same_as(a) || b.negation_of(a)) b = draw();
        std::string why;
        if (!zl_check_pair(a, b, &why)) notes[i] = "trial " + std::to_string(i) + ": " + why;
    });
    for (auto& n : notes) {
        if (!n.empty()) {
            ++rep.failures;
            rep.failure_notes.push_back(std::move(n));
        }
    }
    return rep;
}

}  // namespace rcs
