#pragma once

// Real-coefficient polynomials, SISO rational transfer functions and their
// realizations. Coefficients are stored in ascending powers of s.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rcs/errors.hpp"

namespace rcs {

using cplx = std::complex<double>;

/// Relative tolerance below which a coefficient produced by cancellation is zeroed.
inline constexpr double kTrimRel = 1e-12;
/// Relative magnitude of den(jw) below which w is treated as an imaginary-axis pole.
inline constexpr double kDivEps = 1e-9;
/// Roots with real part above -kHurwitzEps * max(1, |root|max) are not Hurwitz.
inline constexpr double kHurwitzEps = 1e-9;
/// Relative distance at which two roots count as the same root.
inline constexpr double kRootMatchRel = 1e-6;

class Polynomial {
public:
    Polynomial() : c_{0.0} {}
    Polynomial(std::initializer_list<double> ascending) : Polynomial(std::vector<double>(ascending)) {}
    explicit Polynomial(std::vector<double> ascending) : c_(std::move(ascending)) {
        if (c_.empty()) c_.push_back(0.0);
        for (double v : c_) {
            if (!std::isfinite(v)) throw Error(ErrorKind::BadParams, "non-finite polynomial coefficient");
        }
        strip();
    }

    static Polynomial from_descending(std::vector<double> descending) {
        std::reverse(descending.begin(), descending.end());
        return Polynomial(std::move(descending));
    }
    static Polynomial constant(double v) { return Polynomial(std::vector<double>{v}); }
    /// Monomial k * s^n.
    static Polynomial monomial(double k, int n) {
        std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
        c.back() = k;
        return Polynomial(std::move(c));
    }

    const std::vector<double>& coeffs() const noexcept { return c_; }
    int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const noexcept { return c_.size() == 1 && c_[0] == 0.0; }
    double leading() const noexcept { return c_.back(); }
    double operator[](std::size_t i) const { return i < c_.size() ? c_[i] : 0.0; }

    cplx eval(cplx s) const {
        cplx acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
        return acc;
    }
    /// Sum of |c_i| |s|^i; the magnitude scale against which cancellation in eval(s) is judged.
    double eval_scale(cplx s) const {
        const double r = std::abs(s);
        double acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * r + std::abs(*it);
        return acc;
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) { return add(a, b, 1.0); }
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return add(a, b, -1.0); }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.is_zero() || b.is_zero()) return Polynomial{};
        std::vector<double> out(a.c_.size() + b.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
        return Polynomial(std::move(out));
    }
    friend Polynomial operator*(double k, const Polynomial& p) {
        std::vector<double> out = p.c_;
        for (double& v : out) v *= k;
        return Polynomial(std::move(out));
    }
    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    // Coefficients that cancel to within kTrimRel of the magnitudes that formed
    // them are set to zero, so the relative test is invariant under scaling of
    // either s or the polynomial.
    static Polynomial add(const Polynomial& a, const Polynomial& b, double sign) {
        const std::size_t n = std::max(a.c_.size(), b.c_.size());
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = a[i];
            const double y = sign * b[i];
            const double v = x + y;
            out[i] = std::abs(v) <= kTrimRel * (std::abs(x) + std::abs(y)) ? 0.0 : v;
        }
        return Polynomial(std::move(out));
    }
    void strip() {
        while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
    }

    std::vector<double> c_;
};

class RationalTf {
public:
    RationalTf() : num_(Polynomial::constant(0.0)), den_(Polynomial::constant(1.0)) {}
    RationalTf(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero()) throw Error(ErrorKind::DegenerateResult, "transfer function denominator is zero");
    }
    static RationalTf gain(double k) { return {Polynomial::constant(k), Polynomial::constant(1.0)}; }

    const Polynomial& num() const noexcept { return num_; }
    const Polynomial& den() const noexcept { return den_; }
    bool is_proper() const noexcept { return num_.is_zero() || num_.degree() <= den_.degree(); }
    bool is_strictly_proper() const noexcept { return num_.is_zero() || num_.degree() < den_.degree(); }

    /// Value as s -> infinity for a proper tf.
    double high_frequency_gain() const {
        if (num_.is_zero() || num_.degree() < den_.degree()) return 0.0;
        if (num_.degree() > den_.degree()) throw Error(ErrorKind::ImproperTf, "improper transfer function has no finite limit");
        return num_.leading() / den_.leading();
    }

private:
    Polynomial num_;
    Polynomial den_;
};

/// Evaluates tf at an arbitrary complex point.
inline cplx rational_eval_at(const RationalTf& tf, cplx s) {
    const cplx d = tf.den().eval(s);
    if (std::abs(d) <= kDivEps * tf.den().eval_scale(s)) {
        throw Error(ErrorKind::PoleOnAxis, "denominator vanishes at s = (" + fmt_g(s.real()) + ", " +
                                               fmt_g(s.imag()) + ")");
    }
    return tf.num().eval(s) / d;
}

/// tf(jw), with PoleOnAxis raised when w sits on (or numerically at) a pole.
inline cplx rational_eval(const RationalTf& tf, double omega) { return rational_eval_at(tf, cplx(0.0, omega)); }

enum class Compose { Series, Parallel, Feedback };

inline RationalTf compose(Compose kind, const RationalTf& a, const RationalTf& b) {
    Polynomial num, den;
    switch (kind) {
        case Compose::Series:
            num = a.num() * b.num();
            den = a.den() * b.den();
            break;
        case Compose::Parallel:
            num = a.num() * b.den() + b.num() * a.den();
            den = a.den() * b.den();
            break;
        case Compose::Feedback:
            // a / (1 + a b)
            num = a.num() * b.den();
            den = a.den() * b.den() + a.num() * b.num();
            break;
    }
    if (den.is_zero()) throw Error(ErrorKind::DegenerateResult, "composition produced a zero denominator");
    return {std::move(num), std::move(den)};
}

inline RationalTf operator*(const RationalTf& a, const RationalTf& b) { return compose(Compose::Series, a, b); }
inline RationalTf operator+(const RationalTf& a, const RationalTf& b) { return compose(Compose::Parallel, a, b); }

/// deg(den) - deg(num); negative for improper inputs.
inline int relative_degree(const RationalTf& tf) { return tf.den().degree() - tf.num().degree(); }

namespace detail {

// Parlett-Reinsch diagonal balancing, powers of two only so it is exact.
inline void balance(Eigen::MatrixXd& m) {
    const Eigen::Index n = m.rows();
    constexpr double radix = 2.0;
    bool done = false;
    while (!done) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = 0.0, r = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(m(j, i));
                r += std::abs(m(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix, f = 1.0;
            const double s = c + r;
            while (c < g) { f *= radix; c *= radix * radix; }
            g = r * radix;
            while (c > g) { f /= radix; c /= radix * radix; }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                m.row(i) /= f;
                m.col(i) *= f;
            }
        }
    }
}

/// Geometric root scale |c0/cn|^(1/n), guarded for zero roots.
inline double root_scale(const Polynomial& p) {
    const int n = p.degree();
    if (n < 1) return 1.0;
    int lo = 0;
    while (p[static_cast<std::size_t>(lo)] == 0.0) ++lo;
    if (lo == n) return 1.0;
    const double s = std::pow(std::abs(p[static_cast<std::size_t>(lo)] / p.leading()), 1.0 / (n - lo));
    return (std::isfinite(s) && s > 0.0) ? s : 1.0;
}

}  // namespace detail

/// Roots via eigenvalues of the balanced companion matrix of the frequency-scaled polynomial.
inline std::vector<cplx> roots(const Polynomial& p) {
    const int n = p.degree();
    if (n < 1) return {};
    const double sigma = detail::root_scale(p);
    // q(z) = p(sigma z) / (lead sigma^n), monic.
    std::vector<double> q(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        q[static_cast<std::size_t>(i)] =
            p[static_cast<std::size_t>(i)] * std::pow(sigma, i - n) / p.leading();
    }
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -q[static_cast<std::size_t>(i)];
    detail::balance(comp);
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::EigenFailure, "companion eigenvalue iteration did not converge");
    std::vector<cplx> out;
    out.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i) * sigma);
    return out;
}

struct HurwitzResult {
    bool hurwitz;
    double margin;  ///< max real part over the roots
};

inline HurwitzResult is_hurwitz(const Polynomial& p) {
    if (p.degree() < 1) throw Error(ErrorKind::BadParams, "Hurwitz test needs degree >= 1");
    const auto rs = roots(p);
    double margin = -std::numeric_limits<double>::infinity();
    double scale = 1.0;
    for (const auto& r : rs) {
        margin = std::max(margin, r.real());
        scale = std::max(scale, std::abs(r));
    }
    return {margin < -kHurwitzEps * scale, margin};
}

/// Roots of p that coincide (within kRootMatchRel) with a root of q.
inline std::vector<cplx> shared_roots(const Polynomial& p, const Polynomial& q) {
    std::vector<cplx> out;
    if (p.degree() < 1 || q.degree() < 1) return out;
    const auto rq = roots(q);
    for (const auto& a : roots(p)) {
        for (const auto& b : rq) {
            if (std::abs(a - b) <= kRootMatchRel * std::max(1.0, std::abs(a))) {
                out.push_back(a);
                break;
            }
        }
    }
    return out;
}

/// Diagonal (k,k) Padé approximant of exp(-T s); T = 0 gives the identity.
inline RationalTf pade_delay(double T, int k) {
    if (!(T >= 0.0) || !std::isfinite(T)) throw Error(ErrorKind::BadParams, "delay must be finite and >= 0");
    if (T == 0.0) return RationalTf::gain(1.0);
    if (k < 1) throw Error(ErrorKind::BadParams, "Padé order must be >= 1");
    // c_i = (2k-i)! k! / ((2k)! i! (k-i)!), built by the ratio c_{i+1}/c_i.
    std::vector<double> num(static_cast<std::size_t>(k) + 1), den(static_cast<std::size_t>(k) + 1);
    double c = 1.0, tp = 1.0;
    for (int i = 0; i <= k; ++i) {
        den[static_cast<std::size_t>(i)] = c * tp;
        num[static_cast<std::size_t>(i)] = (i % 2 ? -1.0 : 1.0) * c * tp;
        c *= static_cast<double>(k - i) / (static_cast<double>(2 * k - i) * static_cast<double>(i + 1));
        tp *= T;
    }
    return {Polynomial(std::move(num)), Polynomial(std::move(den))};
}

struct StateSpace {
    Eigen::MatrixXd A, B, C, D;

    Eigen::Index order() const noexcept { return A.rows(); }

    /// SISO frequency response C (jwI - A)^-1 B + D.
    cplx response(double omega) const {
        const Eigen::Index n = A.rows();
        if (n == 0) return D(0, 0);
        Eigen::MatrixXcd m = cplx(0.0, omega) * Eigen::MatrixXcd::Identity(n, n) - A.cast<cplx>();
        Eigen::VectorXcd x = m.partialPivLu().solve(B.col(0).cast<cplx>());
        return (C.row(0).cast<cplx>() * x)(0) + D(0, 0);
    }
};

/// Controllable canonical realization: superdiagonal ones, last row -a_i, B = e_n.
inline StateSpace to_state_space(const RationalTf& tf) {
    if (!tf.is_proper()) throw Error(ErrorKind::ImproperTf, "cannot realize improper transfer function");
    const int n = tf.den().degree();
    const double lead = tf.den().leading();
    const double d = tf.high_frequency_gain();
    const Polynomial rest = tf.num() - d * tf.den();

    StateSpace ss{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, 1), Eigen::MatrixXd::Zero(1, n),
                  Eigen::MatrixXd::Constant(1, 1, d)};
    for (int i = 0; i + 1 < n; ++i) ss.A(i, i + 1) = 1.0;
    for (int i = 0; i < n; ++i) {
        ss.A(n - 1, i) = -tf.den()[static_cast<std::size_t>(i)] / lead;
        ss.C(0, i) = rest[static_cast<std::size_t>(i)] / lead;
    }
    if (n > 0) ss.B(n - 1, 0) = 1.0;
    return ss;
}

/// Canonical realization under the similarity x = diag(sigma^i) z, with sigma the
/// denominator's root scale; keeps entries O(sigma) for frequency-scaled blocks.
/// A final power-of-two state scaling evens out |B| and |C| so that no single
/// interconnection entry carries the whole block gain.
inline StateSpace to_scaled_state_space(const RationalTf& tf) {
    StateSpace ss = to_state_space(tf);
    const Eigen::Index n = ss.order();
    if (n == 0) return ss;
    if (n >= 2) {
        const double sigma = detail::root_scale(tf.den());
        Eigen::VectorXd s(n);
        for (Eigen::Index i = 0; i < n; ++i) s(i) = std::pow(sigma, static_cast<double>(i));
        ss.A = s.cwiseInverse().asDiagonal() * ss.A * s.asDiagonal();
        ss.B = s.cwiseInverse().asDiagonal() * ss.B;
        ss.C = ss.C * s.asDiagonal();
    }
    const double nb = ss.B.norm(), nc = ss.C.norm();
    if (nb > 0.0 && nc > 0.0) {
        const double k = std::exp2(std::round(0.5 * std::log2(nb / nc)));
        ss.B /= k;
        ss.C *= k;
    }
    return ss;
}

}  // namespace rcs
