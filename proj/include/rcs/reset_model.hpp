#pragma once

// Reset elements, the loop architecture (C1, C2, C3, Cs, plant) and assembly of
// the hybrid closed loop
//
//   x' = Abar x + Bbar w          while x is off the reset surface
//   x+ = Arho x                   when e_r = 0 and (I - Arho) x != 0
//   e_r = Cebar x + Debar w,  y = Cbar x
//
// with state [x_r; x_l] and w = [r; d].

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rcs/errors.hpp"
#include "rcs/frf.hpp"
#include "rcs/poly.hpp"

namespace rcs {

inline constexpr int kDefaultPadeOrder = 5;

/// First-order reset element (A_r, B_r, C_r, D_r) with reset value gamma.
struct ResetElement {
    double A_r = 0.0;
    double B_r = 1.0;
    double C_r = 1.0;
    double D_r = 0.0;
    double gamma = 0.0;

    /// GFORE with A_r = -omega_r and C_r = omega_k / B_r.
    static ResetElement gfore(double omega_r, double omega_k, double D_r, double gamma, double B_r = 1.0) {
        if (!(omega_r >= 0.0)) throw Error(ErrorKind::BadParams, "omega_r must be >= 0");
        if (B_r == 0.0) throw Error(ErrorKind::BadParams, "B_r must be nonzero");
        return {-omega_r, B_r, omega_k / B_r, D_r, gamma};
    }
    /// Clegg integrator: omega_r = 0, no feedthrough.
    static ResetElement ci(double omega_k, double gamma, double B_r = 1.0) { return gfore(0.0, omega_k, 0.0, gamma, B_r); }
    /// PCI as a CI with a parallel proportional path k_parallel folded into D_r.
    static ResetElement pci(double omega_k, double k_parallel, double gamma, double B_r = 1.0) {
        return gfore(0.0, omega_k, k_parallel, gamma, B_r);
    }

    double omega_r() const noexcept { return -A_r; }
    double omega_k() const noexcept { return B_r * C_r; }
    bool is_ci_family() const noexcept { return A_r == 0.0; }
    bool is_gfore() const noexcept { return A_r != 0.0; }
    std::string kind() const {
        if (is_gfore()) return "GFORE";
        return D_r == 0.0 ? "CI" : "PCI";
    }
};

/// R(s) = omega_k / (s + omega_r) + D_r.
inline RationalTf base_linear_tf(const ResetElement& r) {
    const Polynomial den{r.omega_r(), 1.0};
    const Polynomial num = Polynomial::constant(r.omega_k()) + r.D_r * den;
    return {num, den};
}

/// R(jw) - D_r, the dynamic part of the reset element.
inline cplx reset_dynamic_eval(const ResetElement& r, double omega) {
    return r.omega_k() / cplx(r.omega_r(), omega);
}

struct LoopComponents {
    RationalTf c1 = RationalTf::gain(1.0);
    RationalTf c2 = RationalTf::gain(1.0);
    RationalTf c3 = RationalTf::gain(0.0);
    RationalTf cs = RationalTf::gain(1.0);
    PlantModel plant;
    ResetElement reset;

    /// C1 C2 G, undelayed; rational plants only.
    RationalTf loop_tf() const {
        if (plant.is_measured()) throw Error(ErrorKind::NotRealizable, "measured plant has no rational loop");
        return c1 * c2 * plant.rational();
    }
    /// L(jw) with the plant delay applied per mode.
    cplx loop_eval(double omega, const DelayMode& mode = DelayMode::exact()) const {
        return rational_eval(c1, omega) * rational_eval(c2, omega) * plant_eval(plant, omega, mode);
    }
};

/// Parameters of the lead-lag controller family used with a GFORE element.
struct ControllerParams {
    double k_p = 0.0;
    double omega_i = 0.0;
    double omega_d = 0.0;
    double omega_t = 0.0;
    std::optional<double> k_g;  ///< derived from gamma and omega_r when absent
    double gamma = 0.0;
    double D_r = 0.0;
    double omega_r = 0.0;
    double omega_k = 0.0;
    double B_r = 1.0;
};

/// k_g = 1 / (omega_r |1 + (4j/pi)(1-gamma)/(1+gamma)|).
inline double compute_kg(double gamma, double omega_r) {
    if (!(omega_r > 0.0)) throw Error(ErrorKind::DomainError, "k_g needs omega_r > 0");
    if (gamma == -1.0) throw Error(ErrorKind::DomainError, "k_g undefined for gamma = -1");
    const cplx df = 1.0 + cplx(0.0, 4.0 / std::numbers::pi) * ((1.0 - gamma) / (1.0 + gamma));
    return 1.0 / (omega_r * std::abs(df));
}

/// C2 = k_p w_i (k_g + 1/s)(s/w_d + 1)/(s/w_t + 1), C1 = 1, C3 = s/((k_g s + 1) w_i), Cs = 1.
inline LoopComponents build_example_controller(const ControllerParams& p, PlantModel plant) {
    for (double v : {p.k_p, p.omega_i, p.omega_d, p.omega_t}) {
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::BadParams, "k_p, omega_i, omega_d, omega_t must be > 0");
    }
    if (!(p.gamma > -1.0 && p.gamma < 1.0)) throw Error(ErrorKind::BadParams, "gamma must lie in (-1, 1)");
    if (!(p.omega_r >= 0.0)) throw Error(ErrorKind::BadParams, "omega_r must be >= 0");
    if (!(p.omega_k > 0.0)) throw Error(ErrorKind::BadParams, "omega_k must be > 0");
    double kg = 0.0;
    if (p.k_g) {
        kg = *p.k_g;
    } else {
        if (p.omega_r == 0.0) throw Error(ErrorKind::BadParams, "k_g must be given when omega_r = 0");
        kg = compute_kg(p.gamma, p.omega_r);
    }
    if (!(kg > 0.0)) throw Error(ErrorKind::BadParams, "k_g must be > 0");

    LoopComponents lc;
    const RationalTf integral_part{Polynomial{1.0, kg}, Polynomial{0.0, 1.0}};
    const RationalTf lead{Polynomial{1.0, 1.0 / p.omega_d}, Polynomial{1.0, 1.0 / p.omega_t}};
    lc.c2 = RationalTf::gain(p.k_p * p.omega_i) * integral_part * lead;
    lc.c3 = RationalTf{Polynomial{0.0, 1.0}, Polynomial{p.omega_i, kg * p.omega_i}};
    lc.plant = std::move(plant);
    lc.reset = ResetElement::gfore(p.omega_r, p.omega_k, p.D_r, p.gamma, p.B_r);
    return lc;
}

/// Characteristic polynomial of the base-linear loop, numerator of 1 + L (R + C3).
/// A delayed plant is replaced by its Padé approximant of the given order.
inline Polynomial base_linear_characteristic(const LoopComponents& lc, int pade_order = kDefaultPadeOrder) {
    RationalTf L = lc.loop_tf();
    if (lc.plant.delay > 0.0) L = L * pade_delay(lc.plant.delay, pade_order);
    const RationalTf feedback = base_linear_tf(lc.reset) + lc.c3;
    return L.den() * feedback.den() + L.num() * feedback.num();
}

/// Named contiguous block of states in the closed-loop layout.
struct StateBlock {
    std::string name;
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
};

struct ClosedLoopHybrid {
    Eigen::MatrixXd A_bar;
    Eigen::MatrixXd B_bar;       ///< columns: r, d
    Eigen::RowVectorXd C_bar;    ///< y
    Eigen::RowVectorXd Ce_bar;   ///< e_r, zero in the x_r slot
    Eigen::RowVector2d De_bar;
    Eigen::RowVectorXd Cu_bar;   ///< u_1, zero in the x_r slot
    Eigen::RowVector2d Du;
    Eigen::MatrixXd A_rho;
    ResetElement reset;
    std::vector<StateBlock> layout;  ///< x_r, G, C1, C2, C3, Cs, pade

    Eigen::Index dim() const noexcept { return A_bar.rows(); }
    double u1(const Eigen::VectorXd& x, const Eigen::Vector2d& w) const { return Cu_bar.dot(x) + Du.dot(w); }
    double ur(const Eigen::VectorXd& x, const Eigen::Vector2d& w) const { return reset.C_r * x(0) + reset.D_r * u1(x, w); }
    double er(const Eigen::VectorXd& x, const Eigen::Vector2d& w) const { return Ce_bar.dot(x) + De_bar.dot(w); }
    double y(const Eigen::VectorXd& x) const { return C_bar.dot(x); }
};

/// LTI interconnect with reset output u_r as an exogenous input.
struct LtiPart {
    Eigen::MatrixXd A, Bu, B;
    Eigen::RowVectorXd C, Cu, Ce;
    Eigen::RowVector2d Du, De;
    std::vector<StateBlock> layout;

    /// C_u (jwI - A)^-1 B_u, the u_r -> u_1 transfer.
    cplx ur_to_u1(double omega) const { return resolvent_row(Cu, omega); }
    /// C_e (jwI - A)^-1 B_u, the u_r -> e_r transfer.
    cplx ur_to_er(double omega) const { return resolvent_row(Ce, omega); }

private:
    cplx resolvent_row(const Eigen::RowVectorXd& row, double omega) const {
        const Eigen::Index n = A.rows();
        Eigen::MatrixXcd m = cplx(0.0, omega) * Eigen::MatrixXcd::Identity(n, n) - A.cast<cplx>();
        Eigen::VectorXcd x = m.partialPivLu().solve(Bu.col(0).cast<cplx>());
        return (row.cast<cplx>() * x)(0);
    }
};

namespace detail {

// A signal expressed as an affine function of (x_l, u_r, w).
struct Affine {
    Eigen::RowVectorXd x;
    double ur = 0.0;
    Eigen::RowVector2d w = Eigen::RowVector2d::Zero();

    explicit Affine(Eigen::Index n) : x(Eigen::RowVectorXd::Zero(n)) {}
    Affine operator+(const Affine& o) const {
        Affine r = *this;
        r.x += o.x;
        r.ur += o.ur;
        r.w += o.w;
        return r;
    }
    Affine operator*(double k) const {
        Affine r = *this;
        r.x *= k;
        r.ur *= k;
        r.w *= k;
        return r;
    }
};

struct Block {
    StateSpace ss;
    StateBlock slot;
};

}  // namespace detail

/// Realizes C1, C2, C3, Cs, G (and a Padé delay at the plant input when requested)
/// and wires them: e = r - y, u_1 = C1 e, u = C2 (u_r + C3 u_1), G driven by u + d,
/// e_r = Cs u_1. States are ordered [G, C1, C2, C3, Cs, pade].
inline LtiPart assemble_lti(const LoopComponents& lc, std::optional<int> pade_order = kDefaultPadeOrder) {
    if (lc.plant.is_measured()) throw Error(ErrorKind::NotRealizable, "measured FRF plants cannot be realized in state space");
    const RationalTf& g = lc.plant.rational();
    if (!g.is_strictly_proper()) throw Error(ErrorKind::ImproperComponent, "plant must be strictly proper");
    const std::pair<const char*, const RationalTf*> named[] = {{"C1", &lc.c1}, {"C2", &lc.c2}, {"C3", &lc.c3}, {"Cs", &lc.cs}};
    for (const auto& [name, tf] : named) {
        if (!tf->is_proper()) throw Error(ErrorKind::ImproperComponent, std::string(name) + " must be proper");
    }
    const bool use_pade = lc.plant.delay > 0.0 && pade_order.has_value();

    std::vector<detail::Block> blocks;
    Eigen::Index offset = 0;
    auto add = [&](const char* name, const RationalTf& tf) {
        StateSpace ss = to_scaled_state_space(tf);
        const Eigen::Index n = ss.order();
        blocks.push_back({std::move(ss), {name, offset, n}});
        offset += n;
    };
    add("G", g);
    add("C1", lc.c1);
    add("C2", lc.c2);
    add("C3", lc.c3);
    add("Cs", lc.cs);
    if (use_pade) add("pade", pade_delay(lc.plant.delay, *pade_order));
    const Eigen::Index n = offset;
    auto& bG = blocks[0];
    auto& b1 = blocks[1];
    auto& b2 = blocks[2];
    auto& b3 = blocks[3];
    auto& bs = blocks[4];

    auto state_out = [&](const detail::Block& b) {
        detail::Affine a(n);
        a.x.segment(b.slot.offset, b.slot.size) = b.ss.C.row(0);
        return a;
    };
    auto output = [&](const detail::Block& b, const detail::Affine& in) { return state_out(b) + in * b.ss.D(0, 0); };

    detail::Affine ur(n);
    ur.ur = 1.0;
    detail::Affine ref(n);
    ref.w(0) = 1.0;
    detail::Affine dist(n);
    dist.w(1) = 1.0;

    const detail::Affine y = state_out(bG);
    const detail::Affine e = ref + y * -1.0;
    const detail::Affine u1 = output(b1, e);
    const detail::Affine c3_out = output(b3, u1);
    const detail::Affine c2_in = ur + c3_out;
    const detail::Affine c2_out = output(b2, c2_in);
    const detail::Affine plant_in = c2_out + dist;
    const detail::Affine er = output(bs, u1);

    LtiPart lti;
    lti.A = Eigen::MatrixXd::Zero(n, n);
    lti.Bu = Eigen::MatrixXd::Zero(n, 1);
    lti.B = Eigen::MatrixXd::Zero(n, 2);
    auto drive = [&](const detail::Block& b, const detail::Affine& in) {
        const auto o = b.slot.offset;
        const auto k = b.slot.size;
        if (k == 0) return;
        lti.A.block(o, o, k, k) += b.ss.A;
        lti.A.block(o, 0, k, n) += b.ss.B.col(0) * in.x;
        lti.Bu.block(o, 0, k, 1) += b.ss.B.col(0) * in.ur;
        lti.B.block(o, 0, k, 2) += b.ss.B.col(0) * in.w;
    };
    if (use_pade) {
        const auto& bp = blocks[5];
        drive(bp, plant_in);
        drive(bG, output(bp, plant_in));
    } else {
        drive(bG, plant_in);
    }
    drive(b1, e);
    drive(b2, c2_in);
    drive(b3, u1);
    drive(bs, u1);

    if (y.ur != 0.0 || u1.ur != 0.0 || er.ur != 0.0 || y.w.norm() != 0.0)
        throw Error(ErrorKind::ImproperComponent, "direct feedthrough from u_r or w violates the no-feedthrough assumption");
    lti.C = y.x;
    lti.Cu = u1.x;
    lti.Du = u1.w;
    lti.Ce = er.x;
    lti.De = er.w;
    for (const auto& b : blocks) lti.layout.push_back(b.slot);
    return lti;
}

/// Builds (Abar, Bbar, Cbar, Cebar, Debar, Arho) around the reset element.
inline ClosedLoopHybrid assemble_closed_loop(const LoopComponents& lc, std::optional<int> pade_order = kDefaultPadeOrder) {
    const LtiPart lti = assemble_lti(lc, pade_order);
    const ResetElement& r = lc.reset;
    const Eigen::Index nl = lti.A.rows();
    const Eigen::Index n = nl + 1;

    ClosedLoopHybrid h;
    h.reset = r;
    h.A_bar = Eigen::MatrixXd::Zero(n, n);
    h.A_bar(0, 0) = r.A_r;
    h.A_bar.block(0, 1, 1, nl) = r.B_r * lti.Cu;
    h.A_bar.block(1, 0, nl, 1) = lti.Bu * r.C_r;
    h.A_bar.block(1, 1, nl, nl) = lti.A + r.D_r * lti.Bu * lti.Cu;

    h.B_bar = Eigen::MatrixXd::Zero(n, 2);
    h.B_bar.row(0) = r.B_r * lti.Du;
    h.B_bar.block(1, 0, nl, 2) = lti.B + r.D_r * lti.Bu * lti.Du;

    h.C_bar = Eigen::RowVectorXd::Zero(n);
    h.C_bar.tail(nl) = lti.C;
    h.Ce_bar = Eigen::RowVectorXd::Zero(n);
    h.Ce_bar.tail(nl) = lti.Ce;
    h.De_bar = lti.De;
    h.Cu_bar = Eigen::RowVectorXd::Zero(n);
    h.Cu_bar.tail(nl) = lti.Cu;
    h.Du = lti.Du;

    h.A_rho = Eigen::MatrixXd::Identity(n, n);
    h.A_rho(0, 0) = r.gamma;

    h.layout.push_back({"x_r", 0, 1});
    for (auto b : lti.layout) {
        b.offset += 1;
        h.layout.push_back(b);
    }
    return h;
}

}  // namespace rcs
