#pragma once

#include <cmath>
#include <numbers>

#include "rcs/rcs.hpp"

namespace fixtures {

// 900 / (s^2 + 12 s + 900)
inline rcs::RationalTf msd_plant() {
    return {rcs::Polynomial::from_descending({900.0}), rcs::Polynomial::from_descending({1.0, 12.0, 900.0})};
}

inline rcs::ControllerParams msd_params() {
    rcs::ControllerParams p;
    p.k_p = 6.5;
    p.omega_i = 38.71;
    p.omega_d = 50.0;
    p.omega_t = 450.0;
    p.gamma = 0.0;
    p.D_r = 0.0;
    p.omega_r = 42.66;
    p.omega_k = 42.66;
    return p;
}

// k_g of the GFORE design, written out independently
inline double msd_kg() { return 1.0 / (42.66 * std::sqrt(1.0 + std::pow(4.0 / std::numbers::pi, 2))); }

inline rcs::LoopComponents msd_loop(double T = 0.0) {
    rcs::PlantModel pm;
    pm.model = msd_plant();
    pm.delay = T;
    return rcs::build_example_controller(msd_params(), pm);
}

// Same controller with the GFORE swapped for a Clegg integrator.
inline rcs::LoopComponents msd_ci_loop(double T = 0.0) {
    rcs::ControllerParams p = msd_params();
    p.omega_r = 0.0;
    p.k_g = msd_kg();
    rcs::PlantModel pm;
    pm.model = msd_plant();
    pm.delay = T;
    return rcs::build_example_controller(p, pm);
}

inline rcs::FrequencyGrid default_grid() { return rcs::make_log_grid_density(1e-2, 1e6, 400.0); }

}  // namespace fixtures
