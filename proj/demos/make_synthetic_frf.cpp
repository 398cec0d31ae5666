// Samples the mass-spring-damper plant 900 / (s^2 + 12 s + 900) as measured FRF data.
//
//   make_synthetic_frf [out.csv] [w_min] [w_max] [points_per_decade]

#include <cstdlib>
#include <iostream>
#include <string>

#include "rcs/frf.hpp"

int main(int argc, char** argv) {
    const std::string out = argc > 1 ? argv[1] : "msd_frf.csv";
    const double w_min = argc > 2 ? std::atof(argv[2]) : 0.1;
    const double w_max = argc > 3 ? std::atof(argv[3]) : 1e4;
    const double ppd = argc > 4 ? std::atof(argv[4]) : 400.0;
    try {
        const rcs::RationalTf g{rcs::Polynomial::from_descending({900.0}), rcs::Polynomial::from_descending({1.0, 12.0, 900.0})};
        const rcs::FrequencyGrid grid = rcs::make_log_grid_density(w_min, w_max, ppd);
        rcs::FrfData d;
        for (double w : grid.points) {
            d.omegas.push_back(w);
            d.values.push_back(rcs::rational_eval(g, w));
        }
        d.validate();
        rcs::save_frf(out, d);
        std::cout << "wrote " << d.omegas.size() << " samples to " << out << "\n";
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
