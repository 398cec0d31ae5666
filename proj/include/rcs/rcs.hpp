#pragma once

#include "rcs/config.hpp"
#include "rcs/delay_analysis.hpp"
#include "rcs/errors.hpp"
#include "rcs/frf.hpp"
#include "rcs/hbeta.hpp"
#include "rcs/hybrid_sim.hpp"
#include "rcs/io.hpp"
#include "rcs/parallel.hpp"
#include "rcs/poly.hpp"
#include "rcs/report.hpp"
#include "rcs/reset_model.hpp"
