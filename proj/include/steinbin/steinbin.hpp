#pragma once

#include "steinbin/errors.hpp"
#include "steinbin/lattice_dist.hpp"
#include "steinbin/lattice_io.hpp"
#include "steinbin/quadrature.hpp"
#include "steinbin/binomial_kernel.hpp"
#include "steinbin/stein_bounds.hpp"
#include "steinbin/spec_json.hpp"
#include "steinbin/oracle.hpp"
#include "steinbin/mc_engine.hpp"
#include "steinbin/rscan.hpp"
#include "steinbin/matern.hpp"
