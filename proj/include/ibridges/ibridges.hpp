#pragma once

#include "ibridges/beta_potential.hpp"
#include "ibridges/distributions.hpp"
#include "ibridges/error.hpp"
#include "ibridges/io.hpp"
#include "ibridges/linalg.hpp"
#include "ibridges/parallel.hpp"
#include "ibridges/quadrature.hpp"
#include "ibridges/rng.hpp"
#include "ibridges/sde.hpp"
#include "ibridges/special.hpp"
#include "ibridges/stats.hpp"
#include "ibridges/verify.hpp"
