#pragma once

#include "sonicctl/types.hpp"
#include "sonicctl/core.hpp"
#include "sonicctl/models.hpp"
#include "sonicctl/ode.hpp"
#include "sonicctl/chebyshev.hpp"
#include "sonicctl/interp.hpp"
#include "sonicctl/reachability.hpp"
#include "sonicctl/waves.hpp"
#include "sonicctl/grid.hpp"
#include "sonicctl/solver.hpp"
