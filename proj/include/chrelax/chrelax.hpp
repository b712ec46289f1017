#pragma once

// Solver-and-optimizer toolkit for the optimal control of viscous
// Cahn-Hilliard dynamics with hyperbolically relaxed chemical potential:
// forward simulation, exact discrete sensitivities and adjoints,
// sparsity-promoting control optimization and vanishing-relaxation studies.

#include "chrelax/version.hpp"
#include "chrelax/errors.hpp"
#include "chrelax/rng.hpp"
#include "chrelax/grid.hpp"
#include "chrelax/potential.hpp"
#include "chrelax/linalg.hpp"
#include "chrelax/step_system.hpp"
#include "chrelax/state.hpp"
#include "chrelax/sensitivity.hpp"
#include "chrelax/control.hpp"
#include "chrelax/asymptotics.hpp"
#include "chrelax/mms.hpp"
#include "chrelax/csv.hpp"
#include "chrelax/config.hpp"
