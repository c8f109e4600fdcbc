#pragma once

#include "expctl/errors.hpp"
#include "expctl/dual.hpp"
#include "expctl/model.hpp"
#include "expctl/nussbaum.hpp"
#include "expctl/quadrature.hpp"
#include "expctl/backstepping.hpp"
#include "expctl/scalar.hpp"
#include "expctl/sim.hpp"
#include "expctl/trajectory_io.hpp"
#include "expctl/analysis.hpp"
#include "expctl/scenarios.hpp"
#include "expctl/config.hpp"
#include "expctl/runner.hpp"
#include "expctl/acceptance.hpp"
