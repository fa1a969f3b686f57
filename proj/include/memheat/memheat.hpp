#pragma once

#include "memheat/config.hpp"
#include "memheat/control.hpp"
#include "memheat/errors.hpp"
#include "memheat/grid.hpp"
#include "memheat/kernel.hpp"
#include "memheat/runner.hpp"
#include "memheat/simulate.hpp"
#include "memheat/support.hpp"
#include "memheat/system.hpp"
#include "memheat/time_grid.hpp"
