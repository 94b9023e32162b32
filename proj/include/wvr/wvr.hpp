#pragma once

// Wave-optics simulation of a weak-value deflection measurement with power
// recycling: Gaussian beam + Sagnac port operators + recycling cavity +
// split detection, all on a 1-D transverse grid. Umbrella header.

#include "wvr/cavity.hpp"
#include "wvr/config.hpp"
#include "wvr/detection.hpp"
#include "wvr/field.hpp"
#include "wvr/runner.hpp"
#include "wvr/sagnac.hpp"
