#pragma once

// Umbrella header for the whole toolkit.

#include "lanesim/augment.hpp"
#include "lanesim/config.hpp"
#include "lanesim/config_io.hpp"
#include "lanesim/control.hpp"
#include "lanesim/control_law.hpp"
#include "lanesim/drivelog.hpp"
#include "lanesim/dynamics.hpp"
#include "lanesim/errors.hpp"
#include "lanesim/image.hpp"
#include "lanesim/manifest.hpp"
#include "lanesim/math.hpp"
#include "lanesim/plot.hpp"
#include "lanesim/png_io.hpp"
#include "lanesim/pose.hpp"
#include "lanesim/projection.hpp"
#include "lanesim/report.hpp"
#include "lanesim/rng.hpp"
#include "lanesim/simloop.hpp"
#include "lanesim/synthworld.hpp"
#include "lanesim/version.hpp"
#include "lanesim/warp.hpp"
