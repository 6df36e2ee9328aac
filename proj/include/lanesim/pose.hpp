#pragma once

#include <cmath>

#include "lanesim/math.hpp"

namespace lanesim {

// Shared planar conventions, binding for every module:
//   x forward, y left, z up; headings counterclockwise from +x.
//   de > 0  = displaced left of the reference.
//   dtheta > 0 = heading rotated left.
//   Positive steering-wheel angle turns left.

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, wrapped to (-pi, pi]

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(heading);
  }

  /// Pose displaced by `de` meters to the left and rotated left by `dtheta`.
  Pose2D displaced(double de, double dtheta) const {
    return {x - de * std::sin(heading), y + de * std::cos(heading),
            wrap_angle(heading + dtheta)};
  }
};

/// Signed lateral/heading deviation between two poses (see conventions above).
struct PoseOffset {
  double de = 0.0;      // meters, + = left
  double dtheta = 0.0;  // radians, + = left

  bool finite() const { return std::isfinite(de) && std::isfinite(dtheta); }
};

}  // namespace lanesim
