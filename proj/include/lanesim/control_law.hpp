#pragma once

#include <cmath>

#include "lanesim/dynamics.hpp"
#include "lanesim/errors.hpp"
#include "lanesim/math.hpp"

namespace lanesim {

/// Steering-wheel mechanical range.
inline constexpr double kMaxSteeringWheel = deg2rad(540.0);

/// Below this speed the 1/v lateral gain diverges; callers either reject
/// (label correction) or clamp (trajectory following) at this floor.
inline constexpr double kMinSpeed = 1.0;  // m/s

/// Lateral control gains. ke_numerator scales as K_e(v) = ke_numerator / v
/// (rad of steering wheel per meter of error); ktheta is dimensionless
/// (rad of steering wheel per rad of heading error).
struct ControlGains {
  double ke_numerator = 12.0;
  double ktheta = 5.3;

  double ke(double v) const { return ke_numerator / v; }

  void validate() const {
    if (!(ke_numerator > 0.0)) throw DomainError("gains: ke_numerator must be > 0");
    if (!(ktheta > 0.0)) throw DomainError("gains: ktheta must be > 0");
  }
};

/// Geometric feedforward: steering-wheel angle that holds a path of the given
/// curvature (tan(wheel) = wheelbase * curvature), odd in the curvature sign.
inline double curvature_feedforward(double curvature, const VehicleParams& p) {
  return p.steering_ratio * std::atan(p.wheelbase * curvature);
}

/// Drivers feed forward the road they see ahead, not the road under the rear
/// axle. Trajectory followers average the reference curvature over the next
/// kPreviewLength meters; the camera-based tracker observes roughly the same
/// band of road, starting where a bumper camera first sees ground.
inline constexpr double kPreviewStart = 2.2;   // nearest visible road, meters (camera band)
inline constexpr double kPreviewLength = 8.2;  // meters of previewed road

/// Trajectory-following steering-wheel command. lateral_offset and
/// heading_offset are displacements of the vehicle relative to the reference
/// (+ = left); the tracking errors are their negations, so a vehicle left of
/// the reference steers right. Speed is clamped at kMinSpeed; output is
/// clamped to the mechanical range.
inline double lateral_control_law(double curvature, double lateral_offset, double heading_offset,
                                  double v, const ControlGains& g, const VehicleParams& p) {
  double vv = std::max(v, kMinSpeed);
  double cmd = curvature_feedforward(curvature, p) - g.ke(vv) * lateral_offset -
               g.ktheta * heading_offset;
  return std::clamp(cmd, -kMaxSteeringWheel, kMaxSteeringWheel);
}

}  // namespace lanesim
