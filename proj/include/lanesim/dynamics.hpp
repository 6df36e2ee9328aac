#pragma once

#include <cmath>

#include "lanesim/errors.hpp"
#include "lanesim/math.hpp"
#include "lanesim/pose.hpp"

namespace lanesim {

struct VehicleParams {
  double wheelbase = 2.7;                   // meters
  double steering_ratio = 20.0;             // steering-wheel rad per road-wheel rad
  double max_wheel_angle = deg2rad(30.0);   // road-wheel saturation, radians

  void validate() const {
    if (!(wheelbase > 0.0)) throw DomainError("vehicle: wheelbase must be > 0");
    if (!(steering_ratio >= 1.0)) throw DomainError("vehicle: steering_ratio must be >= 1");
    if (!(max_wheel_angle > 0.0 && max_wheel_angle < kPi / 2.0))
      throw DomainError("vehicle: max_wheel_angle must be in (0, pi/2)");
  }
};

struct VehicleState {
  Pose2D pose;               // rear-axle reference point
  double wheel_angle = 0.0;  // last commanded road-wheel angle, radians
};

/// Steering-wheel angle -> road-wheel angle (divide by ratio, then saturate).
inline double sw_to_wheel(double delta_sw, const VehicleParams& p) {
  return std::clamp(delta_sw / p.steering_ratio, -p.max_wheel_angle, p.max_wheel_angle);
}

/// One kinematic bicycle step with RK4, inputs held constant over dt:
///   x' = v cos(h),  y' = v sin(h),  h' = v tan(wheel) / wheelbase.
inline VehicleState step(const VehicleState& s, double delta_sw, double v, double dt,
                         const VehicleParams& p) {
  if (!std::isfinite(delta_sw) || !std::isfinite(v) || !std::isfinite(dt))
    throw DomainError("bicycle step: non-finite input");
  if (!s.pose.finite()) throw DomainError("bicycle step: non-finite state");
  if (!(dt > 0.0 && dt <= 0.1)) throw DomainError("bicycle step: dt must be in (0, 0.1]");
  double wheel = sw_to_wheel(delta_sw, p);
  double hrate = v * std::tan(wheel) / p.wheelbase;

  // Heading is linear in time, so only x/y need the RK4 stages.
  auto deriv = [&](double h, double& dx, double& dy) {
    dx = v * std::cos(h);
    dy = v * std::sin(h);
  };
  double h0 = s.pose.heading;
  double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y;
  deriv(h0, k1x, k1y);
  deriv(h0 + 0.5 * dt * hrate, k2x, k2y);
  deriv(h0 + 0.5 * dt * hrate, k3x, k3y);
  deriv(h0 + dt * hrate, k4x, k4y);

  VehicleState out;
  out.pose.x = s.pose.x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  out.pose.y = s.pose.y + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
  out.pose.heading = wrap_angle(h0 + dt * hrate);
  out.wheel_angle = wheel;
  return out;
}

/// Offset of `network` relative to `human`, expressed in the human frame:
/// de is the lateral component (+ = network left of human), dtheta the heading
/// difference. The longitudinal component is discarded; the image warp has no
/// longitudinal degree of freedom and both vehicles travel the same path
/// length per step, so the residual mismatch on curves is second order.
inline PoseOffset relative_offset(const Pose2D& human, const Pose2D& network) {
  if (!human.finite() || !network.finite())
    throw DomainError("relative_offset: non-finite pose");
  double dx = network.x - human.x;
  double dy = network.y - human.y;
  double de = -std::sin(human.heading) * dx + std::cos(human.heading) * dy;
  return {de, wrap_angle(network.heading - human.heading)};
}

}  // namespace lanesim
