#pragma once

#include "lanesim/augment.hpp"
#include "lanesim/config.hpp"
#include "lanesim/control_law.hpp"
#include "lanesim/dynamics.hpp"
#include "lanesim/projection.hpp"

// Config-document bindings for the core value types. Angles are degrees and
// distances meters in the documents; everything is radians/meters in memory.

namespace lanesim {

inline void projection_to_config(const ProjectionSpec& s, ConfigDoc& doc) {
  doc.set("projection", "width", std::to_string(s.width));
  doc.set("projection", "height", std::to_string(s.height));
  doc.set_double("projection", "hfov_deg", rad2deg(s.hfov));
  doc.set_double("projection", "horizon_row", s.horizon_row);
  doc.set_double("projection", "camera_height_m", s.camera_height);
  doc.set_double("projection", "vertical_scale", s.vertical_scale);
}

inline ProjectionSpec projection_from_config(const ConfigDoc& doc,
                                             const ProjectionSpec& base = {}) {
  ProjectionSpec s = base;
  s.width = static_cast<int>(doc.get_int("projection", "width", s.width));
  s.height = static_cast<int>(doc.get_int("projection", "height", s.height));
  s.hfov = deg2rad(doc.get_double("projection", "hfov_deg", rad2deg(s.hfov)));
  s.horizon_row = doc.get_double("projection", "horizon_row", s.horizon_row);
  s.camera_height = doc.get_double("projection", "camera_height_m", s.camera_height);
  s.vertical_scale = doc.get_double("projection", "vertical_scale", s.vertical_scale);
  s.validate();
  return s;
}

inline void fisheye_to_config(const FisheyeIntrinsics& f, ConfigDoc& doc) {
  doc.set_double("fisheye", "focal_px_per_rad", f.focal);
  doc.set_double("fisheye", "cx", f.cx);
  doc.set_double("fisheye", "cy", f.cy);
  doc.set("fisheye", "width", std::to_string(f.width));
  doc.set("fisheye", "height", std::to_string(f.height));
  doc.set_double("fisheye", "max_fov_deg", rad2deg(f.max_fov));
}

inline FisheyeIntrinsics fisheye_from_config(const ConfigDoc& doc,
                                             const FisheyeIntrinsics& base = {}) {
  FisheyeIntrinsics f = base;
  f.focal = doc.get_double("fisheye", "focal_px_per_rad", f.focal);
  f.cx = doc.get_double("fisheye", "cx", f.cx);
  f.cy = doc.get_double("fisheye", "cy", f.cy);
  f.width = static_cast<int>(doc.get_int("fisheye", "width", f.width));
  f.height = static_cast<int>(doc.get_int("fisheye", "height", f.height));
  f.max_fov = deg2rad(doc.get_double("fisheye", "max_fov_deg", rad2deg(f.max_fov)));
  f.validate();
  return f;
}

inline void vehicle_to_config(const VehicleParams& p, ConfigDoc& doc) {
  doc.set_double("vehicle", "wheelbase_m", p.wheelbase);
  doc.set_double("vehicle", "steering_ratio", p.steering_ratio);
  doc.set_double("vehicle", "max_wheel_angle_deg", rad2deg(p.max_wheel_angle));
}

inline VehicleParams vehicle_from_config(const ConfigDoc& doc, const VehicleParams& base = {}) {
  VehicleParams p = base;
  p.wheelbase = doc.get_double("vehicle", "wheelbase_m", p.wheelbase);
  p.steering_ratio = doc.get_double("vehicle", "steering_ratio", p.steering_ratio);
  p.max_wheel_angle = deg2rad(doc.get_double("vehicle", "max_wheel_angle_deg", rad2deg(p.max_wheel_angle)));
  p.validate();
  return p;
}

inline void gains_to_config(const ControlGains& g, ConfigDoc& doc) {
  doc.set_double("gains", "ke_numerator", g.ke_numerator);
  doc.set_double("gains", "ktheta", g.ktheta);
}

inline ControlGains gains_from_config(const ConfigDoc& doc, const ControlGains& base = {}) {
  ControlGains g = base;
  g.ke_numerator = doc.get_double("gains", "ke_numerator", g.ke_numerator);
  g.ktheta = doc.get_double("gains", "ktheta", g.ktheta);
  g.validate();
  return g;
}

inline void augment_to_config(const AugmentConfig& a, ConfigDoc& doc) {
  doc.set_double("augment", "sigma_de_m", a.sigma_de);
  doc.set_double("augment", "sigma_dtheta_deg", rad2deg(a.sigma_dtheta));
  doc.set_double("augment", "clip_de_m", a.clip_de);
  doc.set_double("augment", "clip_dtheta_deg", rad2deg(a.clip_dtheta));
  doc.set("augment", "seed", std::to_string(a.seed));
}

inline AugmentConfig augment_from_config(const ConfigDoc& doc, const AugmentConfig& base = {}) {
  AugmentConfig a = base;
  a.sigma_de = doc.get_double("augment", "sigma_de_m", a.sigma_de);
  a.sigma_dtheta = deg2rad(doc.get_double("augment", "sigma_dtheta_deg", rad2deg(a.sigma_dtheta)));
  a.clip_de = doc.get_double("augment", "clip_de_m", a.clip_de);
  a.clip_dtheta = deg2rad(doc.get_double("augment", "clip_dtheta_deg", rad2deg(a.clip_dtheta)));
  a.seed = doc.get_u64("augment", "seed", a.seed);
  a.validate();
  return a;
}

}  // namespace lanesim
