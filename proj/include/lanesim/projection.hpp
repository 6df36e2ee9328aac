#pragma once

#include <cmath>
#include <optional>

#include "lanesim/errors.hpp"
#include "lanesim/image.hpp"
#include "lanesim/math.hpp"

namespace lanesim {

// Cylindrical image geometry.
//
// The image is a crop of a cylinder whose axis is vertical (perpendicular to
// the ground plane). Columns are uniform in azimuth; the azimuth of column c
// is (width/2 - c - 0.5) * hfov / width, so column 0 looks left of center and
// the continuous left edge (c = -0.5) looks at exactly +hfov/2. Rows are
// linear in tan(elevation): row r has tan(elev) = (horizon_row - r - 0.5) /
// vertical_scale, which makes the horizon a single straight row and keeps
// vertical lines vertical.
//
// Directions use the vehicle frame: x forward, y left, z up. A camera yaw to
// the left therefore shifts image content to the right by a constant number
// of columns, and a lateral camera shift only moves pixels below the horizon.
struct ProjectionSpec {
  int width = 200;
  int height = 66;
  double hfov = kPi / 2.0;       // radians
  double horizon_row = 14.52;    // fractional pixel row where elevation = 0
  double camera_height = 0.5;    // meters above ground
  double vertical_scale = 0.0;   // pixels per unit tan(elevation); <= 0 -> width/hfov

  double cols_per_rad() const { return width / hfov; }
  double vscale() const { return vertical_scale > 0.0 ? vertical_scale : width / hfov; }

  void validate() const {
    if (width <= 0 || height <= 0) throw DomainError("projection: resolution must be positive");
    if (!(hfov > 0.0 && hfov < kPi)) throw DomainError("projection: hfov must be in (0, pi)");
    if (!(horizon_row >= 0.0 && horizon_row <= height))
      throw DomainError("projection: horizon_row must be within [0, height]");
    if (!(camera_height > 0.0)) throw DomainError("projection: camera_height must be > 0");
    if (vertical_scale < 0.0) throw DomainError("projection: vertical_scale must be >= 0");
  }

  bool operator==(const ProjectionSpec&) const = default;
};

/// A cylindrical image together with the geometry it was sampled under.
struct CylImage {
  ProjectionSpec spec;
  Image image;
};

inline double col_to_azimuth(const ProjectionSpec& s, double col) {
  return (s.width / 2.0 - col - 0.5) * (s.hfov / s.width);
}

inline double azimuth_to_col(const ProjectionSpec& s, double azimuth) {
  return s.width / 2.0 - 0.5 - azimuth * (s.width / s.hfov);
}

inline double row_to_tanelev(const ProjectionSpec& s, double row) {
  return (s.horizon_row - row - 0.5) / s.vscale();
}

inline double tanelev_to_row(const ProjectionSpec& s, double tanelev) {
  return s.horizon_row - 0.5 - tanelev * s.vscale();
}

/// Unit direction for a (possibly fractional) pixel; no bounds check.
inline Vec3 pixel_to_ray_unchecked(const ProjectionSpec& s, double col, double row) {
  double az = col_to_azimuth(s, col);
  double te = row_to_tanelev(s, row);
  // Horizontal component has unit length before normalization, so the
  // vertical component is exactly tan(elevation).
  return Vec3{std::cos(az), std::sin(az), te}.normalized();
}

/// Unit direction for a pixel within image bounds (continuous span
/// [-0.5, width-0.5] x [-0.5, height-0.5]); out of bounds is a domain error.
inline Vec3 pixel_to_ray(const ProjectionSpec& s, double col, double row) {
  if (!(col >= -0.5 && col <= s.width - 0.5 && row >= -0.5 && row <= s.height - 0.5))
    throw DomainError("pixel_to_ray: pixel outside image bounds");
  return pixel_to_ray_unchecked(s, col, row);
}

struct PixelLoc {
  double col = 0.0;
  double row = 0.0;
};

/// Fractional pixel for a direction, or nullopt when the ray is outside the
/// horizontal field of view (OUT_OF_FIELD) or has no horizontal component.
/// The row may land outside the crop; callers clamp as their fill policy asks.
inline std::optional<PixelLoc> ray_to_pixel(const ProjectionSpec& s, const Vec3& ray) {
  double hor = std::hypot(ray.x, ray.y);
  if (hor <= 0.0) return std::nullopt;
  double az = std::atan2(ray.y, ray.x);
  if (std::abs(az) > s.hfov / 2.0) return std::nullopt;
  double te = ray.z / hor;
  return PixelLoc{azimuth_to_col(s, az), tanelev_to_row(s, te)};
}

/// Raw fisheye camera, equidistant model: image radius = focal * (angle from
/// the optical axis). The optical axis is +x in the camera frame; image u
/// grows along -y (right), image v along -z (down).
struct FisheyeIntrinsics {
  double focal = 386.0;   // pixels per radian
  double cx = 639.5;      // principal point, pixels
  double cy = 399.5;
  int width = 1280;
  int height = 800;
  double max_fov = deg2rad(190.0);  // full cone angle, radians

  void validate() const {
    if (!(focal > 0.0)) throw DomainError("fisheye: focal must be > 0");
    if (width <= 0 || height <= 0) throw DomainError("fisheye: resolution must be positive");
    if (!(cx >= 0.0 && cx <= width - 1 && cy >= 0.0 && cy <= height - 1))
      throw DomainError("fisheye: principal point outside image");
    if (!(max_fov > 0.0 && max_fov < 2.0 * kPi))
      throw DomainError("fisheye: max_fov must be in (0, 2*pi)");
  }
};

/// Project a camera-frame direction through the equidistant fisheye model.
/// nullopt when the ray lies outside max_fov.
inline std::optional<PixelLoc> fisheye_project(const FisheyeIntrinsics& intr, const Vec3& ray_cam) {
  double lateral = std::hypot(ray_cam.y, ray_cam.z);
  double theta = std::atan2(lateral, ray_cam.x);  // angle from optical axis
  if (theta > intr.max_fov / 2.0) return std::nullopt;
  if (lateral <= 0.0) return PixelLoc{intr.cx, intr.cy};
  double rad = intr.focal * theta;
  return PixelLoc{intr.cx + rad * (-ray_cam.y / lateral),
                  intr.cy + rad * (-ray_cam.z / lateral)};
}

/// Camera-frame direction of a fisheye pixel; nullopt outside max_fov.
inline std::optional<Vec3> fisheye_unproject(const FisheyeIntrinsics& intr, double col, double row) {
  double du = col - intr.cx;
  double dv = row - intr.cy;
  double rad = std::hypot(du, dv);
  double theta = rad / intr.focal;
  if (theta > intr.max_fov / 2.0) return std::nullopt;
  if (rad <= 0.0) return Vec3{1.0, 0.0, 0.0};
  double s = std::sin(theta);
  return Vec3{std::cos(theta), -s * du / rad, -s * dv / rad};
}

}  // namespace lanesim
