#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "lanesim/errors.hpp"
#include "lanesim/image.hpp"
#include "lanesim/math.hpp"
#include "lanesim/pose.hpp"
#include "lanesim/projection.hpp"

namespace lanesim {

/// Per-destination-pixel source coordinates, precomputed once and applied with
/// one bilinear pass. Immutable after construction; safe to share across threads.
struct WarpMap {
  // InField: source lies inside the source image.
  // Clamped: source fell outside the horizontal field or the crop; the stored
  //          coordinates are usable as-is and border clamping replicates the
  //          nearest edge pixel.
  // Undefined: no source direction exists (e.g. beyond the fisheye max_fov);
  //            filled with black.
  enum Flag : uint8_t { InField = 0, Clamped = 1, Undefined = 2 };

  int width = 0;
  int height = 0;
  std::vector<float> src_col;
  std::vector<float> src_row;
  std::vector<uint8_t> flag;

  WarpMap() = default;
  WarpMap(int w, int h)
      : width(w),
        height(h),
        src_col(static_cast<size_t>(w) * h, 0.0f),
        src_row(static_cast<size_t>(w) * h, 0.0f),
        flag(static_cast<size_t>(w) * h, InField) {}

  size_t idx(int col, int row) const { return static_cast<size_t>(row) * width + col; }

  void put(int col, int row, double sc, double sr, Flag f = InField) {
    size_t i = idx(col, row);
    src_col[i] = static_cast<float>(sc);
    src_row[i] = static_cast<float>(sr);
    flag[i] = f;
  }

  void put_undefined(int col, int row) {
    size_t i = idx(col, row);
    src_col[i] = 0.0f;
    src_row[i] = 0.0f;
    flag[i] = Undefined;
  }
};

inline Image apply_warp(const WarpMap& map, const Image& src) {
  Image dst(map.width, map.height);
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      size_t i = map.idx(c, r);
      if (map.flag[i] == WarpMap::Undefined) {
        dst.set(c, r, {0, 0, 0});
        continue;
      }
      dst.set(c, r, bilinear_sample(src, map.src_col[i], map.src_row[i]));
    }
  }
  return dst;
}

namespace detail {

/// Marks the entry Clamped when the source position falls outside the source
/// raster; bilinear border clamping then replicates the edge.
inline void put_checked(WarpMap& map, int col, int row, double sc, double sr,
                        int src_w, int src_h) {
  bool inside = sc >= 0.0 && sc <= src_w - 1 && sr >= 0.0 && sr <= src_h - 1;
  map.put(col, row, sc, sr, inside ? WarpMap::InField : WarpMap::Clamped);
}

}  // namespace detail

/// Map realizing a camera yaw of `dtheta` (+ = left). On a cylinder this is an
/// exact column translation: content moves right by dtheta * width/hfov columns.
/// Vacated columns replicate the image edge.
inline WarpMap yaw_shift_map(const ProjectionSpec& spec, double dtheta) {
  spec.validate();
  WarpMap map(spec.width, spec.height);
  std::vector<double> src_cols(spec.width);
  for (int c = 0; c < spec.width; ++c)
    src_cols[c] = azimuth_to_col(spec, col_to_azimuth(spec, c) + dtheta);
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c)
      detail::put_checked(map, c, r, src_cols[c], r, spec.width, spec.height);
  return map;
}

/// Map realizing a lateral camera shift of `de` meters (+ = camera moved left).
/// Rows at or above the horizon are copied unchanged (their content is at
/// infinite distance); below the horizon every pixel is re-sampled from the
/// source location of its ground point shifted by de in y. Out-of-field
/// sources replicate the image edge.
inline WarpMap lateral_warp_map(const ProjectionSpec& spec, double de) {
  spec.validate();
  WarpMap map(spec.width, spec.height);
  double h = spec.camera_height;
  for (int r = 0; r < spec.height; ++r) {
    double te = row_to_tanelev(spec, r);
    if (te >= 0.0) {
      for (int c = 0; c < spec.width; ++c) map.put(c, r, c, r);
      continue;
    }
    // Horizontal ground distance along the ray direction.
    double rho = h / -te;
    for (int c = 0; c < spec.width; ++c) {
      double az = col_to_azimuth(spec, c);
      double gx = rho * std::cos(az);
      double gy = rho * std::sin(az) + de;
      double src_az = std::atan2(gy, gx);
      double src_rho = std::hypot(gx, gy);
      double src_te = -h / src_rho;
      detail::put_checked(map, c, r, azimuth_to_col(spec, src_az),
                          tanelev_to_row(spec, src_te), spec.width, spec.height);
    }
  }
  return map;
}

/// Warp operating envelope; beyond it the simulator must already have
/// recovered, so exceeding it is an error.
struct WarpEnvelope {
  double max_de = 2.0;                 // meters
  double max_dtheta = deg2rad(20.0);   // radians

  void check(const PoseOffset& off) const {
    if (!off.finite()) throw DomainError("pose offset must be finite");
    if (std::abs(off.de) > max_de || std::abs(off.dtheta) > max_dtheta)
      throw EnvelopeError("pose offset outside warp envelope");
  }
};

/// Single map equivalent to lateral_warp(de) followed by yaw_shift(dtheta),
/// composed analytically so the image is resampled once.
inline WarpMap compose_offset_map(const ProjectionSpec& spec, const PoseOffset& offset,
                                  const WarpEnvelope& env = {}) {
  spec.validate();
  env.check(offset);
  WarpMap map(spec.width, spec.height);
  double h = spec.camera_height;
  // Column position each destination column reaches after the yaw stage.
  std::vector<double> yawed_col(spec.width), yawed_az(spec.width);
  for (int c = 0; c < spec.width; ++c) {
    yawed_az[c] = col_to_azimuth(spec, c) + offset.dtheta;
    yawed_col[c] = azimuth_to_col(spec, yawed_az[c]);
  }
  for (int r = 0; r < spec.height; ++r) {
    double te = row_to_tanelev(spec, r);
    if (te >= 0.0) {
      for (int c = 0; c < spec.width; ++c)
        detail::put_checked(map, c, r, yawed_col[c], r, spec.width, spec.height);
      continue;
    }
    double rho = h / -te;
    for (int c = 0; c < spec.width; ++c) {
      double gx = rho * std::cos(yawed_az[c]);
      double gy = rho * std::sin(yawed_az[c]) + offset.de;
      double src_az = std::atan2(gy, gx);
      double src_rho = std::hypot(gx, gy);
      double src_te = -h / src_rho;
      detail::put_checked(map, c, r, azimuth_to_col(spec, src_az),
                          tanelev_to_row(spec, src_te), spec.width, spec.height);
    }
  }
  return map;
}

/// Map from a raw fisheye frame into the cylindrical crop. `cam_from_vehicle`
/// rotates vehicle-frame directions into the physical camera frame, which is
/// how the projection is made invariant to the camera mount orientation.
/// Rays beyond the fisheye max_fov have no source and come out black.
inline WarpMap fisheye_to_cyl_map(const FisheyeIntrinsics& intr, const Mat3& cam_from_vehicle,
                                  const ProjectionSpec& spec) {
  spec.validate();
  intr.validate();
  if (spec.hfov > intr.max_fov)
    throw DomainError("fisheye_to_cyl: cylindrical hfov exceeds fisheye max_fov");
  WarpMap map(spec.width, spec.height);
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      Vec3 ray_vehicle = pixel_to_ray_unchecked(spec, c, r);
      Vec3 ray_cam = cam_from_vehicle * ray_vehicle;
      auto px = fisheye_project(intr, ray_cam);
      if (!px) {
        map.put_undefined(c, r);
        continue;
      }
      bool inside = px->col >= 0.0 && px->col <= intr.width - 1 && px->row >= 0.0 &&
                    px->row <= intr.height - 1;
      if (!inside) {
        map.put_undefined(c, r);  // beyond the sensor: no data
        continue;
      }
      map.put(c, r, px->col, px->row);
    }
  }
  return map;
}

/// Resample between two cylindrical geometries sharing the same camera pose
/// (crop/FOV/scale changes). Azimuths outside the source field replicate edges.
inline WarpMap reproject_map(const ProjectionSpec& src, const ProjectionSpec& dst) {
  src.validate();
  dst.validate();
  WarpMap map(dst.width, dst.height);
  for (int c = 0; c < dst.width; ++c) {
    double az = col_to_azimuth(dst, c);
    double sc = azimuth_to_col(src, az);
    for (int r = 0; r < dst.height; ++r) {
      double te = row_to_tanelev(dst, r);
      detail::put_checked(map, c, r, sc, tanelev_to_row(src, te), src.width, src.height);
    }
  }
  return map;
}

// Image-level conveniences.

inline CylImage yaw_shift(const CylImage& img, double dtheta) {
  return {img.spec, apply_warp(yaw_shift_map(img.spec, dtheta), img.image)};
}

inline CylImage lateral_warp(const CylImage& img, double de) {
  return {img.spec, apply_warp(lateral_warp_map(img.spec, de), img.image)};
}

inline CylImage warp_offset(const CylImage& img, const PoseOffset& offset,
                            const WarpEnvelope& env = {}) {
  return {img.spec, apply_warp(compose_offset_map(img.spec, offset, env), img.image)};
}

inline CylImage fisheye_to_cyl(const Image& raw, const FisheyeIntrinsics& intr,
                               const Mat3& cam_from_vehicle, const ProjectionSpec& spec) {
  if (raw.width != intr.width || raw.height != intr.height)
    throw DomainError("fisheye_to_cyl: image size does not match intrinsics");
  return {spec, apply_warp(fisheye_to_cyl_map(intr, cam_from_vehicle, spec), raw)};
}

inline CylImage reproject(const CylImage& img, const ProjectionSpec& dst) {
  return {dst, apply_warp(reproject_map(img.spec, dst), img.image)};
}

/// Cache of composed offset maps keyed by quantized offset (1 mm / 0.2 mrad),
/// so a simulation dwelling near one offset rebuilds nothing.
class WarpCache {
 public:
  explicit WarpCache(const ProjectionSpec& spec, const WarpEnvelope& env = {})
      : spec_(spec), env_(env) {}

  static PoseOffset quantize(const PoseOffset& off) {
    return {std::llround(off.de * 1000.0) / 1000.0,
            std::llround(off.dtheta * 5000.0) / 5000.0};
  }

  std::shared_ptr<const WarpMap> get(const PoseOffset& offset) {
    env_.check(offset);
    PoseOffset q = quantize(offset);
    uint64_t key = (static_cast<uint64_t>(static_cast<uint32_t>(
                        static_cast<int32_t>(std::llround(q.de * 1000.0))))
                    << 32) |
                   static_cast<uint32_t>(static_cast<int32_t>(std::llround(q.dtheta * 5000.0)));
    auto it = maps_.find(key);
    if (it != maps_.end()) return it->second;
    if (maps_.size() >= kMaxEntries) maps_.clear();
    auto map = std::make_shared<const WarpMap>(compose_offset_map(spec_, q, env_));
    maps_.emplace(key, map);
    return map;
  }

  const ProjectionSpec& spec() const { return spec_; }
  const WarpEnvelope& envelope() const { return env_; }

 private:
  static constexpr size_t kMaxEntries = 512;
  ProjectionSpec spec_;
  WarpEnvelope env_;
  std::unordered_map<uint64_t, std::shared_ptr<const WarpMap>> maps_;
};

}  // namespace lanesim
