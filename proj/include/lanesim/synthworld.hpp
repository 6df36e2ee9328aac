#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lanesim/control_law.hpp"
#include "lanesim/drivelog.hpp"
#include "lanesim/dynamics.hpp"
#include "lanesim/errors.hpp"
#include "lanesim/image.hpp"
#include "lanesim/math.hpp"
#include "lanesim/pose.hpp"
#include "lanesim/projection.hpp"
#include "lanesim/rng.hpp"

namespace lanesim {

// Flat-ground synthetic road world. Rendering is analytic ray/ground
// intersection with smooth shading functions, which makes it an exact
// realization of the assumptions behind the image warps: everything below the
// horizon lies on the ground plane, everything above it at infinity — except
// traffic cones, whose vertical billboards deliberately violate the ground
// assumption so that warp artifacts on vertical objects can be measured.

struct SegmentSpec {
  enum class Kind { Straight, Arc };
  Kind kind = Kind::Straight;
  double length = 0.0;  // meters, straights
  double radius = 0.0;  // meters, arcs
  double angle = 0.0;   // radians, arcs; + = left turn
};

struct ConeSpec {
  double s = 0.0;       // arclength along the centerline
  double offset = 0.0;  // lateral placement, + = left
};

enum class MarkingPattern { None, Solid, Dashed };

struct TrackSpec {
  std::vector<SegmentSpec> segments;
  double lane_width = 3.5;  // meters
  MarkingPattern marking_left = MarkingPattern::Solid;
  MarkingPattern marking_right = MarkingPattern::Solid;
  std::vector<ConeSpec> cones;

  void validate() const {
    if (segments.empty()) throw DomainError("track: no segments");
    if (!(lane_width > 0.0)) throw DomainError("track: lane_width must be > 0");
    for (const auto& seg : segments) {
      if (seg.kind == SegmentSpec::Kind::Straight) {
        if (!(seg.length > 0.0)) throw DomainError("track: straight length must be > 0");
      } else {
        if (!(seg.radius > lane_width / 2.0))
          throw DomainError("track: arc radius must exceed half the lane width");
        if (!(std::abs(seg.angle) > 0.0 && std::abs(seg.angle) <= 2.0 * kPi))
          throw DomainError("track: arc angle must be in (0, 2*pi]");
      }
    }
  }
};

// Track document: one directive per line.
//   lane_width 3.5
//   markings solid dashed        # left right: solid | dashed | none
//   straight 100                 # meters
//   arc 8 180                    # radius_m angle_deg (+ = left)
//   cone 40 0.8                  # arclength_m lateral_m (+ = left)
inline TrackSpec parse_track(const std::string& text, const std::string& origin = "<track>") {
  TrackSpec spec;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto pattern = [&](const std::string& word) {
    if (word == "solid") return MarkingPattern::Solid;
    if (word == "dashed") return MarkingPattern::Dashed;
    if (word == "none") return MarkingPattern::None;
    throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown marking '" + word + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    auto want = [&](double& out) {
      if (!(ls >> out))
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": missing number after '" + word + "'");
    };
    if (word == "lane_width") {
      want(spec.lane_width);
    } else if (word == "markings") {
      std::string l, r;
      if (!(ls >> l >> r))
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": markings needs two patterns");
      spec.marking_left = pattern(l);
      spec.marking_right = pattern(r);
    } else if (word == "straight") {
      SegmentSpec seg;
      seg.kind = SegmentSpec::Kind::Straight;
      want(seg.length);
      spec.segments.push_back(seg);
    } else if (word == "arc") {
      SegmentSpec seg;
      seg.kind = SegmentSpec::Kind::Arc;
      double deg = 0.0;
      want(seg.radius);
      if (!(ls >> deg))
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": arc needs radius and angle");
      seg.angle = deg2rad(deg);
      spec.segments.push_back(seg);
    } else if (word == "cone") {
      ConeSpec cone;
      want(cone.s);
      if (!(ls >> cone.offset))
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": cone needs s and offset");
      spec.cones.push_back(cone);
    } else {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown directive '" + word + "'");
    }
  }
  spec.validate();
  return spec;
}

inline TrackSpec load_track(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open track file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_track(ss.str(), path.string());
}

inline std::string serialize_track(const TrackSpec& spec) {
  std::ostringstream out;
  auto pat = [](MarkingPattern p) {
    switch (p) {
      case MarkingPattern::Solid: return "solid";
      case MarkingPattern::Dashed: return "dashed";
      default: return "none";
    }
  };
  out << "lane_width " << ConfigDoc::format_double(spec.lane_width) << "\n";
  out << "markings " << pat(spec.marking_left) << " " << pat(spec.marking_right) << "\n";
  for (const auto& seg : spec.segments) {
    if (seg.kind == SegmentSpec::Kind::Straight)
      out << "straight " << ConfigDoc::format_double(seg.length) << "\n";
    else
      out << "arc " << ConfigDoc::format_double(seg.radius) << " "
          << ConfigDoc::format_double(rad2deg(seg.angle)) << "\n";
  }
  for (const auto& cone : spec.cones)
    out << "cone " << ConfigDoc::format_double(cone.s) << " "
        << ConfigDoc::format_double(cone.offset) << "\n";
  return out.str();
}

/// Arclength-parameterized centerline with exact per-segment curvature;
/// answers nearest-point queries for any nearby pose.
class GroundTruth {
 public:
  struct Query {
    double s = 0.0;               // arclength of the nearest centerline point
    double lateral_offset = 0.0;  // + = query point left of centerline
    double heading_offset = 0.0;  // pose heading minus tangent heading (poses only)
    double curvature = 0.0;       // signed, + = left turn
  };

  explicit GroundTruth(TrackSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    double s0 = 0.0;
    Pose2D cursor{};  // track starts at the origin heading +x
    for (const auto& seg : spec_.segments) {
      Node node;
      node.s0 = s0;
      node.start = cursor;
      if (seg.kind == SegmentSpec::Kind::Straight) {
        node.length = seg.length;
        node.curvature = 0.0;
        cursor.x += seg.length * std::cos(cursor.heading);
        cursor.y += seg.length * std::sin(cursor.heading);
      } else {
        node.length = seg.radius * std::abs(seg.angle);
        node.curvature = (seg.angle > 0.0 ? 1.0 : -1.0) / seg.radius;
        double side = seg.angle > 0.0 ? 1.0 : -1.0;
        node.cx = cursor.x - side * seg.radius * std::sin(cursor.heading);
        node.cy = cursor.y + side * seg.radius * std::cos(cursor.heading);
        double psi0 = std::atan2(cursor.y - node.cy, cursor.x - node.cx);
        double psi1 = psi0 + seg.angle;
        cursor.x = node.cx + seg.radius * std::cos(psi1);
        cursor.y = node.cy + seg.radius * std::sin(psi1);
        cursor.heading = wrap_angle(cursor.heading + seg.angle);
      }
      s0 += node.length;
      nodes_.push_back(node);
    }
    length_ = s0;
    end_ = cursor;
  }

  const TrackSpec& spec() const { return spec_; }
  double length() const { return length_; }
  Pose2D end_pose() const { return end_; }

  Pose2D pose_at(double s) const {
    s = std::clamp(s, 0.0, length_);
    const Node& n = node_at(s);
    double u = s - n.s0;
    if (n.curvature == 0.0) {
      return {n.start.x + u * std::cos(n.start.heading),
              n.start.y + u * std::sin(n.start.heading), n.start.heading};
    }
    double radius = 1.0 / std::abs(n.curvature);
    double side = n.curvature > 0.0 ? 1.0 : -1.0;
    double psi0 = std::atan2(n.start.y - n.cy, n.start.x - n.cx);
    double psi = psi0 + side * u / radius;
    return {n.cx + radius * std::cos(psi), n.cy + radius * std::sin(psi),
            wrap_angle(n.start.heading + side * u / radius)};
  }

  double curvature_at(double s) const {
    return node_at(std::clamp(s, 0.0, length_)).curvature;
  }

  /// Mean curvature over [s, s+window], clamped to the track extent. This is
  /// what a previewing driver feeds forward while approaching a bend.
  double mean_curvature(double s, double window) const {
    double lo = std::clamp(s, 0.0, length_);
    double hi = std::clamp(s + window, 0.0, length_);
    if (hi - lo < 1e-9) return curvature_at(lo);
    double acc = 0.0;
    for (const Node& n : nodes_) {
      double a = std::max(lo, n.s0);
      double b = std::min(hi, n.s0 + n.length);
      if (b > a) acc += n.curvature * (b - a);
    }
    return acc / (hi - lo);
  }

  /// Nearest centerline point to a ground location.
  Query locate_point(double px, double py) const {
    Query best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const Node& n : nodes_) {
      double s_local;
      if (n.curvature == 0.0) {
        double dirx = std::cos(n.start.heading), diry = std::sin(n.start.heading);
        double relx = px - n.start.x, rely = py - n.start.y;
        s_local = std::clamp(relx * dirx + rely * diry, 0.0, n.length);
      } else {
        double radius = 1.0 / std::abs(n.curvature);
        double side = n.curvature > 0.0 ? 1.0 : -1.0;
        double psi0 = std::atan2(n.start.y - n.cy, n.start.x - n.cx);
        double psi = std::atan2(py - n.cy, px - n.cx);
        // Angular progress in [0, 2*pi); arcs may sweep more than half a turn.
        double prog = side * (psi - psi0);
        prog -= 2.0 * kPi * std::floor(prog / (2.0 * kPi));
        double swept = n.length / radius;
        if (prog <= swept) {
          s_local = prog * radius;
        } else {
          // Off the arc: snap to whichever endpoint is angularly closer.
          s_local = (2.0 * kPi - prog < prog - swept) ? 0.0 : n.length;
        }
      }
      double s = n.s0 + s_local;
      Pose2D c = pose_at(s);
      double dx = px - c.x, dy = py - c.y;
      double dist = std::hypot(dx, dy);
      if (dist < best_dist) {
        best_dist = dist;
        best.s = s;
        best.lateral_offset = -std::sin(c.heading) * dx + std::cos(c.heading) * dy;
        best.curvature = n.curvature;
      }
    }
    return best;
  }

  /// Nearest-point query for a pose; adds the heading error term.
  Query locate(const Pose2D& pose) const {
    Query q = locate_point(pose.x, pose.y);
    q.heading_offset = wrap_angle(pose.heading - pose_at(q.s).heading);
    return q;
  }

 private:
  struct Node {
    double s0 = 0.0;
    Pose2D start;
    double length = 0.0;
    double curvature = 0.0;
    double cx = 0.0, cy = 0.0;  // arc center
  };

  const Node& node_at(double s) const {
    for (size_t i = nodes_.size(); i-- > 0;)
      if (s >= nodes_[i].s0) return nodes_[i];
    return nodes_.front();
  }

  TrackSpec spec_;
  std::vector<Node> nodes_;
  double length_ = 0.0;
  Pose2D end_;
};

inline GroundTruth make_track(TrackSpec spec) { return GroundTruth(std::move(spec)); }

namespace worldshade {

struct Sample {
  double r, g, b;
  bool pure;  // shaded by the flat-ground/infinite-sky model only
};

inline double marking_coverage(MarkingPattern pattern, double dist_from_line, double s) {
  if (pattern == MarkingPattern::None) return 0.0;
  double cov = 1.0 - smoothstep(0.05, 0.10, std::abs(dist_from_line));
  if (pattern == MarkingPattern::Dashed && cov > 0.0) {
    double u = s - 7.5 * std::floor(s / 7.5);  // 3 m dash, 4.5 m gap
    cov *= smoothstep(0.0, 0.3, u) - smoothstep(2.7, 3.0, u);
  }
  return cov;
}

struct ConeWorld {
  double x, y;  // ground position
};

inline std::vector<ConeWorld> cone_positions(const GroundTruth& truth) {
  std::vector<ConeWorld> out;
  for (const auto& cone : truth.spec().cones) {
    Pose2D cp = truth.pose_at(cone.s);
    out.push_back({cp.x - cone.offset * std::sin(cp.heading),
                   cp.y + cone.offset * std::cos(cp.heading)});
  }
  return out;
}

inline constexpr double kConeRadius = 0.11;
inline constexpr double kConeHeight = 0.50;

/// Ground shading as a function of track coordinates (s, d) and distance rho
/// from the camera. Everything is smooth in all arguments and even in d only
/// through |d|, and texture fades out with distance so that far rows carry no
/// unresolvable detail.
inline Sample shade_ground(const GroundTruth& truth, const std::vector<ConeWorld>& cones,
                           double gx, double gy, double rho) {
  GroundTruth::Query q = truth.locate_point(gx, gy);
  double s = q.s;
  double ad = std::abs(q.lateral_offset);
  double half = truth.spec().lane_width / 2.0;

  double cr, cg, cb;
  double road_edge = smoothstep(half + 0.20, half + 0.50, ad);
  // Asphalt with smooth mottle.
  double mottle = 6.0 * std::cos(0.61 * s) * std::cos(1.7 * ad) +
                  5.0 * std::cos(0.173 * s + 1.1) +
                  4.0 * std::cos(2.2 * s + 0.7) * std::cos(0.9 * ad);
  double ar = 92.0 + mottle, ag = 92.0 + mottle, ab = 96.0 + mottle;
  // Grass beyond the shoulder.
  double gm = 7.0 * std::cos(0.53 * s + 0.3) * std::cos(1.1 * ad) + 5.0 * std::cos(1.9 * ad + 0.9);
  double rr = 76.0 + gm, rg = 112.0 + gm, rb = 58.0 + gm;
  cr = lerp(ar, rr, road_edge);
  cg = lerp(ag, rg, road_edge);
  cb = lerp(ab, rb, road_edge);

  // Lane lines centered 0.10 m inside each road edge.
  double line_pos = half - 0.10;
  MarkingPattern side = q.lateral_offset >= 0.0 ? truth.spec().marking_left
                                                : truth.spec().marking_right;
  double cov = marking_coverage(side, ad - line_pos, s);
  cr = lerp(cr, 225.0, cov);
  cg = lerp(cg, 225.0, cov);
  cb = lerp(cb, 220.0, cov);

  // Cone ground decals live on the ground plane, so they warp consistently.
  for (const auto& cone : cones) {
    double dd = std::hypot(gx - cone.x, gy - cone.y);
    double ccov = 1.0 - smoothstep(0.14, 0.20, dd);
    cr = lerp(cr, 168.0, ccov);
    cg = lerp(cg, 84.0, ccov);
    cb = lerp(cb, 40.0, ccov);
  }

  // Distance fade: beyond ~70 m the ground is a flat haze color.
  double fade = smoothstep(40.0, 70.0, rho);
  cr = lerp(cr, 104.0, fade);
  cg = lerp(cg, 106.0, fade);
  cb = lerp(cb, 102.0, fade);
  return {cr, cg, cb, true};
}

/// Sky shading as a function of world azimuth and tan(elevation) only
/// (infinite distance: invariant to camera translation).
inline Sample shade_sky(double az_world, double tanelev) {
  double hillline = 0.030 + 0.022 * std::cos(3.0 * az_world) + 0.013 * std::cos(7.0 * az_world) +
                    0.008 * std::cos(13.0 * az_world);
  double t = std::clamp(tanelev / 0.12, 0.0, 1.0);
  double sr = lerp(150.0, 98.0, t);
  double sg = lerp(182.0, 140.0, t);
  double sb = lerp(214.0, 206.0, t);
  double hill = 1.0 - smoothstep(hillline - 0.006, hillline + 0.006, tanelev);
  double hr = 64.0 + 6.0 * std::cos(2.0 * az_world);
  double hg = 84.0 + 6.0 * std::cos(2.0 * az_world);
  double hb = 70.0;
  return {lerp(sr, hr, hill), lerp(sg, hg, hill), lerp(sb, hb, hill), true};
}

/// Shade one world-frame ray from a camera at (pos, height above ground).
/// Billboard cones are checked first; they are the only impure content.
inline Sample shade_ray(const GroundTruth& truth, const std::vector<ConeWorld>& cones,
                        double camx, double camy, double cam_height, const Vec3& ray) {
  double ground_t = ray.z < 0.0 ? cam_height / -ray.z : std::numeric_limits<double>::infinity();

  double a = ray.x * ray.x + ray.y * ray.y;
  if (a > 1e-12 && !cones.empty()) {
    double nearest = std::numeric_limits<double>::infinity();
    double hit_z = 0.0;
    for (const auto& cone : cones) {
      double ox = camx - cone.x, oy = camy - cone.y;
      double b = 2.0 * (ox * ray.x + oy * ray.y);
      double c = ox * ox + oy * oy - kConeRadius * kConeRadius;
      double disc = b * b - 4.0 * a * c;
      if (disc < 0.0) continue;
      double u = (-b - std::sqrt(disc)) / (2.0 * a);
      if (u <= 0.0 || u >= nearest || u >= ground_t) continue;
      double z = cam_height + u * ray.z;
      if (z < 0.0 || z > kConeHeight) continue;
      nearest = u;
      hit_z = z;
    }
    if (nearest < std::numeric_limits<double>::infinity()) {
      if (hit_z > 0.20 && hit_z < 0.32) return {228.0, 222.0, 214.0, false};  // collar
      double shade = 1.0 - 0.25 * hit_z / kConeHeight;
      return {214.0 * shade, 92.0 * shade, 30.0 * shade, false};
    }
  }

  if (ray.z >= 0.0) {
    double hor = std::hypot(ray.x, ray.y);
    if (hor <= 0.0) return {98.0, 140.0, 206.0, true};  // zenith
    return shade_sky(std::atan2(ray.y, ray.x), ray.z / hor);
  }
  double gx = camx + ground_t * ray.x;
  double gy = camy + ground_t * ray.y;
  double rho = ground_t * std::hypot(ray.x, ray.y);
  return shade_ground(truth, cones, gx, gy, rho);
}

}  // namespace worldshade

struct MaskedRender {
  CylImage frame;
  std::vector<uint8_t> ground_mask;  // 1 where shading obeyed the flat-ground/sky model
};

inline MaskedRender render_with_mask(const GroundTruth& truth, const Pose2D& camera,
                                     const ProjectionSpec& spec) {
  spec.validate();
  MaskedRender out;
  out.frame.spec = spec;
  out.frame.image = Image(spec.width, spec.height);
  out.ground_mask.assign(static_cast<size_t>(spec.width) * spec.height, 1);
  auto cones = worldshade::cone_positions(truth);
  double ch = std::cos(camera.heading), sh = std::sin(camera.heading);
  for (int r = 0; r < spec.height; ++r) {
    for (int c = 0; c < spec.width; ++c) {
      Vec3 ray = pixel_to_ray_unchecked(spec, c, r);
      Vec3 world{ch * ray.x - sh * ray.y, sh * ray.x + ch * ray.y, ray.z};
      auto s = worldshade::shade_ray(truth, cones, camera.x, camera.y, spec.camera_height, world);
      auto q = [](double v) {
        return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      };
      out.frame.image.set(c, r, {q(s.r), q(s.g), q(s.b)});
      if (!s.pure) out.ground_mask[static_cast<size_t>(r) * spec.width + c] = 0;
    }
  }
  return out;
}

inline CylImage render(const GroundTruth& truth, const Pose2D& camera, const ProjectionSpec& spec) {
  return render_with_mask(truth, camera, spec).frame;
}

/// Synthetic raw fisheye frame (equidistant model), for exercising ingestion.
inline Image render_fisheye(const GroundTruth& truth, const Pose2D& camera,
                            const FisheyeIntrinsics& intr, const Mat3& cam_from_vehicle,
                            double cam_height) {
  intr.validate();
  Image img(intr.width, intr.height);
  auto cones = worldshade::cone_positions(truth);
  Mat3 vehicle_from_cam = cam_from_vehicle.transposed();
  double ch = std::cos(camera.heading), sh = std::sin(camera.heading);
  for (int r = 0; r < intr.height; ++r) {
    for (int c = 0; c < intr.width; ++c) {
      auto ray_cam = fisheye_unproject(intr, c, r);
      if (!ray_cam) {
        img.set(c, r, {0, 0, 0});
        continue;
      }
      Vec3 rv = vehicle_from_cam * *ray_cam;
      Vec3 world{ch * rv.x - sh * rv.y, sh * rv.x + ch * rv.y, rv.z};
      auto s = worldshade::shade_ray(truth, cones, camera.x, camera.y, cam_height, world);
      auto q = [](double v) {
        return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      };
      img.set(c, r, {q(s.r), q(s.g), q(s.b)});
    }
  }
  return img;
}

struct LogGenConfig {
  double speed = 8.0;        // m/s, constant
  double duration = 0.0;     // seconds; <= 0 means: drive the whole track
  double dt = 1.0 / 30.0;    // frame period
  double noise_std = 0.0;    // steering-wheel noise, radians
  uint64_t seed = 0;
  ControlGains gains;
  VehicleParams vehicle;
};

/// Drive the track centerline with the lateral control law (plus optional
/// steering noise) and record rendered frames, speeds and angles at the frame
/// rate. Replaying the recorded angles through the simulator reproduces the
/// trajectory exactly.
inline DriveLog generate_log(const GroundTruth& truth, const ProjectionSpec& spec,
                             const LogGenConfig& cfg) {
  spec.validate();
  cfg.gains.validate();
  cfg.vehicle.validate();
  if (!(cfg.speed > kMinSpeed)) throw DomainError("generate_log: speed must exceed v_min");
  if (!(cfg.dt > 0.0 && cfg.dt <= 0.1)) throw DomainError("generate_log: dt must be in (0, 0.1]");

  double duration = cfg.duration;
  if (duration <= 0.0) duration = (truth.length() - 5.0) / cfg.speed;
  size_t steps = static_cast<size_t>(std::floor(duration / cfg.dt));
  if (steps == 0) throw DomainError("generate_log: duration shorter than one frame");

  Rng rng(cfg.seed);
  VehicleState state;
  state.pose = truth.pose_at(0.0);

  DriveLog log;
  log.spec = spec;
  log.track_document = serialize_track(truth.spec());
  std::vector<Image> images;
  images.reserve(steps);
  char idbuf[24];
  for (size_t k = 0; k < steps; ++k) {
    GroundTruth::Query q = truth.locate(state.pose);
    if (std::abs(q.lateral_offset) > truth.spec().lane_width)
      throw DomainError("generate_log: trajectory diverged from the centerline");
    double kappa = truth.mean_curvature(q.s, kPreviewLength);
    double delta = lateral_control_law(kappa, q.lateral_offset, q.heading_offset,
                                       cfg.speed, cfg.gains, cfg.vehicle);
    if (cfg.noise_std > 0.0) {
      delta = std::clamp(delta + cfg.noise_std * rng.gaussian(), -kMaxSteeringWheel,
                         kMaxSteeringWheel);
    }

    std::snprintf(idbuf, sizeof(idbuf), "%06zu", k);
    FrameRecord rec;
    rec.frame_id = idbuf;
    rec.timestamp = static_cast<double>(k) * cfg.dt;
    rec.speed = cfg.speed;
    rec.steering = delta;
    log.frames.push_back(std::move(rec));
    images.push_back(render(truth, state.pose, spec).image);

    state = step(state, delta, cfg.speed, cfg.dt, cfg.vehicle);
  }
  log.store = std::make_shared<MemoryFrameStore>(std::move(images));
  log.validate();
  return log;
}

}  // namespace lanesim
