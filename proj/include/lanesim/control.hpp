#pragma once

#include <cmath>
#include <cstring>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "lanesim/config.hpp"
#include "lanesim/control_law.hpp"
#include "lanesim/drivelog.hpp"
#include "lanesim/dynamics.hpp"
#include "lanesim/errors.hpp"
#include "lanesim/proc.hpp"
#include "lanesim/projection.hpp"
#include "lanesim/synthworld.hpp"

namespace lanesim {

/// One controller query. `network_pose` is a ground-truth tap consumed only by
/// the synthetic-world oracle; honest controllers read the image and speed.
/// The external wire protocol physically carries image and speed only.
struct FrameInput {
  const CylImage& image;
  double speed = 0.0;
  size_t frame_index = 0;
  const Pose2D* network_pose = nullptr;
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  /// Steering-wheel command in radians for this frame.
  virtual double predict(const FrameInput& input) = 0;
  /// Called once before a sequence starts; stateful controllers reset here.
  virtual void begin_sequence() {}
};

class StraightController final : public Controller {
 public:
  explicit StraightController(double angle = 0.0) : angle_(angle) {}
  std::string name() const override { return "straight"; }
  double predict(const FrameInput&) override { return angle_; }

 private:
  double angle_;
};

/// Replays the recorded human angles; the null fixture for the simulator
/// (twin bicycle models fed identical commands can never diverge).
class ReplayController final : public Controller {
 public:
  explicit ReplayController(const DriveLog& log) {
    angles_.reserve(log.frames.size());
    for (const auto& f : log.frames) angles_.push_back(f.steering);
  }
  std::string name() const override { return "replay"; }
  void begin_sequence() override { next_ = 0; }
  double predict(const FrameInput& input) override {
    if (input.frame_index < angles_.size()) next_ = input.frame_index;
    if (next_ >= angles_.size()) throw ControllerError("replay: ran past the recorded log");
    return angles_[next_++];
  }

 private:
  std::vector<double> angles_;
  size_t next_ = 0;
};

/// Ground-truth controller: the lateral control law evaluated on the true
/// errors at the network pose. Only valid on synthetic logs.
class OracleController final : public Controller {
 public:
  OracleController(std::shared_ptr<const GroundTruth> truth, ControlGains gains,
                   VehicleParams vehicle)
      : truth_(std::move(truth)), gains_(gains), vehicle_(vehicle) {
    gains_.validate();
    vehicle_.validate();
  }
  std::string name() const override { return "oracle"; }
  double predict(const FrameInput& input) override {
    if (!input.network_pose) throw ControllerError("oracle: no ground-truth pose available");
    GroundTruth::Query q = truth_->locate(*input.network_pose);
    if (std::abs(q.lateral_offset) > truth_->spec().lane_width)
      throw DomainError("oracle: pose left the track domain");
    double kappa = truth_->mean_curvature(q.s, kPreviewLength);
    return lateral_control_law(kappa, q.lateral_offset, q.heading_offset, input.speed,
                               gains_, vehicle_);
  }

 private:
  std::shared_ptr<const GroundTruth> truth_;
  ControlGains gains_;
  VehicleParams vehicle_;
};

/// Vision stand-in for a learned policy: finds the lane markings in a probe
/// band, converts them to ground coordinates under its own calibration
/// assumption, fits the lane center as a quadratic, and applies the lateral
/// control law to the estimated offset, heading and curvature — a behavioral
/// clone of the demonstrated driving. When its assumed geometry disagrees
/// with the frames it is shown, every estimate is distorted at once, which is
/// exactly what calibration sweeps need to observe.
class TrackerController final : public Controller {
 public:
  struct Params {
    ProjectionSpec assumed;   // calibration the tracker was built for
    int white_threshold = 150;
    double band_near = kPreviewStart;        // probe distances, meters
    double band_far = kPreviewStart + kPreviewLength;
    ControlGains gains;
    VehicleParams vehicle;
  };

  explicit TrackerController(Params p) : p_(std::move(p)) {
    p_.assumed.validate();
    p_.gains.validate();
    p_.vehicle.validate();
  }
  std::string name() const override { return "tracker"; }
  void begin_sequence() override { last_ = 0.0; }

  double predict(const FrameInput& input) override {
    const Image& img = input.image.image;
    const ProjectionSpec& spec = p_.assumed;
    int row_far = static_cast<int>(std::ceil(tanelev_to_row(spec, -spec.camera_height / p_.band_far)));
    int row_near = static_cast<int>(std::floor(tanelev_to_row(spec, -spec.camera_height / p_.band_near)));
    row_far = std::clamp(row_far, 0, img.height - 1);
    row_near = std::clamp(row_near, 0, img.height - 1);

    // Lane-center ground points, one per probe row that shows both lines.
    std::vector<std::pair<double, double>> centers;
    for (int r = row_far; r <= row_near; ++r) {
      if (row_to_tanelev(spec, r) >= 0.0) continue;
      auto runs = white_runs(img, r);
      if (runs.size() < 2) continue;
      auto ground = [&](double col) {
        Vec3 ray = pixel_to_ray_unchecked(spec, col, r);
        double t = spec.camera_height / -ray.z;
        return std::pair<double, double>{t * ray.x, t * ray.y};
      };
      auto [lx, ly] = ground(runs.front());
      auto [rx, ry] = ground(runs.back());
      centers.push_back({(lx + rx) / 2.0, (ly + ry) / 2.0});
    }
    if (centers.size() < 3) return last_;  // hold the last command

    double curvature, lateral, heading;
    if (!fit_lane(centers, curvature, lateral, heading)) return last_;
    double cmd = lateral_control_law(curvature, lateral, heading, input.speed, p_.gains,
                                     p_.vehicle);
    last_ = cmd;
    return cmd;
  }

 private:
  /// Lane-center geometry from the fitted points: the vehicle's displacement
  /// to the left of the lane (`lateral`), its heading relative to the lane
  /// (`heading`), and the signed lane curvature. Circle fit first (the road
  /// is locally an arc); near-degenerate circles fall back to a line fit.
  static bool fit_lane(const std::vector<std::pair<double, double>>& pts, double& curvature,
                       double& lateral, double& heading) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0, sxz = 0, syz = 0, sz = 0;
    double n = static_cast<double>(pts.size());
    for (auto [x, y] : pts) {
      double z = x * x + y * y;
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      syy += y * y;
      sxz += x * z;
      syz += y * z;
      sz += z;
    }

    // Straight-line fit first: if it already explains the points, the circle
    // fit is ill-conditioned and a zero-curvature lane is the right answer.
    double line_denom = n * sxx - sx * sx;
    if (std::abs(line_denom) < 1e-12) return false;
    double c1 = (n * sxy - sx * sy) / line_denom;
    double c0 = (sy - c1 * sx) / n;
    double line_rms2 = 0.0;
    for (auto [x, y] : pts) {
      double e = y - (c0 + c1 * x);
      line_rms2 += e * e;
    }
    line_rms2 /= n;

    bool circle_ok = false;
    double cx = 0, cy = 0, radius = 0;
    if (line_rms2 > 0.05 * 0.05) {
      // Kasa fit: minimize sum of (x^2+y^2 + A x + B y + C)^2.
      double m[9] = {sxx, sxy, sx, sxy, syy, sy, sx, sy, n};
      double rhs[3] = {-sxz, -syz, -sz};
      double det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                   m[2] * (m[3] * m[7] - m[4] * m[6]);
      if (std::abs(det) > 1e-9 * std::max(1.0, sxx * syy)) {
        auto cramer = [&](int col) {
          double t[9];
          std::copy(m, m + 9, t);
          t[col] = rhs[0];
          t[col + 3] = rhs[1];
          t[col + 6] = rhs[2];
          return (t[0] * (t[4] * t[8] - t[5] * t[7]) - t[1] * (t[3] * t[8] - t[5] * t[6]) +
                  t[2] * (t[3] * t[7] - t[4] * t[6])) /
                 det;
        };
        double a = cramer(0), b = cramer(1), c = cramer(2);
        cx = -a / 2.0;
        cy = -b / 2.0;
        double r2 = cx * cx + cy * cy - c;
        if (r2 > 1e-6) {
          radius = std::sqrt(r2);
          circle_ok = radius > 2.0 && radius < 400.0;
        }
      }
    }

    if (circle_ok) {
      // Lane progression direction decides which side the center is on.
      // Points arrive far-to-near, so travel runs from back to front.
      double dirx = pts.front().first - pts.back().first;
      double diry = pts.front().second - pts.back().second;
      double norm = std::hypot(dirx, diry);
      if (norm < 1e-9) return false;
      double side = (dirx * (cy - pts.front().second) - diry * (cx - pts.front().first)) >= 0.0
                        ? 1.0
                        : -1.0;  // +1: center left of travel, curving left
      curvature = side / radius;
      double dist = std::hypot(cx, cy);
      if (dist < 1e-9) return false;
      lateral = side * (radius - dist);
      // Tangent at the nearest lane point, oriented along travel.
      double rx = -cx / dist, ry = -cy / dist;  // radial toward the vehicle
      double tx = side * -ry, ty = side * rx;
      heading = -std::atan2(ty, tx);
    } else {
      curvature = 0.0;
      lateral = -c0 / std::sqrt(1.0 + c1 * c1);
      heading = -std::atan(c1);
    }
    return true;
  }

  /// Intensity-weighted centroid column of each white run on a row.
  std::vector<double> white_runs(const Image& img, int row) const {
    std::vector<double> centroids;
    double wsum = 0.0, csum = 0.0;
    bool in_run = false;
    for (int c = 0; c <= img.width; ++c) {
      bool white = false;
      if (c < img.width) {
        Rgb px = img.get(c, row);
        int lum = std::min({static_cast<int>(px.r), static_cast<int>(px.g), static_cast<int>(px.b)});
        white = lum >= p_.white_threshold;
        if (white) {
          wsum += lum;
          csum += static_cast<double>(lum) * c;
          in_run = true;
        }
      }
      if (!white && in_run) {
        centroids.push_back(csum / wsum);
        wsum = csum = 0.0;
        in_run = false;
      }
    }
    return centroids;
  }

  Params p_;
  double last_ = 0.0;
};

/// Arithmetic mean of the member predictions (bagging). Members are queried
/// sequentially so runs stay deterministic.
class EnsembleController final : public Controller {
 public:
  explicit EnsembleController(std::vector<std::unique_ptr<Controller>> members)
      : members_(std::move(members)) {
    if (members_.empty()) throw DomainError("ensemble: needs at least one member");
  }
  std::string name() const override {
    std::string n = "ensemble(";
    for (size_t i = 0; i < members_.size(); ++i) {
      if (i) n += ",";
      n += members_[i]->name();
    }
    return n + ")";
  }
  void begin_sequence() override {
    for (auto& m : members_) m->begin_sequence();
  }
  double predict(const FrameInput& input) override {
    double sum = 0.0;
    for (auto& m : members_) sum += m->predict(input);
    return sum / static_cast<double>(members_.size());
  }

 private:
  std::vector<std::unique_ptr<Controller>> members_;
};

// Wire protocol for external controllers, over the child's stdin/stdout.
// Every message is a little-endian u32 payload length followed by the
// payload; payload byte 0 is the message type:
//   0x01 HELLO      host->ctl  u32 version, u32 width, u32 height,
//                              f64 hfov_rad, f64 horizon_row,
//                              f64 camera_height_m, f64 vertical_scale_px
//   0x02 HELLO_ACK  ctl->host  u32 version
//   0x03 REQUEST    host->ctl  u64 seq, f64 speed_mps, u32 width, u32 height,
//                              width*height*3 bytes of row-major RGB
//   0x04 REPLY      ctl->host  u64 seq, f64 angle_rad
//   0x05 BYE        host->ctl  (empty)
// Exactly one REPLY per REQUEST, sequence numbers strictly increasing.
namespace wire {

inline constexpr uint8_t kHello = 0x01;
inline constexpr uint8_t kHelloAck = 0x02;
inline constexpr uint8_t kRequest = 0x03;
inline constexpr uint8_t kReply = 0x04;
inline constexpr uint8_t kBye = 0x05;
inline constexpr uint32_t kVersion = 1;
inline constexpr uint32_t kMaxPayload = 64u * 1024u * 1024u;

inline void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<uint8_t>& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
inline void put_f64(std::vector<uint8_t>& b, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(b, bits);
}
inline uint32_t get_u32(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
  return v;
}
inline uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}
inline double get_f64(const uint8_t* p) {
  uint64_t bits = get_u64(p);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace wire

/// Bridge to a learned policy living in another process (any language).
/// One subprocess per controller instance; a protocol violation or timeout
/// aborts the sequence with a ControllerError.
class ExternalController final : public Controller {
 public:
  ExternalController(std::string command, const ProjectionSpec& spec, double timeout_s = 1.0)
      : command_(std::move(command)), timeout_(timeout_s), proc_(command_) {
    if (!(timeout_ > 0.0)) throw DomainError("external controller: timeout must be > 0");
    std::vector<uint8_t> payload;
    payload.push_back(wire::kHello);
    wire::put_u32(payload, wire::kVersion);
    wire::put_u32(payload, static_cast<uint32_t>(spec.width));
    wire::put_u32(payload, static_cast<uint32_t>(spec.height));
    wire::put_f64(payload, spec.hfov);
    wire::put_f64(payload, spec.horizon_row);
    wire::put_f64(payload, spec.camera_height);
    wire::put_f64(payload, spec.vscale());
    send(payload);

    auto ack = receive();
    if (ack.empty() || ack[0] != wire::kHelloAck || ack.size() != 5)
      throw ControllerError("external controller: bad HELLO_ACK");
    if (wire::get_u32(ack.data() + 1) != wire::kVersion)
      throw ControllerError("external controller: protocol version mismatch");
  }

  ~ExternalController() override {
    try {
      std::vector<uint8_t> bye{wire::kBye};
      send(bye);
    } catch (...) {
      // already gone; shutdown() reaps it either way
    }
    proc_.shutdown();
  }

  std::string name() const override { return "external"; }

  double predict(const FrameInput& input) override {
    const Image& img = input.image.image;
    std::vector<uint8_t> payload;
    payload.reserve(25 + img.data.size());
    payload.push_back(wire::kRequest);
    wire::put_u64(payload, seq_);
    wire::put_f64(payload, input.speed);
    wire::put_u32(payload, static_cast<uint32_t>(img.width));
    wire::put_u32(payload, static_cast<uint32_t>(img.height));
    payload.insert(payload.end(), img.data.begin(), img.data.end());
    send(payload);

    auto reply = receive();
    if (reply.empty() || reply[0] != wire::kReply || reply.size() != 17)
      throw ControllerError("external controller: malformed reply");
    uint64_t seq = wire::get_u64(reply.data() + 1);
    if (seq != seq_)
      throw ControllerError("external controller: reply sequence mismatch");
    ++seq_;
    double angle = wire::get_f64(reply.data() + 9);
    if (!std::isfinite(angle))
      throw ControllerError("external controller: non-finite angle");
    return angle;
  }

 private:
  void send(const std::vector<uint8_t>& payload) {
    uint8_t hdr[4];
    uint32_t len = static_cast<uint32_t>(payload.size());
    for (int i = 0; i < 4; ++i) hdr[i] = static_cast<uint8_t>(len >> (8 * i));
    proc_.write_all(hdr, 4, timeout_);
    proc_.write_all(payload.data(), payload.size(), timeout_);
  }

  std::vector<uint8_t> receive() {
    uint8_t hdr[4];
    proc_.read_all(hdr, 4, timeout_);
    uint32_t len = wire::get_u32(hdr);
    if (len == 0 || len > wire::kMaxPayload)
      throw ControllerError("external controller: bad message length");
    std::vector<uint8_t> payload(len);
    proc_.read_all(payload.data(), len, timeout_);
    return payload;
  }

  std::string command_;
  double timeout_;
  Subprocess proc_;
  uint64_t seq_ = 0;
};

struct ControllerSpec {
  std::string kind = "straight";  // straight | replay | oracle | tracker | external | ensemble
  double straight_angle = 0.0;    // straight: constant command, radians
  int white_threshold = 150;      // tracker
  double probe_near = kPreviewStart;  // tracker probe band, meters
  double probe_far = kPreviewStart + kPreviewLength;
  std::string command;            // external: command line
  double timeout = 1.0;           // external: per-message seconds
  std::vector<ControllerSpec> members;  // ensemble

  void validate() const {
    if (kind == "ensemble" && members.empty())
      throw DomainError("controller: ensemble needs at least one member");
    if (kind == "external" && command.empty())
      throw DomainError("controller: external needs a command line");
    if (kind == "external" && !(timeout > 0.0))
      throw DomainError("controller: external timeout must be > 0");
  }
};

/// Controller spec from a short string: a kind keyword, "external:<command>",
/// or "straight:<angle_deg>".
inline ControllerSpec parse_controller_string(const std::string& text) {
  ControllerSpec spec;
  auto colon = text.find(':');
  std::string kind = colon == std::string::npos ? text : text.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  spec.kind = kind;
  if (kind == "external") {
    spec.command = arg;
  } else if (kind == "straight") {
    if (!arg.empty()) spec.straight_angle = deg2rad(ConfigDoc::parse_double(arg, "straight angle"));
  } else if (kind != "replay" && kind != "oracle" && kind != "tracker") {
    throw ConfigError("unknown controller '" + text + "'");
  }
  spec.validate();
  return spec;
}

/// Controller spec from a [controller] config section. Ensembles list their
/// members as member1, member2, ... using the string form above.
inline ControllerSpec controller_from_config(const ConfigDoc& doc) {
  ControllerSpec spec;
  spec.kind = doc.get_string("controller", "kind", spec.kind);
  spec.straight_angle = deg2rad(doc.get_double("controller", "angle_deg", rad2deg(spec.straight_angle)));
  spec.white_threshold = static_cast<int>(doc.get_int("controller", "white_threshold", spec.white_threshold));
  spec.probe_near = doc.get_double("controller", "probe_near_m", spec.probe_near);
  spec.probe_far = doc.get_double("controller", "probe_far_m", spec.probe_far);
  spec.command = doc.get_string("controller", "command", spec.command);
  spec.timeout = doc.get_double("controller", "timeout_s", spec.timeout);
  for (int i = 1;; ++i) {
    auto member = doc.get("controller", "member" + std::to_string(i));
    if (!member) break;
    spec.members.push_back(parse_controller_string(*member));
  }
  spec.validate();
  return spec;
}

/// Everything a controller may need at construction time.
struct ControllerContext {
  const DriveLog* log = nullptr;  // replay angles; oracle track; tracker calibration
  ProjectionSpec delivery_spec;   // geometry of the frames the controller will see
  VehicleParams vehicle;
  ControlGains gains;
};

inline std::unique_ptr<Controller> make_controller(const ControllerSpec& spec,
                                                   const ControllerContext& ctx) {
  spec.validate();
  if (spec.kind == "straight") return std::make_unique<StraightController>(spec.straight_angle);
  if (spec.kind == "replay") {
    if (!ctx.log) throw DomainError("replay controller requires a drive log");
    return std::make_unique<ReplayController>(*ctx.log);
  }
  if (spec.kind == "oracle") {
    if (!ctx.log || ctx.log->track_document.empty())
      throw DomainError("oracle controller requires a synthetic log with a track document");
    auto truth = std::make_shared<GroundTruth>(parse_track(ctx.log->track_document));
    return std::make_unique<OracleController>(std::move(truth), ctx.gains, ctx.vehicle);
  }
  if (spec.kind == "tracker") {
    TrackerController::Params p;
    // Calibrated for the capture geometry, not whatever the sweep delivers.
    p.assumed = ctx.log ? ctx.log->spec : ctx.delivery_spec;
    p.white_threshold = spec.white_threshold;
    p.band_near = spec.probe_near;
    p.band_far = spec.probe_far;
    p.gains = ctx.gains;
    p.vehicle = ctx.vehicle;
    return std::make_unique<TrackerController>(p);
  }
  if (spec.kind == "external")
    return std::make_unique<ExternalController>(spec.command, ctx.delivery_spec, spec.timeout);
  if (spec.kind == "ensemble") {
    std::vector<std::unique_ptr<Controller>> members;
    for (const auto& m : spec.members) members.push_back(make_controller(m, ctx));
    return std::make_unique<EnsembleController>(std::move(members));
  }
  throw ConfigError("unknown controller kind '" + spec.kind + "'");
}

}  // namespace lanesim
