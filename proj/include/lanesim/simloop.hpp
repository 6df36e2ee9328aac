#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lanesim/config_io.hpp"
#include "lanesim/control.hpp"
#include "lanesim/drivelog.hpp"
#include "lanesim/dynamics.hpp"
#include "lanesim/errors.hpp"
#include "lanesim/warp.hpp"

namespace lanesim {

// Network-in-the-loop replay simulator. Two bicycle models run in parallel:
// one replays the recorded human commands, the other is driven by the
// controller under test, which sees the recorded frames warped to its own
// viewpoint. When the controller drifts past the recovery threshold (or the
// warp envelope, which a heading runaway can reach first), a recovery is
// counted and the network vehicle is reset onto the human pose and heading.

struct SimConfig {
  double recovery_threshold = 1.0;  // meters of lateral deviation
  double recovery_time = 6.0;       // seconds charged per recovery
  double dt = 1.0 / 30.0;           // frame period
  WarpEnvelope envelope;
  PoseOffset initial_offset{};      // network start relative to human start
  VehicleParams vehicle;

  void validate() const {
    if (!(recovery_threshold > 0.0)) throw DomainError("sim: recovery_threshold must be > 0");
    if (!(recovery_time > 0.0)) throw DomainError("sim: recovery_time must be > 0");
    if (!(dt > 0.0 && dt <= 0.1)) throw DomainError("sim: dt must be in (0, 0.1]");
    if (!initial_offset.finite()) throw DomainError("sim: initial offset must be finite");
    vehicle.validate();
  }
};

inline void sim_to_config(const SimConfig& c, ConfigDoc& doc) {
  doc.set_double("sim", "recovery_threshold_m", c.recovery_threshold);
  doc.set_double("sim", "recovery_time_s", c.recovery_time);
  doc.set_double("sim", "dt_s", c.dt);
  doc.set_double("sim", "max_warp_de_m", c.envelope.max_de);
  doc.set_double("sim", "max_warp_dtheta_deg", rad2deg(c.envelope.max_dtheta));
  doc.set_double("sim", "initial_de_m", c.initial_offset.de);
  doc.set_double("sim", "initial_dtheta_deg", rad2deg(c.initial_offset.dtheta));
}

inline SimConfig sim_from_config(const ConfigDoc& doc, const SimConfig& base = {}) {
  SimConfig c = base;
  c.recovery_threshold = doc.get_double("sim", "recovery_threshold_m", c.recovery_threshold);
  c.recovery_time = doc.get_double("sim", "recovery_time_s", c.recovery_time);
  c.dt = doc.get_double("sim", "dt_s", c.dt);
  c.envelope.max_de = doc.get_double("sim", "max_warp_de_m", c.envelope.max_de);
  c.envelope.max_dtheta = deg2rad(doc.get_double("sim", "max_warp_dtheta_deg", rad2deg(c.envelope.max_dtheta)));
  c.initial_offset.de = doc.get_double("sim", "initial_de_m", c.initial_offset.de);
  c.initial_offset.dtheta = deg2rad(doc.get_double("sim", "initial_dtheta_deg", rad2deg(c.initial_offset.dtheta)));
  c.vehicle = vehicle_from_config(doc, c.vehicle);
  c.validate();
  return c;
}

struct SequenceResult {
  size_t frame_count = 0;
  size_t recoveries = 0;
  double dt = 1.0 / 30.0;
  double driving_time = 0.0;  // frame_count * dt

  // Per-frame traces, recorded after the recovery check (reset frames show
  // the post-reset offset of zero; the recovery flag marks them).
  std::vector<double> abs_de;
  std::vector<double> de;
  std::vector<double> dtheta;
  std::vector<double> recorded;   // human command
  std::vector<double> predicted;  // controller command
  std::vector<uint8_t> recovery;
  std::vector<Pose2D> human;
  std::vector<Pose2D> network;

  /// Mean absolute lateral deviation in meters. Biased: every recovery frame
  /// contributes the post-reset value of zero.
  double mad() const {
    if (abs_de.empty()) return 0.0;
    double s = 0.0;
    for (double v : abs_de) s += v;
    return s / static_cast<double>(abs_de.size());
  }

  /// Bias-reduced variant: frames within one recovery_time after each reset
  /// are excluded instead of scored as zero.
  double mad_unbiased(double recovery_time) const {
    if (abs_de.empty()) return 0.0;
    size_t window = static_cast<size_t>(std::ceil(recovery_time / dt));
    std::vector<char> skip(abs_de.size(), 0);
    for (size_t i = 0; i < abs_de.size(); ++i)
      if (recovery[i])
        for (size_t j = i; j < std::min(abs_de.size(), i + window); ++j) skip[j] = 1;
    double s = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < abs_de.size(); ++i) {
      if (skip[i]) continue;
      s += abs_de[i];
      ++n;
    }
    return n ? s / static_cast<double>(n) : 0.0;
  }
};

/// Percentage-of-autonomy metric: fraction of driving time not charged to
/// simulated interventions. Negative when recoveries dominate; reported as-is.
inline double autonomy(size_t recoveries, double recovery_time, double total_time) {
  if (!(total_time > 0.0)) throw DomainError("autonomy: total time must be > 0");
  if (recovery_time < 0.0) throw DomainError("autonomy: recovery time must be >= 0");
  return 1.0 - static_cast<double>(recoveries) * recovery_time / total_time;
}

/// Replay one log against one controller. Deterministic for deterministic
/// controllers; controller protocol failures abort with ControllerError.
inline SequenceResult run_sequence(const DriveLog& log, Controller& controller,
                                   const SimConfig& cfg) {
  cfg.validate();
  log.validate();

  WarpCache cache(log.spec, cfg.envelope);
  VehicleState human;
  VehicleState network;
  network.pose = human.pose.displaced(cfg.initial_offset.de, cfg.initial_offset.dtheta);
  PoseOffset offset = cfg.initial_offset;

  SequenceResult res;
  res.frame_count = log.frames.size();
  res.dt = cfg.dt;
  res.driving_time = static_cast<double>(log.frames.size()) * cfg.dt;
  res.abs_de.reserve(log.frames.size());

  controller.begin_sequence();
  for (size_t k = 0; k < log.frames.size(); ++k) {
    const FrameRecord& rec = log.frames[k];

    // 1. Warp the recorded frame to the network viewpoint.
    auto map = cache.get(offset);
    CylImage warped{log.spec, apply_warp(*map, log.frame_image(k))};

    // 2. Query the controller.
    double predicted = controller.predict({warped, rec.speed, k, &network.pose});
    if (!std::isfinite(predicted)) throw ControllerError("controller returned a non-finite angle");
    predicted = std::clamp(predicted, -kMaxSteeringWheel, kMaxSteeringWheel);

    // 3. Step both vehicles on the recorded speed.
    human = step(human, rec.steering, rec.speed, cfg.dt, cfg.vehicle);
    network = step(network, predicted, rec.speed, cfg.dt, cfg.vehicle);

    // 4. New offset between them.
    offset = relative_offset(human.pose, network.pose);

    // 5. Recovery: past the allowed distance, or past the warp envelope
    // (a heading runaway can get there before the lateral bound).
    bool recovered = std::abs(offset.de) > cfg.recovery_threshold ||
                     std::abs(offset.de) > cfg.envelope.max_de ||
                     std::abs(offset.dtheta) > cfg.envelope.max_dtheta;
    if (recovered) {
      ++res.recoveries;
      network = human;
      offset = {};
    }

    res.abs_de.push_back(std::abs(offset.de));
    res.de.push_back(offset.de);
    res.dtheta.push_back(offset.dtheta);
    res.recorded.push_back(rec.steering);
    res.predicted.push_back(predicted);
    res.recovery.push_back(recovered ? 1 : 0);
    res.human.push_back(human.pose);
    res.network.push_back(network.pose);
  }
  return res;
}

struct ScenarioScore {
  std::string label;
  size_t sequences = 0;
  size_t frames = 0;
  size_t recoveries = 0;
  double duration = 0.0;      // seconds
  double autonomy = 1.0;      // fraction, may be negative
  double mad_cm = 0.0;
  double mad_unbiased_cm = 0.0;
};

/// Scenario ranking: autonomy first, mean distance as the tie-breaker.
inline bool better_than(const ScenarioScore& a, const ScenarioScore& b) {
  if (a.autonomy != b.autonomy) return a.autonomy > b.autonomy;
  return a.mad_cm < b.mad_cm;
}

struct AutonomyReport {
  std::string controller;
  double recovery_threshold = 1.0;
  double recovery_time = 6.0;
  double dt = 1.0 / 30.0;
  uint64_t seed = 0;
  std::vector<ScenarioScore> scenarios;
  ScenarioScore overall;
  std::vector<std::string> warnings;
};

/// Pool labeled sequence results into per-scenario scores plus an overall row.
/// Recoveries and durations are summed per label before the autonomy formula;
/// MAD pools the per-frame traces.
inline AutonomyReport aggregate_results(
    const std::vector<std::pair<std::string, const SequenceResult*>>& labeled,
    const SimConfig& cfg) {
  if (labeled.empty()) throw DomainError("aggregate: no sequence results");
  AutonomyReport report;
  report.recovery_threshold = cfg.recovery_threshold;
  report.recovery_time = cfg.recovery_time;
  report.dt = cfg.dt;

  std::vector<std::string> order;
  for (const auto& [label, res] : labeled)
    if (std::find(order.begin(), order.end(), label) == order.end()) order.push_back(label);

  auto score_for = [&](const std::string& wanted, bool all) {
    ScenarioScore s;
    s.label = all ? "overall" : wanted;
    double abs_sum = 0.0;
    double unb_sum = 0.0;
    size_t unb_n = 0;
    for (const auto& [label, res] : labeled) {
      if (!all && label != wanted) continue;
      s.sequences += 1;
      s.frames += res->frame_count;
      s.recoveries += res->recoveries;
      s.duration += res->driving_time;
      for (double v : res->abs_de) abs_sum += v;
      double unb = res->mad_unbiased(cfg.recovery_time);
      // Reconstruct the unbiased pool size to weight sequences correctly.
      size_t window = static_cast<size_t>(std::ceil(cfg.recovery_time / res->dt));
      std::vector<char> skip(res->abs_de.size(), 0);
      for (size_t i = 0; i < res->abs_de.size(); ++i)
        if (res->recovery[i])
          for (size_t j = i; j < std::min(res->abs_de.size(), i + window); ++j) skip[j] = 1;
      size_t kept = 0;
      for (char c : skip)
        if (!c) ++kept;
      unb_sum += unb * static_cast<double>(kept);
      unb_n += kept;
    }
    if (s.frames > 0) s.mad_cm = 100.0 * abs_sum / static_cast<double>(s.frames);
    if (unb_n > 0) s.mad_unbiased_cm = 100.0 * unb_sum / static_cast<double>(unb_n);
    if (s.duration > 0.0) s.autonomy = autonomy(s.recoveries, cfg.recovery_time, s.duration);
    return s;
  };

  for (const auto& label : order) {
    ScenarioScore s = score_for(label, false);
    if (s.duration <= 0.0) {
      report.warnings.push_back("scenario '" + label + "' has zero duration; excluded");
      continue;
    }
    report.scenarios.push_back(std::move(s));
  }
  report.overall = score_for("", true);
  return report;
}

/// Lazily re-projects frames to a different cylindrical geometry.
class ReprojectedFrameStore final : public FrameStore {
 public:
  ReprojectedFrameStore(std::shared_ptr<const FrameStore> parent, WarpMap map)
      : parent_(std::move(parent)), map_(std::move(map)) {}
  size_t size() const override { return parent_->size(); }
  Image load(size_t index) const override { return apply_warp(map_, parent_->load(index)); }

 private:
  std::shared_ptr<const FrameStore> parent_;
  WarpMap map_;
};

inline DriveLog reproject_log(const DriveLog& log, const ProjectionSpec& dst) {
  if (dst == log.spec) return log;
  DriveLog out = log;
  out.spec = dst;
  out.store = std::make_shared<ReprojectedFrameStore>(log.store, reproject_map(log.spec, dst));
  return out;
}

struct SweepPoint {
  ProjectionSpec spec;
  bool failed = false;
  std::string error;
  ScenarioScore score;
};

/// Run the same log and controller family across candidate projection
/// geometries (the frames are re-projected to each candidate), ranked by
/// autonomy with MAD as tie-breaker. Per-point failures are recorded and the
/// sweep continues.
inline std::vector<SweepPoint> sweep(
    const std::vector<ProjectionSpec>& grid, const DriveLog& log,
    const std::function<std::unique_ptr<Controller>(const ProjectionSpec&)>& controller_factory,
    const SimConfig& cfg) {
  if (grid.empty()) throw DomainError("sweep: empty grid");
  std::vector<SweepPoint> points;
  for (const auto& spec : grid) {
    SweepPoint pt;
    pt.spec = spec;
    try {
      DriveLog projected = reproject_log(log, spec);
      auto controller = controller_factory(spec);
      SequenceResult res = run_sequence(projected, *controller, cfg);
      AutonomyReport rep = aggregate_results({{"sweep", &res}}, cfg);
      pt.score = rep.scenarios.at(0);
    } catch (const std::exception& e) {
      pt.failed = true;
      pt.error = e.what();
    }
    points.push_back(std::move(pt));
  }
  std::stable_sort(points.begin(), points.end(), [](const SweepPoint& a, const SweepPoint& b) {
    if (a.failed != b.failed) return !a.failed;
    if (a.failed) return false;
    return better_than(a.score, b.score);
  });
  return points;
}

}  // namespace lanesim
