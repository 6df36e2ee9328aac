#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "lanesim/control.hpp"
#include "lanesim/simloop.hpp"
#include "lanesim/synthworld.hpp"
#include "test_util.hpp"

using namespace lanesim;

namespace {

ProjectionSpec sim_spec() {
  ProjectionSpec s;
  return s;
}

GroundTruth straight_truth(double len = 2000.0) {
  TrackSpec t;
  t.segments.push_back({SegmentSpec::Kind::Straight, len, 0.0, 0.0});
  return make_track(t);
}

/// Mixed suite with curvature up to 1/8 per meter.
GroundTruth mixed_truth() {
  TrackSpec t;
  t.segments.push_back({SegmentSpec::Kind::Straight, 80.0, 0.0, 0.0});
  t.segments.push_back({SegmentSpec::Kind::Arc, 0.0, 30.0, deg2rad(70.0)});
  t.segments.push_back({SegmentSpec::Kind::Straight, 50.0, 0.0, 0.0});
  t.segments.push_back({SegmentSpec::Kind::Arc, 0.0, 8.0, deg2rad(-150.0)});
  t.segments.push_back({SegmentSpec::Kind::Straight, 60.0, 0.0, 0.0});
  t.segments.push_back({SegmentSpec::Kind::Arc, 0.0, 8.0, deg2rad(120.0)});
  t.segments.push_back({SegmentSpec::Kind::Straight, 200.0, 0.0, 0.0});
  return make_track(t);
}

/// Sharp-turn suite: mostly 8 m-radius arcs.
GroundTruth sharp_truth() {
  TrackSpec t;
  t.segments.push_back({SegmentSpec::Kind::Straight, 20.0, 0.0, 0.0});
  for (int i = 0; i < 6; ++i) {
    t.segments.push_back({SegmentSpec::Kind::Arc, 0.0, 8.0, deg2rad(i % 2 ? -160.0 : 160.0)});
    t.segments.push_back({SegmentSpec::Kind::Straight, 10.0, 0.0, 0.0});
  }
  return make_track(t);
}

DriveLog synth_log(const GroundTruth& truth, double speed, double duration, double noise_deg,
                   uint64_t seed) {
  LogGenConfig cfg;
  cfg.speed = speed;
  cfg.duration = duration;
  cfg.noise_std = deg2rad(noise_deg);
  cfg.seed = seed;
  return generate_log(truth, sim_spec(), cfg);
}

}  // namespace

TEST_CASE("autonomy formula") {
  CHECK(autonomy(0, 6.0, 3600.0) == 1.0);
  CHECK(autonomy(10, 6.0, 3600.0) == Catch::Approx(1.0 - 60.0 / 3600.0).margin(1e-15));
  CHECK(autonomy(700, 6.0, 3600.0) == Catch::Approx(-1.0 / 6.0).margin(1e-12));
  CHECK_THROWS_AS(autonomy(1, 6.0, 0.0), DomainError);
  CHECK_THROWS_AS(autonomy(1, 6.0, -5.0), DomainError);
}

TEST_CASE("replaying the recorded angles is an exact null test") {
  GroundTruth truth = mixed_truth();
  DriveLog log = synth_log(truth, 7.0, 20.0, 2.0, 11);

  ReplayController replay(log);
  SimConfig cfg;
  SequenceResult res = run_sequence(log, replay, cfg);

  CHECK(res.recoveries == 0);
  CHECK(res.mad() == 0.0);
  for (double v : res.abs_de) CHECK(v == 0.0);
  for (double v : res.dtheta) CHECK(v == 0.0);
}

TEST_CASE("straight controller is perfect on a straight log") {
  DriveLog log = synth_log(straight_truth(), 10.0, 20.0, 1.0, 5);
  StraightController straight;
  SimConfig cfg;
  SequenceResult res = run_sequence(log, straight, cfg);
  CHECK(res.recoveries == 0);
  CHECK(autonomy(res.recoveries, cfg.recovery_time, res.driving_time) == 1.0);
  CHECK(res.mad() < 0.05);
}

TEST_CASE("straight controller fails on sharp turns") {
  GroundTruth truth = sharp_truth();
  DriveLog log = synth_log(truth, 5.0, 0.0, 0.5, 6);  // whole track
  StraightController straight;
  SimConfig cfg;
  SequenceResult res = run_sequence(log, straight, cfg);

  CHECK(res.recoveries >= 10);
  CHECK(autonomy(res.recoveries, cfg.recovery_time, res.driving_time) <= 0.05);

  // The recorded deviation never exceeds the allowed distance, and a
  // recovery frame shows the post-reset offset of zero.
  for (size_t i = 0; i < res.abs_de.size(); ++i) {
    CHECK(res.abs_de[i] <= cfg.recovery_threshold + 1e-12);
    if (res.recovery[i]) {
      CHECK(res.abs_de[i] == 0.0);
      CHECK(res.dtheta[i] == 0.0);
    }
  }
}

TEST_CASE("oracle controller drives the mixed suite without recoveries") {
  GroundTruth truth = mixed_truth();
  DriveLog log = synth_log(truth, 7.0, 0.0, 1.0, 21);
  auto truth_ptr = std::make_shared<GroundTruth>(parse_track(log.track_document));
  OracleController oracle(truth_ptr, {}, {});
  SimConfig cfg;
  SequenceResult res = run_sequence(log, oracle, cfg);
  CHECK(res.recoveries == 0);
  CHECK(autonomy(res.recoveries, cfg.recovery_time, res.driving_time) == 1.0);
}

TEST_CASE("oracle recovers from an initial offset on a straight") {
  GroundTruth truth = straight_truth();
  DriveLog log = synth_log(truth, 10.0, 10.0, 0.0, 0);
  auto truth_ptr = std::make_shared<GroundTruth>(truth.spec());
  OracleController oracle(truth_ptr, {}, {});

  SimConfig cfg;
  cfg.initial_offset = {0.9, 0.0};
  SequenceResult res = run_sequence(log, oracle, cfg);
  CHECK(res.recoveries == 0);

  // Falls below 5 cm within 4 seconds.
  size_t four_s = static_cast<size_t>(4.0 / cfg.dt);
  double first_small = -1.0;
  for (size_t i = 0; i < res.abs_de.size(); ++i) {
    if (res.abs_de[i] < 0.05) {
      first_small = static_cast<double>(i + 1) * cfg.dt;
      break;
    }
  }
  REQUIRE(first_small > 0.0);
  CHECK(first_small <= 4.0);
  (void)four_s;

  // Underdamped but stable: successive |de| extrema shrink.
  std::vector<double> extrema{0.9};
  for (size_t i = 1; i + 1 < res.de.size(); ++i) {
    bool peak = (res.de[i] - res.de[i - 1]) * (res.de[i + 1] - res.de[i]) < 0.0;
    if (peak && std::abs(res.de[i]) > 0.01) extrema.push_back(std::abs(res.de[i]));
  }
  for (size_t i = 1; i < extrema.size(); ++i) CHECK(extrema[i] <= extrema[i - 1] * 1.02);
}

TEST_CASE("heading runaway triggers an envelope recovery, never an error") {
  DriveLog log = synth_log(straight_truth(), 10.0, 10.0, 0.0, 0);
  StraightController hard_right(-kMaxSteeringWheel);
  SimConfig cfg;
  SequenceResult res = run_sequence(log, hard_right, cfg);
  CHECK(res.recoveries >= 5);
  // Heading breach fires before the lateral threshold on the first cycle.
  size_t first = 0;
  while (first < res.recovery.size() && !res.recovery[first]) ++first;
  REQUIRE(first < res.recovery.size());
  CHECK(res.abs_de[first == 0 ? 0 : first - 1] < cfg.recovery_threshold);
}

TEST_CASE("simulation is deterministic") {
  GroundTruth truth = mixed_truth();
  DriveLog log = synth_log(truth, 7.0, 15.0, 1.5, 77);
  SimConfig cfg;

  auto run_once = [&] {
    auto truth_ptr = std::make_shared<GroundTruth>(parse_track(log.track_document));
    OracleController oracle(truth_ptr, {}, {});
    return run_sequence(log, oracle, cfg);
  };
  SequenceResult a = run_once();
  SequenceResult b = run_once();
  CHECK(a.de == b.de);
  CHECK(a.dtheta == b.dtheta);
  CHECK(a.predicted == b.predicted);
  CHECK(a.recoveries == b.recoveries);
}

TEST_CASE("aggregation sums recoveries and time per label") {
  SequenceResult a;
  a.frame_count = 18000;
  a.dt = 1.0 / 30.0;
  a.driving_time = 600.0;
  a.recoveries = 1;
  a.abs_de.assign(18000, 0.1);
  a.recovery.assign(18000, 0);
  a.recovery[400] = 1;
  SequenceResult b = a;

  SimConfig cfg;
  AutonomyReport rep = aggregate_results({{"urban", &a}, {"urban", &b}}, cfg);
  REQUIRE(rep.scenarios.size() == 1);
  CHECK(rep.scenarios[0].recoveries == 2);
  CHECK(rep.scenarios[0].duration == Catch::Approx(1200.0));
  CHECK(rep.scenarios[0].autonomy == Catch::Approx(0.99).margin(1e-12));
  CHECK(rep.scenarios[0].mad_cm == Catch::Approx(10.0).margin(1e-9));
  CHECK(rep.overall.recoveries == 2);

  // Zero-duration scenarios are excluded with a warning.
  SequenceResult empty;
  AutonomyReport rep2 = aggregate_results({{"urban", &a}, {"void", &empty}}, cfg);
  REQUIRE(rep2.scenarios.size() == 1);
  CHECK(rep2.warnings.size() == 1);

  // Single sequence with no recoveries scores 100%.
  SequenceResult clean = a;
  clean.recoveries = 0;
  clean.recovery.assign(18000, 0);
  AutonomyReport rep3 = aggregate_results({{"urban", &clean}}, cfg);
  CHECK(rep3.scenarios[0].autonomy == 1.0);
  CHECK(rep3.scenarios[0].mad_cm >= 0.0);
}

TEST_CASE("scenario comparator ranks by autonomy then distance") {
  ScenarioScore a;
  a.autonomy = 0.995;
  a.mad_cm = 16.0;
  ScenarioScore b;
  b.autonomy = 0.993;
  b.mad_cm = 16.0;
  CHECK(better_than(a, b));
  ScenarioScore c;
  c.autonomy = 0.993;
  c.mad_cm = 15.0;
  CHECK(better_than(c, b));
  CHECK_FALSE(better_than(b, c));
}

TEST_CASE("unbiased MAD excludes post-reset windows") {
  SequenceResult r;
  r.frame_count = 300;
  r.dt = 1.0 / 30.0;
  r.driving_time = 10.0;
  r.recoveries = 1;
  r.abs_de.assign(300, 0.5);
  r.recovery.assign(300, 0);
  r.recovery[100] = 1;
  for (size_t i = 100; i < 280; ++i) r.abs_de[i] = 0.0;  // reset artifact
  CHECK(r.mad() == Catch::Approx(0.5 * 100.0 / 300.0 + 0.5 * 20.0 / 300.0).margin(1e-9));
  // Excluding the 6 s (180 frame) window after the reset removes exactly zeros.
  CHECK(r.mad_unbiased(6.0) == Catch::Approx(0.5).margin(1e-9));
}

TEST_CASE("sweep with a single grid point matches a direct run") {
  GroundTruth truth = mixed_truth();
  DriveLog log = synth_log(truth, 7.0, 12.0, 1.0, 9);
  SimConfig cfg;

  auto factory = [&](const ProjectionSpec&) -> std::unique_ptr<Controller> {
    auto t = std::make_shared<GroundTruth>(parse_track(log.track_document));
    return std::make_unique<OracleController>(t, ControlGains{}, VehicleParams{});
  };
  auto points = sweep({log.spec}, log, factory, cfg);
  REQUIRE(points.size() == 1);
  CHECK_FALSE(points[0].failed);

  auto direct_ctl = factory(log.spec);
  SequenceResult direct = run_sequence(log, *direct_ctl, cfg);
  CHECK(points[0].score.recoveries == direct.recoveries);
  CHECK(points[0].score.mad_cm == Catch::Approx(100.0 * direct.mad()).margin(1e-12));
}

TEST_CASE("horizon sweep recovers the tracker calibration") {
  GroundTruth truth = mixed_truth();
  DriveLog log = synth_log(truth, 7.0, 25.0, 0.5, 14);
  SimConfig cfg;

  auto factory = [&](const ProjectionSpec&) -> std::unique_ptr<Controller> {
    TrackerController::Params p;
    p.assumed = log.spec;  // calibrated for the capture geometry
    return std::make_unique<TrackerController>(p);
  };

  std::vector<ProjectionSpec> grid;
  for (double h : {8.52, 11.52, 14.52, 17.52, 20.52}) {
    ProjectionSpec s = log.spec;
    s.horizon_row = h;
    grid.push_back(s);
  }
  auto points = sweep(grid, log, factory, cfg);
  REQUIRE_FALSE(points.empty());
  CHECK(points[0].score.recoveries <= points.back().score.recoveries);
  CHECK(points[0].spec.horizon_row == Catch::Approx(14.52));
}

TEST_CASE("widening the field of view degrades a tracker tuned for 90 degrees") {
  GroundTruth truth = mixed_truth();
  DriveLog log = synth_log(truth, 7.0, 25.0, 0.5, 15);
  SimConfig cfg;

  auto factory = [&](const ProjectionSpec&) -> std::unique_ptr<Controller> {
    TrackerController::Params p;
    p.assumed = log.spec;
    return std::make_unique<TrackerController>(p);
  };

  ProjectionSpec wide = log.spec;
  wide.hfov = deg2rad(135.0);
  wide.vertical_scale = log.spec.vscale();  // keep rows comparable
  auto points = sweep({log.spec, wide}, log, factory, cfg);
  REQUIRE(points.size() == 2);
  CHECK(points[0].spec.hfov == Catch::Approx(deg2rad(90.0)));
}
