#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "lanesim/augment.hpp"
#include "lanesim/control.hpp"
#include "lanesim/synthworld.hpp"
#include "test_util.hpp"

using namespace lanesim;

namespace {

ProjectionSpec tiny_spec() {
  ProjectionSpec s;
  return s;
}

FrameInput input_for(const CylImage& img, double speed, const Pose2D* pose = nullptr,
                     size_t index = 0) {
  return {img, speed, index, pose};
}

TrackSpec straight_track() {
  TrackSpec t;
  t.segments.push_back({SegmentSpec::Kind::Straight, 300.0, 0.0, 0.0});
  return t;
}

}  // namespace

TEST_CASE("straight controller is constant and stateless") {
  StraightController ctl;
  CylImage img{tiny_spec(), Image(200, 66)};
  for (int i = 0; i < 5; ++i) CHECK(ctl.predict(input_for(img, 10.0)) == 0.0);
  StraightController biased(deg2rad(7.0));
  CHECK(biased.predict(input_for(img, 3.0)) == Catch::Approx(deg2rad(7.0)));
}

TEST_CASE("replay controller reproduces the recorded angles") {
  TrackSpec ts = straight_track();
  ProjectionSpec spec;
  spec.width = 32;
  spec.height = 16;
  spec.horizon_row = 4.0;
  LogGenConfig cfg;
  cfg.speed = 9.0;
  cfg.duration = 2.0;
  cfg.noise_std = deg2rad(3.0);
  cfg.seed = 3;
  DriveLog log = generate_log(make_track(ts), spec, cfg);

  ReplayController ctl(log);
  ctl.begin_sequence();
  CylImage img{spec, Image(spec.width, spec.height)};
  for (size_t k = 0; k < log.frames.size(); ++k)
    CHECK(ctl.predict(input_for(img, 9.0, nullptr, k)) == log.frames[k].steering);
}

TEST_CASE("ensemble averages its members") {
  CylImage img{tiny_spec(), Image(200, 66)};
  auto make = [&](double deg) { return std::make_unique<StraightController>(deg2rad(deg)); };

  std::vector<std::unique_ptr<Controller>> ab;
  ab.push_back(make(-1.0));
  ab.push_back(make(1.0));
  EnsembleController mean(std::move(ab));
  CHECK(mean.predict(input_for(img, 10.0)) == Catch::Approx(0.0).margin(1e-15));

  // Permutation invariance and member bounds.
  std::vector<double> degs{-3.0, 5.0, 1.0};
  std::vector<std::unique_ptr<Controller>> fwd, rev;
  for (double d : degs) fwd.push_back(make(d));
  for (auto it = degs.rbegin(); it != degs.rend(); ++it) rev.push_back(make(*it));
  EnsembleController efwd(std::move(fwd)), erev(std::move(rev));
  double a = efwd.predict(input_for(img, 10.0));
  double b = erev.predict(input_for(img, 10.0));
  CHECK(a == Catch::Approx(b).margin(1e-15));
  CHECK(a >= deg2rad(-3.0));
  CHECK(a <= deg2rad(5.0));

  // Single member behaves like that member.
  std::vector<std::unique_ptr<Controller>> one;
  one.push_back(make(4.0));
  EnsembleController single(std::move(one));
  CHECK(single.predict(input_for(img, 10.0)) == Catch::Approx(deg2rad(4.0)));

  CHECK_THROWS_AS(EnsembleController({}), DomainError);
}

TEST_CASE("oracle controller tracks ground truth") {
  ProjectionSpec spec;
  CylImage img{spec, Image(spec.width, spec.height)};
  ControlGains gains;
  VehicleParams vehicle;

  // Straight road, on the centerline: zero command.
  auto straight = std::make_shared<GroundTruth>(straight_track());
  OracleController on_straight(straight, gains, vehicle);
  Pose2D centered{50.0, 0.0, 0.0};
  CHECK(on_straight.predict(input_for(img, 10.0, &centered)) == Catch::Approx(0.0).margin(1e-12));

  // Constant-radius arc, aligned on the centerline: pure feedforward.
  TrackSpec arc_spec;
  arc_spec.segments.push_back({SegmentSpec::Kind::Arc, 0.0, 8.0, 2.0 * kPi});
  auto arc = std::make_shared<GroundTruth>(arc_spec);
  OracleController on_arc(arc, gains, vehicle);
  Pose2D arc_pose = arc->pose_at(5.0);
  double expected = vehicle.steering_ratio * std::atan(vehicle.wheelbase / 8.0);
  CHECK(on_arc.predict(input_for(img, 5.0, &arc_pose)) == Catch::Approx(expected).margin(1e-9));
  CHECK(expected == Catch::Approx(6.5096).margin(5e-4));

  // Correction terms agree with the label correction, exactly.
  Rng rng(88);
  for (int i = 0; i < 100; ++i) {
    PoseOffset off{rng.uniform(-0.9, 0.9), rng.uniform(-deg2rad(10.0), deg2rad(10.0))};
    double v = rng.uniform(2.0, 25.0);
    Pose2D displaced = straight->pose_at(40.0).displaced(off.de, off.dtheta);
    double from_oracle = on_straight.predict(input_for(img, v, &displaced));
    double from_label = corrected_label(0.0, v, off, gains);
    CHECK(from_oracle == Catch::Approx(from_label).margin(1e-9));
  }

  // No ground-truth pose, or a pose off the track domain.
  CHECK_THROWS_AS(on_straight.predict(input_for(img, 10.0)), ControllerError);
  Pose2D far{50.0, 9.0, 0.0};
  CHECK_THROWS_AS(on_straight.predict(input_for(img, 10.0, &far)), DomainError);
}

TEST_CASE("tracker controller steers toward the lane center") {
  GroundTruth road = make_track(straight_track());
  ProjectionSpec spec;
  TrackerController::Params params;
  params.assumed = spec;
  TrackerController ctl(params);
  ctl.begin_sequence();

  auto at = [&](Pose2D pose) {
    CylImage img = render(road, pose, spec);
    return ctl.predict(input_for(img, 8.0, nullptr));
  };

  CHECK(std::abs(at({30.0, 0.0, 0.0})) < deg2rad(1.0));
  // Displaced left: steer right (negative). Displaced right: steer left.
  CHECK(at(Pose2D{30.0, 0.0, 0.0}.displaced(0.6, 0.0)) < -deg2rad(1.0));
  CHECK(at(Pose2D{30.0, 0.0, 0.0}.displaced(-0.6, 0.0)) > deg2rad(1.0));

  // Left curve: sustained positive command in the right ballpark.
  TrackSpec arc_spec;
  arc_spec.segments.push_back({SegmentSpec::Kind::Arc, 0.0, 12.0, 2.0 * kPi});
  GroundTruth arc = make_track(arc_spec);
  TrackerController arc_ctl(params);
  arc_ctl.begin_sequence();
  CylImage img = render(arc, arc.pose_at(6.0), spec);
  double cmd = arc_ctl.predict(input_for(img, 5.0));
  double ff = 20.0 * std::atan(2.7 / 12.0);
  CHECK(cmd > 0.5 * ff);
  CHECK(cmd < 1.5 * ff);
}

TEST_CASE("controller specs parse from strings and configs") {
  CHECK(parse_controller_string("straight").kind == "straight");
  CHECK(parse_controller_string("straight:3").straight_angle == Catch::Approx(deg2rad(3.0)));
  CHECK(parse_controller_string("oracle").kind == "oracle");
  ControllerSpec ext = parse_controller_string("external:python3 ctl.py --x");
  CHECK(ext.command == "python3 ctl.py --x");
  CHECK_THROWS_AS(parse_controller_string("cnn"), ConfigError);
  CHECK_THROWS_AS(parse_controller_string("external:"), DomainError);

  ConfigDoc doc = ConfigDoc::parse_string(
      "[controller]\n"
      "kind = ensemble\n"
      "member1 = straight:2\n"
      "member2 = oracle\n");
  ControllerSpec ens = controller_from_config(doc);
  REQUIRE(ens.members.size() == 2);
  CHECK(ens.members[0].straight_angle == Catch::Approx(deg2rad(2.0)));
  CHECK(ens.members[1].kind == "oracle");

  // Factory wiring: oracle needs a synthetic log.
  DriveLog plain;
  plain.spec = tiny_spec();
  ControllerContext ctx;
  ctx.log = &plain;
  CHECK_THROWS_AS(make_controller(parse_controller_string("oracle"), ctx), DomainError);
}

TEST_CASE("external controller round-trips the wire protocol") {
  ProjectionSpec spec;
  spec.width = 64;
  spec.height = 32;
  spec.horizon_row = 8.0;
  CylImage img{spec, testutil::smooth_image(spec.width, spec.height)};

  std::string base = REFCTL_PATH;
  {
    ExternalController ctl(base + " --angle-deg 4.5", spec, 2.0);
    for (size_t k = 0; k < 5; ++k) {
      double angle = ctl.predict(input_for(img, 13.5, nullptr, k));
      CHECK(angle == Catch::Approx(deg2rad(4.5)).margin(1e-12));
    }
  }

  // Timeout, malformed replies, early exit, missing binary: all surface as
  // controller errors, never hangs or crashes.
  {
    ExternalController ctl(base + " --mode slow", spec, 0.3);
    CHECK_THROWS_AS(ctl.predict(input_for(img, 10.0)), ControllerError);
  }
  {
    ExternalController ctl(base + " --mode garbage", spec, 2.0);
    CHECK_THROWS_AS(ctl.predict(input_for(img, 10.0)), ControllerError);
  }
  {
    ExternalController ctl(base + " --mode die", spec, 2.0);
    CHECK_THROWS_AS(ctl.predict(input_for(img, 10.0)), ControllerError);
  }
  CHECK_THROWS_AS(ExternalController(base + " --mode noack", spec, 0.3), ControllerError);
  CHECK_THROWS_AS(ExternalController("/nonexistent/controller", spec, 1.0), ControllerError);
}
