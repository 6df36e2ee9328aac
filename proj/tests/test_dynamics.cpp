#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lanesim/dynamics.hpp"
#include "lanesim/rng.hpp"

using namespace lanesim;

namespace {

/// Closed-form pose for constant wheel angle and speed from origin heading 0.
Pose2D circle_closed_form(double wheel, double v, double t, const VehicleParams& p) {
  double hrate = v * std::tan(wheel) / p.wheelbase;
  if (std::abs(hrate) < 1e-15) return {v * t, 0.0, 0.0};
  double radius = v / hrate;
  return {radius * std::sin(hrate * t), radius * (1.0 - std::cos(hrate * t)),
          wrap_angle(hrate * t)};
}

double run_constant(VehicleState& s, double delta_sw, double v, double dt, int n,
                    const VehicleParams& p) {
  for (int i = 0; i < n; ++i) s = step(s, delta_sw, v, dt, p);
  return n * dt;
}

/// Circumcircle radius through three points.
double circumradius(double x1, double y1, double x2, double y2, double x3, double y3) {
  double a = std::hypot(x2 - x1, y2 - y1);
  double b = std::hypot(x3 - x2, y3 - y2);
  double c = std::hypot(x1 - x3, y1 - y3);
  double area2 = std::abs((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1));
  return a * b * c / (2.0 * area2);
}

}  // namespace

TEST_CASE("zero steering advances along heading") {
  VehicleParams p;
  VehicleState s;
  s.pose.heading = 0.7;
  VehicleState out = step(s, 0.0, 10.0, 0.1, p);
  CHECK(out.pose.x == Catch::Approx(std::cos(0.7)).margin(1e-12));
  CHECK(out.pose.y == Catch::Approx(std::sin(0.7)).margin(1e-12));
  CHECK(out.pose.heading == Catch::Approx(0.7).margin(1e-15));
}

TEST_CASE("constant steering closes a circle of radius L/tan(wheel)") {
  VehicleParams p;
  double radius = 8.0;
  double wheel = std::atan(p.wheelbase / radius);
  double delta_sw = wheel * p.steering_ratio;
  double v = 10.0;

  // dt near 1/30, chosen so the loop closes after an integer number of steps.
  double period = 2.0 * kPi * radius / v;
  int n = static_cast<int>(std::ceil(period * 30.0));
  double dt = period / n;

  VehicleState s;
  std::vector<Pose2D> trace;
  trace.push_back(s.pose);
  for (int i = 0; i < n; ++i) {
    s = step(s, delta_sw, v, dt, p);
    trace.push_back(s.pose);
    Pose2D ref = circle_closed_form(wheel, v, (i + 1) * dt, p);
    CHECK(std::hypot(s.pose.x - ref.x, s.pose.y - ref.y) < 1e-6);
  }
  CHECK(std::hypot(s.pose.x, s.pose.y) < 1e-3);
  CHECK(std::abs(wrap_angle(s.pose.heading)) < 1e-4);

  // Path curvature via a three-point circumcircle.
  double r_fit = circumradius(trace[0].x, trace[0].y, trace[n / 3].x, trace[n / 3].y,
                              trace[2 * n / 3].x, trace[2 * n / 3].y);
  CHECK(std::abs(1.0 / r_fit - std::tan(wheel) / p.wheelbase) / (std::tan(wheel) / p.wheelbase) <
        1e-6);
}

TEST_CASE("RK4 convergence order is at least 3.9") {
  VehicleParams p;
  double wheel = std::atan(p.wheelbase / 8.0);
  double delta_sw = wheel * p.steering_ratio;
  double v = 10.0;
  double total = 5.0;

  auto final_error = [&](double dt) {
    int n = static_cast<int>(std::lround(total / dt));
    VehicleState s;
    run_constant(s, delta_sw, v, dt, n, p);
    Pose2D ref = circle_closed_form(wheel, v, n * dt, p);
    return std::hypot(s.pose.x - ref.x, s.pose.y - ref.y);
  };

  double e1 = final_error(1.0 / 15.0);
  double e2 = final_error(1.0 / 30.0);
  double order = std::log2(e1 / e2);
  CHECK(order >= 3.9);
  CHECK(order <= 4.5);

  // Halving dt moves the endpoint of a 10 s maneuver by no more than 1e-6 m.
  VehicleState a, b;
  run_constant(a, delta_sw, v, 1.0 / 30.0, 300, p);
  run_constant(b, delta_sw, v, 1.0 / 60.0, 600, p);
  CHECK(std::hypot(a.pose.x - b.pose.x, a.pose.y - b.pose.y) <= 1e-6);
}

TEST_CASE("mirrored steering mirrors the trajectory") {
  VehicleParams p;
  Rng rng(99);
  std::vector<double> inputs(100);
  for (auto& d : inputs) d = rng.uniform(-deg2rad(120.0), deg2rad(120.0));

  VehicleState pos, neg;
  for (double d : inputs) {
    pos = step(pos, d, 9.0, 1.0 / 30.0, p);
    neg = step(neg, -d, 9.0, 1.0 / 30.0, p);
  }
  CHECK(std::abs(pos.pose.x - neg.pose.x) < 1e-12);
  CHECK(std::abs(pos.pose.y + neg.pose.y) < 1e-12);
  CHECK(std::abs(pos.pose.heading + neg.pose.heading) < 1e-12);
}

TEST_CASE("twin models with identical inputs stay identical") {
  VehicleParams p;
  Rng rng(5);
  VehicleState a, b;
  for (int i = 0; i < 200; ++i) {
    double d = rng.uniform(-2.0, 2.0);
    double v = rng.uniform(3.0, 15.0);
    a = step(a, d, v, 1.0 / 30.0, p);
    b = step(b, d, v, 1.0 / 30.0, p);
    PoseOffset off = relative_offset(a.pose, b.pose);
    CHECK(off.de == 0.0);
    CHECK(off.dtheta == 0.0);
  }
}

TEST_CASE("step validates inputs") {
  VehicleParams p;
  VehicleState s;
  CHECK_THROWS_AS(step(s, 0.0, 10.0, 0.0, p), DomainError);
  CHECK_THROWS_AS(step(s, 0.0, 10.0, 0.2, p), DomainError);
  CHECK_THROWS_AS(step(s, std::nan(""), 10.0, 0.03, p), DomainError);
}

TEST_CASE("steering wheel to road wheel conversion") {
  VehicleParams p;  // ratio 20, saturation 30 deg
  CHECK(sw_to_wheel(deg2rad(10.0), p) == Catch::Approx(deg2rad(0.5)).margin(1e-15));
  CHECK(sw_to_wheel(0.0, p) == 0.0);
  CHECK(sw_to_wheel(deg2rad(10000.0), p) == Catch::Approx(p.max_wheel_angle));
  CHECK(sw_to_wheel(-deg2rad(10000.0), p) == Catch::Approx(-p.max_wheel_angle));
}

TEST_CASE("relative_offset sign conventions") {
  Pose2D origin{};
  CHECK(relative_offset(origin, origin).de == 0.0);
  CHECK(relative_offset(origin, origin).dtheta == 0.0);

  // Network one meter left of human, same heading.
  PoseOffset left = relative_offset({0, 0, 0}, {0, 1.0, 0});
  CHECK(left.de == Catch::Approx(1.0));
  CHECK(left.dtheta == 0.0);

  // Human heading 90 degrees; +1 m world-x is to the human's right.
  PoseOffset right = relative_offset({0, 0, kPi / 2}, {1.0, 0, kPi / 2});
  CHECK(right.de == Catch::Approx(-1.0));
  CHECK(right.dtheta == Catch::Approx(0.0).margin(1e-15));

  // Heading difference is antisymmetric under argument swap.
  Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    Pose2D a{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3, 3)};
    Pose2D b{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3, 3)};
    CHECK(relative_offset(a, b).dtheta == Catch::Approx(-relative_offset(b, a).dtheta).margin(1e-12));
    CHECK(relative_offset(a, a).de == 0.0);
  }
}
