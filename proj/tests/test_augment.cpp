#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lanesim/augment.hpp"
#include "test_util.hpp"

using namespace lanesim;

TEST_CASE("corrected_label matches the control law") {
  ControlGains g;  // 12 / v and 5.3

  // 0.45 m left at 12 m/s: |correction| = (12/12) * 0.45, directed right.
  double lbl = corrected_label(0.0, 12.0, {0.45, 0.0}, g);
  CHECK(lbl == Catch::Approx(-0.45).margin(1e-15));

  // Zero offset returns the human label exactly.
  CHECK(corrected_label(0.1234, 9.0, {0.0, 0.0}, g) == 0.1234);

  // Heading offset term.
  double t = corrected_label(0.0, 10.0, {0.0, deg2rad(5.0)}, g);
  CHECK(t == Catch::Approx(-5.3 * deg2rad(5.0)).margin(1e-15));
}

TEST_CASE("corrected_label is affine in the offset") {
  ControlGains g;
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    double v = rng.uniform(2.0, 30.0);
    PoseOffset a{rng.uniform(-0.5, 0.5), rng.uniform(-0.1, 0.1)};
    PoseOffset b{rng.uniform(-0.5, 0.5), rng.uniform(-0.1, 0.1)};
    double d1 = rng.uniform(-1.0, 1.0);
    double d2 = rng.uniform(-1.0, 1.0);

    // The correction increment is independent of the base label.
    double inc1 = corrected_label(d1, v, a, g) - d1;
    double inc2 = corrected_label(d2, v, a, g) - d2;
    CHECK(inc1 == Catch::Approx(inc2).margin(1e-12));

    // Corrections compose additively.
    PoseOffset ab{a.de + b.de, a.dtheta + b.dtheta};
    double joint = corrected_label(d1, v, ab, g);
    double chained = corrected_label(corrected_label(d1, v, a, g), v, b, g);
    CHECK(joint == Catch::Approx(chained).margin(1e-12));
  }
}

TEST_CASE("corrected_label speed domain and clamping") {
  ControlGains g;
  CHECK_THROWS_AS(corrected_label(0.0, 1.0, {0.1, 0.0}, g), DomainError);
  CHECK_THROWS_AS(corrected_label(0.0, 0.0, {0.1, 0.0}, g), DomainError);
  CHECK_NOTHROW(corrected_label(0.0, 1.01, {0.1, 0.0}, g));

  // Mechanical range clamp at +-540 degrees.
  double hard = corrected_label(deg2rad(500.0), 1.5, {-0.9, -deg2rad(10.0)}, g);
  CHECK(hard == Catch::Approx(kMaxSteeringWheel));
}

TEST_CASE("sample_offset is deterministic and respects clips") {
  AugmentConfig cfg;
  cfg.seed = 42;

  Rng r1(cfg.seed), r2(cfg.seed);
  for (int i = 0; i < 100; ++i) {
    PoseOffset a = sample_offset(r1, cfg);
    PoseOffset b = sample_offset(r2, cfg);
    CHECK(a.de == b.de);
    CHECK(a.dtheta == b.dtheta);
    CHECK(std::abs(a.de) <= cfg.clip_de);
    CHECK(std::abs(a.dtheta) <= cfg.clip_dtheta);
  }

  // Degenerate truncation pins the component at zero.
  AugmentConfig zero = cfg;
  zero.clip_de = 0.0;
  Rng r3(7);
  for (int i = 0; i < 50; ++i) {
    PoseOffset o = sample_offset(r3, zero);
    CHECK(o.de == 0.0);
  }
}

TEST_CASE("sample_offset matches the configured sigma before truncation") {
  AugmentConfig cfg;
  cfg.clip_de = 100.0;  // effectively untruncated
  cfg.clip_dtheta = 100.0;
  const int n = 100000;
  Rng rng(2024);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double de = sample_offset(rng, cfg).de;
    sum += de;
    sum2 += de * de;
  }
  double mean = sum / n;
  double stddev = std::sqrt(sum2 / n - mean * mean);
  CHECK(stddev > 0.43);
  CHECK(stddev < 0.47);
  CHECK(std::abs(mean) < 3.0 * cfg.sigma_de / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("augment_frame ties image and label to one offset") {
  ProjectionSpec spec;
  CylImage frame{spec, testutil::smooth_image(spec.width, spec.height)};
  ControlGains g;

  auto [img0, lbl0] = augment_frame(frame, 0.2, 10.0, {0.0, 0.0}, g);
  CHECK(img0.image == frame.image);
  CHECK(lbl0 == 0.2);

  PoseOffset off{0.5, deg2rad(3.0)};
  auto [img1, lbl1] = augment_frame(frame, 0.2, 10.0, off, g);
  CHECK(img1.image == warp_offset(frame, off).image);
  CHECK(lbl1 == corrected_label(0.2, 10.0, off, g));
}
