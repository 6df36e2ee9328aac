#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lanesim/projection.hpp"
#include "lanesim/rng.hpp"
#include "lanesim/warp.hpp"
#include "test_util.hpp"

using namespace lanesim;

namespace {
ProjectionSpec default_spec() { return {}; }
}  // namespace

TEST_CASE("pixel_to_ray center and edges") {
  ProjectionSpec s = default_spec();

  // Forward axis at the zero-azimuth column and zero-elevation row.
  Vec3 fwd = pixel_to_ray(s, s.width / 2.0 - 0.5, s.horizon_row - 0.5);
  CHECK(fwd.x == Catch::Approx(1.0).margin(1e-12));
  CHECK(fwd.y == Catch::Approx(0.0).margin(1e-12));
  CHECK(fwd.z == Catch::Approx(0.0).margin(1e-12));

  // Continuous left edge of a 90 degree crop looks at +45 degrees (left).
  Vec3 left = pixel_to_ray(s, -0.5, s.horizon_row - 0.5);
  CHECK(std::atan2(left.y, left.x) == Catch::Approx(deg2rad(45.0)).margin(1e-12));

  // One vertical_scale below the zero-elevation row: tan(elev) = -1.
  // Needs a crop tall enough to contain that row.
  ProjectionSpec tall = s;
  tall.height = 400;
  tall.horizon_row = 100.0;
  tall.vertical_scale = 150.0;
  Vec3 down = pixel_to_ray(tall, tall.width / 2.0 - 0.5, tall.horizon_row - 0.5 + tall.vscale());
  CHECK(down.z / std::hypot(down.x, down.y) == Catch::Approx(-1.0).margin(1e-12));

  CHECK_THROWS_AS(pixel_to_ray(s, -1.0, 10.0), DomainError);
  CHECK_THROWS_AS(pixel_to_ray(s, 10.0, s.height + 2.0), DomainError);
}

TEST_CASE("azimuth is linear in column index") {
  ProjectionSpec s = default_spec();
  double step = s.hfov / s.width;
  for (int c1 : {0, 7, 50, 123, 199}) {
    for (int c2 : {3, 40, 150}) {
      double diff = col_to_azimuth(s, c1) - col_to_azimuth(s, c2);
      CHECK(diff == Catch::Approx((c2 - c1) * step).margin(1e-15));
    }
  }
}

TEST_CASE("ray_to_pixel inverts pixel_to_ray") {
  ProjectionSpec s = default_spec();

  auto fwd = ray_to_pixel(s, {1.0, 0.0, 0.0});
  REQUIRE(fwd.has_value());
  CHECK(fwd->col == Catch::Approx(s.width / 2.0 - 0.5).margin(1e-9));
  CHECK(fwd->row == Catch::Approx(s.horizon_row - 0.5).margin(1e-9));

  Rng rng(20240601);
  for (int i = 0; i < 100; ++i) {
    double col = rng.uniform(0.0, s.width - 1.0);
    double row = rng.uniform(0.0, s.height - 1.0);
    auto back = ray_to_pixel(s, pixel_to_ray(s, col, row));
    REQUIRE(back.has_value());
    CHECK(back->col == Catch::Approx(col).margin(1e-6));
    CHECK(back->row == Catch::Approx(row).margin(1e-6));
  }

  // Just outside the horizontal field.
  double az = s.hfov / 2.0 + 1e-6;
  CHECK_FALSE(ray_to_pixel(s, {std::cos(az), std::sin(az), 0.0}).has_value());
  // No horizontal component.
  CHECK_FALSE(ray_to_pixel(s, {0.0, 0.0, 1.0}).has_value());
}

TEST_CASE("equidistant fisheye model") {
  FisheyeIntrinsics intr;

  auto pp = fisheye_project(intr, {1.0, 0.0, 0.0});
  REQUIRE(pp.has_value());
  CHECK(pp->col == Catch::Approx(intr.cx));
  CHECK(pp->row == Catch::Approx(intr.cy));

  // Radius grows as focal * angle.
  for (double theta : {0.1, 0.5, 1.0, 1.4}) {
    auto px = fisheye_project(intr, {std::cos(theta), std::sin(theta), 0.0});
    REQUIRE(px.has_value());
    double rad = std::hypot(px->col - intr.cx, px->row - intr.cy);
    CHECK(rad == Catch::Approx(intr.focal * theta).margin(1e-9));
    // +y (left) maps toward smaller u.
    CHECK(px->col < intr.cx);
  }

  // Beyond the field-of-view cone.
  double big = intr.max_fov / 2.0 + 0.01;
  CHECK_FALSE(fisheye_project(intr, {std::cos(big), std::sin(big), 0.0}).has_value());

  // Unproject inverts project.
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    double theta = rng.uniform(0.0, intr.max_fov / 2.0 - 0.05);
    double phase = rng.uniform(0.0, 2.0 * kPi);
    Vec3 ray{std::cos(theta), std::sin(theta) * std::cos(phase), std::sin(theta) * std::sin(phase)};
    auto px = fisheye_project(intr, ray);
    REQUIRE(px.has_value());
    auto back = fisheye_unproject(intr, px->col, px->row);
    REQUIRE(back.has_value());
    CHECK(back->x == Catch::Approx(ray.x).margin(1e-9));
    CHECK(back->y == Catch::Approx(ray.y).margin(1e-9));
    CHECK(back->z == Catch::Approx(ray.z).margin(1e-9));
  }
}

TEST_CASE("yaw_shift identity and exact one-column shift") {
  ProjectionSpec s = default_spec();
  CylImage img{s, testutil::smooth_image(s.width, s.height)};

  CHECK(yaw_shift(img, 0.0).image == img.image);

  // dtheta = hfov/width is exactly one column; content moves right.
  CylImage shifted = yaw_shift(img, s.hfov / s.width);
  for (int r = 0; r < s.height; ++r) {
    for (int c = 1; c < s.width; ++c) CHECK(shifted.image.get(c, r) == img.image.get(c - 1, r));
    CHECK(shifted.image.get(0, r) == img.image.get(0, r));  // vacated: edge replication
  }
}

TEST_CASE("yaw_shift column displacement matches dtheta * width/hfov") {
  ProjectionSpec s = default_spec();
  CylImage img{s, testutil::smooth_image(s.width, s.height)};
  for (double deg : {3.0, -7.0, 12.5}) {
    double dtheta = deg2rad(deg);
    CylImage out = yaw_shift(img, dtheta);
    double expected = dtheta * s.cols_per_rad();
    int margin = static_cast<int>(std::ceil(std::abs(expected))) + 2;
    double d = testutil::estimate_column_shift(img.image, out.image, 40, margin);
    CHECK(std::abs(d - expected) <= 0.5 + 1e-9);
  }
}

TEST_CASE("yaw_shift inverse composition") {
  ProjectionSpec s = default_spec();
  CylImage img{s, testutil::smooth_image(s.width, s.height)};
  double a = deg2rad(6.0);
  CylImage round = yaw_shift(yaw_shift(img, a), -a);
  int margin = static_cast<int>(std::ceil(a * s.cols_per_rad())) + 2;
  int worst = 0;
  for (int r = 0; r < s.height; ++r)
    for (int c = margin; c < s.width - margin; ++c) {
      Rgb x = img.image.get(c, r), y = round.image.get(c, r);
      worst = std::max({worst, std::abs(x.r - y.r), std::abs(x.g - y.g), std::abs(x.b - y.b)});
    }
  CHECK(worst <= 2);
}

TEST_CASE("lateral_warp identity and horizon split") {
  ProjectionSpec s = default_spec();
  CylImage img{s, testutil::smooth_image(s.width, s.height)};

  CHECK(lateral_warp(img, 0.0).image == img.image);

  for (double de : {-1.0, 0.3, 1.0}) {
    CylImage out = lateral_warp(img, de);
    // Rows at or above the horizon are bit-identical for any shift.
    for (int r = 0; r < s.height; ++r) {
      if (row_to_tanelev(s, r) < 0.0) continue;
      for (int c = 0; c < s.width; ++c) CHECK(out.image.get(c, r) == img.image.get(c, r));
    }
  }
}

TEST_CASE("lateral_warp ground geometry") {
  ProjectionSpec s = default_spec();
  WarpMap map = lateral_warp_map(s, 1.0);

  // A ground point ~10 m ahead shifts by about atan2(1, 10) of azimuth.
  int row = static_cast<int>(std::lround(tanelev_to_row(s, -s.camera_height / 10.0)));
  double rho = s.camera_height / -row_to_tanelev(s, row);  // actual distance at that row
  int col = s.width / 2;
  double expected_shift = std::atan2(1.0, rho) * s.cols_per_rad();
  double got = col - map.src_col[map.idx(col, row)];
  CHECK(rho == Catch::Approx(10.0).margin(0.8));
  CHECK(got == Catch::Approx(expected_shift).margin(0.6));
  CHECK(got > 0.0);  // camera moved left: forward pixels sample from the left side
}

TEST_CASE("compose_offset_map degenerate cases and envelope") {
  ProjectionSpec s = default_spec();

  WarpMap id = compose_offset_map(s, {0.0, 0.0});
  CylImage img{s, testutil::smooth_image(s.width, s.height)};
  CHECK(apply_warp(id, img.image) == img.image);

  double th = deg2rad(8.0);
  WarpMap lhs = compose_offset_map(s, {0.0, th});
  WarpMap rhs = yaw_shift_map(s, th);
  REQUIRE(lhs.src_col.size() == rhs.src_col.size());
  for (size_t i = 0; i < lhs.src_col.size(); ++i) {
    CHECK(lhs.src_col[i] == rhs.src_col[i]);
    CHECK(lhs.src_row[i] == rhs.src_row[i]);
  }

  CHECK_THROWS_AS(compose_offset_map(s, {2.5, 0.0}), EnvelopeError);
  CHECK_THROWS_AS(compose_offset_map(s, {0.0, deg2rad(25.0)}), EnvelopeError);
}

TEST_CASE("composed warp matches sequential warps") {
  ProjectionSpec s = default_spec();
  CylImage img{s, testutil::smooth_image(s.width, s.height)};
  for (auto [de, deg] : {std::pair{0.6, 4.0}, {-0.8, -6.0}, {1.0, 10.0}}) {
    PoseOffset off{de, deg2rad(deg)};
    CylImage composed = warp_offset(img, off);
    CylImage sequential = yaw_shift(lateral_warp(img, off.de), off.dtheta);
    CHECK(mean_abs_diff(composed.image, sequential.image) <= 2.0);
  }
}

TEST_CASE("warp cache reuses quantized maps") {
  ProjectionSpec s = default_spec();
  WarpCache cache(s);
  auto a = cache.get({0.45001, deg2rad(3.0)});
  auto b = cache.get({0.45049, deg2rad(3.0)});  // same 1 mm cell
  CHECK(a.get() == b.get());
  auto c = cache.get({0.40, deg2rad(3.0)});
  CHECK(a.get() != c.get());
  CHECK_THROWS_AS(cache.get({0.0, deg2rad(21.0)}), EnvelopeError);

  PoseOffset q = WarpCache::quantize({0.45001, deg2rad(3.0)});
  WarpMap direct = compose_offset_map(s, q);
  CHECK(a->src_col == direct.src_col);
  CHECK(a->src_row == direct.src_row);
}

TEST_CASE("fisheye_to_cyl samples the principal point for the forward ray") {
  FisheyeIntrinsics intr;
  Image raw(intr.width, intr.height, {40, 40, 40});
  // Distinctive patch at the principal point.
  for (int dr = -2; dr <= 2; ++dr)
    for (int dc = -2; dc <= 2; ++dc)
      raw.set(static_cast<int>(intr.cx) + dc, static_cast<int>(intr.cy) + dr, {250, 10, 10});

  ProjectionSpec s = default_spec();
  CylImage cyl = fisheye_to_cyl(raw, intr, Mat3::identity(), s);
  Rgb fwd = cyl.image.get(s.width / 2, static_cast<int>(s.horizon_row));
  CHECK(static_cast<int>(fwd.r) > 200);
  CHECK(static_cast<int>(fwd.g) < 60);
}

TEST_CASE("fisheye_to_cyl blackens rays beyond max_fov") {
  FisheyeIntrinsics intr;
  intr.max_fov = deg2rad(60.0);
  intr.focal = 600.0;
  ProjectionSpec s = default_spec();
  s.hfov = deg2rad(58.0);
  Image raw(intr.width, intr.height, {200, 200, 200});
  CylImage cyl = fisheye_to_cyl(raw, intr, Mat3::identity(), s);
  // Bottom corners exceed the 30 degree half-cone; forward center does not.
  CHECK(cyl.image.get(0, s.height - 1) == Rgb{0, 0, 0});
  CHECK(cyl.image.get(s.width - 1, s.height - 1) == Rgb{0, 0, 0});
  CHECK(cyl.image.get(s.width / 2, static_cast<int>(s.horizon_row)) == Rgb{200, 200, 200});

  ProjectionSpec wide = default_spec();
  wide.hfov = deg2rad(90.0);
  CHECK_THROWS_AS(fisheye_to_cyl_map(intr, Mat3::identity(), wide), DomainError);
}

TEST_CASE("reproject between cylindrical crops") {
  ProjectionSpec s = default_spec();
  CylImage img{s, testutil::smooth_image(s.width, s.height)};

  CHECK(reproject(img, s).image == img.image);

  // Narrowing the field keeps interior content aligned.
  ProjectionSpec narrow = s;
  narrow.hfov = deg2rad(60.0);
  narrow.vertical_scale = s.vscale();
  CylImage n = reproject(img, narrow);
  // Center column of both images looks at azimuth 0.
  for (int r = 2; r < s.height - 2; ++r) {
    Rgb a = n.image.get(narrow.width / 2, r);
    Rgb b = img.image.get(s.width / 2, r);
    CHECK(std::abs(a.r - b.r) <= 3);
  }
}
