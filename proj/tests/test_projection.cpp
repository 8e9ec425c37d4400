#include "opennav/oracle_detector.hpp"
#include "opennav/projection.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace opennav;
using opennav::test::Gen;

namespace {

mask::IsolatedDepth single(int u, int v, double d) {
  mask::IsolatedDepth out;
  out.values.push_back({u, v, d});
  return out;
}

DepthFrame square_frame(double depth) {
  DepthFrame f;
  f.frame_id = "0";
  f.intrinsics = {100.0, 100.0, 19.5, 19.5, 40, 40};
  f.depth = DepthImage(40, 40, 0.0);
  for (int v = 15; v < 25; ++v)
    for (int u = 15; u < 25; ++u) f.depth(u, v) = depth;
  return f;
}

InstanceMask square_mask() {
  InstanceMask m;
  m.bitmap = Bitmap(40, 40);
  for (int v = 15; v < 25; ++v)
    for (int u = 15; u < 25; ++u) m.bitmap(u, v) = 1;
  m.detection = {15, 15, 25, 25, 0.9, "plate"};
  return m;
}

CameraPose rot_z(double angle, Eigen::Vector3d t = Eigen::Vector3d::Zero()) {
  CameraPose p;
  p.rotation = Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  p.translation = t;
  return p;
}

}  // namespace

TEST_SUITE("projection") {
  TEST_CASE("principal point back-projects onto the optical axis") {
    const CameraIntrinsics k{500, 400, 320, 240, 640, 480};
    const auto p = projection::back_project(single(320, 240, 2.5), k);
    REQUIRE(p.size() == 1);
    CHECK(p[0] == Eigen::Vector3d(0, 0, 2.5));
  }

  TEST_CASE("unit focal length substitution") {
    const CameraIntrinsics k{1, 1, 0, 0, 10, 10};
    CHECK(projection::back_project(single(2, 3, 4.0), k)[0] == Eigen::Vector3d(8, 12, 4));
  }

  TEST_CASE("doubling fx halves X and leaves Y and Z") {
    const CameraIntrinsics k{300, 300, 100, 80, 200, 160};
    CameraIntrinsics k2 = k;
    k2.fx *= 2;
    const auto a = projection::back_project(single(150, 20, 3.0), k)[0];
    const auto b = projection::back_project(single(150, 20, 3.0), k2)[0];
    CHECK(b.x() == doctest::Approx(a.x() / 2).epsilon(1e-15));
    CHECK(b.y() == a.y());
    CHECK(b.z() == a.z());
  }

  TEST_CASE("to_world: identity, translation and a quarter turn") {
    const std::vector<Eigen::Vector3d> pts{{1, 0, 0}, {0, 0, 0}};
    CHECK(projection::to_world(pts, CameraPose::identity()) == pts);
    const auto t = projection::to_world(pts, rot_z(0.0, {1, 2, 3}));
    CHECK(t[1] == Eigen::Vector3d(1, 2, 3));
    const auto r = projection::to_world(pts, rot_z(std::numbers::pi / 2));
    CHECK((r[0] - Eigen::Vector3d(0, 1, 0)).norm() < 1e-9);
  }

  TEST_CASE("round trip through project recovers the pixel") {
    Gen g(21);
    for (int t = 0; t < 5000; ++t) {
      const CameraIntrinsics k = g.intrinsics();
      const int u = g.integer(0, k.width - 1), v = g.integer(0, k.height - 1);
      const double d = g.uniform(0.1, 20.0);
      const auto uv = projection::project(projection::back_project(single(u, v, d), k)[0], k);
      CHECK(std::abs(uv.x() - u) < 1e-6);
      CHECK(std::abs(uv.y() - v) < 1e-6);
    }
  }

  TEST_CASE("to_world preserves norms of differences and matches the serial version") {
    Gen g(22);
    for (int t = 0; t < 50; ++t) {
      std::vector<Eigen::Vector3d> pts(static_cast<std::size_t>(g.integer(2, 5000)));
      for (auto& p : pts) p = g.vec3(-5, 5);
      const CameraPose pose = g.pose(10.0);
      const auto w = projection::to_world(pts, pose);
      CHECK(w == projection::reference::to_world(pts, pose));
      for (int k = 0; k < 20; ++k) {
        const auto i = static_cast<std::size_t>(g.integer(0, static_cast<int>(pts.size()) - 1));
        const auto j = static_cast<std::size_t>(g.integer(0, static_cast<int>(pts.size()) - 1));
        CHECK(std::abs((w[i] - w[j]).norm() - (pts[i] - pts[j]).norm()) < 1e-9);
      }
    }
  }

  TEST_CASE("parallel back_project equals the serial version") {
    Gen g(23);
    const CameraIntrinsics k = g.intrinsics();
    mask::IsolatedDepth d;
    for (int i = 0; i < 20000; ++i) d.values.push_back({g.integer(0, k.width - 1), g.integer(0, k.height - 1), g.uniform(0.2, 9)});
    CHECK(projection::back_project(d, k) == projection::reference::back_project(d, k));
  }

  TEST_CASE("box_from_points") {
    const std::vector<Eigen::Vector3d> two{{0, 0, 0}, {1, 2, 3}};
    const Box3D b = projection::box_from_points(two);
    CHECK(b.min_corner == Eigen::Vector3d(0, 0, 0));
    CHECK(b.max_corner == Eigen::Vector3d(1, 2, 3));
    const std::vector<Eigen::Vector3d> one{{4, -1, 2}};
    const Box3D s = projection::box_from_points(one);
    CHECK(s.min_corner == one[0]);
    CHECK(s.max_corner == one[0]);
    CHECK_THROWS_AS(projection::box_from_cloud(ObjectCloud{}), std::invalid_argument);
  }

  TEST_CASE("box_from_cloud equals a linear scan and contains every point") {
    Gen g(24);
    for (int t = 0; t < 100; ++t) {
      std::vector<Eigen::Vector3d> pts(100);
      for (auto& p : pts) p = g.vec3(-3, 3);
      Eigen::Vector3d lo = pts[0], hi = pts[0];
      for (const auto& p : pts)
        for (int a = 0; a < 3; ++a) {
          if (p[a] < lo[a]) lo[a] = p[a];
          if (p[a] > hi[a]) hi[a] = p[a];
        }
      const Box3D b = projection::box_from_cloud(test::cloud_of(pts, "x"));
      CHECK(b.min_corner == lo);
      CHECK(b.max_corner == hi);
      for (const auto& p : pts) CHECK(b.contains(p));
    }
  }

  TEST_CASE("flat square at 2 m gives a centered box with zero depth extent") {
    const auto r = projection::reconstruct_object(square_frame(2.0), square_mask());
    REQUIRE(r.instance);
    CHECK(r.mask_pixels == 100);
    CHECK(r.eroded_pixels == 64);
    CHECK(r.filtered_depths == 64);
    // eroded pixels 16..23 around the principal point 19.5
    const double half = 3.5 * 2.0 / 100.0;
    const Box3D& b = r.instance->box;
    CHECK(b.extent().z() == 0.0);
    CHECK(b.min_corner.x() == doctest::Approx(-half).epsilon(1e-12));
    CHECK(b.max_corner.x() == doctest::Approx(half).epsilon(1e-12));
    CHECK(b.min_corner.y() == doctest::Approx(-half).epsilon(1e-12));
    CHECK(b.max_corner.y() == doctest::Approx(half).epsilon(1e-12));
    CHECK(r.instance->label() == "plate");
    CHECK(r.instance->score() == 0.9);
    CHECK(r.instance->cloud.source_frames == std::set<std::string>{"0"});
  }

  TEST_CASE("drop stages") {
    const auto invalid = projection::reconstruct_object(square_frame(0.0), square_mask());
    CHECK(invalid.dropped());
    CHECK(invalid.dropped_at == projection::DropStage::kIsolation);

    InstanceMask thin = square_mask();
    thin.bitmap = Bitmap(40, 40);
    thin.bitmap(20, 20) = 1;
    const auto eroded = projection::reconstruct_object(square_frame(2.0), thin);
    CHECK(eroded.dropped_at == projection::DropStage::kErosion);
  }

  TEST_CASE("a posed view yields the box of the rigidly moved cloud") {
    Gen g(25);
    DepthFrame f = square_frame(2.0);
    for (int v = 15; v < 25; ++v)
      for (int u = 15; u < 25; ++u) f.depth(u, v) = 2.0 + 0.01 * u - 0.02 * v;
    const auto base = projection::reconstruct_object(f, square_mask());
    REQUIRE(base.instance);
    f.pose = g.pose(3.0);
    const auto moved = projection::reconstruct_object(f, square_mask());
    REQUIRE(moved.instance);
    const Box3D expect = projection::box_from_points(projection::to_world(base.instance->cloud.points, f.pose));
    CHECK((moved.instance->box.min_corner - expect.min_corner).norm() < 1e-12);
    CHECK((moved.instance->box.max_corner - expect.max_corner).norm() < 1e-12);
  }

  TEST_CASE("parallel and serial reconstruction agree") {
    const auto spec = synth::presets::bench_scene(1);
    const auto scene = synth::make_synthetic_scene(spec);
    const auto& fd = scene.frames.front();
    const auto par = projection::reconstruct_frame(fd.frame, fd.instances);
    const auto ser = projection::reference::reconstruct_frame(fd.frame, fd.instances);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      REQUIRE(par[i].instance.has_value() == ser[i].instance.has_value());
      if (!par[i].instance) continue;
      CHECK(par[i].instance->cloud.points == ser[i].instance->cloud.points);
      CHECK(par[i].instance->box == ser[i].instance->box);
    }
  }

  TEST_CASE("oracle scene: recovered corners within one depth step of the exact surface") {
    const auto spec = synth::presets::two_cubes();
    const auto scene = synth::make_synthetic_scene(spec);
    const auto& fd = scene.frames.front();
    const auto& k = fd.frame.intrinsics;
    REQUIRE(fd.instances.size() == 2);
    for (const auto& m : fd.instances) {
      const auto r = projection::reconstruct_object(fd.frame, m);
      REQUIRE(r.instance);
      // same surviving pixels, exact (unquantized) ray depth
      const auto kept = mask::zscore_filter(mask::isolate_depth(fd.frame, mask::erode_mask(m)));
      std::vector<Eigen::Vector3d> exact;
      for (const auto& p : kept.values) {
        const Eigen::Vector3d dir((p.u - k.cx) / k.fx, (p.v - k.cy) / k.fy, 1.0);
        std::optional<double> best;
        for (const auto& obj : spec.objects) {
          const auto t = synth::ray_box_intersection(Eigen::Vector3d::Zero(), dir, obj.box);
          if (t && (!best || *t < *best)) best = t;
        }
        REQUIRE(best);
        exact.push_back(*best * dir);
      }
      const Box3D truth = projection::box_from_points(exact);
      const double tol = spec.depth_scale + 1e-6;
      CHECK((r.instance->box.min_corner - truth.min_corner).cwiseAbs().maxCoeff() <= tol);
      CHECK((r.instance->box.max_corner - truth.max_corner).cwiseAbs().maxCoeff() <= tol);
    }
  }
}
