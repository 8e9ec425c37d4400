#include "opennav/oracle_detector.hpp"
#include "opennav/projection.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <optional>
#include <set>

using namespace opennav;
using opennav::test::Gen;

namespace {

// Index of the nearest box hit by the ray through pixel (u, v), by direct slab intersection.
std::optional<std::size_t> ray_owner(const synth::SceneSpec& spec, const CameraPose& pose, int u, int v) {
  const auto& k = spec.intrinsics;
  const Eigen::Vector3d dir = pose.rotation * Eigen::Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  std::optional<std::size_t> owner;
  double best = std::numeric_limits<double>::infinity();
  const auto consider = [&](const Box3D& b, std::optional<std::size_t> id) {
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      if (dir[a] == 0.0) {
        if (pose.translation[a] < b.min_corner[a] || pose.translation[a] > b.max_corner[a]) return;
        continue;
      }
      double ta = (b.min_corner[a] - pose.translation[a]) / dir[a];
      double tb = (b.max_corner[a] - pose.translation[a]) / dir[a];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
    }
    if (t0 <= t1 && t0 < best) {
      best = t0;
      owner = id;
    }
  };
  for (std::size_t i = 0; i < spec.objects.size(); ++i) consider(spec.objects[i].box, i);
  for (const auto& b : spec.background) consider(b, std::nullopt);
  return owner;
}

synth::SceneSpec cube_spec() {
  synth::SceneSpec spec;
  spec.intrinsics = {200, 200, 99.5, 79.5, 200, 160};
  spec.objects.push_back({"cube", {{-0.5, -0.5, 3.0}, {0.5, 0.5, 4.0}}});
  spec.trajectory.push_back(CameraPose::identity());
  return spec;
}

}  // namespace

TEST_SUITE("oracle_detector") {
  TEST_CASE("ray_box_intersection hits the near face and misses beside the box") {
    const Box3D b{{-1, -1, 2}, {1, 1, 3}};
    const auto t = synth::ray_box_intersection({0, 0, 0}, {0, 0, 1}, b);
    REQUIRE(t);
    CHECK(*t == 2.0);
    CHECK_FALSE(synth::ray_box_intersection({0, 0, 0}, {1, 0, 0}, b));
    CHECK_FALSE(synth::ray_box_intersection({0, 0, 0}, {0, 0, -1}, b));
  }

  TEST_CASE("look_at gives a rotation whose forward axis points at the target") {
    Gen g(61);
    for (int t = 0; t < 50; ++t) {
      const Eigen::Vector3d eye = g.vec3(-5, 5), target = g.vec3(-1, 1);
      const CameraPose p = synth::look_at(eye, target);
      p.validate();
      CHECK((p.rotation.col(2) - (target - eye).normalized()).norm() < 1e-12);
      CHECK(p.translation == eye);
      CHECK(p.rotation.col(1).z() <= 1e-12);
    }
  }

  TEST_CASE("one metre cube three metres ahead renders a centered square at 3 m") {
    const auto spec = cube_spec();
    const DepthImage d = synth::render_depth(spec, spec.trajectory[0]);
    const auto& k = spec.intrinsics;
    int count = 0;
    for (int v = 0; v < k.height; ++v) {
      for (int u = 0; u < k.width; ++u) {
        const bool inside = std::abs((u - k.cx) / k.fx * 3.0) <= 0.5 && std::abs((v - k.cy) / k.fy * 3.0) <= 0.5;
        if (inside) {
          CHECK(d(u, v) == doctest::Approx(3.0).epsilon(1e-12));
          ++count;
        } else {
          CHECK(d(u, v) == 0.0);
        }
      }
    }
    CHECK(count == 66 * 66);
  }

  TEST_CASE("two cubes: noise-free masks equal ray-cast ownership") {
    const auto spec = synth::presets::two_cubes();
    const io::Scene scene = synth::make_synthetic_scene(spec);
    REQUIRE(scene.frames.size() == 1);
    const auto& fd = scene.frames[0];
    REQUIRE(fd.instances.size() == 2);
    std::set<std::string> labels;
    for (const auto& m : fd.instances) {
      labels.insert(m.detection.label);
      std::size_t idx = 0;
      while (spec.objects[idx].label != m.detection.label) ++idx;
      int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
      for (int v = 0; v < spec.intrinsics.height; ++v) {
        for (int u = 0; u < spec.intrinsics.width; ++u) {
          const bool own = ray_owner(spec, fd.frame.pose, u, v) == idx;
          CHECK((m.bitmap(u, v) != 0) == own);
          if (own) {
            x0 = std::min(x0, u);
            y0 = std::min(y0, v);
            x1 = std::max(x1, u);
            y1 = std::max(y1, v);
          }
        }
      }
      CHECK(m.detection.x1 == x0);
      CHECK(m.detection.y1 == y0);
      CHECK(m.detection.x2 == x1 + 1);
      CHECK(m.detection.y2 == y1 + 1);
      CHECK(m.detection.score == 1.0);
    }
    CHECK(labels.size() == 2);
  }

  TEST_CASE("drop probability 1 removes every detection but keeps the GT mirror") {
    synth::PerturbationConfig noise;
    noise.drop_prob = 1.0;
    const io::Scene scene = synth::make_synthetic_scene(synth::presets::three_boxes(4), noise);
    for (const auto& f : scene.frames) {
      CHECK(f.instances.empty());
      CHECK_FALSE(f.gt_instances.empty());
    }
  }

  TEST_CASE("same seed gives identical outputs; perturbed masks stay inside their boxes") {
    synth::PerturbationConfig noise;
    noise.seed = 99;
    noise.box_jitter_px = 4;
    noise.mask_erode_px = 1;
    noise.drop_prob = 0.3;
    noise.score_sigma = 0.2;
    const auto spec = synth::presets::three_boxes(6);
    const io::Scene a = synth::make_synthetic_scene(spec, noise);
    const io::Scene b = synth::make_synthetic_scene(spec, noise);
    REQUIRE(a.frames.size() == b.frames.size());
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
      REQUIRE(a.frames[i].instances.size() == b.frames[i].instances.size());
      for (std::size_t k = 0; k < a.frames[i].instances.size(); ++k) {
        const auto& m = a.frames[i].instances[k];
        CHECK(m.bitmap == b.frames[i].instances[k].bitmap);
        CHECK(m.detection == b.frames[i].instances[k].detection);
        CHECK(m.detection.score >= 0.0);
        CHECK(m.detection.score <= 1.0);
        m.validate(spec.intrinsics.width, spec.intrinsics.height, "test");
      }
    }
  }

  TEST_CASE("dropped detections are nested as drop probability grows") {
    const auto spec = synth::presets::three_boxes(20);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    std::vector<std::set<std::pair<std::string, std::string>>> kept;
    for (double p : {0.0, 0.25, 0.5, 0.75}) {
      synth::PerturbationConfig noise;
      noise.seed = 5;
      noise.drop_prob = p;
      const io::Scene s = synth::make_synthetic_scene(spec, noise);
      std::set<std::pair<std::string, std::string>> ids;
      for (const auto& f : s.frames)
        for (const auto& m : f.instances) ids.insert({f.frame.frame_id, m.detection.label});
      CHECK(ids.size() <= prev);
      prev = ids.size();
      if (!kept.empty())
        for (const auto& id : ids) CHECK(kept.back().count(id) == 1);
      kept.push_back(ids);
    }
  }

  TEST_CASE("GT samples are world-frame and independent of the trajectory") {
    auto spec = cube_spec();
    const auto a = synth::sample_ground_truth(spec);
    spec.trajectory = {CameraPose::identity(), CameraPose::identity()};
    spec.trajectory[1].translation = {0.3, -0.2, 0.1};
    const auto b = synth::sample_ground_truth(spec);
    REQUIRE(a.size() == 1);
    CHECK(a[0].points == b[0].points);
    for (const auto& p : a[0].points) CHECK(spec.objects[0].box.contains(p));
  }

  TEST_CASE("box surface samples lie on the surface at most one spacing apart") {
    const Box3D b{{0, 0, 0}, {0.3, 0.2, 0.1}};
    const auto pts = synth::sample_box_surface(b, 0.05);
    for (const auto& p : pts) {
      const bool on_face = (p - b.min_corner).cwiseAbs().minCoeff() < 1e-12 || (p - b.max_corner).cwiseAbs().minCoeff() < 1e-12;
      CHECK(on_face);
      CHECK(b.contains(p));
    }
    CHECK(pts.size() >= 2 * (7 * 5 + 7 * 3 + 5 * 3));
  }

  TEST_CASE("empty object list and empty trajectory are errors") {
    auto spec = cube_spec();
    spec.trajectory.clear();
    CHECK_THROWS_AS(synth::make_synthetic_scene(spec), Error);
    spec = cube_spec();
    spec.objects.clear();
    CHECK_THROWS_AS(synth::make_synthetic_scene(spec), Error);
  }

  TEST_CASE("perturbation config text round trip and errors") {
    synth::PerturbationConfig c;
    c.seed = 42;
    c.box_jitter_px = 3;
    c.mask_erode_px = -2;
    c.drop_prob = 0.25;
    c.score_sigma = 0.1;
    const auto back = synth::PerturbationConfig::parse(c.to_text());
    CHECK(back.seed == 42);
    CHECK(back.box_jitter_px == 3);
    CHECK(back.mask_erode_px == -2);
    CHECK(back.drop_prob == 0.25);
    CHECK(back.score_sigma == 0.1);
    CHECK_THROWS_AS(synth::PerturbationConfig::parse("colour = red\n"), LoadError);
    CHECK_THROWS_AS(synth::PerturbationConfig::parse("drop_prob = 1.5\n"), ValidationError);
    CHECK_THROWS_AS(synth::PerturbationConfig::parse("seed 4\n"), LoadError);
  }

  TEST_CASE("orbit trajectory poses look at the center") {
    const std::vector<double> elev{30.0, -20.0};
    const auto poses = synth::orbit_trajectory({0, 0, 0.5}, 2.0, elev, 5, 10.0);
    REQUIRE(poses.size() == 5);
    for (const auto& p : poses) {
      CHECK((p.translation - Eigen::Vector3d(0, 0, 0.5)).norm() == doctest::Approx(2.0));
      CHECK((p.rotation.col(2) - (Eigen::Vector3d(0, 0, 0.5) - p.translation).normalized()).norm() < 1e-12);
    }
  }
}
