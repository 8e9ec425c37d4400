#pragma once

#include "opennav/types.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

namespace opennav::test {

/// Seeded generator for hand-rolled property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
  double normal(double mean, double sigma) { return std::normal_distribution<double>(mean, sigma)(rng_); }
  std::mt19937_64& engine() { return rng_; }

  Bitmap bitmap(int w, int h, double density) {
    Bitmap b(w, h);
    for (auto& px : b.data()) px = coin(density) ? 1 : 0;
    return b;
  }

  /// Random mask with blobs so erosion leaves something behind.
  Bitmap blobby_bitmap(int w, int h) {
    Bitmap b = bitmap(w, h, uniform(0.0, 0.3));
    const int blobs = integer(0, 4);
    for (int k = 0; k < blobs; ++k) {
      const int x0 = integer(0, w - 1), y0 = integer(0, h - 1);
      const int x1 = std::min(w - 1, x0 + integer(0, w / 2)), y1 = std::min(h - 1, y0 + integer(0, h / 2));
      for (int v = y0; v <= y1; ++v)
        for (int u = x0; u <= x1; ++u) b(u, v) = 1;
    }
    return b;
  }

  Eigen::Vector3d vec3(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

  Box3D box(double lo, double hi, double min_size, double max_size) {
    Box3D b;
    for (int i = 0; i < 3; ++i) {
      const double size = uniform(min_size, max_size);
      b.min_corner[i] = uniform(lo, hi);
      b.max_corner[i] = b.min_corner[i] + size;
    }
    return b;
  }

  CameraPose pose(double translation_range) {
    Eigen::Quaterniond q(normal(0, 1), normal(0, 1), normal(0, 1), normal(0, 1));
    q.normalize();
    CameraPose p;
    p.rotation = q.toRotationMatrix();
    p.translation = vec3(-translation_range, translation_range);
    return p;
  }

  CameraIntrinsics intrinsics() {
    CameraIntrinsics k;
    k.width = integer(32, 1920);
    k.height = integer(32, 1080);
    k.fx = uniform(50.0, 2000.0);
    k.fy = uniform(50.0, 2000.0);
    k.cx = uniform(0.0, k.width - 1.0);
    k.cy = uniform(0.0, k.height - 1.0);
    return k;
  }

 private:
  std::mt19937_64 rng_;
};

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("opennav_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline ObjectCloud cloud_of(std::vector<Eigen::Vector3d> points, std::string label, double score = 1.0) {
  ObjectCloud c;
  c.points = std::move(points);
  c.label = std::move(label);
  c.score = score;
  return c;
}

}  // namespace opennav::test
