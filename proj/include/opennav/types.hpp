#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace opennav {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file is missing or unreadable, or its syntax is wrong.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Data parsed fine but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Row-major 2D grid addressed as (u, v) = (column, row).
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width < 0 || height < 0) throw std::invalid_argument("Grid: negative dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool in_bounds(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }

  T& operator()(int u, int v) { return data_[index(u, v)]; }
  const T& operator()(int u, int v) const { return data_[index(u, v)]; }

  T* row(int v) { return data_.data() + index(0, v); }
  const T* row(int v) const { return data_.data() + index(0, v); }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(u);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Binary image; any nonzero byte is "set".
using Bitmap = Grid<std::uint8_t>;
/// Depth in meters; 0 marks an invalid pixel.
using DepthImage = Grid<double>;

std::size_t popcount(const Bitmap& bitmap);

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  Eigen::Matrix3d matrix() const;
  /// Throws ValidationError naming `context` when an invariant fails.
  void validate(const std::string& context = "intrinsics") const;
};

/// Camera-to-world rigid transform: p_world = rotation * p_camera + translation.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static CameraPose identity() { return {}; }
  static CameraPose from_matrix(const Eigen::Matrix4d& m);
  Eigen::Matrix4d matrix() const;

  Eigen::Vector3d to_world(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  Eigen::Vector3d to_camera(const Eigen::Vector3d& p) const {
    return rotation.transpose() * (p - translation);
  }

  void validate(const std::string& context = "pose") const;
};

struct DepthFrame {
  std::string frame_id;
  DepthImage depth;
  CameraIntrinsics intrinsics;
  CameraPose pose;

  void validate() const;
};

/// 2D detection. Corners are pixel-edge coordinates: pixel (u, v) covers
/// [u, u+1) x [v, v+1), so a tight box around pixels u0..u1 is x1 = u0, x2 = u1 + 1.
struct Detection2D {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;
  double score = 1.0;
  std::string label;

  Detection2D clamped(int width, int height) const;
  bool contains_pixel(int u, int v) const;
  void validate(int width, int height, const std::string& context) const;

  bool operator==(const Detection2D&) const = default;
};

struct InstanceMask {
  Bitmap bitmap;
  Detection2D detection;

  /// Dimensions match the image and every set pixel lies in the clamped box.
  void validate(int width, int height, const std::string& context) const;
};

struct ObjectCloud {
  std::vector<Eigen::Vector3d> points;
  std::string label;
  double score = 0.0;
  std::set<std::string> source_frames;
};

struct Box3D {
  Eigen::Vector3d min_corner = Eigen::Vector3d::Zero();
  Eigen::Vector3d max_corner = Eigen::Vector3d::Zero();

  Eigen::Vector3d extent() const { return max_corner - min_corner; }
  Eigen::Vector3d center() const { return 0.5 * (min_corner + max_corner); }
  double volume() const;
  bool contains(const Eigen::Vector3d& p) const;
  bool valid() const { return (min_corner.array() <= max_corner.array()).all(); }

  bool operator==(const Box3D& other) const {
    return min_corner == other.min_corner && max_corner == other.max_corner;
  }
};

struct Instance {
  ObjectCloud cloud;
  Box3D box;

  const std::string& label() const { return cloud.label; }
  double score() const { return cloud.score; }
};

struct SceneInstances {
  std::vector<Instance> instances;
};

struct GroundTruthInstance {
  std::string label;
  std::vector<Eigen::Vector3d> points;
};

}  // namespace opennav
