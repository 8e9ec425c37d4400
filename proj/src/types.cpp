#include "opennav/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace opennav {

namespace {

constexpr double kRotationTolerance = 1e-6;

[[noreturn]] void fail(const std::string& context, const std::string& what) {
  throw ValidationError(context + ": " + what);
}

}  // namespace

std::size_t popcount(const Bitmap& bitmap) {
  return static_cast<std::size_t>(
      std::count_if(bitmap.data().begin(), bitmap.data().end(), [](std::uint8_t b) { return b != 0; }));
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

void CameraIntrinsics::validate(const std::string& context) const {
  if (!(std::isfinite(fx) && fx > 0.0)) fail(context, "fx must be positive");
  if (!(std::isfinite(fy) && fy > 0.0)) fail(context, "fy must be positive");
  if (width <= 0) fail(context, "width must be positive");
  if (height <= 0) fail(context, "height must be positive");
  if (!(cx >= 0.0 && cx < width)) fail(context, "cx must lie in [0, width)");
  if (!(cy >= 0.0 && cy < height)) fail(context, "cy must lie in [0, height)");
}

CameraPose CameraPose::from_matrix(const Eigen::Matrix4d& m) {
  CameraPose pose;
  pose.rotation = m.topLeftCorner<3, 3>();
  pose.translation = m.topRightCorner<3, 1>();
  return pose;
}

Eigen::Matrix4d CameraPose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

void CameraPose::validate(const std::string& context) const {
  if (!rotation.allFinite()) fail(context, "rotation has non-finite entries");
  if (!translation.allFinite()) fail(context, "translation has non-finite entries");
  const double ortho_err = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > kRotationTolerance) {
    std::ostringstream os;
    os << "rotation is not orthonormal (max |R^T R - I| = " << ortho_err << ")";
    fail(context, os.str());
  }
  const double det = rotation.determinant();
  if (std::abs(det - 1.0) > kRotationTolerance) {
    std::ostringstream os;
    os << "rotation determinant is " << det << ", expected +1";
    fail(context, os.str());
  }
}

void DepthFrame::validate() const {
  const std::string ctx = "frame " + frame_id;
  intrinsics.validate(ctx + ": intrinsics");
  pose.validate(ctx + ": pose");
  if (depth.width() != intrinsics.width || depth.height() != intrinsics.height) {
    std::ostringstream os;
    os << "depth is " << depth.width() << "x" << depth.height() << " but intrinsics declare "
       << intrinsics.width << "x" << intrinsics.height;
    fail(ctx + ": depth", os.str());
  }
  for (double d : depth.data()) {
    if (!std::isfinite(d) || d < 0.0) fail(ctx + ": depth", "contains negative or non-finite values");
  }
}

Detection2D Detection2D::clamped(int width, int height) const {
  Detection2D out = *this;
  out.x1 = std::clamp(x1, 0.0, static_cast<double>(width));
  out.x2 = std::clamp(x2, 0.0, static_cast<double>(width));
  out.y1 = std::clamp(y1, 0.0, static_cast<double>(height));
  out.y2 = std::clamp(y2, 0.0, static_cast<double>(height));
  return out;
}

bool Detection2D::contains_pixel(int u, int v) const {
  return u >= std::floor(x1) && u < std::ceil(x2) && v >= std::floor(y1) && v < std::ceil(y2);
}

void Detection2D::validate(int width, int height, const std::string& context) const {
  if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2)))
    fail(context, "box has non-finite coordinates");
  if (!(x1 < x2)) fail(context, "box requires x1 < x2");
  if (!(y1 < y2)) fail(context, "box requires y1 < y2");
  const Detection2D c = clamped(width, height);
  if (!(c.x1 < c.x2 && c.y1 < c.y2)) fail(context, "box lies outside the image");
  if (!(score >= 0.0 && score <= 1.0)) fail(context, "score must lie in [0, 1]");
  if (label.empty()) fail(context, "label is empty");
}

void InstanceMask::validate(int width, int height, const std::string& context) const {
  detection.validate(width, height, context + ": detection");
  if (bitmap.width() != width || bitmap.height() != height) {
    std::ostringstream os;
    os << "mask is " << bitmap.width() << "x" << bitmap.height() << ", image is " << width << "x" << height;
    fail(context + ": mask", os.str());
  }
  const Detection2D box = detection.clamped(width, height);
  for (int v = 0; v < height; ++v) {
    const std::uint8_t* row = bitmap.row(v);
    for (int u = 0; u < width; ++u) {
      if (row[u] && !box.contains_pixel(u, v)) {
        std::ostringstream os;
        os << "set pixel (" << u << ", " << v << ") lies outside the detection box";
        fail(context + ": mask", os.str());
      }
    }
  }
}

double Box3D::volume() const {
  const Eigen::Vector3d e = extent().cwiseMax(0.0);
  return e.x() * e.y() * e.z();
}

bool Box3D::contains(const Eigen::Vector3d& p) const {
  return (p.array() >= min_corner.array()).all() && (p.array() <= max_corner.array()).all();
}

}  // namespace opennav
