#include "opennav/projection.hpp"

#include <stdexcept>

namespace opennav::projection {

namespace {

// Below this many entries the OpenMP fork costs more than the loop.
constexpr std::size_t kParallelMinPoints = 4096;

template <typename Erode, typename BackProject, typename ToWorld>
ReconstructionResult reconstruct_with(const DepthFrame& frame, const InstanceMask& mask,
                                      const ReconstructionConfig& config, Erode&& erode,
                                      BackProject&& back, ToWorld&& world) {
  ReconstructionResult result;
  result.mask_pixels = popcount(mask.bitmap);

  const InstanceMask eroded{erode(mask.bitmap, config.kernel), mask.detection};
  result.eroded_pixels = popcount(eroded.bitmap);
  if (result.eroded_pixels == 0) {
    result.dropped_at = DropStage::kErosion;
    return result;
  }

  const mask::IsolatedDepth isolated = mask::isolate_depth(frame, eroded);
  result.isolated_depths = isolated.size();
  if (isolated.empty()) {
    result.dropped_at = DropStage::kIsolation;
    return result;
  }

  const mask::IsolatedDepth filtered = mask::zscore_filter(isolated, config.tau);
  result.filtered_depths = filtered.size();
  if (filtered.empty()) {
    result.dropped_at = DropStage::kZScore;
    return result;
  }

  Instance inst;
  inst.cloud.points = world(back(filtered, frame.intrinsics), frame.pose);
  inst.cloud.label = mask.detection.label;
  inst.cloud.score = mask.detection.score;
  inst.cloud.source_frames.insert(frame.frame_id);
  inst.box = box_from_points(inst.cloud.points);
  result.instance = std::move(inst);
  return result;
}

}  // namespace

Points back_project(const mask::IsolatedDepth& depths, const CameraIntrinsics& k) {
  const auto& in = depths.values;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(in.size());
  Points out(in.size());
#pragma omp parallel for schedule(static) if (in.size() >= kParallelMinPoints)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double d = in[i].depth;
    out[i] = Eigen::Vector3d((in[i].u - k.cx) * d / k.fx, (in[i].v - k.cy) * d / k.fy, d);
  }
  return out;
}

Eigen::Vector2d project(const Eigen::Vector3d& p, const CameraIntrinsics& k) {
  return {p.x() * k.fx / p.z() + k.cx, p.y() * k.fy / p.z() + k.cy};
}

Points to_world(std::span<const Eigen::Vector3d> pts, const CameraPose& pose) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(pts.size());
  Points out(pts.size());
  const Eigen::Matrix3d r = pose.rotation;
  const Eigen::Vector3d t = pose.translation;
#pragma omp parallel for schedule(static) if (pts.size() >= kParallelMinPoints)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = r * pts[i] + t;
  return out;
}

Box3D box_from_points(std::span<const Eigen::Vector3d> points) {
  if (points.empty()) throw std::invalid_argument("box_from_points: empty point set");
  Box3D box{points.front(), points.front()};
  for (const auto& p : points) {
    box.min_corner = box.min_corner.cwiseMin(p);
    box.max_corner = box.max_corner.cwiseMax(p);
  }
  return box;
}

Box3D box_from_cloud(const ObjectCloud& cloud) {
  if (cloud.points.empty()) throw std::invalid_argument("box_from_cloud: cloud '" + cloud.label + "' is empty");
  return box_from_points(cloud.points);
}

const char* to_string(DropStage stage) {
  switch (stage) {
    case DropStage::kNone: return "none";
    case DropStage::kErosion: return "erosion";
    case DropStage::kIsolation: return "depth-isolation";
    case DropStage::kZScore: return "z-score";
  }
  return "unknown";
}

ReconstructionResult reconstruct_object(const DepthFrame& frame, const InstanceMask& mask,
                                        const ReconstructionConfig& config) {
  return reconstruct_with(
      frame, mask, config, [](const Bitmap& b, const mask::StructuringElement& k) { return mask::erode(b, k); },
      [](const mask::IsolatedDepth& d, const CameraIntrinsics& k) { return back_project(d, k); },
      [](const Points& p, const CameraPose& pose) { return to_world(p, pose); });
}

std::vector<ReconstructionResult> reconstruct_frame(const DepthFrame& frame, std::span<const InstanceMask> masks,
                                                    const ReconstructionConfig& config) {
  std::vector<ReconstructionResult> results(masks.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(masks.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) results[i] = projection::reconstruct_object(frame, masks[i], config);
  return results;
}

namespace reference {

Points back_project(const mask::IsolatedDepth& depths, const CameraIntrinsics& k) {
  Points out;
  out.reserve(depths.size());
  for (const auto& p : depths.values) {
    out.emplace_back((p.u - k.cx) * p.depth / k.fx, (p.v - k.cy) * p.depth / k.fy, p.depth);
  }
  return out;
}

Points to_world(std::span<const Eigen::Vector3d> pts, const CameraPose& pose) {
  Points out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(pose.rotation * p + pose.translation);
  return out;
}

ReconstructionResult reconstruct_object(const DepthFrame& frame, const InstanceMask& mask,
                                        const ReconstructionConfig& config) {
  return reconstruct_with(
      frame, mask, config,
      [](const Bitmap& b, const mask::StructuringElement& k) { return mask::reference::erode(b, k); },
      [](const mask::IsolatedDepth& d, const CameraIntrinsics& k) { return reference::back_project(d, k); },
      [](const Points& p, const CameraPose& pose) { return reference::to_world(p, pose); });
}

std::vector<ReconstructionResult> reconstruct_frame(const DepthFrame& frame, std::span<const InstanceMask> masks,
                                                    const ReconstructionConfig& config) {
  std::vector<ReconstructionResult> results;
  results.reserve(masks.size());
  for (const auto& m : masks) results.push_back(reference::reconstruct_object(frame, m, config));
  return results;
}

}  // namespace reference

}  // namespace opennav::projection
