#pragma once

#include "opennav/mask_pipeline.hpp"
#include "opennav/types.hpp"

#include <optional>
#include <span>

namespace opennav::projection {

using Points = std::vector<Eigen::Vector3d>;

/// Pinhole back-projection of every isolated depth:
/// X = (u - cx) * d / fx, Y = (v - cy) * d / fy, Z = d.
Points back_project(const mask::IsolatedDepth& depths, const CameraIntrinsics& intrinsics);

/// Forward pinhole projection of a camera-frame point to (u, v).
Eigen::Vector2d project(const Eigen::Vector3d& camera_point, const CameraIntrinsics& intrinsics);

/// p -> R p + t for each point.
Points to_world(std::span<const Eigen::Vector3d> camera_points, const CameraPose& pose);

/// Componentwise min/max of the points. Throws std::invalid_argument on an empty set.
Box3D box_from_points(std::span<const Eigen::Vector3d> points);
Box3D box_from_cloud(const ObjectCloud& cloud);

namespace reference {
Points back_project(const mask::IsolatedDepth& depths, const CameraIntrinsics& intrinsics);
Points to_world(std::span<const Eigen::Vector3d> camera_points, const CameraPose& pose);
}  // namespace reference

struct ReconstructionConfig {
  double tau = mask::kDefaultZScoreThreshold;
  mask::StructuringElement kernel;
};

/// Stage at which an object ran out of support.
enum class DropStage { kNone, kErosion, kIsolation, kZScore };

const char* to_string(DropStage stage);

struct ReconstructionResult {
  std::optional<Instance> instance;
  DropStage dropped_at = DropStage::kNone;
  std::size_t mask_pixels = 0;
  std::size_t eroded_pixels = 0;
  std::size_t isolated_depths = 0;
  std::size_t filtered_depths = 0;

  bool dropped() const { return !instance.has_value(); }
};

/// erode -> isolate depth -> z-score filter -> back-project -> world -> box.
ReconstructionResult reconstruct_object(const DepthFrame& frame, const InstanceMask& mask,
                                        const ReconstructionConfig& config = {});

/// All objects of one view; objects are processed in parallel, results keep input order.
std::vector<ReconstructionResult> reconstruct_frame(const DepthFrame& frame,
                                                    std::span<const InstanceMask> masks,
                                                    const ReconstructionConfig& config = {});

namespace reference {
ReconstructionResult reconstruct_object(const DepthFrame& frame, const InstanceMask& mask,
                                        const ReconstructionConfig& config = {});
std::vector<ReconstructionResult> reconstruct_frame(const DepthFrame& frame,
                                                    std::span<const InstanceMask> masks,
                                                    const ReconstructionConfig& config = {});
}  // namespace reference

}  // namespace opennav::projection
