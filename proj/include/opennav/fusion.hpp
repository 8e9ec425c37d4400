#pragma once

#include "opennav/types.hpp"

#include <functional>
#include <span>

namespace opennav::fusion {

/// Integer voxel coordinates floor(p / voxel_size).
struct VoxelKey {
  std::int64_t x = 0, y = 0, z = 0;
  auto operator<=>(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept;
};

VoxelKey voxel_of(const Eigen::Vector3d& p, double voxel_size);

/// Keeps the first point falling in each voxel, preserving input order.
std::vector<Eigen::Vector3d> voxel_deduplicate(std::span<const Eigen::Vector3d> points, double voxel_size);

/// Axis-aligned box IoU. Zero-volume boxes give 1 when identical, else 0.
double iou_3d(const Box3D& a, const Box3D& b);

struct FusionConfig {
  double merge_threshold = 0.8;
  double voxel_size = 0.02;
};

/// Folds per-view instances in order. An incoming instance joins the first
/// same-label instance whose box IoU exceeds the threshold; merged clouds are
/// voxel-deduplicated, boxes recomputed, scores maxed. Passes repeat until no
/// same-label pair exceeds the threshold.
SceneInstances merge_instances(std::span<const std::vector<Instance>> views, const FusionConfig& config = {});

}  // namespace opennav::fusion
