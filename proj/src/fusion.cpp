#include "opennav/fusion.hpp"

#include "opennav/projection.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace opennav::fusion {

std::size_t VoxelKeyHash::operator()(const VoxelKey& k) const noexcept {
  // Teschner et al. spatial hash primes
  const auto h = static_cast<std::uint64_t>(k.x) * 73856093ULL ^ static_cast<std::uint64_t>(k.y) * 19349663ULL ^
                 static_cast<std::uint64_t>(k.z) * 83492791ULL;
  return static_cast<std::size_t>(h);
}

VoxelKey voxel_of(const Eigen::Vector3d& p, double voxel_size) {
  return {static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
          static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
          static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
}

std::vector<Eigen::Vector3d> voxel_deduplicate(std::span<const Eigen::Vector3d> points, double voxel_size) {
  if (!(voxel_size > 0.0)) throw std::invalid_argument("voxel_deduplicate: voxel_size must be positive");
  std::unordered_set<VoxelKey, VoxelKeyHash> seen;
  seen.reserve(points.size());
  std::vector<Eigen::Vector3d> out;
  for (const auto& p : points) {
    if (seen.insert(voxel_of(p, voxel_size)).second) out.push_back(p);
  }
  return out;
}

double iou_3d(const Box3D& a, const Box3D& b) {
  const double va = a.volume();
  const double vb = b.volume();
  if (va <= 0.0 || vb <= 0.0) return a == b ? 1.0 : 0.0;
  const Eigen::Vector3d lo = a.min_corner.cwiseMax(b.min_corner);
  const Eigen::Vector3d hi = a.max_corner.cwiseMin(b.max_corner);
  const Eigen::Vector3d overlap = (hi - lo).cwiseMax(0.0);
  const double inter = overlap.x() * overlap.y() * overlap.z();
  const double uni = va + vb - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

void absorb(Instance& into, const Instance& other, double voxel_size) {
  std::vector<Eigen::Vector3d> pts = into.cloud.points;
  pts.insert(pts.end(), other.cloud.points.begin(), other.cloud.points.end());
  into.cloud.points = voxel_deduplicate(pts, voxel_size);
  into.cloud.score = std::max(into.cloud.score, other.cloud.score);
  into.cloud.source_frames.insert(other.cloud.source_frames.begin(), other.cloud.source_frames.end());
  into.box = projection::box_from_points(into.cloud.points);
}

bool overlaps(const Instance& a, const Instance& b, double threshold) {
  return a.label() == b.label() && iou_3d(a.box, b.box) > threshold;
}

}  // namespace

SceneInstances merge_instances(std::span<const std::vector<Instance>> views, const FusionConfig& config) {
  if (!(config.merge_threshold > 0.0 && config.merge_threshold <= 1.0))
    throw std::invalid_argument("merge_instances: merge_threshold must lie in (0, 1]");
  if (!(config.voxel_size > 0.0)) throw std::invalid_argument("merge_instances: voxel_size must be positive");

  SceneInstances scene;
  auto& out = scene.instances;
  for (const auto& view : views) {
    for (const auto& incoming : view) {
      if (incoming.cloud.points.empty()) continue;
      Instance* target = nullptr;
      for (auto& existing : out) {
        if (overlaps(existing, incoming, config.merge_threshold)) {
          target = &existing;
          break;
        }
      }
      if (target) {
        absorb(*target, incoming, config.voxel_size);
      } else {
        Instance fresh = incoming;
        fresh.cloud.points = voxel_deduplicate(incoming.cloud.points, config.voxel_size);
        fresh.box = projection::box_from_points(fresh.cloud.points);
        out.push_back(std::move(fresh));
      }
    }
  }

  // A merge grows a box, which can create new overlaps; sweep until stable.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < out.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < out.size(); ++j) {
        if (overlaps(out[i], out[j], config.merge_threshold)) {
          absorb(out[i], out[j], config.voxel_size);
          out.erase(out.begin() + static_cast<std::ptrdiff_t>(j));
          changed = true;
          break;
        }
      }
    }
  }
  return scene;
}

}  // namespace opennav::fusion
