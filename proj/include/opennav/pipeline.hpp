#pragma once

#include "opennav/fusion.hpp"
#include "opennav/projection.hpp"
#include "opennav/scene_io.hpp"

#include <string>
#include <vector>

namespace opennav::pipeline {

struct DetectConfig {
  projection::ReconstructionConfig reconstruction;
  fusion::FusionConfig fusion;

  void validate() const;
};

struct DropNotice {
  std::string frame_id;
  std::size_t detection = 0;
  std::string label;
  projection::DropStage stage = projection::DropStage::kNone;
};

struct DetectResult {
  SceneInstances instances;
  std::size_t detections_in = 0;
  std::size_t per_view_instances = 0;
  std::vector<DropNotice> dropped;
};

/// Per-view reconstruction of every frame (frames run in parallel), then
/// fusion of the per-view instances folded in frame order.
DetectResult detect_scene(const io::Scene& scene, const DetectConfig& config = {});

/// Per-view instance lists only, in frame order.
std::vector<std::vector<Instance>> reconstruct_views(const io::Scene& scene, const DetectConfig& config,
                                                     std::vector<DropNotice>* dropped = nullptr);

struct TimingRow {
  double secs_per_scene = 0.0;
  double secs_per_view = 0.0;
};

/// Wall time of the per-view geometry stages over all frames of `scene`
/// (no file I/O, no fusion). threads == 1 runs single-threaded.
TimingRow time_geometry(const io::Scene& scene, const DetectConfig& config, int threads);

}  // namespace opennav::pipeline
