#pragma once

#include "opennav/scene_io.hpp"
#include "opennav/types.hpp"

#include <optional>
#include <span>

namespace opennav::synth {

struct LabeledBox {
  std::string label;
  Box3D box;
};

/// Declarative synthetic scene: labeled boxes seen from a list of camera poses.
struct SceneSpec {
  CameraIntrinsics intrinsics;
  double depth_scale = io::kDefaultDepthScale;
  std::vector<LabeledBox> objects;
  /// Unlabeled geometry that occludes and shows up in depth but is not GT.
  std::vector<Box3D> background;
  std::vector<CameraPose> trajectory;
  /// Spacing of the GT surface samples, meters.
  double gt_spacing = 0.01;
  /// Extra labels allowed in predictions beyond the object labels.
  std::vector<std::string> vocabulary;
};

/// Seeded noise applied to GT-derived detections.
struct PerturbationConfig {
  std::uint64_t seed = 0;
  int box_jitter_px = 0;  // each box edge moves by a uniform integer in [-j, j]
  int mask_erode_px = 0;  // > 0 erodes, < 0 dilates, by that many 3x3 steps
  double drop_prob = 0.0;
  double score_sigma = 0.0;  // score = clamp(1 - |N(0, sigma)|, 0, 1)

  /// "key = value" lines; '#' starts a comment. Unknown keys are errors.
  static PerturbationConfig parse(const std::string& text);
  static PerturbationConfig load(const io::fs::path& path);
  std::string to_text() const;
  void validate() const;
};

/// Camera-to-world pose at `eye` looking at `target`; camera y points away from `up`.
CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                   const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ());

/// `count` poses on a circle of `radius` around `center` (z-up), cycling
/// through `elevations_deg`, all looking at `center`.
std::vector<CameraPose> orbit_trajectory(const Eigen::Vector3d& center, double radius,
                                         std::span<const double> elevations_deg, int count,
                                         double azimuth0_deg = 0.0);

/// Smallest positive ray parameter t with origin + t * dir inside `box`.
std::optional<double> ray_box_intersection(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                           const Box3D& box);

/// Nearest-surface depth per pixel, quantized to `depth_scale`; 0 where no box is hit.
DepthImage render_depth(const SceneSpec& spec, const CameraPose& pose);

/// Regular samples over the six faces of a box, at most `spacing` apart.
std::vector<Eigen::Vector3d> sample_box_surface(const Box3D& box, double spacing);

std::vector<GroundTruthInstance> sample_ground_truth(const SceneSpec& spec);

struct RenderConfig {
  /// Spacing of the GT point samples.
  double sample_spacing = 0.01;
  /// Depth quantum of the frame.
  double depth_scale = io::kDefaultDepthScale;
};

struct RenderedInstance {
  InstanceMask mask;
  std::size_t gt_index = 0;
};

/// Masks and tight boxes of the GT instances visible in `frame`, then the
/// configured perturbations. A pixel joins instance i when its back-projected
/// depth lies within sample_spacing + 2 * depth_scale of a GT point of i that
/// projects nearby. Invisible instances are omitted.
std::vector<RenderedInstance> render_gt_detections(const DepthFrame& frame,
                                                   std::span<const GroundTruthInstance> gt,
                                                   const PerturbationConfig& noise = {},
                                                   const RenderConfig& render = {});

/// Renders depth for every pose, samples GT, and attaches oracle detections
/// (perturbed) plus the noise-free GT 2D mirror. Frame ids are zero-padded indices.
io::Scene make_synthetic_scene(const SceneSpec& spec, const PerturbationConfig& noise = {});

/// Same, written in the scene directory layout.
void write_synthetic_scene(const SceneSpec& spec, const PerturbationConfig& noise, const io::fs::path& dir);

/// JSON scene description; see README for the schema.
SceneSpec load_scene_spec(const io::fs::path& path);

namespace presets {
/// Three labeled boxes seen from a 20-view orbit at 640x480.
SceneSpec three_boxes(int views = 20);
/// Two separated cubes in front of an identity camera.
SceneSpec two_cubes();
/// Five objects filling a 640x480 view, repeated over `views` poses.
SceneSpec bench_scene(int views = 1);
}  // namespace presets

}  // namespace opennav::synth
