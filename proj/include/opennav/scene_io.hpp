#pragma once

#include "opennav/types.hpp"

#include <filesystem>
#include <optional>
#include <span>

namespace opennav::io {

namespace fs = std::filesystem;

constexpr double kDefaultDepthScale = 0.001;

/// One view with its detections (mask + owning box) and, when present, the
/// noise-free GT mirror from `gt/frames/`.
struct FrameData {
  DepthFrame frame;
  std::vector<InstanceMask> instances;
  std::vector<InstanceMask> gt_instances;
};

struct GroundTruth {
  std::vector<std::string> vocabulary;
  std::vector<GroundTruthInstance> instances;
};

struct Scene {
  double depth_scale = kDefaultDepthScale;
  std::vector<FrameData> frames;
  std::optional<GroundTruth> ground_truth;

  const CameraIntrinsics& intrinsics() const { return frames.front().frame.intrinsics; }
};

/// Loads a scene directory:
///   intrinsics.txt                fx fy cx cy width height [depth_scale]
///   frames/<id>.depth.pgm         16-bit depth in units of depth_scale meters, 0 = invalid
///   frames/<id>.pose.txt          4x4 row-major camera-to-world matrix
///   frames/<id>.detections.txt    "x1 y1 x2 y2 score label" per line; line k owns mask k
///   frames/<id>.mask.<k>.pgm      binary mask (0/255)
///   gt/instances.json             optional vocabulary + instance list (points in PLY files)
///   gt/frames/<id>.detections.txt, gt/frames/<id>.mask.<k>.pgm   optional GT 2D mirror
/// Frames are ordered by id (numerically when both ids are integers).
Scene load_scene(const fs::path& scene_dir);

/// Writes the layout read by load_scene. Existing files are overwritten.
void write_scene(const Scene& scene, const fs::path& scene_dir);

struct PgmImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint16_t> pixels;
};

/// P2 (ASCII) or P5 (binary, 16-bit big-endian when maxval > 255).
PgmImage read_pgm(const fs::path& path);
void write_pgm(const PgmImage& image, const fs::path& path);

DepthImage read_depth_pgm(const fs::path& path, double depth_scale);
void write_depth_pgm(const DepthImage& depth, double depth_scale, const fs::path& path);
Bitmap read_mask_pgm(const fs::path& path);
void write_mask_pgm(const Bitmap& mask, const fs::path& path);

CameraPose read_pose(const fs::path& path);
void write_pose(const CameraPose& pose, const fs::path& path);

std::vector<Detection2D> read_detections(const fs::path& path);
void write_detections(std::span<const Detection2D> detections, const fs::path& path);

/// ASCII PLY with float x, y, z vertex properties. Refuses empty clouds.
void write_cloud_ply(const ObjectCloud& cloud, const fs::path& path);
void write_points_ply(std::span<const Eigen::Vector3d> points, const fs::path& path);
/// Reads the x, y, z vertex properties of an ASCII or binary_little_endian PLY.
std::vector<Eigen::Vector3d> read_points_ply(const fs::path& path);

/// One line of the boxes document.
struct BoxRecord {
  std::string label;
  double score = 0.0;
  Box3D box;
  std::size_t point_count = 0;
  std::string cloud_file;  // relative to the document, may be empty
  std::vector<std::string> source_frames;

  bool operator==(const BoxRecord&) const = default;
};

/// JSON array of box records; `cloud_files[i]` (optional) names instance i's PLY.
void write_boxes(const SceneInstances& instances, const fs::path& path,
                 std::span<const std::string> cloud_files = {});
std::vector<BoxRecord> read_boxes(const fs::path& path);

/// Writes boxes.json plus instance_<k>.ply per instance into `dir`.
void write_predictions(const SceneInstances& instances, const fs::path& dir);
/// Reads boxes.json and the referenced clouds back into instances.
SceneInstances load_predictions(const fs::path& dir);

GroundTruth load_ground_truth(const fs::path& gt_dir);
void write_ground_truth(const GroundTruth& gt, const fs::path& gt_dir);

}  // namespace opennav::io
