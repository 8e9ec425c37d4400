#pragma once

#include "opennav/fusion.hpp"
#include "opennav/types.hpp"

#include <map>
#include <span>
#include <string>

namespace opennav::eval {

/// Sorted, unique voxel keys of a point set.
std::vector<fusion::VoxelKey> voxelize(std::span<const Eigen::Vector3d> points, double voxel_size);

/// |A & B| / |A | B| for two sorted unique key sets.
double voxel_iou(std::span<const fusion::VoxelKey> a, std::span<const fusion::VoxelKey> b);

/// Point-level instance IoU computed on a shared voxel grid.
double instance_iou(const ObjectCloud& pred, const GroundTruthInstance& gt, double voxel_size);

/// One prediction of a class: its score and IoU against each GT of that class.
struct ScoredPrediction {
  double score = 0.0;
  std::vector<double> gt_iou;
};

/// Greedy matching: predictions in descending score order (ties keep input
/// order) each take the unmatched GT with the highest IoU >= threshold.
/// Returns a true-positive flag per prediction, in input order.
std::vector<bool> match_predictions(std::span<const ScoredPrediction> preds, std::size_t n_gt, double threshold);

/// All-point interpolated AP. Requires n_gt >= 1.
double average_precision(std::span<const ScoredPrediction> preds, std::size_t n_gt, double threshold);

struct EvalConfig {
  double voxel_size = 0.02;
  /// Thresholds averaged into "mAP"; defaults to 0.50:0.05:0.95.
  std::vector<double> map_thresholds = default_map_thresholds();
  /// Allowed labels. Empty means "the GT labels".
  std::vector<std::string> vocabulary;

  static std::vector<double> default_map_thresholds();
};

struct ClassResult {
  double ap = 0.0;
  double ap50 = 0.0;
  double ap25 = 0.0;
  std::size_t num_predictions = 0;
  std::size_t num_ground_truth = 0;
  std::size_t matched50 = 0;
  std::size_t matched25 = 0;
};

struct EvalReport {
  std::map<std::string, ClassResult> per_class;
  double map = 0.0;
  double map50 = 0.0;
  double map25 = 0.0;
  std::size_t num_scenes = 1;
};

/// Per-class AP over classes that have at least one GT instance.
/// Throws Error when there is no GT or a label is outside the vocabulary.
EvalReport evaluate_scene(const SceneInstances& pred, std::span<const GroundTruthInstance> gt,
                          const EvalConfig& config = {});

/// Mean of each metric across scenes; per-class entries average over the
/// scenes in which the class has GT.
EvalReport macro_average(std::span<const EvalReport> reports);

/// Plain-text table: mAP / mAP50 / mAP25 followed by the per-class breakdown, values x100.
std::string format_report(const EvalReport& report);

}  // namespace opennav::eval
