#include "opennav/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

namespace opennav::eval {

std::vector<fusion::VoxelKey> voxelize(std::span<const Eigen::Vector3d> points, double voxel_size) {
  if (!(voxel_size > 0.0)) throw std::invalid_argument("voxelize: voxel_size must be positive");
  std::vector<fusion::VoxelKey> keys;
  keys.reserve(points.size());
  for (const auto& p : points) keys.push_back(fusion::voxel_of(p, voxel_size));
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

double voxel_iou(std::span<const fusion::VoxelKey> a, std::span<const fusion::VoxelKey> b) {
  std::size_t inter = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double instance_iou(const ObjectCloud& pred, const GroundTruthInstance& gt, double voxel_size) {
  const auto a = voxelize(pred.points, voxel_size);
  const auto b = voxelize(gt.points, voxel_size);
  return voxel_iou(a, b);
}

std::vector<bool> match_predictions(std::span<const ScoredPrediction> preds, std::size_t n_gt, double threshold) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

  std::vector<bool> gt_taken(n_gt, false);
  std::vector<bool> tp(preds.size(), false);
  for (std::size_t idx : order) {
    const auto& ious = preds[idx].gt_iou;
    std::ptrdiff_t best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < std::min(n_gt, ious.size()); ++g) {
      if (gt_taken[g] || ious[g] < threshold) continue;
      if (ious[g] > best_iou) {
        best_iou = ious[g];
        best = static_cast<std::ptrdiff_t>(g);
      }
    }
    if (best >= 0) {
      gt_taken[static_cast<std::size_t>(best)] = true;
      tp[idx] = true;
    }
  }
  return tp;
}

double average_precision(std::span<const ScoredPrediction> preds, std::size_t n_gt, double threshold) {
  if (n_gt == 0) throw std::invalid_argument("average_precision: no ground truth");
  const std::vector<bool> tp = match_predictions(preds, n_gt, threshold);

  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });

  const std::size_t n = order.size();
  std::vector<double> precision(n), recall(n);
  std::size_t tps = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (tp[order[k]]) ++tps;
    precision[k] = static_cast<double>(tps) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tps) / static_cast<double>(n_gt);
  }
  // monotone non-increasing precision envelope
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);

  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

std::vector<double> EvalConfig::default_map_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
  return t;
}

EvalReport evaluate_scene(const SceneInstances& pred, std::span<const GroundTruthInstance> gt,
                          const EvalConfig& config) {
  if (gt.empty()) throw Error("evaluate_scene: ground truth is empty, nothing to evaluate");
  if (config.map_thresholds.empty()) throw std::invalid_argument("evaluate_scene: no mAP thresholds");

  std::set<std::string> vocabulary(config.vocabulary.begin(), config.vocabulary.end());
  if (vocabulary.empty())
    for (const auto& g : gt) vocabulary.insert(g.label);
  std::set<std::string> unknown;
  for (const auto& g : gt)
    if (!vocabulary.contains(g.label)) unknown.insert(g.label);
  for (const auto& p : pred.instances)
    if (!vocabulary.contains(p.label())) unknown.insert(p.label());
  if (!unknown.empty()) {
    std::string msg = "evaluate_scene: labels outside the vocabulary:";
    for (const auto& l : unknown) msg += " '" + l + "'";
    throw Error(msg);
  }

  std::vector<std::vector<fusion::VoxelKey>> gt_vox(gt.size());
  std::vector<std::vector<fusion::VoxelKey>> pred_vox(pred.instances.size());
  const std::ptrdiff_t ngt = static_cast<std::ptrdiff_t>(gt.size());
  const std::ptrdiff_t npred = static_cast<std::ptrdiff_t>(pred.instances.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < ngt; ++i) gt_vox[i] = voxelize(gt[i].points, config.voxel_size);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < npred; ++i)
    pred_vox[i] = voxelize(pred.instances[i].cloud.points, config.voxel_size);

  std::map<std::string, std::vector<std::size_t>> gt_by_class, pred_by_class;
  for (std::size_t i = 0; i < gt.size(); ++i) gt_by_class[gt[i].label].push_back(i);
  for (std::size_t i = 0; i < pred.instances.size(); ++i) pred_by_class[pred.instances[i].label()].push_back(i);

  EvalReport report;
  for (const auto& [label, gts] : gt_by_class) {
    std::vector<ScoredPrediction> preds;
    for (std::size_t pi : pred_by_class[label]) {
      ScoredPrediction sp;
      sp.score = pred.instances[pi].score();
      for (std::size_t gi : gts) sp.gt_iou.push_back(voxel_iou(pred_vox[pi], gt_vox[gi]));
      preds.push_back(std::move(sp));
    }
    ClassResult r;
    r.num_predictions = preds.size();
    r.num_ground_truth = gts.size();
    double sum = 0.0;
    for (double t : config.map_thresholds) sum += average_precision(preds, gts.size(), t);
    r.ap = sum / static_cast<double>(config.map_thresholds.size());
    r.ap50 = average_precision(preds, gts.size(), 0.50);
    r.ap25 = average_precision(preds, gts.size(), 0.25);
    const auto m50 = match_predictions(preds, gts.size(), 0.50);
    const auto m25 = match_predictions(preds, gts.size(), 0.25);
    r.matched50 = static_cast<std::size_t>(std::count(m50.begin(), m50.end(), true));
    r.matched25 = static_cast<std::size_t>(std::count(m25.begin(), m25.end(), true));
    report.per_class[label] = r;
  }

  for (const auto& [label, r] : report.per_class) {
    report.map += r.ap;
    report.map50 += r.ap50;
    report.map25 += r.ap25;
  }
  const double nc = static_cast<double>(report.per_class.size());
  report.map /= nc;
  report.map50 /= nc;
  report.map25 /= nc;
  return report;
}

EvalReport macro_average(std::span<const EvalReport> reports) {
  if (reports.empty()) throw std::invalid_argument("macro_average: no reports");
  EvalReport out;
  out.num_scenes = reports.size();
  std::map<std::string, std::size_t> seen;
  for (const auto& r : reports) {
    out.map += r.map;
    out.map50 += r.map50;
    out.map25 += r.map25;
    for (const auto& [label, c] : r.per_class) {
      auto& acc = out.per_class[label];
      acc.ap += c.ap;
      acc.ap50 += c.ap50;
      acc.ap25 += c.ap25;
      acc.num_predictions += c.num_predictions;
      acc.num_ground_truth += c.num_ground_truth;
      acc.matched50 += c.matched50;
      acc.matched25 += c.matched25;
      ++seen[label];
    }
  }
  const double n = static_cast<double>(reports.size());
  out.map /= n;
  out.map50 /= n;
  out.map25 /= n;
  for (auto& [label, c] : out.per_class) {
    const double k = static_cast<double>(seen[label]);
    c.ap /= k;
    c.ap50 /= k;
    c.ap25 /= k;
  }
  return out;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  os << "# macro-average over " << report.num_scenes << " scene(s)\n";
  os << std::left << std::setw(24) << "class" << std::right << std::setw(8) << "mAP" << std::setw(8) << "mAP50"
     << std::setw(8) << "mAP25" << std::setw(8) << "#pred" << std::setw(8) << "#gt" << "\n";
  os << std::left << std::setw(24) << "ALL" << std::right << std::setw(8) << 100.0 * report.map << std::setw(8)
     << 100.0 * report.map50 << std::setw(8) << 100.0 * report.map25 << "\n";
  for (const auto& [label, c] : report.per_class) {
    os << std::left << std::setw(24) << label << std::right << std::setw(8) << 100.0 * c.ap << std::setw(8)
       << 100.0 * c.ap50 << std::setw(8) << 100.0 * c.ap25 << std::setw(8) << c.num_predictions << std::setw(8)
       << c.num_ground_truth << "\n";
  }
  return os.str();
}

}  // namespace opennav::eval
