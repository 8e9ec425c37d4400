#include "cli.hpp"

#include "opennav/evaluation.hpp"
#include "opennav/nav_sim.hpp"
#include "opennav/oracle_detector.hpp"
#include "opennav/pipeline.hpp"
#include "opennav/scene_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

namespace opennav::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(path.string() + ": file not found");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw LoadError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return d;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': not a number: '" + value + "'");
  }
}

std::string cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) return line.substr(line.find_first_not_of(" \t", colon + 1));
    }
  }
  return "unknown CPU";
}

json report_to_json(const eval::EvalReport& r) {
  json doc;
  doc["num_scenes"] = r.num_scenes;
  doc["mAP"] = r.map * 100.0;
  doc["mAP50"] = r.map50 * 100.0;
  doc["mAP25"] = r.map25 * 100.0;
  json classes = json::object();
  for (const auto& [label, c] : r.per_class) {
    classes[label] = {{"AP", c.ap * 100.0},
                      {"AP50", c.ap50 * 100.0},
                      {"AP25", c.ap25 * 100.0},
                      {"num_predictions", c.num_predictions},
                      {"num_ground_truth", c.num_ground_truth},
                      {"matched50", c.matched50},
                      {"matched25", c.matched25}};
  }
  doc["per_class"] = classes;
  return doc;
}

const CLI::Validator kPositive(
    [](std::string& text) -> std::string {
      try {
        if (std::stod(text) > 0.0) return {};
      } catch (const std::exception&) {
      }
      return "must be a number > 0, got '" + text + "'";
    },
    "POSITIVE");

fs::path resolve_gt_dir(const fs::path& dir) {
  if (fs::exists(dir / "instances.json")) return dir;
  if (fs::exists(dir / "gt" / "instances.json")) return dir / "gt";
  throw LoadError(dir.string() + ": no instances.json (expected a GT directory or a scene with gt/)");
}

// ---- detect ----------------------------------------------------------------

struct DetectArgs {
  std::string scene_dir;
  std::string out_dir;
  double tau = mask::kDefaultZScoreThreshold;
  double voxel_size = 0.02;
  double merge_threshold = 0.8;
  std::string config;
};

int cmd_detect(const DetectArgs& a, const CLI::App& sub, std::ostream& out) {
  pipeline::DetectConfig cfg;
  cfg.reconstruction.tau = a.tau;
  cfg.fusion.voxel_size = a.voxel_size;
  cfg.fusion.merge_threshold = a.merge_threshold;
  if (!a.config.empty()) {
    for (const auto& [key, value] : read_key_values(a.config)) {
      if (key == "tau") {
        if (sub.get_option("--tau")->count() == 0) cfg.reconstruction.tau = to_double(key, value);
      } else if (key == "voxel_size") {
        if (sub.get_option("--voxel-size")->count() == 0) cfg.fusion.voxel_size = to_double(key, value);
      } else if (key == "merge_threshold") {
        if (sub.get_option("--merge-threshold")->count() == 0) cfg.fusion.merge_threshold = to_double(key, value);
      } else {
        throw UsageError(a.config + ": unknown key '" + key + "'");
      }
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const io::Scene scene = io::load_scene(a.scene_dir);
  const auto result = pipeline::detect_scene(scene, cfg);

  std::map<projection::DropStage, std::size_t> drops;
  for (const auto& d : result.dropped) ++drops[d.stage];
  out << "frames:              " << scene.frames.size() << '\n'
      << "detections in:       " << result.detections_in << '\n'
      << "dropped (erosion):   " << drops[projection::DropStage::kErosion] << '\n'
      << "dropped (isolation): " << drops[projection::DropStage::kIsolation] << '\n'
      << "dropped (z-score):   " << drops[projection::DropStage::kZScore] << '\n'
      << "per-view instances:  " << result.per_view_instances << '\n'
      << "instances out:       " << result.instances.instances.size() << '\n';
  io::write_predictions(result.instances, a.out_dir);
  out << "wrote " << (fs::path(a.out_dir) / "boxes.json").string() << '\n';
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> dirs;
  std::string out;
  double voxel_size = 0.02;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.dirs.size() % 2 != 0) throw UsageError("eval expects PRED_DIR GT_DIR pairs");
  std::vector<eval::EvalReport> reports;
  for (std::size_t i = 0; i < a.dirs.size(); i += 2) {
    const auto pred = io::load_predictions(a.dirs[i]);
    const auto gt = io::load_ground_truth(resolve_gt_dir(a.dirs[i + 1]));
    eval::EvalConfig cfg;
    cfg.voxel_size = a.voxel_size;
    cfg.vocabulary = gt.vocabulary;
    reports.push_back(eval::evaluate_scene(pred, gt.instances, cfg));
  }
  const auto report = eval::macro_average(reports);
  out << eval::format_report(report);
  const fs::path path = a.out.empty() ? fs::path(a.dirs.front()) / "eval_report.json" : fs::path(a.out);
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw Error(path.string() + ": cannot open for writing");
  file << report_to_json(report).dump(2) << '\n';
  out << "wrote " << path.string() << '\n';
  return 0;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string scene_dir;
  int repeats = 3;
  int threads = 0;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const io::Scene scene = io::load_scene(a.scene_dir);
  if (scene.frames.empty()) throw Error(a.scene_dir + ": scene has no frames");
  const int parallel = a.threads > 0 ? a.threads : omp_get_max_threads();
  std::size_t detections = 0;
  for (const auto& f : scene.frames) detections += f.instances.size();

  out << "hardware: " << cpu_model() << ", " << std::thread::hardware_concurrency() << " logical core(s)\n"
      << "scene: " << scene.frames.size() << " view(s) at " << scene.intrinsics().width << 'x'
      << scene.intrinsics().height << ", " << detections << " detection(s)\n"
      << "geometry stages only (erosion, isolation, z-score, back-projection, world transform);"
         " no file I/O, no fusion, no ML inference\n";
  out << std::left << std::setw(6) << "run" << std::setw(9) << "threads" << std::setw(14) << "secs/scene"
      << "secs/view\n";

  std::vector<int> modes{1};
  if (parallel != 1) modes.push_back(parallel);
  std::map<int, pipeline::TimingRow> sums;
  const pipeline::DetectConfig cfg;
  out << std::fixed << std::setprecision(6);
  for (int r = 1; r <= a.repeats; ++r) {
    for (int t : modes) {
      const auto row = pipeline::time_geometry(scene, cfg, t);
      sums[t].secs_per_scene += row.secs_per_scene;
      sums[t].secs_per_view += row.secs_per_view;
      out << std::setw(6) << r << std::setw(9) << t << std::setw(14) << row.secs_per_scene << row.secs_per_view
          << '\n';
    }
  }
  for (int t : modes) {
    out << std::setw(6) << "mean" << std::setw(9) << t << std::setw(14) << sums[t].secs_per_scene / a.repeats
        << sums[t].secs_per_view / a.repeats << '\n';
  }
  return 0;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  std::string preset = "three_boxes";
  std::string spec;
  int views = 0;
  std::string noise_file;
  std::uint64_t seed = 0;
  double drop_prob = 0.0;
  int box_jitter = 0;
  int mask_erode = 0;
  double score_sigma = 0.0;
};

int cmd_synth(const SynthArgs& a, const CLI::App& sub, std::ostream& out) {
  synth::SceneSpec spec;
  if (!a.spec.empty()) {
    spec = synth::load_scene_spec(a.spec);
  } else if (a.preset == "three_boxes") {
    spec = synth::presets::three_boxes(a.views > 0 ? a.views : 20);
  } else if (a.preset == "two_cubes") {
    spec = synth::presets::two_cubes();
  } else if (a.preset == "bench") {
    spec = synth::presets::bench_scene(a.views > 0 ? a.views : 1);
  } else {
    throw UsageError("unknown preset '" + a.preset + "' (three_boxes, two_cubes, bench)");
  }

  synth::PerturbationConfig noise;
  if (!a.noise_file.empty()) noise = synth::PerturbationConfig::load(a.noise_file);
  if (sub.get_option("--seed")->count()) noise.seed = a.seed;
  if (sub.get_option("--drop-prob")->count()) noise.drop_prob = a.drop_prob;
  if (sub.get_option("--box-jitter")->count()) noise.box_jitter_px = a.box_jitter;
  if (sub.get_option("--mask-erode")->count()) noise.mask_erode_px = a.mask_erode;
  if (sub.get_option("--score-sigma")->count()) noise.score_sigma = a.score_sigma;
  try {
    noise.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }

  synth::write_synthetic_scene(spec, noise, a.out_dir);
  out << "wrote " << spec.trajectory.size() << " view(s), " << spec.objects.size() << " object(s) to " << a.out_dir
      << '\n';
  return 0;
}

// ---- navsim ----------------------------------------------------------------

struct NavArgs {
  std::string world;
  std::string scenario;
  std::int64_t random_seed = -1;
  std::string boxes;
  std::string label;
  bool boxes_as_obstacles = false;
  std::vector<double> start;
  double heading = 0.0;
  std::string out = "trajectory.csv";
  std::string save_world;
  int max_steps = 4000;
  nav::ApfConfig apf;
};

void add_box_obstacle(nav::WorldModel2D& world, const Box3D& box) {
  const Eigen::Vector2d lo(box.min_corner.x(), box.min_corner.y());
  const Eigen::Vector2d hi(box.max_corner.x(), box.max_corner.y());
  const Eigen::Vector2d c1(hi.x(), lo.y()), c2(lo.x(), hi.y());
  world.segments.push_back({lo, c1});
  world.segments.push_back({c1, hi});
  world.segments.push_back({hi, c2});
  world.segments.push_back({c2, lo});
}

int cmd_navsim(const NavArgs& a, const CLI::App& sub, std::ostream& out) {
  const int sources = !a.world.empty() + !a.scenario.empty() + (a.random_seed >= 0);
  if (sources > 1) throw UsageError("use at most one of --world, --scenario, --random-seed");
  if (sources == 0 && a.boxes.empty()) throw UsageError("navsim needs --world, --scenario, --random-seed or --boxes");

  nav::NavScenario sc;
  if (!a.world.empty()) {
    sc = nav::load_world(a.world);
  } else if (!a.scenario.empty()) {
    bool found = false;
    for (auto& s : nav::scenarios::all()) {
      if (s.name == a.scenario) {
        sc = s;
        found = true;
      }
    }
    if (!found) throw UsageError("unknown scenario '" + a.scenario + "' (open_approach, central_column, offset_target)");
  } else if (a.random_seed >= 0) {
    sc = nav::scenarios::random_world(static_cast<std::uint64_t>(a.random_seed), a.apf);
  } else {
    sc.name = "boxes";
  }

  if (!a.boxes.empty()) {
    if (a.label.empty()) throw UsageError("--boxes requires --label");
    const auto records = io::read_boxes(a.boxes);
    const io::BoxRecord* target = nullptr;
    for (const auto& r : records)
      if (r.label == a.label && (!target || r.score > target->score)) target = &r;
    if (!target) throw Error(a.boxes + ": no box labeled '" + a.label + "'");
    sc.world.target = nav::ground_target(target->box);
    if (a.boxes_as_obstacles)
      for (const auto& r : records)
        if (&r != target) add_box_obstacle(sc.world, r.box);
  }
  if (sub.get_option("--start")->count()) sc.start.position = {a.start[0], a.start[1]};
  if (sub.get_option("--heading")->count()) sc.start.heading = a.heading;

  try {
    a.apf.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  if (!a.save_world.empty()) nav::write_world(sc, a.save_world);

  const auto traj = nav::run_navigation(sc.world, sc.start, a.apf, a.max_steps);
  nav::write_trajectory_csv(traj, a.out);
  out << std::fixed << std::setprecision(3) << "scenario:      " << sc.name << '\n'
      << "target:        (" << sc.world.target.x() << ", " << sc.world.target.y() << ")\n"
      << "outcome:       " << nav::to_string(traj.outcome) << '\n'
      << "steps:         " << traj.steps.size() << '\n'
      << "time:          " << traj.steps.size() * a.apf.dt << " s\n"
      << "path length:   " << traj.path_length << " m\n"
      << "min clearance: " << traj.min_clearance << " m (robot radius " << sc.start.radius << " m)\n"
      << "wrote " << a.out << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"OpenNav geometry pipeline: detect, eval, bench, synth, navsim"};
  app.require_subcommand(1);

  DetectArgs det;
  auto* detect = app.add_subcommand("detect", "Reconstruct and fuse 3D instances from a scene directory");
  detect->add_option("scene_dir", det.scene_dir, "Scene directory")->required()->check(CLI::ExistingDirectory);
  detect->add_option("out_dir", det.out_dir, "Output directory for boxes.json and PLY clouds")->required();
  detect->add_option("--tau", det.tau, "Z-score threshold")->capture_default_str()->check(kPositive);
  detect->add_option("--voxel-size", det.voxel_size, "Fusion voxel size, m")
      ->capture_default_str()
      ->check(kPositive);
  detect->add_option("--merge-threshold", det.merge_threshold, "Same-label box IoU above which instances merge")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  detect->add_option("--config", det.config, "key = value file with tau, voxel_size, merge_threshold")
      ->check(CLI::ExistingFile);

  EvalArgs ev;
  auto* evalc = app.add_subcommand("eval", "Score predictions against ground truth (pairs are macro-averaged)");
  evalc->add_option("dirs", ev.dirs, "PRED_DIR GT_DIR [PRED_DIR GT_DIR ...]")->required()->expected(2, -1);
  evalc->add_option("--out", ev.out, "Report JSON path (default PRED_DIR/eval_report.json)");
  evalc->add_option("--voxel-size", ev.voxel_size, "Evaluation voxel size, m")
      ->capture_default_str()
      ->check(kPositive);

  BenchArgs be;
  auto* bench = app.add_subcommand("bench", "Time the per-view geometry stages");
  bench->add_option("scene_dir", be.scene_dir, "Scene directory")->required()->check(CLI::ExistingDirectory);
  bench->add_option("--repeats", be.repeats, "Timed repetitions")->capture_default_str()->check(kPositive);
  bench->add_option("--threads", be.threads, "Threads for the parallel rows (0 = OpenMP default)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  SynthArgs sy;
  auto* synthc = app.add_subcommand("synth", "Generate a synthetic scene with oracle detections");
  synthc->add_option("out_dir", sy.out_dir, "Output scene directory")->required();
  synthc->add_option("--preset", sy.preset, "three_boxes, two_cubes or bench")->capture_default_str();
  synthc->add_option("--spec", sy.spec, "JSON scene description (overrides --preset)")->check(CLI::ExistingFile);
  synthc->add_option("--views", sy.views, "Number of views for orbit presets")->check(kPositive);
  synthc->add_option("--noise", sy.noise_file, "key = value perturbation config")->check(CLI::ExistingFile);
  synthc->add_option("--seed", sy.seed, "Noise seed");
  synthc->add_option("--drop-prob", sy.drop_prob, "Probability of dropping a detection");
  synthc->add_option("--box-jitter", sy.box_jitter, "Max box edge jitter, px");
  synthc->add_option("--mask-erode", sy.mask_erode, "Mask erosion (>0) or dilation (<0) steps");
  synthc->add_option("--score-sigma", sy.score_sigma, "Score noise sigma");

  NavArgs na;
  auto* navc = app.add_subcommand("navsim", "Run the potential-field navigation simulator");
  navc->add_option("--world", na.world, "JSON world file")->check(CLI::ExistingFile);
  navc->add_option("--scenario", na.scenario, "open_approach, central_column or offset_target");
  navc->add_option("--random-seed", na.random_seed, "Generate a random world from this seed");
  navc->add_option("--boxes", na.boxes, "boxes.json from detect; the target is a box centroid")
      ->check(CLI::ExistingFile);
  navc->add_option("--label", na.label, "Label of the target box");
  navc->add_flag("--boxes-as-obstacles", na.boxes_as_obstacles, "Other boxes become obstacles");
  navc->add_option("--start", na.start, "Start position X Y")->expected(2);
  navc->add_option("--heading", na.heading, "Start heading, rad");
  navc->add_option("--out", na.out, "Trajectory CSV")->capture_default_str();
  navc->add_option("--save-world", na.save_world, "Write the world used to this JSON file");
  navc->add_option("--max-steps", na.max_steps, "Step limit")->capture_default_str()->check(kPositive);
  navc->add_option("--v-max", na.apf.v_max, "m/s")->capture_default_str();
  navc->add_option("--d-safe", na.apf.d_safe, "m")->capture_default_str();
  navc->add_option("--omega-gain", na.apf.omega_gain, "1/s")->capture_default_str();
  navc->add_option("--attract-gain", na.apf.attract_gain)->capture_default_str();
  navc->add_option("--repulse-gain", na.apf.repulse_gain)->capture_default_str();
  navc->add_option("--repulse-range", na.apf.repulse_range, "m")->capture_default_str();
  navc->add_option("--dt", na.apf.dt, "s")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*detect) return cmd_detect(det, *detect, out);
    if (*evalc) return cmd_eval(ev, out);
    if (*bench) return cmd_bench(be, out);
    if (*synthc) return cmd_synth(sy, *synthc, out);
    if (*navc) return cmd_navsim(na, *navc, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace opennav::cli
