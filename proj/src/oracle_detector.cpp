#include "opennav/oracle_detector.hpp"

#include "opennav/mask_pipeline.hpp"
#include "opennav/projection.hpp"

#include <json.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace opennav::synth {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::mt19937_64 stream_for(std::uint64_t seed, const std::string& frame_id, std::size_t gt_index) {
  const std::uint64_t f = fnv1a(frame_id);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(f), static_cast<std::uint32_t>(f >> 32),
                    static_cast<std::uint32_t>(gt_index)};
  return std::mt19937_64(seq);
}

Bitmap dilate(const Bitmap& in) {
  Bitmap out(in.width(), in.height(), 0);
  for (int v = 0; v < in.height(); ++v)
    for (int u = 0; u < in.width(); ++u) {
      if (!in(u, v)) continue;
      for (int dv = -1; dv <= 1; ++dv)
        for (int du = -1; du <= 1; ++du)
          if (out.in_bounds(u + du, v + dv)) out(u + du, v + dv) = 1;
    }
  return out;
}

std::optional<Detection2D> tight_box(const Bitmap& m) {
  int u0 = m.width(), v0 = m.height(), u1 = -1, v1 = -1;
  for (int v = 0; v < m.height(); ++v)
    for (int u = 0; u < m.width(); ++u)
      if (m(u, v)) {
        u0 = std::min(u0, u);
        u1 = std::max(u1, u);
        v0 = std::min(v0, v);
        v1 = std::max(v1, v);
      }
  if (u1 < 0) return std::nullopt;
  Detection2D d;
  d.x1 = u0;
  d.y1 = v0;
  d.x2 = u1 + 1;
  d.y2 = v1 + 1;
  return d;
}

// Pixels whose back-projected depth lies near a GT point of this instance.
Bitmap visible_pixels(const DepthFrame& frame, const GroundTruthInstance& gt, const RenderConfig& cfg) {
  const auto& k = frame.intrinsics;
  Bitmap mask(k.width, k.height, 0);
  const double tol = cfg.sample_spacing + 2.0 * cfg.depth_scale;
  const double tol2 = tol * tol;
  const double fmax = std::max(k.fx, k.fy);
  for (const auto& g : gt.points) {
    const Eigen::Vector3d c = frame.pose.to_camera(g);
    if (c.z() <= 1e-9) continue;
    const Eigen::Vector2d px = projection::project(c, k);
    const int r = static_cast<int>(std::ceil(tol * fmax / c.z())) + 1;
    const int uc = static_cast<int>(std::lround(px.x()));
    const int vc = static_cast<int>(std::lround(px.y()));
    if (uc + r < 0 || vc + r < 0 || uc - r >= k.width || vc - r >= k.height) continue;
    for (int v = std::max(0, vc - r); v <= std::min(k.height - 1, vc + r); ++v) {
      for (int u = std::max(0, uc - r); u <= std::min(k.width - 1, uc + r); ++u) {
        if (mask(u, v)) continue;
        const double d = frame.depth(u, v);
        if (d <= 0.0) continue;
        const Eigen::Vector3d q((u - k.cx) * d / k.fx, (v - k.cy) * d / k.fy, d);
        if ((q - c).squaredNorm() <= tol2) mask(u, v) = 1;
      }
    }
  }
  return mask;
}

Box3D parse_box(const json& j) {
  const auto mn = j.at("min").get<std::vector<double>>();
  const auto mx = j.at("max").get<std::vector<double>>();
  if (mn.size() != 3 || mx.size() != 3) throw LoadError("scene spec: box corners need 3 values");
  Box3D b{{mn[0], mn[1], mn[2]}, {mx[0], mx[1], mx[2]}};
  if (!b.valid()) throw ValidationError("scene spec: box min corner exceeds max corner");
  return b;
}

std::string frame_name(std::size_t i) {
  std::ostringstream os;
  os << std::setw(6) << std::setfill('0') << i;
  return os.str();
}

void validate_spec(const SceneSpec& spec) {
  if (spec.objects.empty()) throw Error("synthetic scene: no objects");
  if (spec.trajectory.empty()) throw Error("synthetic scene: empty camera trajectory");
  spec.intrinsics.validate("synthetic scene: intrinsics");
  if (!(spec.depth_scale > 0.0)) throw Error("synthetic scene: depth_scale must be positive");
  if (!(spec.gt_spacing > 0.0)) throw Error("synthetic scene: gt_spacing must be positive");
  for (std::size_t i = 0; i < spec.trajectory.size(); ++i)
    spec.trajectory[i].validate("synthetic scene: pose " + std::to_string(i));
  for (const auto& o : spec.objects) {
    if (o.label.empty()) throw Error("synthetic scene: object without label");
    if (!o.box.valid()) throw Error("synthetic scene: object '" + o.label + "' has min > max");
  }
}

}  // namespace

// --- perturbation config -------------------------------------------------

PerturbationConfig PerturbationConfig::parse(const std::string& text) {
  PerturbationConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    const auto strip = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    if (strip(line).empty()) continue;
    if (eq == std::string::npos) throw LoadError("perturbation config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    try {
      if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "box_jitter_px") cfg.box_jitter_px = std::stoi(value);
      else if (key == "mask_erode_px") cfg.mask_erode_px = std::stoi(value);
      else if (key == "drop_prob") cfg.drop_prob = std::stod(value);
      else if (key == "score_sigma") cfg.score_sigma = std::stod(value);
      else throw LoadError("perturbation config: unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw LoadError("perturbation config: bad value '" + value + "' for " + key);
    }
  }
  cfg.validate();
  return cfg;
}

PerturbationConfig PerturbationConfig::load(const io::fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(path.string() + ": file not found");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string PerturbationConfig::to_text() const {
  std::ostringstream os;
  os << std::setprecision(17) << "seed = " << seed << "\nbox_jitter_px = " << box_jitter_px
     << "\nmask_erode_px = " << mask_erode_px << "\ndrop_prob = " << drop_prob << "\nscore_sigma = " << score_sigma
     << "\n";
  return os.str();
}

void PerturbationConfig::validate() const {
  if (box_jitter_px < 0) throw ValidationError("perturbation: box_jitter_px must be >= 0");
  if (!(drop_prob >= 0.0 && drop_prob <= 1.0)) throw ValidationError("perturbation: drop_prob must lie in [0, 1]");
  if (!(score_sigma >= 0.0)) throw ValidationError("perturbation: score_sigma must be >= 0");
}

// --- geometry -------------------------------------------------------------

CameraPose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  const Eigen::Vector3d right_raw = forward.cross(up);
  if (right_raw.norm() < 1e-9) throw std::invalid_argument("look_at: view direction parallel to up");
  const Eigen::Vector3d right = right_raw.normalized();
  const Eigen::Vector3d down = forward.cross(right);
  CameraPose pose;
  pose.rotation.col(0) = right;
  pose.rotation.col(1) = down;
  pose.rotation.col(2) = forward;
  pose.translation = eye;
  return pose;
}

std::vector<CameraPose> orbit_trajectory(const Eigen::Vector3d& center, double radius,
                                         std::span<const double> elevations_deg, int count, double azimuth0_deg) {
  if (count <= 0) throw std::invalid_argument("orbit_trajectory: count must be positive");
  if (elevations_deg.empty()) throw std::invalid_argument("orbit_trajectory: no elevations");
  constexpr double deg = std::numbers::pi / 180.0;
  std::vector<CameraPose> poses;
  for (int i = 0; i < count; ++i) {
    const double az = (azimuth0_deg + 360.0 * i / count) * deg;
    const double el = elevations_deg[static_cast<std::size_t>(i) % elevations_deg.size()] * deg;
    const Eigen::Vector3d eye =
        center + radius * Eigen::Vector3d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    poses.push_back(look_at(eye, center));
  }
  return poses;
}

std::optional<double> ray_box_intersection(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Box3D& box) {
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < box.min_corner[a] || o[a] > box.max_corner[a]) return std::nullopt;
      continue;
    }
    double t1 = (box.min_corner[a] - o[a]) / d[a];
    double t2 = (box.max_corner[a] - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return std::nullopt;
  }
  if (tmin <= 1e-12) return std::nullopt;  // origin inside or box behind
  return tmin;
}

DepthImage render_depth(const SceneSpec& spec, const CameraPose& pose) {
  const auto& k = spec.intrinsics;
  DepthImage depth(k.width, k.height, 0.0);
  const double max_depth = 65535.0 * spec.depth_scale;
#pragma omp parallel for schedule(static)
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const Eigen::Vector3d dir = pose.rotation * Eigen::Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      double best = std::numeric_limits<double>::infinity();
      const auto consider = [&](const Box3D& b) {
        if (auto t = ray_box_intersection(pose.translation, dir, b)) best = std::min(best, *t);
      };
      for (const auto& o : spec.objects) consider(o.box);
      for (const auto& b : spec.background) consider(b);
      // camera-frame dir has z = 1, so the ray parameter is the depth
      if (std::isfinite(best)) {
        const double q = std::round(best / spec.depth_scale) * spec.depth_scale;
        depth(u, v) = q <= max_depth ? q : 0.0;
      }
    }
  }
  return depth;
}

std::vector<Eigen::Vector3d> sample_box_surface(const Box3D& box, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("sample_box_surface: spacing must be positive");
  const Eigen::Vector3d e = box.extent();
  std::vector<Eigen::Vector3d> pts;
  for (int axis = 0; axis < 3; ++axis) {
    const int a = (axis + 1) % 3, b = (axis + 2) % 3;
    const int na = std::max(1, static_cast<int>(std::ceil(e[a] / spacing - 1e-9)));
    const int nb = std::max(1, static_cast<int>(std::ceil(e[b] / spacing - 1e-9)));
    for (double fixed : {box.min_corner[axis], box.max_corner[axis]}) {
      for (int i = 0; i <= na; ++i) {
        for (int j = 0; j <= nb; ++j) {
          Eigen::Vector3d p;
          p[axis] = fixed;
          p[a] = box.min_corner[a] + e[a] * i / na;
          p[b] = box.min_corner[b] + e[b] * j / nb;
          pts.push_back(p);
        }
      }
      if (e[axis] == 0.0) break;
    }
  }
  return pts;
}

std::vector<GroundTruthInstance> sample_ground_truth(const SceneSpec& spec) {
  std::vector<GroundTruthInstance> gt;
  for (const auto& o : spec.objects) gt.push_back({o.label, sample_box_surface(o.box, spec.gt_spacing)});
  return gt;
}

// --- oracle detections ---------------------------------------------------

std::vector<RenderedInstance> render_gt_detections(const DepthFrame& frame, std::span<const GroundTruthInstance> gt,
                                                   const PerturbationConfig& noise, const RenderConfig& render) {
  noise.validate();
  std::vector<RenderedInstance> out;
  const int w = frame.intrinsics.width, h = frame.intrinsics.height;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    // Fixed draw order per (seed, frame, instance) couples runs that differ only in noise levels.
    auto rng = stream_for(noise.seed, frame.frame_id, i);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double drop_draw = unit(rng);
    double jitter_draw[4];
    for (double& j : jitter_draw) j = unit(rng);
    const double score_draw = normal(rng);

    Bitmap mask = visible_pixels(frame, gt[i], render);
    if (popcount(mask) == 0) continue;
    if (drop_draw < noise.drop_prob) continue;

    for (int s = 0; s < noise.mask_erode_px; ++s) mask = mask::erode(mask);
    for (int s = 0; s < -noise.mask_erode_px; ++s) mask = dilate(mask);

    auto box = tight_box(mask);
    if (!box) continue;
    if (noise.box_jitter_px > 0) {
      const int j = noise.box_jitter_px;
      const auto offset = [j](double draw) {
        return static_cast<double>(std::min(j, static_cast<int>(std::floor(draw * (2 * j + 1)))) - j);
      };
      Detection2D jit = *box;
      jit.x1 += offset(jitter_draw[0]);
      jit.y1 += offset(jitter_draw[1]);
      jit.x2 += offset(jitter_draw[2]);
      jit.y2 += offset(jitter_draw[3]);
      jit = jit.clamped(w, h);
      if (jit.x1 < jit.x2) {
        box->x1 = jit.x1;
        box->x2 = jit.x2;
      }
      if (jit.y1 < jit.y2) {
        box->y1 = jit.y1;
        box->y2 = jit.y2;
      }
      // A box-prompted mask never leaves its box.
      for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u)
          if (mask(u, v) && !box->contains_pixel(u, v)) mask(u, v) = 0;
      if (popcount(mask) == 0) continue;
    }
    box->label = gt[i].label;
    box->score = std::clamp(1.0 - std::abs(noise.score_sigma * score_draw), 0.0, 1.0);
    out.push_back({InstanceMask{std::move(mask), *box}, i});
  }
  return out;
}

io::Scene make_synthetic_scene(const SceneSpec& spec, const PerturbationConfig& noise) {
  validate_spec(spec);
  noise.validate();
  io::Scene scene;
  scene.depth_scale = spec.depth_scale;
  io::GroundTruth gt;
  gt.instances = sample_ground_truth(spec);
  for (const auto& o : spec.objects)
    if (std::find(gt.vocabulary.begin(), gt.vocabulary.end(), o.label) == gt.vocabulary.end())
      gt.vocabulary.push_back(o.label);
  for (const auto& l : spec.vocabulary)
    if (std::find(gt.vocabulary.begin(), gt.vocabulary.end(), l) == gt.vocabulary.end()) gt.vocabulary.push_back(l);

  const RenderConfig render{spec.gt_spacing, spec.depth_scale};
  scene.frames.resize(spec.trajectory.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(spec.trajectory.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    auto& fd = scene.frames[static_cast<std::size_t>(i)];
    fd.frame.frame_id = frame_name(static_cast<std::size_t>(i));
    fd.frame.intrinsics = spec.intrinsics;
    fd.frame.pose = spec.trajectory[static_cast<std::size_t>(i)];
    fd.frame.depth = render_depth(spec, fd.frame.pose);
    for (auto& r : render_gt_detections(fd.frame, gt.instances, PerturbationConfig{}, render))
      fd.gt_instances.push_back(std::move(r.mask));
    for (auto& r : render_gt_detections(fd.frame, gt.instances, noise, render))
      fd.instances.push_back(std::move(r.mask));
  }
  scene.ground_truth = std::move(gt);
  return scene;
}

void write_synthetic_scene(const SceneSpec& spec, const PerturbationConfig& noise, const io::fs::path& dir) {
  io::write_scene(make_synthetic_scene(spec, noise), dir);
}

SceneSpec load_scene_spec(const io::fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(path.string() + ": file not found");
  SceneSpec spec;
  try {
    const json doc = json::parse(in);
    const auto& k = doc.at("intrinsics");
    spec.intrinsics.fx = k.at("fx").get<double>();
    spec.intrinsics.fy = k.at("fy").get<double>();
    spec.intrinsics.cx = k.at("cx").get<double>();
    spec.intrinsics.cy = k.at("cy").get<double>();
    spec.intrinsics.width = k.at("width").get<int>();
    spec.intrinsics.height = k.at("height").get<int>();
    spec.depth_scale = doc.value("depth_scale", io::kDefaultDepthScale);
    spec.gt_spacing = doc.value("gt_spacing", 0.01);
    spec.vocabulary = doc.value("vocabulary", std::vector<std::string>{});
    for (const auto& o : doc.at("objects")) spec.objects.push_back({o.at("label").get<std::string>(), parse_box(o)});
    if (doc.contains("background"))
      for (const auto& b : doc["background"]) spec.background.push_back(parse_box(b));
    const auto& traj = doc.at("trajectory");
    if (traj.is_object() && traj.contains("orbit")) {
      const auto& o = traj["orbit"];
      const auto c = o.at("center").get<std::vector<double>>();
      if (c.size() != 3) throw LoadError(path.string() + ": orbit center needs 3 values");
      const auto elev = o.value("elevations_deg", std::vector<double>{30.0});
      spec.trajectory = orbit_trajectory({c[0], c[1], c[2]}, o.at("radius").get<double>(), elev,
                                         o.at("count").get<int>(), o.value("azimuth0_deg", 0.0));
    } else if (traj.is_array()) {
      for (const auto& m : traj) {
        const auto v = m.get<std::vector<double>>();
        if (v.size() != 16) throw LoadError(path.string() + ": trajectory poses need 16 values");
        Eigen::Matrix4d mat;
        for (int i = 0; i < 16; ++i) mat(i / 4, i % 4) = v[static_cast<std::size_t>(i)];
        spec.trajectory.push_back(CameraPose::from_matrix(mat));
      }
    } else {
      throw LoadError(path.string() + ": trajectory must be an orbit object or a list of 4x4 matrices");
    }
  } catch (const json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  validate_spec(spec);
  return spec;
}

namespace presets {

namespace {
CameraIntrinsics vga() { return {525.0, 525.0, 319.5, 239.5, 640, 480}; }
}  // namespace

SceneSpec three_boxes(int views) {
  SceneSpec spec;
  spec.intrinsics = vga();
  // Faces sit mid-voxel on the 2 cm evaluation grid.
  spec.objects = {
      {"chair", {{-0.91, -0.51, 0.01}, {-0.39, -0.09, 0.61}}},
      {"table", {{0.29, -0.71, 0.11}, {1.01, 0.01, 0.53}}},
      {"lamp", {{-0.21, 0.49, 0.21}, {0.09, 0.79, 1.31}}},
  };
  const double elevations[] = {35.0, -30.0};
  spec.trajectory = orbit_trajectory({0.0, 0.0, 0.5}, 3.2, elevations, views, 9.0);
  return spec;
}

SceneSpec two_cubes() {
  SceneSpec spec;
  spec.intrinsics = {300.0, 300.0, 159.5, 119.5, 320, 240};
  spec.objects = {
      {"cube_a", {{-0.95, -0.25, 2.75}, {-0.45, 0.25, 3.25}}},
      {"cube_b", {{0.45, -0.25, 2.75}, {0.95, 0.25, 3.25}}},
  };
  spec.trajectory = {CameraPose::identity()};
  return spec;
}

SceneSpec bench_scene(int views) {
  SceneSpec spec;
  spec.intrinsics = vga();
  spec.objects = {
      {"chair", {{-1.01, -0.61, 0.01}, {-0.41, -0.01, 0.91}}},
      {"table", {{0.19, -0.81, 0.01}, {1.19, 0.19, 0.75}}},
      {"lamp", {{-0.31, 0.39, 0.01}, {0.01, 0.71, 1.51}}},
      {"sofa", {{-1.21, 0.49, 0.01}, {-0.51, 1.49, 0.61}}},
      {"tv", {{0.49, 0.59, 0.61}, {1.29, 0.71, 1.11}}},
  };
  // floor slab gives the view a full background
  spec.background = {{{-6.0, -6.0, -0.2}, {6.0, 6.0, 0.0}}};
  const double elevations[] = {30.0, 40.0};
  spec.trajectory = orbit_trajectory({0.0, 0.0, 0.4}, 3.0, elevations, views, 15.0);
  return spec;
}

}  // namespace presets

}  // namespace opennav::synth
