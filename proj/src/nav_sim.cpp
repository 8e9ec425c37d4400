#include "opennav/nav_sim.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>

namespace opennav::nav {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

double ray_segment(const Eigen::Vector2d& p, const Eigen::Vector2d& d, const Segment& s) {
  const Eigen::Vector2d e = s.b - s.a;
  const double denom = cross(d, e);
  if (std::abs(denom) < 1e-15) return std::numeric_limits<double>::infinity();
  const Eigen::Vector2d ap = s.a - p;
  const double t = cross(ap, e) / denom;
  const double u = cross(ap, d) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::numeric_limits<double>::infinity();
  return t;
}

double ray_circle(const Eigen::Vector2d& p, const Eigen::Vector2d& d, const Circle& c) {
  const Eigen::Vector2d oc = p - c.center;
  const double b = d.dot(oc);
  const double cc = oc.squaredNorm() - c.radius * c.radius;
  const double disc = b * b - cc;
  if (disc < 0.0) return std::numeric_limits<double>::infinity();
  const double sq = std::sqrt(disc);
  const double t1 = -b - sq;
  if (t1 >= 0.0) return t1;
  const double t2 = -b + sq;
  return t2 >= 0.0 ? t2 : std::numeric_limits<double>::infinity();
}

double point_segment_distance(const Eigen::Vector2d& p, const Segment& s) {
  const Eigen::Vector2d e = s.b - s.a;
  const double len2 = e.squaredNorm();
  const double u = len2 > 0.0 ? std::clamp((p - s.a).dot(e) / len2, 0.0, 1.0) : 0.0;
  return (p - (s.a + u * e)).norm();
}

Eigen::Vector2d vec2(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw LoadError("world file: expected a 2-vector");
  return {v[0], v[1]};
}

std::vector<Segment> room_walls(double w, double h) {
  return {{{0, 0}, {w, 0}}, {{w, 0}, {w, h}}, {{w, h}, {0, h}}, {{0, h}, {0, 0}}};
}

}  // namespace

void RobotState::validate() const {
  if (!(wheel_radius > 0.0)) throw ValidationError("robot: wheel_radius must be positive");
  if (!(wheel_base > 0.0)) throw ValidationError("robot: wheel_base must be positive");
  if (!(tick_per_rev > 0.0)) throw ValidationError("robot: tick_per_rev must be positive");
  if (!(radius >= 0.0)) throw ValidationError("robot: radius must be non-negative");
}

double WorldModel2D::clearance(const Eigen::Vector2d& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : segments) best = std::min(best, point_segment_distance(p, s));
  for (const auto& c : circles) best = std::min(best, (p - c.center).norm() - c.radius);
  return best;
}

void WorldModel2D::validate() const {
  if (!(goal_radius > 0.0)) throw ValidationError("world: goal_radius must be positive");
  for (const auto& c : circles) {
    if (!(c.radius > 0.0)) throw ValidationError("world: circle radius must be positive");
    if ((target - c.center).norm() <= c.radius) throw ValidationError("world: target lies inside a circle obstacle");
  }
  for (const auto& s : segments)
    if (point_segment_distance(target, s) == 0.0) throw ValidationError("world: target lies on a segment obstacle");
}

void ApfConfig::validate() const {
  const bool ok = repulse_gain > 0 && repulse_range > 0 && attract_gain > 0 && v_max > 0 && d_safe > 0 &&
                  omega_gain > 0 && dt > 0;
  if (!ok) throw ValidationError("apf: all parameters must be positive");
}

std::vector<double> ray_bearings(double fov, int n_rays) {
  if (n_rays < 1) throw std::invalid_argument("ray_bearings: n_rays must be >= 1");
  if (n_rays == 1) return {0.0};
  std::vector<double> out(static_cast<std::size_t>(n_rays));
  const bool full = fov >= 2.0 * kPi - 1e-12;
  const double step = full ? 2.0 * kPi / n_rays : fov / (n_rays - 1);
  const double start = full ? -kPi : -0.5 * fov;
  for (int i = 0; i < n_rays; ++i) out[static_cast<std::size_t>(i)] = start + step * i;
  return out;
}

RobotState odometry_update(const RobotState& s, double dticks_left, double dticks_right) {
  const double per_tick = 2.0 * kPi * s.wheel_radius / s.tick_per_rev;
  const double sl = per_tick * dticks_left;
  const double sr = per_tick * dticks_right;
  const double ds = 0.5 * (sl + sr);
  const double dtheta = (sr - sl) / s.wheel_base;
  // chord of the arc: ds * sin(dtheta/2) / (dtheta/2), along the mid heading
  const double half = 0.5 * dtheta;
  const double sinc = std::abs(half) < 1e-6 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
  const double chord = ds * sinc;
  RobotState out = s;
  out.position += chord * Eigen::Vector2d(std::cos(s.heading + half), std::sin(s.heading + half));
  out.heading = wrap_angle(s.heading + dtheta);
  return out;
}

std::pair<double, double> ticks_for_command(const RobotState& s, double v, double omega, double dt) {
  const double ticks_per_m = s.tick_per_rev / (2.0 * kPi * s.wheel_radius);
  const double sl = (v - 0.5 * omega * s.wheel_base) * dt;
  const double sr = (v + 0.5 * omega * s.wheel_base) * dt;
  return {sl * ticks_per_m, sr * ticks_per_m};
}

double Scan::min_range() const {
  return ranges.empty() ? std::numeric_limits<double>::infinity() : *std::min_element(ranges.begin(), ranges.end());
}

Scan rangefinder_scan(const RobotState& state, const WorldModel2D& world, double fov, int n_rays, double max_range) {
  Scan scan;
  scan.bearings = ray_bearings(fov, n_rays);
  scan.ranges.reserve(scan.bearings.size());
  for (double b : scan.bearings) {
    const double a = state.heading + b;
    const Eigen::Vector2d d(std::cos(a), std::sin(a));
    double r = max_range;
    for (const auto& s : world.segments) r = std::min(r, ray_segment(state.position, d, s));
    for (const auto& c : world.circles) r = std::min(r, ray_circle(state.position, d, c));
    scan.ranges.push_back(r);
  }
  return scan;
}

Scan rangefinder_scan(const RobotState& state, const WorldModel2D& world, const RangefinderConfig& cfg) {
  return rangefinder_scan(state, world, cfg.fov, cfg.n_rays, cfg.max_range);
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a <= -kPi ? a + 2.0 * kPi : a;
}

Eigen::Vector2d apf_force(const RobotState& state, const Scan& scan, const WorldModel2D& world, const ApfConfig& cfg) {
  Eigen::Vector2d force = Eigen::Vector2d::Zero();
  const Eigen::Vector2d to_target = world.target - state.position;
  if (to_target.norm() > 0.0) force += cfg.attract_gain * to_target.normalized();
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const double r = scan.ranges[i];
    if (r >= cfg.repulse_range) continue;
    const double a = state.heading + scan.bearings[i];
    const double mag = cfg.repulse_gain * std::max(0.0, 1.0 / std::max(r, 1e-9) - 1.0 / cfg.repulse_range);
    force -= mag * Eigen::Vector2d(std::cos(a), std::sin(a));
  }
  return force;
}

Command apf_step(const RobotState& state, const Scan& scan, const WorldModel2D& world, const ApfConfig& cfg) {
  const Eigen::Vector2d f = apf_force(state, scan, world, cfg);
  const double c = std::cos(state.heading), s = std::sin(state.heading);
  const Eigen::Vector2d local(c * f.x() + s * f.y(), -s * f.x() + c * f.y());
  const double err = wrap_angle(std::atan2(local.y(), local.x()));
  Command cmd;
  cmd.omega = cfg.omega_gain * err;
  const double d_min = scan.min_range();
  cmd.v = std::abs(err) > 0.5 * kPi ? 0.0 : cfg.v_max * std::min(1.0, d_min / cfg.d_safe);
  return cmd;
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::kReached: return "reached";
    case Outcome::kTimeout: return "timeout";
    case Outcome::kCollision: return "collision";
  }
  return "unknown";
}

Trajectory run_navigation(const WorldModel2D& world, const RobotState& start, const ApfConfig& cfg, int max_steps,
                          const RangefinderConfig& scan_cfg) {
  if (max_steps <= 0) throw std::invalid_argument("run_navigation: max_steps must be positive");
  start.validate();
  world.validate();
  cfg.validate();

  Trajectory traj;
  RobotState state = start;
  traj.min_clearance = world.clearance(state.position);
  traj.outcome = Outcome::kTimeout;
  for (int k = 0; k <= max_steps; ++k) {
    if ((world.target - state.position).norm() <= world.goal_radius) {
      traj.outcome = Outcome::kReached;
      break;
    }
    if (k == max_steps) break;
    const Scan scan = rangefinder_scan(state, world, scan_cfg);
    const Command cmd = apf_step(state, scan, world, cfg);
    traj.steps.push_back({k * cfg.dt, state.position.x(), state.position.y(), state.heading, cmd.v, cmd.omega,
                          scan.min_range()});
    const auto [tl, tr] = ticks_for_command(state, cmd.v, cmd.omega, cfg.dt);
    const RobotState next = odometry_update(state, tl, tr);
    traj.path_length += (next.position - state.position).norm();
    state = next;
    const double clearance = world.clearance(state.position);
    traj.min_clearance = std::min(traj.min_clearance, clearance);
    if (clearance < state.radius) {
      traj.outcome = Outcome::kCollision;
      break;
    }
  }
  traj.final_state = state;
  return traj;
}

Eigen::Vector2d ground_target(const Box3D& box) {
  const Eigen::Vector3d c = box.center();
  return {c.x(), c.y()};
}

void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << "t,x,y,theta,v,omega,d_min\n" << std::setprecision(10);
  for (const auto& s : trajectory.steps)
    out << s.t << ',' << s.x << ',' << s.y << ',' << s.theta << ',' << s.v << ',' << s.omega << ',' << s.d_min << '\n';
  if (!out) throw Error(path.string() + ": write failed");
}

NavScenario load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(path.string() + ": file not found");
  NavScenario sc;
  try {
    const json doc = json::parse(in);
    sc.name = doc.value("name", path.stem().string());
    sc.world.target = vec2(doc.at("target"));
    sc.world.goal_radius = doc.value("goal_radius", sc.world.goal_radius);
    for (const auto& o : doc.value("obstacles", json::array())) {
      const std::string type = o.at("type").get<std::string>();
      if (type == "segment") {
        sc.world.segments.push_back({vec2(o.at("a")), vec2(o.at("b"))});
      } else if (type == "circle") {
        sc.world.circles.push_back({vec2(o.at("center")), o.at("radius").get<double>()});
      } else {
        throw LoadError(path.string() + ": unknown obstacle type '" + type + "'");
      }
    }
    if (doc.contains("start")) {
      const auto& s = doc["start"];
      sc.start.position = vec2(s.at("position"));
      sc.start.heading = s.value("heading", 0.0);
    }
  } catch (const json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  sc.world.validate();
  return sc;
}

void write_world(const NavScenario& sc, const std::filesystem::path& path) {
  json doc;
  doc["name"] = sc.name;
  doc["target"] = {sc.world.target.x(), sc.world.target.y()};
  doc["goal_radius"] = sc.world.goal_radius;
  doc["obstacles"] = json::array();
  for (const auto& s : sc.world.segments)
    doc["obstacles"].push_back({{"type", "segment"}, {"a", {s.a.x(), s.a.y()}}, {"b", {s.b.x(), s.b.y()}}});
  for (const auto& c : sc.world.circles)
    doc["obstacles"].push_back(
        {{"type", "circle"}, {"center", {c.center.x(), c.center.y()}}, {"radius", c.radius}});
  doc["start"] = {{"position", {sc.start.position.x(), sc.start.position.y()}}, {"heading", sc.start.heading}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << doc.dump(2) << '\n';
}

namespace scenarios {

NavScenario open_approach() {
  NavScenario sc;
  sc.name = "open_approach";
  sc.world.segments = room_walls(8.0, 6.0);
  // bookshelf along the left of the path
  sc.world.segments.push_back({{2.5, 4.4}, {4.5, 4.4}});
  sc.world.segments.push_back({{2.5, 4.4}, {2.5, 4.8}});
  sc.world.segments.push_back({{2.5, 4.8}, {4.5, 4.8}});
  sc.world.segments.push_back({{4.5, 4.4}, {4.5, 4.8}});
  sc.world.target = {6.8, 3.6};
  sc.start.position = {1.0, 2.5};
  sc.start.heading = 0.0;
  return sc;
}

NavScenario central_column() {
  NavScenario sc;
  sc.name = "central_column";
  sc.world.segments = room_walls(8.0, 6.0);
  sc.world.circles.push_back({{4.0, 3.2}, 0.3});
  sc.world.target = {7.0, 3.0};
  sc.start.position = {1.0, 3.0};
  sc.start.heading = 0.0;
  return sc;
}

NavScenario offset_target() {
  NavScenario sc;
  sc.name = "offset_target";
  sc.world.segments = room_walls(8.0, 6.0);
  sc.world.circles.push_back({{4.0, 3.2}, 0.3});
  sc.world.target = {7.0, 1.3};
  sc.start.position = {1.0, 3.0};
  sc.start.heading = 0.0;
  return sc;
}

std::vector<NavScenario> all() { return {open_approach(), central_column(), offset_target()}; }

NavScenario random_world(std::uint64_t seed, const ApfConfig& cfg, const RobotState& robot) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const double passage = 2.0 * (robot.radius + cfg.d_safe);
  const double keep_out = robot.radius + cfg.d_safe;
  const double w = uniform(8.0, 12.0);
  const double h = uniform(6.0, 8.0);

  NavScenario sc;
  sc.name = "random_" + std::to_string(seed);
  sc.world.segments = room_walls(w, h);
  sc.start = robot;
  sc.start.position = {uniform(keep_out, 1.5 + keep_out), uniform(keep_out, h - keep_out)};
  sc.start.heading = uniform(-kPi, kPi);
  sc.world.target = {uniform(w - 1.5 - keep_out, w - keep_out), uniform(keep_out, h - keep_out)};

  const int n_cols = 1 + static_cast<int>(unit(rng) * 3.0);
  for (int attempt = 0; attempt < 500 && static_cast<int>(sc.world.circles.size()) < n_cols; ++attempt) {
    Circle c{{uniform(0.0, w), uniform(0.0, h)}, uniform(0.15, 0.4)};
    // passage to each wall and between columns
    const bool walls_ok = c.center.x() - c.radius >= passage && w - c.center.x() - c.radius >= passage &&
                          c.center.y() - c.radius >= passage && h - c.center.y() - c.radius >= passage;
    if (!walls_ok) continue;
    bool ok = true;
    for (const auto& o : sc.world.circles)
      if ((o.center - c.center).norm() - o.radius - c.radius < passage) ok = false;
    if ((sc.start.position - c.center).norm() - c.radius < keep_out) ok = false;
    if ((sc.world.target - c.center).norm() - c.radius < keep_out) ok = false;
    if (ok) sc.world.circles.push_back(c);
  }
  return sc;
}

}  // namespace scenarios

}  // namespace opennav::nav
