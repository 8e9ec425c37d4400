#pragma once

#include "opennav/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace opennav::nav {

/// Differential-drive robot pose plus its wheel geometry.
struct RobotState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double heading = 0.0;        // radians, world frame
  double wheel_radius = 0.17;  // m
  double wheel_base = 0.56;    // m, track width
  double tick_per_rev = 4096;  // encoder ticks per wheel revolution
  double radius = 0.35;        // body radius used for collision, m

  void validate() const;
};

struct Segment {
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
};

struct Circle {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
};

struct WorldModel2D {
  std::vector<Segment> segments;
  std::vector<Circle> circles;
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
  double goal_radius = 0.4;

  /// Distance from `p` to the nearest obstacle surface (+inf in an empty world).
  double clearance(const Eigen::Vector2d& p) const;
  /// Throws ValidationError when the target is inside an obstacle.
  void validate() const;
};

/// Free parameters of the potential-field controller.
struct ApfConfig {
  double repulse_gain = 0.25;
  double repulse_range = 1.5;  // m
  double attract_gain = 1.0;
  double v_max = 0.5;          // m/s
  double d_safe = 0.8;         // m
  double omega_gain = 1.5;     // 1/s
  double dt = 0.05;            // s

  void validate() const;
};

struct RangefinderConfig {
  double fov = 1.5 * std::numbers::pi;  // radians, centered on the heading
  int n_rays = 109;
  double max_range = 5.0;  // m
};

/// Ray bearings relative to the heading. A full-circle fov does not repeat the seam ray.
std::vector<double> ray_bearings(double fov, int n_rays);

/// Exact arc-model odometry from fractional tick deltas.
RobotState odometry_update(const RobotState& state, double dticks_left, double dticks_right);

/// Wheel tick deltas that realize (v, omega) over dt.
std::pair<double, double> ticks_for_command(const RobotState& state, double v, double omega, double dt);

struct Scan {
  std::vector<double> bearings;  // relative to heading
  std::vector<double> ranges;    // meters, max_range when nothing is hit

  double min_range() const;
};

/// Nearest analytic ray hit per bearing.
Scan rangefinder_scan(const RobotState& state, const WorldModel2D& world, double fov, int n_rays, double max_range);
Scan rangefinder_scan(const RobotState& state, const WorldModel2D& world, const RangefinderConfig& cfg = {});

struct Command {
  double v = 0.0;      // m/s
  double omega = 0.0;  // rad/s
};

/// Attractive unit pull toward the target plus inverse-distance repulsion
/// along each close ray steers the heading; linear speed scales with the
/// closest range and is zero while the force points more than 90 degrees off.
Command apf_step(const RobotState& state, const Scan& scan, const WorldModel2D& world, const ApfConfig& cfg);

/// Force vector in world frame, exposed for inspection.
Eigen::Vector2d apf_force(const RobotState& state, const Scan& scan, const WorldModel2D& world, const ApfConfig& cfg);

double wrap_angle(double a);

enum class Outcome { kReached, kTimeout, kCollision };
const char* to_string(Outcome outcome);

struct TrajectoryStep {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v = 0.0;
  double omega = 0.0;
  double d_min = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  Outcome outcome = Outcome::kTimeout;
  RobotState final_state;
  double min_clearance = 0.0;
  double path_length = 0.0;
};

Trajectory run_navigation(const WorldModel2D& world, const RobotState& start, const ApfConfig& cfg, int max_steps,
                          const RangefinderConfig& scan_cfg = {});

/// Ground-plane (x, y) of a box centroid; worlds are z-up.
Eigen::Vector2d ground_target(const Box3D& box);

/// CSV with header t,x,y,theta,v,omega,d_min.
void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path);

struct NavScenario {
  std::string name;
  WorldModel2D world;
  RobotState start;
};

/// JSON world file: target, goal_radius, obstacles (segment / circle), optional start.
NavScenario load_world(const std::filesystem::path& path);
void write_world(const NavScenario& scenario, const std::filesystem::path& path);

namespace scenarios {
/// 8 m x 6 m room. Pass a shelf on the left to reach a target ahead.
NavScenario open_approach();
/// Column in the middle of the room between start and target.
NavScenario central_column();
/// Column in the middle, target in the right-hand part of the room.
NavScenario offset_target();
std::vector<NavScenario> all();

/// Random walled room with 1-3 columns. Every passage between obstacles is at
/// least 2 * (robot radius + d_safe) wide, and start and target keep
/// robot radius + d_safe from every obstacle.
NavScenario random_world(std::uint64_t seed, const ApfConfig& cfg = {}, const RobotState& robot = {});
}  // namespace scenarios

}  // namespace opennav::nav
