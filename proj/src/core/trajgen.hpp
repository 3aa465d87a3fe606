#pragma once

#include <Eigen/Core>
#include <vector>

#include "core/planner.hpp"
#include "core/world.hpp"

namespace skyforge {

struct TrajectorySample {
  double t = 0.0;
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();
  double yaw = 0.0;
};

struct ReferenceTrajectory {
  std::vector<TrajectorySample> samples;  // dt-spaced, t[0] = 0
  double duration = 0.0;
  int object_id = -1;
};

// Natural cubic spline through 3D waypoints on given knot times.
class CubicSpline {
 public:
  static CubicSpline natural(std::vector<double> knots, std::vector<Eigen::Vector3d> points);

  Eigen::Vector3d position(double t) const;
  Eigen::Vector3d velocity(double t) const;
  double duration() const { return knots_.back(); }
  const std::vector<double>& knots() const { return knots_; }

 private:
  int segment_of(double t) const;
  std::vector<double> knots_;
  std::vector<Eigen::Vector3d> points_;
  std::vector<Eigen::Vector3d> m_;  // second derivatives at knots
};

struct TimedSplinePath {
  CubicSpline spline;
  double duration = 0.0;
};

// Chord-length time allocation at 0.8 * v_max cruise, then one global time
// rescale if a dense speed check still exceeds v_max.
TimedSplinePath allocate_time(const std::vector<Eigen::Vector3d>& waypoints, double v_max);

// Reversed root-paths (leaf first, root last) for every leaf whose root-path
// length is at least min_length. Order follows ascending leaf id.
std::vector<std::vector<Eigen::Vector3d>> extract_leaf_paths(const PlanTree& tree, double min_length);

// Spline-smoothed, dt-sampled trajectory; yaw left at zero for the caller.
// Consecutive duplicate waypoints are dropped; fewer than 2 distinct is an error.
ReferenceTrajectory smooth_cubic(const std::vector<Eigen::Vector3d>& waypoints, double dt, double v_max);

// Heading that points the camera normal (body x) at the object.
// Precondition: horizontal distance > 1e-6; callers hold the previous yaw below that.
double yaw_toward(const Eigen::Vector3d& p, const Eigen::Vector3d& q_o);

struct TrajGenConfig {
  double dt = 0.05;
  double v_max = 1.5;
  double min_length = 1.0;
  double yaw_rate_max = 3.0;  // rad/s, clamp after unwrapping
  bool approach_bias = true;
  int max_trajectories = -1;  // < 0: no cap
};

struct TrajGenResult {
  std::vector<ReferenceTrajectory> trajectories;
  int discarded_spline_collisions = 0;
  int discarded_approach = 0;
};

// extract_leaf_paths -> smooth_cubic -> yaw_toward, with a dense collision
// re-check of each spline. Throws Error(planning) when nothing survives.
TrajGenResult generate_references(const PlanTree& tree, const SceneWorld& world,
                                  const SemanticObject& object, const TrajGenConfig& config);

}  // namespace skyforge
