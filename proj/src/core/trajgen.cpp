#include "core/trajgen.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace skyforge {

CubicSpline CubicSpline::natural(std::vector<double> knots, std::vector<Eigen::Vector3d> points) {
  if (knots.size() != points.size() || knots.size() < 2)
    fail(ErrorCode::invalid_argument, "spline needs >= 2 knot/point pairs of equal length");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) fail(ErrorCode::invalid_argument, "spline knots must be strictly increasing");
  }
  CubicSpline s;
  s.knots_ = std::move(knots);
  s.points_ = std::move(points);
  std::size_t n = s.knots_.size() - 1;  // segment count
  s.m_.assign(n + 1, Eigen::Vector3d::Zero());
  if (n >= 2) {
    // Thomas solve of the natural-spline tridiagonal system (M_0 = M_n = 0).
    std::vector<double> diag(n - 1), upper(n - 1);
    std::vector<Eigen::Vector3d> rhs(n - 1);
    auto h = [&](std::size_t i) { return s.knots_[i + 1] - s.knots_[i]; };
    for (std::size_t i = 1; i < n; ++i) {
      diag[i - 1] = (h(i - 1) + h(i)) / 3.0;
      upper[i - 1] = h(i) / 6.0;
      rhs[i - 1] = (s.points_[i + 1] - s.points_[i]) / h(i) - (s.points_[i] - s.points_[i - 1]) / h(i - 1);
    }
    for (std::size_t i = 1; i < n - 1; ++i) {
      double w = (h(i) / 6.0) / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 1; i-- > 0;) {
      Eigen::Vector3d acc = rhs[i];
      if (i + 1 < n - 1) acc -= upper[i] * s.m_[i + 2];
      s.m_[i + 1] = acc / diag[i];
    }
  }
  return s;
}

int CubicSpline::segment_of(double t) const {
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  int seg = static_cast<int>(it - knots_.begin()) - 1;
  return std::clamp(seg, 0, static_cast<int>(knots_.size()) - 2);
}

Eigen::Vector3d CubicSpline::position(double t) const {
  t = std::clamp(t, knots_.front(), knots_.back());
  int i = segment_of(t);
  double h = knots_[i + 1] - knots_[i];
  double a = knots_[i + 1] - t;
  double b = t - knots_[i];
  return m_[i] * (a * a * a) / (6.0 * h) + m_[i + 1] * (b * b * b) / (6.0 * h) +
         (points_[i] / h - m_[i] * h / 6.0) * a + (points_[i + 1] / h - m_[i + 1] * h / 6.0) * b;
}

Eigen::Vector3d CubicSpline::velocity(double t) const {
  t = std::clamp(t, knots_.front(), knots_.back());
  int i = segment_of(t);
  double h = knots_[i + 1] - knots_[i];
  double a = knots_[i + 1] - t;
  double b = t - knots_[i];
  return -m_[i] * (a * a) / (2.0 * h) + m_[i + 1] * (b * b) / (2.0 * h) +
         (points_[i + 1] - points_[i]) / h - (m_[i + 1] - m_[i]) * h / 6.0;
}

namespace {

std::vector<Eigen::Vector3d> dedup_waypoints(const std::vector<Eigen::Vector3d>& waypoints) {
  std::vector<Eigen::Vector3d> out;
  for (const auto& w : waypoints) {
    if (out.empty() || (w - out.back()).norm() > 1e-12) out.push_back(w);
  }
  return out;
}

ReferenceTrajectory sample_path(const TimedSplinePath& timed, double dt) {
  ReferenceTrajectory traj;
  traj.duration = timed.duration;
  long steps = std::lround(timed.duration / dt);
  traj.samples.reserve(static_cast<std::size_t>(steps) + 1);
  for (long k = 0; k <= steps; ++k) {
    double t = std::min(static_cast<double>(k) * dt, timed.duration);
    traj.samples.push_back({static_cast<double>(k) * dt, timed.spline.position(t),
                            timed.spline.velocity(t), 0.0});
  }
  return traj;
}

double max_speed_dense(const CubicSpline& spline, double sample_dt) {
  const auto& knots = spline.knots();
  double best = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    double h = knots[i + 1] - knots[i];
    int ns = std::max(16, static_cast<int>(std::ceil(h / sample_dt)));
    for (int k = 0; k <= ns; ++k) {
      double t = knots[i] + h * (static_cast<double>(k) / ns);
      best = std::max(best, spline.velocity(t).norm());
    }
  }
  return best;
}

}  // namespace

TimedSplinePath allocate_time(const std::vector<Eigen::Vector3d>& waypoints, double v_max) {
  if (!(v_max > 0.0)) fail(ErrorCode::invalid_argument, "v_max must be > 0");
  std::vector<Eigen::Vector3d> pts = dedup_waypoints(waypoints);
  if (pts.size() < 2) fail(ErrorCode::invalid_argument, "need at least 2 distinct waypoints");

  std::vector<double> knots(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i)
    knots[i] = knots[i - 1] + (pts[i] - pts[i - 1]).norm() / (0.8 * v_max);

  CubicSpline spline = CubicSpline::natural(knots, pts);
  double peak = max_speed_dense(spline, 0.05 / 100.0);
  if (peak > v_max) {
    double scale = peak / v_max * (1.0 + 1e-9);
    for (double& t : knots) t *= scale;
    spline = CubicSpline::natural(knots, pts);
  }
  return {std::move(spline), knots.back()};
}

std::vector<std::vector<Eigen::Vector3d>> extract_leaf_paths(const PlanTree& tree, double min_length) {
  std::vector<std::vector<Eigen::Vector3d>> paths;
  for (int leaf : tree.leaves()) {
    if (leaf == tree.root()) continue;
    if (tree.node(leaf).cost < min_length) continue;
    std::vector<Eigen::Vector3d> waypoints;
    for (int id : tree.path_to_root(leaf)) waypoints.push_back(tree.node(id).position);
    paths.push_back(std::move(waypoints));
  }
  return paths;
}

ReferenceTrajectory smooth_cubic(const std::vector<Eigen::Vector3d>& waypoints, double dt, double v_max) {
  if (!(dt > 0.0)) fail(ErrorCode::invalid_argument, "dt must be > 0");
  return sample_path(allocate_time(waypoints, v_max), dt);
}

double yaw_toward(const Eigen::Vector3d& p, const Eigen::Vector3d& q_o) {
  return std::atan2(q_o.y() - p.y(), q_o.x() - p.x());
}

TrajGenResult generate_references(const PlanTree& tree, const SceneWorld& world,
                                  const SemanticObject& object, const TrajGenConfig& config) {
  TrajGenResult result;
  GoalRegion goal = world.goal_region(object, config.approach_bias);
  double check_step = world.default_collision_step();

  for (const auto& waypoints : extract_leaf_paths(tree, config.min_length)) {
    if (config.max_trajectories >= 0 &&
        static_cast<int>(result.trajectories.size()) >= config.max_trajectories)
      break;
    // Approach bias: the waypoint just before the root must sit in the
    // approach half-space so flights come in from the scene-center side.
    if (goal.approach && waypoints.size() >= 2 &&
        !goal.approach->contains(waypoints[waypoints.size() - 2])) {
      ++result.discarded_approach;
      continue;
    }

    TimedSplinePath timed = allocate_time(waypoints, config.v_max);

    // The spline can cut a corner into a bubble even when the polyline is
    // clear; re-check it densely and drop offenders. Speed <= v_max, so a
    // time step of check_step / v_max bounds the spatial spacing.
    double dt_check = check_step / config.v_max;
    long n_check = std::lround(std::ceil(timed.duration / dt_check));
    bool clear = true;
    for (long k = 0; clear && k <= n_check; ++k) {
      double t = std::min(static_cast<double>(k) * dt_check, timed.duration);
      clear = world.point_free(timed.spline.position(t));
    }
    if (!clear) {
      ++result.discarded_spline_collisions;
      continue;
    }

    ReferenceTrajectory traj = sample_path(timed, config.dt);

    double prev_yaw = 0.0;
    bool have_yaw = false;
    for (auto& s : traj.samples) {
      double horiz = std::hypot(object.centroid.x() - s.p.x(), object.centroid.y() - s.p.y());
      double raw = (horiz > 1e-6) ? yaw_toward(s.p, object.centroid) : (have_yaw ? prev_yaw : 0.0);
      if (have_yaw) {
        // Unwrap onto the branch nearest the previous sample, then rate-limit.
        double delta = std::remainder(raw - prev_yaw, 2.0 * M_PI);
        double max_step = config.yaw_rate_max * config.dt * 0.95;
        delta = std::clamp(delta, -max_step, max_step);
        raw = prev_yaw + delta;
      }
      s.yaw = raw;
      prev_yaw = raw;
      have_yaw = true;
    }

    traj.object_id = object.object_id;
    if (!in_goal_region(traj.samples.back().p, goal)) {
      ++result.discarded_approach;
      continue;
    }
    result.trajectories.push_back(std::move(traj));
  }

  if (result.trajectories.empty())
    fail(ErrorCode::planning, "no feasible trajectory for object '" + object.name + "'");
  return result;
}

}  // namespace skyforge
