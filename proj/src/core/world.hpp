#pragma once

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "core/kdtree.hpp"

namespace skyforge {

struct Aabb {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Eigen::Vector3d center() const { return 0.5 * (min + max); }
  Eigen::Vector3d extent() const { return max - min; }
};

struct ScenePoint {
  Eigen::Vector3d position;
  std::optional<int> object_id;  // absent = background clutter
};

struct SemanticObject {
  int object_id = -1;
  std::string name;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  Eigen::VectorXd embedding;  // unit norm
};

struct HalfSpace {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitX();

  bool contains(const Eigen::Vector3d& p) const { return (p - point).dot(normal) >= 0.0; }
};

struct GoalRegion {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 2.0;
  std::optional<HalfSpace> approach;  // biases approach toward the scene center
};

// Boundary is inclusive.
bool in_goal_region(const Eigen::Vector3d& p, const GoalRegion& g);

// Throws Error(invalid_argument) on an empty point list.
KdTree build_spatial_index(const std::vector<ScenePoint>& points);

// Immutable labeled sparse point cloud plus the collision/proximity queries
// everything downstream shares. Safe for concurrent read-only use.
class SceneWorld {
 public:
  SceneWorld(std::vector<ScenePoint> points, std::vector<SemanticObject> objects, Aabb bounds,
             double bubble_radius = 0.25, double goal_region_radius = 2.0,
             std::string name = "scene");

  static SceneWorld from_json(const nlohmann::json& j);
  static SceneWorld load(const std::string& path);
  nlohmann::json to_json() const;
  void save(const std::string& path) const;

  const std::string& name() const { return name_; }
  const Aabb& bounds() const { return bounds_; }
  double bubble_radius() const { return bubble_radius_; }
  double goal_region_radius() const { return goal_region_radius_; }
  const std::vector<ScenePoint>& points() const { return points_; }
  const std::vector<SemanticObject>& objects() const { return objects_; }
  const KdTree& spatial_index() const { return index_; }

  const SemanticObject* find_object(const std::string& name) const;
  const SemanticObject& object_by_id(int object_id) const;
  std::vector<std::string> object_names() const;

  // Distance from p to the nearest scene point; +inf for an empty cloud.
  double min_obstacle_distance(const Eigen::Vector3d& p) const;
  // Inside bounds and clear of every exclusion bubble.
  bool point_free(const Eigen::Vector3d& p) const;
  // True iff every sample along [a,b] at spacing <= step is free. step > 0.
  bool segment_collision_free(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double step) const;
  double default_collision_step() const { return 0.5 * bubble_radius_; }

  GoalRegion goal_region(const SemanticObject& object, bool with_approach_bias) const;

 private:
  std::string name_;
  std::vector<ScenePoint> points_;
  std::vector<SemanticObject> objects_;
  Aabb bounds_;
  double bubble_radius_;
  double goal_region_radius_;
  KdTree index_;
};

}  // namespace skyforge
