#include "core/world.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "core/error.hpp"

namespace skyforge {

namespace {

constexpr int kSceneVersion = 1;

Eigen::Vector3d vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) fail(ErrorCode::parse, "expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json vec3_to_json(const Eigen::Vector3d& v) {
  return nlohmann::json::array({v.x(), v.y(), v.z()});
}

}  // namespace

bool in_goal_region(const Eigen::Vector3d& p, const GoalRegion& g) {
  if ((p - g.center).norm() > g.radius) return false;
  if (g.approach && !g.approach->contains(p)) return false;
  return true;
}

KdTree build_spatial_index(const std::vector<ScenePoint>& points) {
  if (points.empty()) fail(ErrorCode::invalid_argument, "cannot build spatial index over an empty point list");
  std::vector<Eigen::Vector3d> positions;
  positions.reserve(points.size());
  for (const auto& pt : points) positions.push_back(pt.position);
  return KdTree(std::move(positions));
}

SceneWorld::SceneWorld(std::vector<ScenePoint> points, std::vector<SemanticObject> objects,
                       Aabb bounds, double bubble_radius, double goal_region_radius,
                       std::string name)
    : name_(std::move(name)),
      points_(std::move(points)),
      objects_(std::move(objects)),
      bounds_(bounds),
      bubble_radius_(bubble_radius),
      goal_region_radius_(goal_region_radius) {
  if (!(bounds_.extent().array() > 0.0).all())
    fail(ErrorCode::invalid_argument, "scene bounds must have strictly positive extent on every axis");
  if (!(bubble_radius_ > 0.0)) fail(ErrorCode::invalid_argument, "bubble_radius must be > 0");
  if (!(goal_region_radius_ > 0.0)) fail(ErrorCode::invalid_argument, "goal_region_radius must be > 0");
  for (const auto& pt : points_) {
    if (!pt.position.allFinite()) fail(ErrorCode::invalid_argument, "scene point with non-finite position");
    if (pt.object_id) {
      bool known = false;
      for (const auto& obj : objects_) known = known || obj.object_id == *pt.object_id;
      if (!known)
        fail(ErrorCode::invalid_argument,
             "point references unknown object_id " + std::to_string(*pt.object_id));
    }
  }
  for (const auto& obj : objects_) {
    if (obj.embedding.size() == 0 || std::abs(obj.embedding.norm() - 1.0) > 1e-6)
      fail(ErrorCode::invalid_argument, "object '" + obj.name + "' embedding is not unit norm");
    if (!bounds_.contains(obj.centroid))
      fail(ErrorCode::invalid_argument, "object '" + obj.name + "' centroid lies outside scene bounds");
  }
  if (!points_.empty()) index_ = build_spatial_index(points_);
}

const SemanticObject* SceneWorld::find_object(const std::string& name) const {
  for (const auto& obj : objects_) {
    if (obj.name == name) return &obj;
  }
  return nullptr;
}

const SemanticObject& SceneWorld::object_by_id(int object_id) const {
  for (const auto& obj : objects_) {
    if (obj.object_id == object_id) return obj;
  }
  fail(ErrorCode::unknown_object, "no object with id " + std::to_string(object_id));
}

std::vector<std::string> SceneWorld::object_names() const {
  std::vector<std::string> names;
  names.reserve(objects_.size());
  for (const auto& obj : objects_) names.push_back(obj.name);
  return names;
}

double SceneWorld::min_obstacle_distance(const Eigen::Vector3d& p) const {
  return index_.min_distance(p);
}

bool SceneWorld::point_free(const Eigen::Vector3d& p) const {
  return bounds_.contains(p) && min_obstacle_distance(p) > bubble_radius_;
}

bool SceneWorld::segment_collision_free(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                        double step) const {
  if (!(step > 0.0)) fail(ErrorCode::invalid_argument, "collision step must be > 0");
  // Canonicalize endpoint order so the result is symmetric in (a, b).
  const Eigen::Vector3d* lo = &a;
  const Eigen::Vector3d* hi = &b;
  if (std::lexicographical_compare(hi->data(), hi->data() + 3, lo->data(), lo->data() + 3))
    std::swap(lo, hi);
  double length = (*hi - *lo).norm();
  int n = std::max(1, static_cast<int>(std::ceil(length / step)));
  for (int k = 0; k <= n; ++k) {
    Eigen::Vector3d s = *lo + (*hi - *lo) * (static_cast<double>(k) / n);
    if (!point_free(s)) return false;
  }
  return true;
}

GoalRegion SceneWorld::goal_region(const SemanticObject& object, bool with_approach_bias) const {
  GoalRegion g;
  g.center = object.centroid;
  g.radius = goal_region_radius_;
  if (with_approach_bias) {
    Eigen::Vector3d to_center = bounds_.center() - object.centroid;
    if (to_center.norm() > 1e-9) {
      g.approach = HalfSpace{object.centroid, to_center.normalized()};
    }
  }
  return g;
}

SceneWorld SceneWorld::from_json(const nlohmann::json& j) {
  if (!j.contains("scene_version") || j["scene_version"].get<int>() != kSceneVersion)
    fail(ErrorCode::parse, "unsupported or missing scene_version (expected 1)");
  Aabb bounds;
  bounds.min = vec3_from_json(j.at("bounds").at("min"));
  bounds.max = vec3_from_json(j.at("bounds").at("max"));

  std::vector<ScenePoint> points;
  for (const auto& row : j.at("points")) {
    if (!row.is_array() || row.size() != 4) fail(ErrorCode::parse, "point rows must be [x,y,z,object_id|null]");
    ScenePoint pt;
    pt.position = {row[0].get<double>(), row[1].get<double>(), row[2].get<double>()};
    if (!row[3].is_null()) pt.object_id = row[3].get<int>();
    points.push_back(pt);
  }

  std::vector<SemanticObject> objects;
  for (const auto& jo : j.at("objects")) {
    SemanticObject obj;
    obj.object_id = jo.at("id").get<int>();
    obj.name = jo.at("name").get<std::string>();
    obj.centroid = vec3_from_json(jo.at("centroid"));
    const auto& je = jo.at("embedding");
    obj.embedding.resize(static_cast<Eigen::Index>(je.size()));
    for (std::size_t i = 0; i < je.size(); ++i) obj.embedding[static_cast<Eigen::Index>(i)] = je[i].get<double>();
    objects.push_back(std::move(obj));
  }

  return SceneWorld(std::move(points), std::move(objects), bounds,
                    j.value("bubble_radius", 0.25), j.value("goal_region_radius", 2.0),
                    j.value("name", std::string("scene")));
}

nlohmann::json SceneWorld::to_json() const {
  nlohmann::json j;
  j["scene_version"] = kSceneVersion;
  j["name"] = name_;
  j["bounds"] = {{"min", vec3_to_json(bounds_.min)}, {"max", vec3_to_json(bounds_.max)}};
  j["bubble_radius"] = bubble_radius_;
  j["goal_region_radius"] = goal_region_radius_;
  auto points = nlohmann::json::array();
  for (const auto& pt : points_) {
    nlohmann::json row = {pt.position.x(), pt.position.y(), pt.position.z(), nullptr};
    if (pt.object_id) row[3] = *pt.object_id;
    points.push_back(std::move(row));
  }
  j["points"] = std::move(points);
  auto objects = nlohmann::json::array();
  for (const auto& obj : objects_) {
    nlohmann::json jo;
    jo["id"] = obj.object_id;
    jo["name"] = obj.name;
    jo["centroid"] = vec3_to_json(obj.centroid);
    auto je = nlohmann::json::array();
    for (Eigen::Index i = 0; i < obj.embedding.size(); ++i) je.push_back(obj.embedding[i]);
    jo["embedding"] = std::move(je);
    objects.push_back(std::move(jo));
  }
  j["objects"] = std::move(objects);
  return j;
}

SceneWorld SceneWorld::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open scene file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, "invalid scene JSON in " + path + ": " + e.what());
  }
  return from_json(j);
}

void SceneWorld::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write scene file: " + path);
  out << to_json().dump(2) << "\n";
}

}  // namespace skyforge
