#include "core/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/kdtree.hpp"

namespace skyforge {

PlanTree::PlanTree(const Eigen::Vector3d& root_position) {
  TreeNode root;
  root.position = root_position;
  nodes_.push_back(root);
}

int PlanTree::add_node(const Eigen::Vector3d& position, int parent) {
  int id = size();
  TreeNode n;
  n.position = position;
  n.parent = parent;
  n.cost = nodes_[static_cast<std::size_t>(parent)].cost +
           (position - nodes_[static_cast<std::size_t>(parent)].position).norm();
  nodes_.push_back(n);
  nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  return id;
}

bool PlanTree::is_ancestor(int candidate, int node) const {
  for (int cur = node; cur != -1; cur = nodes_[static_cast<std::size_t>(cur)].parent) {
    if (cur == candidate) return true;
  }
  return false;
}

std::vector<int> PlanTree::path_to_root(int id) const {
  std::vector<int> path;
  for (int cur = id; cur != -1; cur = nodes_[static_cast<std::size_t>(cur)].parent) path.push_back(cur);
  return path;
}

std::vector<int> PlanTree::leaves() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (nodes_[static_cast<std::size_t>(i)].children.empty()) out.push_back(i);
  }
  return out;
}

int PlanTree::max_depth() const {
  int best = 0;
  for (int i = 0; i < size(); ++i)
    best = std::max(best, static_cast<int>(path_to_root(i).size()) - 1);
  return best;
}

bool PlanTree::rewire_node(int v, int v_new) {
  if (v == root() || v == v_new) return false;
  TreeNode& target = nodes_[static_cast<std::size_t>(v)];
  const TreeNode& parent = nodes_[static_cast<std::size_t>(v_new)];
  double candidate = parent.cost + (target.position - parent.position).norm();
  if (!(candidate < target.cost)) return false;  // strict improvement only
  if (is_ancestor(v, v_new)) return false;       // v_new inside v's subtree
  auto& siblings = nodes_[static_cast<std::size_t>(target.parent)].children;
  siblings.erase(std::find(siblings.begin(), siblings.end(), v));
  target.parent = v_new;
  nodes_[static_cast<std::size_t>(v_new)].children.push_back(v);
  refresh_subtree_costs(v);
  return true;
}

void PlanTree::refresh_subtree_costs(int id) {
  std::vector<int> stack{id};
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    TreeNode& n = nodes_[static_cast<std::size_t>(cur)];
    const TreeNode& p = nodes_[static_cast<std::size_t>(n.parent)];
    n.cost = p.cost + (n.position - p.position).norm();
    stack.insert(stack.end(), n.children.begin(), n.children.end());
  }
}

double search_radius(double tree_size, const PlannerConfig& config) {
  double d = static_cast<double>(config.dimension);
  double gamma = config.alpha * std::pow(1.0 + 1.0 / d, 1.0 / d);
  double r = 0.0;
  if (tree_size > 1.0) r = gamma * std::pow(std::log(tree_size) / tree_size, 1.0 / d);
  return std::max(config.eta, r);
}

Eigen::Vector3d steer(const Eigen::Vector3d& v_near, const Eigen::Vector3d& q_rand, double eta) {
  Eigen::Vector3d delta = q_rand - v_near;
  double dist = delta.norm();
  if (dist == 0.0) fail(ErrorCode::invalid_argument, "steer: q_rand coincides with v_near");
  return v_near + std::min(eta, dist) * (delta / dist);
}

Eigen::Vector3d sample_free(const Aabb& bounds, int dimension, double altitude, Rng& rng) {
  double x = rng.uniform(bounds.min.x(), bounds.max.x());
  double y = rng.uniform(bounds.min.y(), bounds.max.y());
  double z = dimension == 2 ? altitude : rng.uniform(bounds.min.z(), bounds.max.z());
  return {x, y, z};
}

namespace {

// Neighbor queries behind one interface so the kd-indexed and naive paths
// produce bit-identical trees.
class NodeLookup {
 public:
  explicit NodeLookup(bool linear) : linear_(linear) {}

  void insert(const Eigen::Vector3d& p) {
    if (linear_) {
      points_.push_back(p);
    } else {
      index_.insert(p);
    }
  }

  std::pair<int, double> nearest(const Eigen::Vector3d& q) const {
    if (!linear_) return index_.nearest(q);
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points_.size(); ++i) {
      double d2 = (points_[i] - q).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<int>(i);
      }
    }
    return {best, std::sqrt(best_d2)};
  }

  std::vector<int> radius_search(const Eigen::Vector3d& q, double r) const {
    if (!linear_) return index_.radius_search(q, r);
    std::vector<int> out;
    double r2 = r * r;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if ((points_[i] - q).squaredNorm() <= r2) out.push_back(static_cast<int>(i));
    }
    return out;
  }

 private:
  bool linear_;
  IncrementalPointIndex index_;
  std::vector<Eigen::Vector3d> points_;
};

}  // namespace

PlanTree grow_tree(const SceneWorld& world, const SemanticObject& root, const PlannerConfig& config,
                   GrowthAuditor* auditor) {
  if (config.iterations < 1) fail(ErrorCode::invalid_argument, "planner: iterations must be >= 1");
  if (!(config.eta > 0.0)) fail(ErrorCode::invalid_argument, "planner: eta must be > 0");
  if (!(config.alpha > 0.0)) fail(ErrorCode::invalid_argument, "planner: alpha must be > 0");
  if (config.dimension != 2 && config.dimension != 3)
    fail(ErrorCode::invalid_argument, "planner: dimension must be 2 or 3");

  double altitude = config.planning_altitude.value_or(root.centroid.z());
  Eigen::Vector3d root_pos(root.centroid.x(), root.centroid.y(), altitude);
  if (!world.point_free(root_pos))
    fail(ErrorCode::planning, "root centroid '" + root.name + "' is in collision at planning altitude");

  double step = config.collision_step > 0.0 ? config.collision_step : world.default_collision_step();
  PlanTree tree(root_pos);
  NodeLookup lookup(config.linear_neighbors);
  lookup.insert(root_pos);
  Rng rng(config.rng_seed);
  int accepted = 0;

  for (int iter = 0; iter < config.iterations; ++iter) {
    double r = search_radius(static_cast<double>(tree.size()), config);
    Eigen::Vector3d q_rand = sample_free(world.bounds(), config.dimension, altitude, rng);
    auto [near_id, near_dist] = lookup.nearest(q_rand);
    if (near_dist == 0.0) continue;  // degenerate sample, rejection signal
    Eigen::Vector3d q_new = steer(tree.node(near_id).position, q_rand, config.eta);
    if (!world.point_free(q_new)) continue;

    std::vector<int> neighbors = lookup.radius_search(q_new, r);

    // Best collision-free parent by (cost + edge, id). The radius floor keeps
    // r >= eta, so v_near is always a neighbor; the v_near fallback below only
    // matters for exotic configs.
    std::vector<std::pair<double, int>> candidates;
    candidates.reserve(neighbors.size());
    for (int v : neighbors)
      candidates.emplace_back(tree.node(v).cost + (q_new - tree.node(v).position).norm(), v);
    if (candidates.empty())
      candidates.emplace_back(tree.node(near_id).cost + (q_new - tree.node(near_id).position).norm(),
                              near_id);
    std::sort(candidates.begin(), candidates.end());
    int best = -1;
    for (const auto& [cost, v] : candidates) {
      if (world.segment_collision_free(tree.node(v).position, q_new, step)) {
        best = v;
        break;
      }
    }
    if (best == -1) continue;

    int new_id = tree.add_node(q_new, best);
    lookup.insert(q_new);
    ++accepted;
    if (auditor) auditor->on_insert(new_id, tree.node(new_id).cost);

    for (int v : neighbors) {
      if (v == best) continue;
      double candidate = tree.node(new_id).cost + (tree.node(v).position - tree.node(new_id).position).norm();
      if (!(candidate < tree.node(v).cost)) continue;
      if (tree.is_ancestor(v, new_id)) continue;
      if (!world.segment_collision_free(tree.node(v).position, tree.node(new_id).position, step)) continue;
      double old_cost = tree.node(v).cost;
      if (tree.rewire_node(v, new_id) && auditor) auditor->on_rewire(v, old_cost, tree.node(v).cost);
    }
    if (auditor) auditor->after_iteration(tree);
  }

  if (accepted == 0) fail(ErrorCode::planning, "environment unreachable: no node accepted after " +
                                                   std::to_string(config.iterations) + " iterations");
  return tree;
}

nlohmann::json PlanTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (int i = 0; i < size(); ++i) {
    const TreeNode& n = node(i);
    nodes.push_back({i, n.position.x(), n.position.y(), n.position.z(), n.parent, n.cost});
  }
  return nlohmann::json{{"tree_version", 1}, {"nodes", std::move(nodes)}};
}

PlanTree PlanTree::from_json(const nlohmann::json& j) {
  const auto& nodes = j.at("nodes");
  if (nodes.empty()) fail(ErrorCode::parse, "tree JSON has no nodes");
  auto pos = [](const nlohmann::json& row) {
    return Eigen::Vector3d(row[1].get<double>(), row[2].get<double>(), row[3].get<double>());
  };
  if (nodes[0][4].get<int>() != -1) fail(ErrorCode::parse, "tree JSON: first node must be the root");
  PlanTree tree(pos(nodes[0]));
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const auto& row = nodes[i];
    if (row[0].get<int>() != static_cast<int>(i)) fail(ErrorCode::parse, "tree JSON: ids must be dense");
    tree.add_node(pos(row), row[4].get<int>());
  }
  return tree;
}

void save_tree_json(const PlanTree& tree, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write tree file: " + path);
  out << tree.to_json().dump() << "\n";
}

PlanTree load_tree_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open tree file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, std::string("invalid tree JSON: ") + e.what());
  }
  return PlanTree::from_json(j);
}

}  // namespace skyforge
