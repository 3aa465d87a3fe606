#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <vector>

#include "core/rng.hpp"
#include "core/world.hpp"

namespace skyforge {

struct TreeNode {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  int parent = -1;             // -1 for the root
  double cost = 0.0;           // path length to root, meters
  std::vector<int> children;
};

// Parent-pointer tree with cost bookkeeping. Costs are always recomputed as
// parent.cost + edge length so they stay bit-identical to a path-sum oracle.
class PlanTree {
 public:
  explicit PlanTree(const Eigen::Vector3d& root_position);

  int size() const { return static_cast<int>(nodes_.size()); }
  const TreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  int root() const { return 0; }

  int add_node(const Eigen::Vector3d& position, int parent);
  bool is_ancestor(int candidate, int node) const;
  std::vector<int> path_to_root(int id) const;  // [id, parent, ..., root]
  std::vector<int> leaves() const;
  int max_depth() const;

  // Reparents v onto v_new and refreshes every descendant cost. Rejected
  // (returns false) when the new cost is not strictly smaller or when v_new
  // lives in v's subtree, which would create a cycle.
  bool rewire_node(int v, int v_new);

  nlohmann::json to_json() const;
  static PlanTree from_json(const nlohmann::json& j);

 private:
  void refresh_subtree_costs(int id);
  std::vector<TreeNode> nodes_;
};

struct PlannerConfig {
  double eta = 1.0;        // step size, meters; also the search-radius floor
  int iterations = 4000;
  double alpha = 16.0;     // radius scale; default calibrated for ~20 m scenes
  int dimension = 2;       // 2 = planar sampling at the root altitude
  uint64_t rng_seed = 0;
  std::optional<double> planning_altitude;  // defaults to the root centroid z
  double collision_step = -1.0;             // <= 0: bubble_radius / 2
  bool linear_neighbors = false;            // naive O(|V|) shadow path
};

// r = max(eta, gamma * (ln|V| / |V|)^(1/d)) with gamma = alpha * (1 + 1/d)^(1/d).
// tree_size is real-valued so the formula can be probed off-lattice in tests.
double search_radius(double tree_size, const PlannerConfig& config);

// min(eta, |q_rand - v_near|) along the segment. Precondition: q_rand != v_near.
Eigen::Vector3d steer(const Eigen::Vector3d& v_near, const Eigen::Vector3d& q_rand, double eta);

// Uniform sample in bounds; planar mode pins z to `altitude`.
Eigen::Vector3d sample_free(const Aabb& bounds, int dimension, double altitude, Rng& rng);

// Test/audit hook; all callbacks optional.
struct GrowthAuditor {
  virtual ~GrowthAuditor() = default;
  virtual void on_insert(int /*id*/, double /*cost*/) {}
  virtual void on_rewire(int /*id*/, double /*old_cost*/, double /*new_cost*/) {}
  virtual void after_iteration(const PlanTree& /*tree*/) {}
};

PlanTree grow_tree(const SceneWorld& world, const SemanticObject& root, const PlannerConfig& config,
                   GrowthAuditor* auditor = nullptr);

void save_tree_json(const PlanTree& tree, const std::string& path);
PlanTree load_tree_json(const std::string& path);

}  // namespace skyforge
