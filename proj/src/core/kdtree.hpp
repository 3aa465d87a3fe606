#pragma once

#include <Eigen/Core>
#include <limits>
#include <utility>
#include <vector>

namespace skyforge {

// Exact 3D kd-tree. Nearest-neighbor ties are broken by lowest point index so
// that results match a linear scan with the same convention; radius queries
// are inclusive (d <= r) and return sorted indices.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Eigen::Vector3d> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Eigen::Vector3d& point(int i) const { return points_[static_cast<std::size_t>(i)]; }

  // (index, distance); (-1, +inf) when empty.
  std::pair<int, double> nearest(const Eigen::Vector3d& query) const;
  double min_distance(const Eigen::Vector3d& query) const { return nearest(query).second; }
  std::vector<int> radius_search(const Eigen::Vector3d& query, double radius) const;

 private:
  struct Node {
    int point = -1;  // index into points_
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::vector<int>& idx, int begin, int end, int depth);
  void nearest_impl(int node, const Eigen::Vector3d& q, double& best_d2, int& best_idx) const;
  void radius_impl(int node, const Eigen::Vector3d& q, double r2, std::vector<int>& out) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Tree-node index for the planner: kd-tree over an indexed prefix plus a
// linearly scanned tail, rebuilt every `rebuild_interval` insertions.
// Results are exact and identical to a full linear scan.
class IncrementalPointIndex {
 public:
  explicit IncrementalPointIndex(int rebuild_interval = 512)
      : rebuild_interval_(rebuild_interval) {}

  void insert(const Eigen::Vector3d& p);
  std::size_t size() const { return points_.size(); }
  const Eigen::Vector3d& point(int i) const { return points_[static_cast<std::size_t>(i)]; }

  std::pair<int, double> nearest(const Eigen::Vector3d& query) const;
  std::vector<int> radius_search(const Eigen::Vector3d& query, double radius) const;

 private:
  int rebuild_interval_;
  std::vector<Eigen::Vector3d> points_;
  KdTree prefix_;           // covers points_[0 .. prefix_size_)
  std::size_t prefix_size_ = 0;
};

}  // namespace skyforge
