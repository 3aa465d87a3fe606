#include "core/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace skyforge {

KdTree::KdTree(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
  if (points_.empty()) return;
  std::vector<int> idx(points_.size());
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int KdTree::build(std::vector<int>& idx, int begin, int end, int depth) {
  if (begin >= end) return -1;
  int axis = depth % 3;
  int mid = begin + (end - begin) / 2;
  std::nth_element(idx.begin() + begin, idx.begin() + mid, idx.begin() + end,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  Node node;
  node.point = idx[mid];
  node.axis = axis;
  int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  nodes_[self].left = build(idx, begin, mid, depth + 1);
  nodes_[self].right = build(idx, mid + 1, end, depth + 1);
  return self;
}

std::pair<int, double> KdTree::nearest(const Eigen::Vector3d& query) const {
  if (empty()) return {-1, std::numeric_limits<double>::infinity()};
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  nearest_impl(root_, query, best_d2, best_idx);
  return {best_idx, std::sqrt(best_d2)};
}

void KdTree::nearest_impl(int node, const Eigen::Vector3d& q, double& best_d2, int& best_idx) const {
  if (node < 0) return;
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  const Eigen::Vector3d& p = points_[static_cast<std::size_t>(n.point)];
  double d2 = (p - q).squaredNorm();
  if (d2 < best_d2 || (d2 == best_d2 && n.point < best_idx)) {
    best_d2 = d2;
    best_idx = n.point;
  }
  double delta = q[n.axis] - p[n.axis];
  int near = delta < 0 ? n.left : n.right;
  int far = delta < 0 ? n.right : n.left;
  nearest_impl(near, q, best_d2, best_idx);
  // Visit the far side on exact equality too so index tie-breaking stays exact.
  if (delta * delta <= best_d2) nearest_impl(far, q, best_d2, best_idx);
}

std::vector<int> KdTree::radius_search(const Eigen::Vector3d& query, double radius) const {
  std::vector<int> out;
  if (!empty() && radius >= 0.0) radius_impl(root_, query, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

void KdTree::radius_impl(int node, const Eigen::Vector3d& q, double r2, std::vector<int>& out) const {
  if (node < 0) return;
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  const Eigen::Vector3d& p = points_[static_cast<std::size_t>(n.point)];
  if ((p - q).squaredNorm() <= r2) out.push_back(n.point);
  double delta = q[n.axis] - p[n.axis];
  if (n.left >= 0 && (delta < 0 || delta * delta <= r2)) radius_impl(n.left, q, r2, out);
  if (n.right >= 0 && (delta >= 0 || delta * delta <= r2)) radius_impl(n.right, q, r2, out);
}

void IncrementalPointIndex::insert(const Eigen::Vector3d& p) {
  points_.push_back(p);
  if (points_.size() - prefix_size_ >= static_cast<std::size_t>(rebuild_interval_)) {
    prefix_ = KdTree(points_);
    prefix_size_ = points_.size();
  }
}

std::pair<int, double> IncrementalPointIndex::nearest(const Eigen::Vector3d& query) const {
  int best_idx = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  if (!prefix_.empty()) {
    auto [idx, dist] = prefix_.nearest(query);
    best_idx = idx;
    best_d2 = dist * dist;
  }
  for (std::size_t i = prefix_size_; i < points_.size(); ++i) {
    double d2 = (points_[i] - query).squaredNorm();
    if (d2 < best_d2 || (d2 == best_d2 && static_cast<int>(i) < best_idx)) {
      best_d2 = d2;
      best_idx = static_cast<int>(i);
    }
  }
  return {best_idx, std::sqrt(best_d2)};
}

std::vector<int> IncrementalPointIndex::radius_search(const Eigen::Vector3d& query, double radius) const {
  std::vector<int> out = prefix_.radius_search(query, radius);
  double r2 = radius * radius;
  for (std::size_t i = prefix_size_; i < points_.size(); ++i) {
    if ((points_[i] - query).squaredNorm() <= r2) out.push_back(static_cast<int>(i));
  }
  return out;  // prefix part sorted, tail appended in index order => sorted overall
}

}  // namespace skyforge
