#include "srm/kdtree.hpp"

#include "srm/error.hpp"

#include <algorithm>
#include <limits>

namespace srm {

namespace {
constexpr std::uint32_t kLeafSize = 8;
constexpr int kMaxDepth = 64;

double box_distance_sq(const Vec3& p, const Aabb& box) {
  Vec3 d = (box.min - p).cwiseMax(p - box.max).cwiseMax(Vec3::Zero());
  return d.squaredNorm();
}
}  // namespace

PointIndex::PointIndex(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  if (points_.empty()) throw Error(ErrorCode::argument, "nearest-neighbor index over an empty point set");
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(order_.size()), 0);
}

std::uint32_t PointIndex::build(std::uint32_t begin, std::uint32_t end, int depth) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  for (auto i = begin; i < end; ++i) box.extend(points_[order_[i]]);
  nodes_[id].bounds = box;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  int axis = 0;
  double extent = box.extent().maxCoeff(&axis);
  if (end - begin <= kLeafSize || depth >= kMaxDepth || !(extent > 0)) return id;

  auto mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis] || (points_[a][axis] == points_[b][axis] && a < b);
                   });
  auto left = build(begin, mid, depth + 1);
  auto right = build(mid, end, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  nodes_[id].leaf = false;
  return id;
}

Neighbor PointIndex::nearest(const Vec3& query) const {
  Neighbor best{std::numeric_limits<std::uint32_t>::max(), std::numeric_limits<double>::infinity()};
  std::uint32_t stack[kMaxDepth * 2 + 4];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (box_distance_sq(query, node.bounds) > best.distance_sq) continue;
    if (node.leaf) {
      for (auto i = node.begin; i < node.end; ++i) {
        auto idx = order_[i];
        double d = (points_[idx] - query).squaredNorm();
        if (d < best.distance_sq || (d == best.distance_sq && idx < best.index)) best = {idx, d};
      }
      continue;
    }
    double dl = box_distance_sq(query, nodes_[node.left].bounds);
    double dr = box_distance_sq(query, nodes_[node.right].bounds);
    if (dl < dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return best;
}

}  // namespace srm
