#pragma once

#include "srm/mesh.hpp"

#include <span>
#include <vector>

namespace srm {

struct Neighbor {
  std::uint32_t index = 0;
  double distance_sq = 0;
};

// Static k-d tree for exact nearest-neighbor queries over a point set.
// Ties resolve to the smallest point index.
class PointIndex {
 public:
  explicit PointIndex(std::span<const Vec3> points);

  Neighbor nearest(const Vec3& query) const;
  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::uint32_t i) const { return points_[i]; }

 private:
  struct Node {
    Aabb bounds;
    std::uint32_t begin = 0, end = 0;  // range into order_ for leaves
    std::uint32_t left = 0, right = 0;
    bool leaf = true;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end, int depth);

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace srm
