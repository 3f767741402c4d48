#pragma once

#include "srm/mesh.hpp"

#include <optional>
#include <vector>

namespace srm {

// Half-line origin + t * direction, t >= 0. Direction must be unit length, so
// t is a Euclidean distance.
struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

struct Hit {
  double t = 0;
  std::uint32_t face = 0;
  Vec3 bary = Vec3::Zero();  // weights of the face's corners 0, 1, 2
};

inline constexpr double kDeterminantEpsilon = 1e-9;
inline constexpr double kHitMergeEpsilon = 1e-7;

// Watertight ray/triangle test. Hits on shared edges are reported by every
// incident triangle; callers merge them with sort_and_merge_hits.
std::optional<Hit> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c,
                                      std::uint32_t face);

// Sorts by t and collapses hits closer than kHitMergeEpsilon to the previous
// kept hit.
void sort_and_merge_hits(std::vector<Hit>& hits);

struct ClosestPoint {
  Vec3 point = Vec3::Zero();
  std::uint32_t face = 0;
  double distance = 0;
};

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct AccelBuildParams {
  int max_leaf_size = 4;
  int sah_bins = 16;
};

// Bounding volume hierarchy over a triangle mesh (binned SAH build).
// Immutable after construction; all queries are const and thread-safe.
class AccelIndex {
 public:
  explicit AccelIndex(const TriMesh& mesh, AccelBuildParams params = {});

  // Every intersection with t >= 0, ascending in t.
  std::vector<Hit> cast_all_hits(const Ray& ray) const;
  void cast_all_hits(const Ray& ray, std::vector<Hit>& out) const;

  ClosestPoint closest_point(const Vec3& p) const;

  std::size_t triangle_count() const { return tris_.size(); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const;
  const AccelBuildParams& params() const { return params_; }

 private:
  struct Node {
    Aabb bounds;
    std::uint32_t first = 0;  // first primitive (leaf) or right child (inner)
    std::uint32_t count = 0;  // primitive count; zero for inner nodes
  };
  struct Tri {
    Vec3 a, b, c;
    std::uint32_t face;
  };

  std::uint32_t build_node(std::vector<std::uint32_t>& order, std::vector<Aabb>& boxes,
                           std::vector<Vec3>& centroids, std::uint32_t begin, std::uint32_t end, int depth);

  static constexpr int kMaxDepth = 120;

  AccelBuildParams params_;
  std::vector<Tri> tris_;
  std::vector<Node> nodes_;
  double pad_ = 0;
};

}  // namespace srm
