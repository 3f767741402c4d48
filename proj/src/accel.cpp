#include "srm/accel.hpp"

#include "srm/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace srm {

std::optional<Hit> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c,
                                      std::uint32_t face) {
  const Vec3& d = ray.direction;
  int kz = 0;
  d.cwiseAbs().maxCoeff(&kz);
  int kx = (kz + 1) % 3;
  int ky = (kx + 1) % 3;
  if (d[kz] < 0) std::swap(kx, ky);

  const double sx = d[kx] / d[kz];
  const double sy = d[ky] / d[kz];
  const double sz = 1.0 / d[kz];

  const Vec3 pa = a - ray.origin;
  const Vec3 pb = b - ray.origin;
  const Vec3 pc = c - ray.origin;

  const double ax = pa[kx] - sx * pa[kz], ay = pa[ky] - sy * pa[kz];
  const double bx = pb[kx] - sx * pb[kz], by = pb[ky] - sy * pb[kz];
  const double cx = pc[kx] - sx * pc[kz], cy = pc[ky] - sy * pc[kz];

  const double u = cx * by - cy * bx;
  const double v = ax * cy - ay * cx;
  const double w = bx * ay - by * ax;
  if ((u < 0 || v < 0 || w < 0) && (u > 0 || v > 0 || w > 0)) return std::nullopt;

  const double det = u + v + w;
  if (std::abs(det) < kDeterminantEpsilon) return std::nullopt;

  const double t = (u * sz * pa[kz] + v * sz * pb[kz] + w * sz * pc[kz]) / det;
  if (!(t >= 0)) return std::nullopt;
  return Hit{t, face, Vec3(u / det, v / det, w / det)};
}

void sort_and_merge_hits(std::vector<Hit>& hits) {
  std::sort(hits.begin(), hits.end(), [](const Hit& x, const Hit& y) {
    return x.t < y.t || (x.t == y.t && x.face < y.face);
  });
  std::size_t kept = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (kept > 0 && hits[i].t - hits[kept - 1].t < kHitMergeEpsilon) continue;
    hits[kept++] = hits[i];
  }
  hits.resize(kept);
}

// Ericson, Real-Time Collision Detection, 5.1.5.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

namespace {

double surface_area(const Aabb& b) {
  if (b.empty()) return 0;
  Vec3 e = b.extent();
  return 2.0 * (e.x() * e.y() + e.y() * e.z() + e.z() * e.x());
}

// Slab test against [0, inf). Boxes are padded at build time, so the plain
// floating-point slab test is conservative for hits lying on box faces.
bool ray_hits_box(const Vec3& origin, const Vec3& inv_dir, const Aabb& box) {
  double tmin = 0.0;
  double tmax = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::isinf(inv_dir[k])) {
      if (origin[k] < box.min[k] || origin[k] > box.max[k]) return false;
      continue;
    }
    double t0 = (box.min[k] - origin[k]) * inv_dir[k];
    double t1 = (box.max[k] - origin[k]) * inv_dir[k];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return false;
  }
  return true;
}

double box_distance_sq(const Vec3& p, const Aabb& box) {
  Vec3 d = (box.min - p).cwiseMax(p - box.max).cwiseMax(Vec3::Zero());
  return d.squaredNorm();
}

}  // namespace

AccelIndex::AccelIndex(const TriMesh& mesh, AccelBuildParams params) : params_(params) {
  if (mesh.faces.empty()) throw Error(ErrorCode::argument, "cannot build an acceleration index over a mesh with no faces");
  if (params_.max_leaf_size < 1 || params_.sah_bins < 2) throw Error(ErrorCode::argument, "invalid BVH build parameters");
  validate(mesh);

  const auto n = static_cast<std::uint32_t>(mesh.faces.size());
  std::vector<Aabb> boxes(n);
  std::vector<Vec3> centroids(n);
  Aabb all;
  for (std::uint32_t f = 0; f < n; ++f) {
    for (auto idx : mesh.faces[f]) boxes[f].extend(mesh.vertices[idx]);
    centroids[f] = boxes[f].center();
    all.extend(boxes[f]);
  }
  pad_ = 1e-9 * std::max(1.0, all.extent().norm());

  std::vector<std::uint32_t> order(n);
  for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
  nodes_.reserve(2 * n / std::max(1, params_.max_leaf_size) + 1);
  build_node(order, boxes, centroids, 0, n, 0);

  tris_.reserve(n);
  for (auto f : order) {
    const auto& face = mesh.faces[f];
    tris_.push_back({mesh.vertices[face[0]], mesh.vertices[face[1]], mesh.vertices[face[2]], f});
  }
}

std::uint32_t AccelIndex::build_node(std::vector<std::uint32_t>& order, std::vector<Aabb>& boxes,
                                     std::vector<Vec3>& centroids, std::uint32_t begin, std::uint32_t end,
                                     int depth) {
  // traversal stacks hold at most one pending sibling per level
  if (depth >= kMaxDepth) throw Error(ErrorCode::degenerate, "BVH depth limit exceeded");
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb bounds, cbounds;
  for (auto i = begin; i < end; ++i) {
    bounds.extend(boxes[order[i]]);
    cbounds.extend(centroids[order[i]]);
  }
  bounds.min.array() -= pad_;
  bounds.max.array() += pad_;
  nodes_[index].bounds = bounds;

  const auto count = end - begin;
  if (count <= static_cast<std::uint32_t>(params_.max_leaf_size)) {
    nodes_[index].first = begin;
    nodes_[index].count = count;
    return index;
  }

  int axis = 0;
  cbounds.extent().maxCoeff(&axis);
  const double lo = cbounds.min[axis];
  const double span = cbounds.max[axis] - lo;

  std::uint32_t mid = begin + count / 2;
  if (span > 0) {
    const int nb = params_.sah_bins;
    struct Bin {
      Aabb box;
      std::uint32_t count = 0;
    };
    std::vector<Bin> bins(nb);
    auto bin_of = [&](std::uint32_t prim) {
      int b = static_cast<int>(nb * (centroids[prim][axis] - lo) / span);
      return std::clamp(b, 0, nb - 1);
    };
    for (auto i = begin; i < end; ++i) {
      auto& bin = bins[bin_of(order[i])];
      bin.box.extend(boxes[order[i]]);
      ++bin.count;
    }
    // sweep to evaluate every split plane between bins
    std::vector<double> left_cost(nb - 1);
    Aabb acc;
    std::uint32_t acc_n = 0;
    for (int b = 0; b < nb - 1; ++b) {
      acc.extend(bins[b].box);
      acc_n += bins[b].count;
      left_cost[b] = acc_n ? surface_area(acc) * acc_n : 0;
    }
    acc = Aabb{};
    acc_n = 0;
    double best = std::numeric_limits<double>::infinity();
    int best_split = -1;
    for (int b = nb - 1; b > 0; --b) {
      acc.extend(bins[b].box);
      acc_n += bins[b].count;
      double cost = left_cost[b - 1] + (acc_n ? surface_area(acc) * acc_n : 0);
      if (acc_n > 0 && acc_n < count && cost < best) {
        best = cost;
        best_split = b;
      }
    }
    if (best_split > 0) {
      auto it = std::partition(order.begin() + begin, order.begin() + end,
                               [&](std::uint32_t prim) { return bin_of(prim) < best_split; });
      mid = static_cast<std::uint32_t>(it - order.begin());
    }
  }
  if (mid == begin || mid == end) {
    // all centroids coincide along the axis: split by index, ordered for determinism
    std::sort(order.begin() + begin, order.begin() + end);
    mid = begin + count / 2;
  }

  build_node(order, boxes, centroids, begin, mid, depth + 1);
  const auto right = build_node(order, boxes, centroids, mid, end, depth + 1);
  nodes_[index].first = right;
  nodes_[index].count = 0;
  return index;
}

std::size_t AccelIndex::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.count > 0; }));
}

std::vector<Hit> AccelIndex::cast_all_hits(const Ray& ray) const {
  std::vector<Hit> hits;
  cast_all_hits(ray, hits);
  return hits;
}

void AccelIndex::cast_all_hits(const Ray& ray, std::vector<Hit>& out) const {
  out.clear();
  const Vec3 inv_dir = ray.direction.cwiseInverse();
  std::array<std::uint32_t, kMaxDepth + 2> stack;
  std::size_t top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!ray_hits_box(ray.origin, inv_dir, node.bounds)) continue;
    if (node.count > 0) {
      for (auto i = node.first; i < node.first + node.count; ++i) {
        const Tri& tri = tris_[i];
        if (auto hit = intersect_triangle(ray, tri.a, tri.b, tri.c, tri.face)) out.push_back(*hit);
      }
      continue;
    }
    const auto self = static_cast<std::uint32_t>(&node - nodes_.data());
    stack[top++] = node.first;
    stack[top++] = self + 1;
  }
  sort_and_merge_hits(out);
}

ClosestPoint AccelIndex::closest_point(const Vec3& p) const {
  ClosestPoint best;
  double best_sq = std::numeric_limits<double>::infinity();
  std::array<std::uint32_t, kMaxDepth + 2> stack;
  std::size_t top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const auto id = stack[--top];
    const Node& node = nodes_[id];
    if (box_distance_sq(p, node.bounds) > best_sq) continue;
    if (node.count > 0) {
      for (auto i = node.first; i < node.first + node.count; ++i) {
        const Tri& tri = tris_[i];
        Vec3 q = closest_point_on_triangle(p, tri.a, tri.b, tri.c);
        double d = (q - p).squaredNorm();
        if (d < best_sq || (d == best_sq && tri.face < best.face)) {
          best_sq = d;
          best.point = q;
          best.face = tri.face;
        }
      }
      continue;
    }
    // visit the nearer child first
    std::uint32_t l = id + 1, r = node.first;
    double dl = box_distance_sq(p, nodes_[l].bounds), dr = box_distance_sq(p, nodes_[r].bounds);
    if (dl < dr) std::swap(l, r);
    stack[top++] = l;
    stack[top++] = r;
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

}  // namespace srm
