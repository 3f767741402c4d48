#include "srm/extract.hpp"

#include "srm/error.hpp"
#include "srm/kdtree.hpp"
#include "srm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace srm {

std::vector<Face> extract_faces(std::span<const Vec3> points, const ExtractParams& params, ExtractStats* stats) {
  const double delta = params.voxel_size;
  if (!(delta > 0 && delta <= 1)) throw Error(ErrorCode::argument, "voxel size must lie in (0, 1]");
  if (points.size() < 4) throw Error(ErrorCode::argument, "mesh extraction needs at least 4 points");
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::validation, "mesh extraction input contains non-finite points");
  }

  const Aabb box = bounding_box(points);
  const Vec3 ext = box.extent();
  const double scale = ext.maxCoeff();
  if (!(scale > 0)) throw Error(ErrorCode::degenerate, "all points coincide");
  const double threshold =
      params.match_threshold >= 0 ? params.match_threshold : 2.0 * delta * ext.norm();

  std::array<int, 3> res{};
  for (int a = 0; a < 3; ++a) res[a] = std::max(1, static_cast<int>(std::ceil(ext[a] / scale / delta - 1e-9)));

  const auto nx = static_cast<std::size_t>(res[0]), ny = static_cast<std::size_t>(res[1]),
             nz = static_cast<std::size_t>(res[2]);
  std::vector<std::uint8_t> grid(nx * ny * nz, 0);
  auto cell_of = [&](const Vec3& p) {
    std::array<int, 3> c{};
    for (int a = 0; a < 3; ++a) {
      const double u = (p[a] - box.min[a]) / scale / delta;
      c[a] = std::clamp(static_cast<int>(std::floor(u)), 0, res[a] - 1);
    }
    return c;
  };
  for (const auto& p : points) {
    const auto c = cell_of(p);
    grid[(static_cast<std::size_t>(c[2]) * ny + c[1]) * nx + c[0]] = 1;
  }
  auto occupied = [&](int x, int y, int z) {
    if (x < 0 || y < 0 || z < 0 || x >= res[0] || y >= res[1] || z >= res[2]) return false;
    return grid[(static_cast<std::size_t>(z) * ny + y) * nx + x] != 0;
  };

  // exposed cell faces, corners deduplicated by lattice coordinate
  std::unordered_map<std::uint64_t, std::uint32_t> corner_ids;
  std::vector<std::array<int, 3>> corners;
  std::vector<Face> voxel_faces;
  auto corner = [&](const std::array<int, 3>& q) {
    const std::uint64_t key =
        static_cast<std::uint64_t>(q[0]) + (nx + 1) * (static_cast<std::uint64_t>(q[1]) + (ny + 1) * static_cast<std::uint64_t>(q[2]));
    auto [it, inserted] = corner_ids.try_emplace(key, static_cast<std::uint32_t>(corners.size()));
    if (inserted) corners.push_back(q);
    return it->second;
  };
  std::size_t occupied_count = 0;
  for (int z = 0; z < res[2]; ++z) {
    for (int y = 0; y < res[1]; ++y) {
      for (int x = 0; x < res[0]; ++x) {
        if (!occupied(x, y, z)) continue;
        ++occupied_count;
        const std::array<int, 3> c{x, y, z};
        for (int a = 0; a < 3; ++a) {
          const int u = (a + 1) % 3, v = (a + 2) % 3;
          for (int side : {-1, 1}) {
            auto n = c;
            n[a] += side;
            if (occupied(n[0], n[1], n[2])) continue;
            std::array<std::uint32_t, 4> q{};
            constexpr int du[4] = {0, 1, 1, 0}, dv[4] = {0, 0, 1, 1};
            for (int k = 0; k < 4; ++k) {
              auto p = c;
              if (side > 0) p[a] += 1;
              p[u] += du[k];
              p[v] += dv[k];
              q[k] = corner(p);
            }
            if (side < 0) std::swap(q[1], q[3]);
            voxel_faces.push_back({q[0], q[1], q[2]});
            voxel_faces.push_back({q[0], q[2], q[3]});
          }
        }
      }
    }
  }

  PointIndex index(points);
  std::vector<Neighbor> match(corners.size());
  for (std::size_t k = 0; k < corners.size(); ++k) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = box.min[a] + scale * (corners[k][a] * delta);
    match[k] = index.nearest(p);
  }

  if (occupied_count == 1) {
    // single voxel: its cube shell needs three distinct matched points
    std::vector<std::uint32_t> distinct;
    for (const auto& m : match) distinct.push_back(m.index);
    std::sort(distinct.begin(), distinct.end());
    if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 3) {
      throw Error(ErrorCode::degenerate, "single-voxel input matches fewer than 3 distinct points");
    }
  }

  std::vector<Face> faces;
  faces.reserve(voxel_faces.size());
  std::size_t far = 0, repeated = 0;
  const double threshold_sq = threshold * threshold;
  for (const auto& f : voxel_faces) {
    if (match[f[0]].distance_sq > threshold_sq || match[f[1]].distance_sq > threshold_sq ||
        match[f[2]].distance_sq > threshold_sq) {
      ++far;
      continue;
    }
    const Face g{match[f[0]].index, match[f[1]].index, match[f[2]].index};
    if (g[0] == g[1] || g[1] == g[2] || g[0] == g[2]) {
      ++repeated;
      continue;
    }
    faces.push_back(g);
  }

  if (stats) {
    stats->resolution = res;
    stats->occupied = occupied_count;
    stats->voxel_faces = voxel_faces.size();
    stats->dropped_far = far;
    stats->dropped_repeated = repeated;
    stats->scale = scale;
    stats->translation = box.min;
  }
  return faces;
}

std::vector<std::vector<Face>> extract_faces_batch(std::span<const std::vector<Vec3>> inputs, const ExtractParams& params) {
  std::vector<std::vector<Face>> out(inputs.size());
  parallel_for(inputs.size(), [&](std::size_t begin, std::size_t end) {
    for (auto k = begin; k < end; ++k) out[k] = extract_faces(inputs[k], params);
  });
  return out;
}

TriMesh smooth(const TriMesh& mesh, int iterations, double lambda) {
  if (iterations < 0) throw Error(ErrorCode::argument, "smoothing iterations must be >= 0");
  if (!(lambda >= 0 && lambda < 1)) throw Error(ErrorCode::argument, "smoothing lambda must lie in [0, 1)");
  TriMesh out = mesh;
  if (iterations == 0 || lambda == 0) return out;

  const auto n = mesh.vertices.size();
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (const auto& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      adj[f[k]].push_back(f[(k + 1) % 3]);
      adj[f[k]].push_back(f[(k + 2) % 3]);
    }
  }
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }

  std::vector<Vec3> next(n);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t v = 0; v < n; ++v) {
      if (adj[v].empty()) {
        next[v] = out.vertices[v];
        continue;
      }
      Vec3 avg = Vec3::Zero();
      for (auto w : adj[v]) avg += out.vertices[w];
      avg /= static_cast<double>(adj[v].size());
      next[v] = out.vertices[v] + lambda * (avg - out.vertices[v]);
    }
    out.vertices.swap(next);
  }
  out.normals.clear();
  return out;
}

TriMesh compact(const TriMesh& mesh, std::vector<std::uint32_t>* kept) {
  constexpr auto kUnused = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> remap(mesh.vertices.size(), kUnused);
  std::vector<std::uint32_t> order;
  for (const auto& f : mesh.faces) {
    for (auto v : f) {
      if (remap[v] == kUnused) {
        remap[v] = static_cast<std::uint32_t>(order.size());
        order.push_back(v);
      }
    }
  }
  // keep the original relative order of vertices
  std::sort(order.begin(), order.end());
  for (std::size_t k = 0; k < order.size(); ++k) remap[order[k]] = static_cast<std::uint32_t>(k);

  TriMesh out;
  out.vertices.reserve(order.size());
  for (auto v : order) {
    out.vertices.push_back(mesh.vertices[v]);
    if (mesh.has_colors()) out.colors.push_back(mesh.colors[v]);
    if (mesh.has_normals()) out.normals.push_back(mesh.normals[v]);
  }
  out.faces.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) out.faces.push_back({remap[f[0]], remap[f[1]], remap[f[2]]});
  if (kept) *kept = std::move(order);
  return out;
}

}  // namespace srm
