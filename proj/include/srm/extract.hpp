#pragma once

#include "srm/mesh.hpp"

#include <span>
#include <vector>

namespace srm {

inline constexpr double kDefaultVoxelSize = 1.0 / 64.0;

struct ExtractParams {
  double voxel_size = kDefaultVoxelSize;  // in the normalized unit cube
  double match_threshold = -1;            // model units; < 0 selects 2 * voxel_size * bbox diagonal
};

struct ExtractStats {
  std::array<int, 3> resolution{};
  std::size_t occupied = 0;
  std::size_t voxel_faces = 0;   // triangles on the voxel surface
  std::size_t dropped_far = 0;
  std::size_t dropped_repeated = 0;
  double scale = 1;  // normalized = (p - translation) / scale
  Vec3 translation = Vec3::Zero();
};

// Voxelizes the points, takes the exposed faces of the occupied cells, and
// re-indexes every voxel-surface triangle onto its nearest input points.
// Faces whose corners match farther than the threshold, or whose corners
// collapse onto the same point, are dropped.
std::vector<Face> extract_faces(std::span<const Vec3> points, const ExtractParams& params = {},
                                ExtractStats* stats = nullptr);

// Independent extract_faces per input, in parallel.
std::vector<std::vector<Face>> extract_faces_batch(std::span<const std::vector<Vec3>> inputs,
                                                   const ExtractParams& params = {});

// Uniform Laplacian steps v += lambda * (mean(neighbors) - v). Vertices with
// no neighbors stay put.
TriMesh smooth(const TriMesh& mesh, int iterations, double lambda = 0.5);

// Drops vertices no face references; per-vertex arrays follow. `kept` receives
// the original index of every output vertex.
TriMesh compact(const TriMesh& mesh, std::vector<std::uint32_t>* kept = nullptr);

}  // namespace srm
