#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace srm {

using Vec3 = Eigen::Vector3d;
using Face = std::array<std::uint32_t, 3>;

// Triangle mesh with optional per-vertex colors and normals.
//
// Winding is counter-clockwise seen from outside. Colors are RGB in [0,1].
// `colors` and `normals` are either empty or hold one entry per vertex.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> colors;
  std::vector<Vec3> normals;

  bool has_colors() const { return !colors.empty(); }
  bool has_normals() const { return !normals.empty(); }
};

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }
  bool empty() const { return (min.array() > max.array()).any(); }
  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
};

// Throws Error(validation) on out-of-range or repeated face indices, on
// per-vertex arrays of the wrong size, off-unit normals, or colors outside [0,1].
void validate(const TriMesh& mesh);

struct MeshLoadInfo {
  std::size_t dropped_degenerate = 0;  // faces with repeated indices
};

// Reads OBJ or PLY (ASCII or binary little-endian), chosen by extension.
// Degenerate faces are dropped and counted in `info`.
TriMesh load_mesh(const std::string& path, MeshLoadInfo* info = nullptr);
TriMesh parse_obj(const std::string& text, const std::string& name = "<obj>", MeshLoadInfo* info = nullptr);
TriMesh parse_ply(std::span<const std::uint8_t> bytes, const std::string& name = "<ply>", MeshLoadInfo* info = nullptr);

enum class PlyEncoding { ascii, binary_little_endian };

// Writes OBJ or PLY by extension. OBJ colors use the "v x y z r g b" form.
void write_mesh(const std::string& path, const TriMesh& mesh,
                PlyEncoding encoding = PlyEncoding::binary_little_endian);
std::string format_obj(const TriMesh& mesh);
std::basic_string<std::uint8_t> format_ply(const TriMesh& mesh, PlyEncoding encoding);

// Area-weighted average of incident face normals. Vertices with no incident
// face (or only zero-area faces) get the zero vector.
std::vector<Vec3> vertex_normals(const TriMesh& mesh);

Aabb bounding_box(std::span<const Vec3> points);

// Length of the axis-aligned bounding box diagonal; throws on empty input.
double bbox_diagonal(std::span<const Vec3> points);
inline double bbox_diagonal(const TriMesh& mesh) { return bbox_diagonal(mesh.vertices); }

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace srm
