#pragma once

#include "srm/accel.hpp"
#include "srm/hash.hpp"
#include "srm/mesh.hpp"

#include <span>
#include <string>
#include <vector>

namespace srm {

enum class Side : std::uint8_t { left, right };

// Ordered scalp vertices of a head mesh with their left/right mirror pairing.
// `pair_of[i]` is the entry index (not the vertex id) of i's mirror partner.
struct ScalpSpec {
  std::string head_topology;
  std::vector<std::uint32_t> vertex_ids;
  std::vector<std::uint32_t> pair_of;
  std::vector<Side> side;

  std::size_t size() const { return vertex_ids.size(); }
};

// Throws Error(validation) unless the pairing is a fixed-point-free
// involution mapping left entries to right entries, with equal halves.
void validate(const ScalpSpec& spec);
Digest scalp_hash(const ScalpSpec& spec);

ScalpSpec parse_scalp_spec(const std::string& text);
std::string format_scalp_spec(const ScalpSpec& spec);
ScalpSpec load_scalp_spec(const std::string& path);
void write_scalp_spec(const std::string& path, const ScalpSpec& spec);

// Fixed set of unit ray directions in local frame coordinates. Entries 0..2
// are the canonical triad (x, y, z); all directions lie in the z >= 0 half.
struct RayTemplate {
  std::vector<Vec3> directions;
  double max_polar_deg = 90.0;

  std::size_t size() const { return directions.size(); }
};

inline constexpr double kMinTemplateSeparationDeg = 1.0;

// Canonical triad followed by n_rays - 3 Fibonacci-lattice samples of the cap
// polar <= max_polar_deg. Candidates within 1 degree of an accepted entry are
// skipped by advancing the lattice index by the golden-ratio fraction.
RayTemplate make_template(int n_rays, double max_polar_deg = 90.0);
void validate(const RayTemplate& tmpl);
Digest template_hash(const RayTemplate& tmpl);

RayTemplate parse_template(const std::string& text);
std::string format_template(const RayTemplate& tmpl);
RayTemplate load_template(const std::string& path);
void write_template(const std::string& path, const RayTemplate& tmpl);

enum class Handedness : std::uint8_t { right, left };

struct LocalFrame {
  Vec3 x = Vec3::UnitX();
  Vec3 y = Vec3::UnitY();
  Vec3 z = Vec3::UnitZ();
  Handedness handedness = Handedness::right;
};

// Per scalp entry i with partner i':
//   z = unit head normal at v_i, t = v_i - v_i'
//   x' = normalize(t x z), y = normalize(z x x'), x = +x' (left) or -x' (right)
// so left frames are right-handed and right frames left-handed.
// Throws Error(degenerate) naming every entry with |t x z| < 1e-8.
std::vector<LocalFrame> build_frames(const TriMesh& head, const ScalpSpec& scalp);

std::vector<Vec3> scalp_positions(const TriMesh& head, const ScalpSpec& scalp);

// World-space rays, row-major (scalp entry outer, template direction inner).
struct RaySet {
  std::size_t n_s = 0;
  std::size_t n_r = 0;
  std::vector<Vec3> origins;     // n_s
  std::vector<Vec3> directions;  // n_s * n_r
  Digest template_hash{};
  Digest scalp_hash{};

  Ray ray(std::size_t i, std::size_t n) const { return {origins[i], directions[i * n_r + n]}; }
};

// Direction (i, n) = r.x * x_i + r.y * y_i + r.z * z_i. Left-handed frames on
// the right side mirror the template without a separate flip.
RaySet place_rays(std::span<const LocalFrame> frames, std::span<const Vec3> positions,
                  const RayTemplate& tmpl, const Digest& scalp_digest = {});

// build_frames + place_rays with both hashes filled in.
RaySet make_rays(const TriMesh& head, const ScalpSpec& scalp, const RayTemplate& tmpl);

}  // namespace srm
