#pragma once

#include "srm/accel.hpp"
#include "srm/hash.hpp"
#include "srm/scalp.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace srm {

using Rgb = Eigen::Vector3d;

inline const Rgb kDefaultSkinColor{0.6, 0.45, 0.35};

enum class Slot : std::uint8_t { min = 0, max = 1 };

// Nearest/farthest hit distance per (scalp entry i, template direction n),
// plus the albedo sampled at each of the two hits.
//
// Arrays are row-major with i outer and n inner; albedo arrays hold three
// floats per entry. Invariants: d_min <= d_max, d_min == 0 iff d_max == 0,
// all values finite, albedo in [0,1].
struct RayDistanceField {
  std::size_t n_s = 0;
  std::size_t n_r = 0;
  std::vector<float> d_min;
  std::vector<float> d_max;
  std::vector<float> albedo_min;
  std::vector<float> albedo_max;
  Digest template_hash{};
  Digest scalp_hash{};

  std::size_t entries() const { return n_s * n_r; }
  std::size_t index(std::size_t i, std::size_t n) const { return i * n_r + n; }

  float distance(std::size_t e, Slot s) const { return s == Slot::min ? d_min[e] : d_max[e]; }
  Rgb albedo(std::size_t e, Slot s) const;
  void set_albedo(std::size_t e, Slot s, const Rgb& c);

  // Case 1 everywhere: zero distances, skin color in both albedo slots.
  static RayDistanceField empty(std::size_t n_s, std::size_t n_r, const Digest& template_hash,
                                const Digest& scalp_hash, const Rgb& skin = kDefaultSkinColor);
};

// Bit-level equality of every array and of the metadata.
bool bitwise_equal(const RayDistanceField& a, const RayDistanceField& b);

void validate(const RayDistanceField& field);

// Throws Error(hash_mismatch) when shapes or hashes differ.
void require_same_layout(const RayDistanceField& a, const RayDistanceField& b, const char* context);
void require_compatible(const RayDistanceField& field, const RaySet& rays, const char* context);

// Restores the field invariants entry by entry: negatives clamp to 0, a zero
// in either slot zeroes both, and swapped slots are reordered.
void enforce_invariants(RayDistanceField& field);

// Outlier flags per (entry, slot); 1 marks a distance to remove.
struct ExclusionMap {
  std::size_t n_s = 0;
  std::size_t n_r = 0;
  std::vector<std::uint8_t> ex_min;
  std::vector<std::uint8_t> ex_max;

  std::size_t flagged() const;
  static ExclusionMap zeros(std::size_t n_s, std::size_t n_r);
};

// Casts every ray against the hair mesh and records the first and last hit.
// No hit: both distances 0 and skin color in both albedo slots. Albedo is the
// barycentric blend of hair vertex colors, or skin color when uncolored.
RayDistanceField analyze(const TriMesh& hair, const RaySet& rays, const Rgb& skin = kDefaultSkinColor);
RayDistanceField analyze(const AccelIndex& index, const TriMesh& hair, const RaySet& rays,
                         const Rgb& skin = kDefaultSkinColor);

struct VertexTag {
  std::uint32_t i = 0;
  std::uint32_t n = 0;
  Slot slot = Slot::min;
};

struct ReconstructedVertices {
  std::vector<Vec3> points;
  std::vector<VertexTag> tags;
};

// origin(i) + d_k(i, n) * direction(i, n) in (i, n, k) order, k = min then max.
// With drop_zeros, zero-distance entries are skipped and order is kept.
ReconstructedVertices reconstruct_vertices(const RayDistanceField& field, const RaySet& rays, bool drop_zeros);

enum class FuseMode { plain, mask_aware };

// plain: weighted sum of every array, then invariants are restored.
// mask_aware: per entry the weights are renormalized over the inputs whose
// distances are nonzero there; entries zero in every input stay zero.
RayDistanceField fuse(std::span<const RayDistanceField> fields, std::span<const double> weights,
                      FuseMode mode = FuseMode::plain, const Rgb& skin = kDefaultSkinColor);

// output(i, n) = input(pair_of(i), n) for distances and both albedo slots.
RayDistanceField flip(const RayDistanceField& field, const ScalpSpec& scalp);

// Multiplies every distance by beta_s > 0; albedo untouched.
RayDistanceField scale_thickness(const RayDistanceField& field, double beta_s);

// Zeroes flagged distances. An entry with any slot zeroed loses both
// distances (the zero coupling) and both albedo slots reset to skin color.
// Entries without a flag are copied bit for bit.
RayDistanceField apply_exclusion(const RayDistanceField& field, const ExclusionMap& map,
                                 const Rgb& skin = kDefaultSkinColor);

struct Perturbation {
  RayDistanceField field;
  ExclusionMap truth;
};

// Adds uniform noise in [-magnitude, magnitude] to `count` distinct
// (entry, slot) positions chosen uniformly; the map flags exactly those.
Perturbation perturb(const RayDistanceField& field, std::size_t count, double magnitude, std::uint64_t seed);

// scores: slot-major, 2 * n_s * n_r values. 1 iff sigmoid(score) > 0.5.
ExclusionMap binarize_exclusion(std::span<const double> scores, std::size_t n_s, std::size_t n_r);

// SRMH binary format, little-endian:
//   "SRMH" | u16 version | u16 reserved | u32 n_s | u32 n_r
//   32-byte template hash | 32-byte scalp hash
//   f32 d_min[E] | f32 d_max[E] | f32 albedo_min[3E] | f32 albedo_max[3E]
inline constexpr std::uint16_t kFieldFormatVersion = 1;
std::basic_string<std::uint8_t> encode_field(const RayDistanceField& field);
RayDistanceField decode_field(std::span<const std::uint8_t> bytes, const std::string& name = "<field>");
void save_field(const std::string& path, const RayDistanceField& field);
RayDistanceField load_field(const std::string& path);

}  // namespace srm
