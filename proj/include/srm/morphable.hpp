#pragma once

#include "srm/field.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace srm {

// PCA model over ray distance fields and their albedo.
//
// Distance vectors have length N = 2 * n_s * n_r laid out as [d_min..., d_max...].
// Albedo vectors have length 3N laid out as [albedo_min..., albedo_max...].
// Basis columns are unit directions scaled by sigma_k / sqrt(n_samples - 1),
// so a coefficient of 1 is one standard deviation along that mode.
struct MorphableHairModel {
  std::size_t n_s = 0;
  std::size_t n_r = 0;
  std::size_t n_samples = 0;
  Eigen::VectorXd mean_d;
  Eigen::VectorXd shape_sv;
  Eigen::MatrixXd shape_basis;
  Eigen::VectorXd mean_a;
  Eigen::VectorXd albedo_sv;
  Eigen::MatrixXd albedo_basis;
  Digest template_hash{};
  Digest scalp_hash{};

  std::size_t dim() const { return static_cast<std::size_t>(mean_d.size()); }
  int modes() const { return static_cast<int>(shape_basis.cols()); }
  int albedo_modes() const { return static_cast<int>(albedo_basis.cols()); }
  double mode_scale(int k) const;
  double albedo_mode_scale(int k) const;
};

struct HairCoefficients {
  Eigen::VectorXd beta_shape;
  Eigen::VectorXd beta_alb;
  double beta_s = 1.0;
};

Eigen::VectorXd distance_vector(const RayDistanceField& field);
Eigen::VectorXd albedo_vector(const RayDistanceField& field);

// Throws on fewer than two fields, mismatched layouts, modes above the
// numerical rank, or a rank-zero sample set with modes > 0.
MorphableHairModel build_model(std::span<const RayDistanceField> fields, int modes, int albedo_modes);

// (mean_d + B beta_shape) * beta_s without clamping, in float precision
// exactly as synthesize rounds it.
Eigen::VectorXd synthesize_raw(const MorphableHairModel& model, const Eigen::VectorXd& beta_shape, double beta_s);

// Distances (mean_d + B beta_shape) are rounded to float, multiplied by
// beta_s, then clamped and zero-coupled; albedo is mean_a + A beta_alb
// clamped to [0,1].
RayDistanceField synthesize(const MorphableHairModel& model, const HairCoefficients& coeffs);
RayDistanceField mean_field(const MorphableHairModel& model);

Eigen::VectorXd project(const MorphableHairModel& model, const RayDistanceField& field);
Eigen::VectorXd project_albedo(const MorphableHairModel& model, const RayDistanceField& field);

// SRMM binary format, little-endian:
//   "SRMM" | u16 version | u16 reserved | u32 n_s | u32 n_r | u32 N | u32 K
//   u32 K_a | u32 n_samples | 32-byte template hash | 32-byte scalp hash
//   f64 mean_d[N] | f64 shape_sv[K] | f64 shape_basis[N*K] (column-major)
//   f64 mean_a[3N] | f64 albedo_sv[K_a] | f64 albedo_basis[3N*K_a]
inline constexpr std::uint16_t kModelFormatVersion = 1;
std::basic_string<std::uint8_t> encode_model(const MorphableHairModel& model);
MorphableHairModel decode_model(std::span<const std::uint8_t> bytes, const std::string& name = "<model>");
void save_model(const std::string& path, const MorphableHairModel& model);
MorphableHairModel load_model(const std::string& path);

// {"beta_shape": [...], "beta_alb": [...], "beta_s": s}; missing arrays are zero.
HairCoefficients parse_coefficients(const std::string& text, const MorphableHairModel& model);
std::string format_coefficients(const HairCoefficients& coeffs);

}  // namespace srm
