#pragma once

#include "srm/mesh.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace srm {

// Real spherical harmonics, bands 0-2, in the order
//   1, y, z, x, xy, yz, 3z^2 - 1, xz, x^2 - y^2
// with constants 1/(2 sqrt(pi)), sqrt(3/(4 pi)), sqrt(15/(4 pi)),
// sqrt(5/(16 pi)) and sqrt(15/(16 pi)).
using ShBasis = std::array<double, 9>;
using ShCoefficients = std::array<Vec3, 9>;

inline constexpr double kShUnitTolerance = 1e-6;

// Throws Error(argument) unless |n| = 1 within 1e-6.
ShBasis sh_basis(const Vec3& n);

// albedo * sum_k coeffs[k] * basis_k(n), per vertex, without clamping.
std::vector<Vec3> shade_unclamped(std::span<const Vec3> albedo, std::span<const Vec3> normals,
                                  const ShCoefficients& coeffs);
// Same, clamped to [0,1].
std::vector<Vec3> shade(std::span<const Vec3> albedo, std::span<const Vec3> normals, const ShCoefficients& coeffs);

// Nine RGB triples as a JSON array of arrays.
ShCoefficients parse_sh_coefficients(const std::string& text);

}  // namespace srm
