#include "srm/shading.hpp"

#include "srm/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>

namespace srm {

namespace {

constexpr double kPi = std::numbers::pi;
const double kC0 = 0.5 / std::sqrt(kPi);
const double kC1 = std::sqrt(3.0 / (4.0 * kPi));
const double kC2 = std::sqrt(15.0 / (4.0 * kPi));
const double kC3 = std::sqrt(5.0 / (16.0 * kPi));
const double kC4 = std::sqrt(15.0 / (16.0 * kPi));

}  // namespace

ShBasis sh_basis(const Vec3& n) {
  if (!n.allFinite() || std::abs(n.norm() - 1.0) > kShUnitTolerance) {
    throw Error(ErrorCode::argument, "spherical harmonics need a unit normal");
  }
  const double x = n.x(), y = n.y(), z = n.z();
  return {kC0,         kC1 * y,     kC1 * z, kC1 * x, kC2 * x * y, kC2 * y * z, kC3 * (3 * z * z - 1),
          kC2 * x * z, kC4 * (x * x - y * y)};
}

std::vector<Vec3> shade_unclamped(std::span<const Vec3> albedo, std::span<const Vec3> normals,
                                  const ShCoefficients& coeffs) {
  if (albedo.size() != normals.size()) throw Error(ErrorCode::argument, "albedo and normal counts differ");
  for (const auto& c : coeffs) {
    if (!c.allFinite()) throw Error(ErrorCode::argument, "SH coefficients must be finite");
  }
  std::vector<Vec3> out(albedo.size());
  for (std::size_t v = 0; v < albedo.size(); ++v) {
    const auto b = sh_basis(normals[v]);
    Vec3 light = Vec3::Zero();
    for (int k = 0; k < 9; ++k) light += b[k] * coeffs[k];
    out[v] = albedo[v].cwiseProduct(light);
  }
  return out;
}

std::vector<Vec3> shade(std::span<const Vec3> albedo, std::span<const Vec3> normals, const ShCoefficients& coeffs) {
  auto out = shade_unclamped(albedo, normals, coeffs);
  for (auto& c : out) c = c.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

ShCoefficients parse_sh_coefficients(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::parse, std::string("SH coefficients: ") + e.what());
  }
  if (j.is_object() && j.contains("sh")) j = j["sh"];
  if (!j.is_array() || j.size() != 9) throw Error(ErrorCode::validation, "SH coefficients: expected 9 RGB triples");
  ShCoefficients c;
  for (std::size_t k = 0; k < 9; ++k) {
    const auto& t = j[k];
    if (!t.is_array() || t.size() != 3) throw Error(ErrorCode::validation, "SH coefficients: expected 9 RGB triples");
    for (std::size_t a = 0; a < 3; ++a) {
      if (!t[a].is_number()) throw Error(ErrorCode::validation, "SH coefficients: values must be numbers");
      c[k][static_cast<int>(a)] = t[a].get<double>();
    }
    if (!c[k].allFinite()) throw Error(ErrorCode::validation, "SH coefficients must be finite");
  }
  return c;
}

}  // namespace srm
