#pragma once

#include "srm/accel.hpp"
#include "srm/mesh.hpp"
#include "srm/scalp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace srm {

enum class FixtureKind { sphere_head, shell_cap_hair, asymmetric_cap, two_cap, noisy_shell };

std::string_view to_string(FixtureKind kind);
FixtureKind parse_fixture_kind(std::string_view name);

// Region of the hair shell: directions within half_angle_deg of axis.
struct Cap {
  Vec3 axis = Vec3::UnitZ();
  double half_angle_deg = 60.0;
};

struct FixtureRecipe {
  FixtureKind kind = FixtureKind::shell_cap_hair;
  double head_radius = 1.0;
  double inner_radius = 1.2;
  double outer_radius = 1.5;
  std::vector<Cap> caps;
  int head_level = 4;
  int hair_level = 6;
  int scalp_count = 200;
  double scalp_cap_deg = 50.0;  // scalp vertices lie within this polar angle of +z
  double noise = 0.0;           // relative radial noise amplitude (noisy-shell)
  Vec3 base_color{0.35, 0.22, 0.12};
  std::uint64_t seed = 0;
};

// Nominal parameters for each kind.
FixtureRecipe default_recipe(FixtureKind kind, std::uint64_t seed = 0);

// Deterministic jitter of cap extent, radii, tilt and color. Index 0 returns
// the base recipe unchanged.
FixtureRecipe variant(const FixtureRecipe& base, int index, std::uint64_t seed);

void validate(const FixtureRecipe& recipe);

// Icosphere with midpoint subdivision; exactly mirror-symmetric across x = 0.
// Level L has 10 * 4^L + 2 vertices and 20 * 4^L faces.
TriMesh icosphere(int level, double radius = 1.0);

// Closed shell between two spheres restricted to a cap, tessellated from an
// icosphere of the given level. The rim is cut exactly on the cone.
TriMesh shell_cap(const Cap& cap, double inner_radius, double outer_radius, int level);

// First and last crossing of the ray with the union of the recipe's shell
// caps, or nullopt on a miss. Only for kinds without noise.
std::optional<std::pair<double, double>> shell_oracle(const FixtureRecipe& recipe, const Ray& ray);

// Scalp vertices on the head within scalp_cap_deg of +z, left side x > 0,
// chosen by farthest-point sampling and paired with their exact mirrors.
ScalpSpec select_scalp(const TriMesh& head, int count, double cap_deg, const std::string& topology);

struct Fixture {
  FixtureRecipe recipe;
  TriMesh head;
  ScalpSpec scalp;
  TriMesh hair;  // empty for sphere-head
  bool has_oracle = false;
};

Fixture generate(const FixtureRecipe& recipe);

// Head and scalp only; shared by every variant of a recipe family.
TriMesh fixture_head(const FixtureRecipe& recipe);
ScalpSpec fixture_scalp(const FixtureRecipe& recipe, const TriMesh& head);
TriMesh fixture_hair(const FixtureRecipe& recipe);

std::string format_recipe(const FixtureRecipe& recipe);

}  // namespace srm
