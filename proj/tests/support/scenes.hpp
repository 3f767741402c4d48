#pragma once

// Small deterministic scenes shared by the unit tests.

#include "srm/field.hpp"
#include "srm/fixtures.hpp"
#include "srm/scalp.hpp"

namespace scene {

struct Captured {
  srm::Fixture fixture;
  srm::RayTemplate tmpl;
  srm::RaySet rays;
  srm::RayDistanceField field;
};

inline srm::FixtureRecipe small_recipe(srm::FixtureKind kind) {
  auto r = srm::default_recipe(kind);
  r.head_level = 3;
  r.hair_level = 5;
  r.scalp_count = 60;
  return r;
}

inline Captured capture(const srm::FixtureRecipe& recipe, int n_rays = 25) {
  Captured c;
  c.fixture = srm::generate(recipe);
  c.tmpl = srm::make_template(n_rays);
  c.rays = srm::make_rays(c.fixture.head, c.fixture.scalp, c.tmpl);
  if (!c.fixture.hair.faces.empty()) {
    c.field = srm::analyze(c.fixture.hair, c.rays);
  } else {
    c.field = srm::RayDistanceField::empty(c.rays.n_s, c.rays.n_r, c.rays.template_hash, c.rays.scalp_hash);
  }
  return c;
}

inline Captured capture(srm::FixtureKind kind, int n_rays = 25) { return capture(small_recipe(kind), n_rays); }

inline std::size_t support(const srm::RayDistanceField& f) {
  std::size_t n = 0;
  for (float v : f.d_max) n += v != 0;
  return n;
}

inline bool invariants_hold(const srm::RayDistanceField& f) {
  for (std::size_t e = 0; e < f.entries(); ++e) {
    if (!(f.d_min[e] <= f.d_max[e])) return false;
    if ((f.d_min[e] == 0) != (f.d_max[e] == 0)) return false;
    if (!std::isfinite(f.d_min[e]) || !std::isfinite(f.d_max[e]) || f.d_min[e] < 0) return false;
  }
  return true;
}

}  // namespace scene
