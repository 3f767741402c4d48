#include "srm/fixtures.hpp"

#include "srm/error.hpp"

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>

namespace srm {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double cos_deg(double deg) { return deg == 90.0 ? 0.0 : std::cos(deg * kDeg); }

Vec3 tilted_axis(double deg) { return {std::sin(deg * kDeg), 0.0, std::cos(deg * kDeg)}; }

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  double operator()() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

std::string_view to_string(FixtureKind kind) {
  switch (kind) {
    case FixtureKind::sphere_head: return "sphere-head";
    case FixtureKind::shell_cap_hair: return "shell-cap-hair";
    case FixtureKind::asymmetric_cap: return "asymmetric-cap";
    case FixtureKind::two_cap: return "two-cap";
    case FixtureKind::noisy_shell: return "noisy-shell";
  }
  return "unknown";
}

FixtureKind parse_fixture_kind(std::string_view name) {
  for (auto k : {FixtureKind::sphere_head, FixtureKind::shell_cap_hair, FixtureKind::asymmetric_cap,
                 FixtureKind::two_cap, FixtureKind::noisy_shell}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::argument, "unknown fixture kind '" + std::string(name) + "'");
}

FixtureRecipe default_recipe(FixtureKind kind, std::uint64_t seed) {
  FixtureRecipe r;
  r.kind = kind;
  r.seed = seed;
  switch (kind) {
    case FixtureKind::sphere_head:
      break;
    case FixtureKind::shell_cap_hair:
      r.caps = {{Vec3::UnitZ(), 60.0}};
      break;
    case FixtureKind::asymmetric_cap:
      r.caps = {{tilted_axis(30.0), 45.0}};
      break;
    case FixtureKind::two_cap:
      r.caps = {{tilted_axis(60.0), 20.0}, {tilted_axis(-60.0), 20.0}};
      break;
    case FixtureKind::noisy_shell:
      r.caps = {{Vec3::UnitZ(), 60.0}};
      r.noise = 0.02;
      break;
  }
  return r;
}

void validate(const FixtureRecipe& r) {
  if (!(r.head_radius > 0)) throw Error(ErrorCode::argument, "fixture head radius must be positive");
  if (!(r.inner_radius > r.head_radius)) throw Error(ErrorCode::argument, "hair inner radius must exceed the head radius");
  if (!(r.outer_radius > r.inner_radius)) throw Error(ErrorCode::argument, "hair outer radius must exceed the inner radius");
  if (r.head_level < 0 || r.head_level > 8 || r.hair_level < 0 || r.hair_level > 8) {
    throw Error(ErrorCode::argument, "icosphere levels must lie in [0, 8]");
  }
  if (r.scalp_count < 2 || r.scalp_count % 2 != 0) throw Error(ErrorCode::argument, "scalp count must be even and >= 2");
  if (!(r.scalp_cap_deg > 0 && r.scalp_cap_deg <= 90)) throw Error(ErrorCode::argument, "scalp cap must lie in (0, 90] degrees");
  if (!(r.noise >= 0 && r.noise < 0.1)) throw Error(ErrorCode::argument, "noise must lie in [0, 0.1)");
  if (r.kind != FixtureKind::sphere_head && r.caps.empty()) throw Error(ErrorCode::argument, "hair fixture needs a cap");
  for (const auto& c : r.caps) {
    if (!(c.half_angle_deg > 0 && c.half_angle_deg <= 90)) {
      throw Error(ErrorCode::argument, "cap half-angle must lie in (0, 90] degrees");
    }
    if (!(c.axis.norm() > 0.5) || std::abs(c.axis.norm() - 1) > 1e-9) throw Error(ErrorCode::argument, "cap axis must be unit length");
  }
  if (!((r.base_color.array() >= 0).all() && (r.base_color.array() <= 1).all())) {
    throw Error(ErrorCode::argument, "base color must lie in [0,1]");
  }
}

FixtureRecipe variant(const FixtureRecipe& base, int index, std::uint64_t seed) {
  if (index == 0) return base;
  FixtureRecipe r = base;
  Uniform u(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(index));
  r.seed = seed + static_cast<std::uint64_t>(index);
  r.inner_radius = base.inner_radius + u(-0.05, 0.05);
  r.outer_radius = base.outer_radius + u(-0.08, 0.08);
  for (auto& c : r.caps) {
    c.half_angle_deg = std::clamp(c.half_angle_deg + u(-6.0, 6.0), 5.0, 90.0);
    const double tilt = u(-8.0, 8.0);
    c.axis = (Eigen::AngleAxisd(tilt * kDeg, Vec3::UnitY()) * c.axis).normalized();
  }
  for (int k = 0; k < 3; ++k) r.base_color[k] = std::clamp(base.base_color[k] + u(-0.08, 0.08), 0.0, 1.0);
  return r;
}

// ---------------------------------------------------------------------------
// Geometry

TriMesh icosphere(int level, double radius) {
  if (level < 0 || level > 9) throw Error(ErrorCode::argument, "icosphere level must lie in [0, 9]");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                         {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                         {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      auto key = std::minmax(a, b);
      auto [it, inserted] = mid.try_emplace({key.first, key.second}, static_cast<std::uint32_t>(v.size()));
      if (inserted) v.push_back((v[a] + v[b]).normalized());
      return it->second;
    };
    std::vector<Face> next;
    next.reserve(4 * f.size());
    for (const auto& t3 : f) {
      const auto a = midpoint(t3[0], t3[1]), b = midpoint(t3[1], t3[2]), c = midpoint(t3[2], t3[0]);
      next.push_back({t3[0], a, c});
      next.push_back({t3[1], b, a});
      next.push_back({t3[2], c, b});
      next.push_back({a, b, c});
    }
    f.swap(next);
  }
  TriMesh m;
  m.vertices.reserve(v.size());
  for (const auto& p : v) m.vertices.push_back(radius * p);
  m.faces = std::move(f);
  return m;
}

namespace {

// Unit-sphere cap around +z, clipped on the great-circle arcs crossing the rim.
TriMesh unit_cap(double half_angle_deg, int level) {
  const TriMesh u = icosphere(level);
  const double c = cos_deg(half_angle_deg);
  auto inside = [&](const Vec3& p) { return p.z() >= c; };

  TriMesh cap;
  std::vector<std::uint32_t> remap(u.vertices.size(), std::numeric_limits<std::uint32_t>::max());
  auto keep = [&](std::uint32_t i) {
    if (remap[i] == std::numeric_limits<std::uint32_t>::max()) {
      remap[i] = static_cast<std::uint32_t>(cap.vertices.size());
      cap.vertices.push_back(u.vertices[i]);
    }
    return remap[i];
  };
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> crossings;
  auto crossing = [&](std::uint32_t i, std::uint32_t j) {
    auto key = std::minmax(i, j);
    auto it = crossings.find({key.first, key.second});
    if (it != crossings.end()) return it->second;
    // bisect from the inside end so mirrored edges give mirrored points
    const std::uint32_t in_id = inside(u.vertices[i]) ? i : j;
    const Vec3 p = u.vertices[in_id], q = u.vertices[in_id == i ? j : i];
    double lo = 0, hi = 1;
    for (int k = 0; k < 80; ++k) {
      const double m = 0.5 * (lo + hi);
      if (inside((p + m * (q - p)).normalized())) lo = m; else hi = m;
    }
    std::uint32_t id;
    if (lo == 0) {
      id = keep(in_id);  // inside end already on the rim
    } else {
      id = static_cast<std::uint32_t>(cap.vertices.size());
      cap.vertices.push_back((p + lo * (q - p)).normalized());
    }
    crossings.emplace(std::make_pair(key.first, key.second), id);
    return id;
  };

  for (const auto& f : u.faces) {
    const bool in[3] = {inside(u.vertices[f[0]]), inside(u.vertices[f[1]]), inside(u.vertices[f[2]])};
    if (!in[0] && !in[1] && !in[2]) continue;
    std::vector<std::uint32_t> poly;
    for (int k = 0; k < 3; ++k) {
      const auto a = f[k], b = f[(k + 1) % 3];
      if (in[k]) poly.push_back(keep(a));
      if (in[k] != in[(k + 1) % 3]) poly.push_back(crossing(a, b));
    }
    poly.erase(std::unique(poly.begin(), poly.end()), poly.end());
    if (poly.size() > 1 && poly.front() == poly.back()) poly.pop_back();
    if (poly.size() < 3) continue;
    auto emit = [&](const Face& t) {
      if (triangle_area(cap.vertices[t[0]], cap.vertices[t[1]], cap.vertices[t[2]]) > 0) cap.faces.push_back(t);
    };
    if (poly.size() != 4) {
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) emit({poly[0], poly[k], poly[k + 1]});
      continue;
    }
    // quads fan around their center since a diagonal would break mirror
    // symmetry; opposite corners are summed first so the start corner is irrelevant
    const Vec3 mid = (cap.vertices[poly[0]] + cap.vertices[poly[2]]) + (cap.vertices[poly[1]] + cap.vertices[poly[3]]);
    const auto center = static_cast<std::uint32_t>(cap.vertices.size());
    cap.vertices.push_back(mid.normalized());
    for (std::size_t k = 0; k < poly.size(); ++k) emit({center, poly[k], poly[(k + 1) % poly.size()]});
  }
  return cap;
}

Vec3 hair_color(const FixtureRecipe& r, const Vec3& p, double radial_fraction) {
  const Vec3 d = p.normalized();
  Vec3 c = r.base_color;
  c += 0.10 * d.z() * Vec3(1.0, 0.8, 0.6);
  c += 0.05 * d.y() * Vec3(0.3, 0.6, 1.0);
  c += 0.04 * std::abs(d.x()) * Vec3(1.0, 1.0, 1.0);
  c += 0.08 * radial_fraction * Vec3(1.0, 0.9, 0.7);
  return c.cwiseMax(0.0).cwiseMin(1.0);
}

TriMesh shell_from_cap(const TriMesh& cap, double r_in, double r_out) {
  const auto n = static_cast<std::uint32_t>(cap.vertices.size());
  TriMesh m;
  m.vertices.reserve(2 * n);
  for (const auto& p : cap.vertices) m.vertices.push_back(r_out * p);
  for (const auto& p : cap.vertices) m.vertices.push_back(r_in * p);
  m.faces.reserve(2 * cap.faces.size());
  for (const auto& f : cap.faces) m.faces.push_back(f);
  for (const auto& f : cap.faces) m.faces.push_back({f[2] + n, f[1] + n, f[0] + n});

  // rim band: directed edges without a reverse twin
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
  for (const auto& f : cap.faces) {
    for (int k = 0; k < 3; ++k) ++edges[{f[k], f[(k + 1) % 3]}];
  }
  for (const auto& f : cap.faces) {
    for (int k = 0; k < 3; ++k) {
      const auto p = f[k], q = f[(k + 1) % 3];
      if (edges.count({q, p})) continue;
      m.faces.push_back({q, p, p + n});
      m.faces.push_back({q, p + n, q + n});
    }
  }
  return m;
}

void rotate_to(TriMesh& m, const Vec3& axis) {
  if (axis == Vec3::UnitZ()) return;
  const Eigen::Matrix3d rot = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), axis).toRotationMatrix();
  for (auto& p : m.vertices) p = rot * p;
}

void append(TriMesh& dst, const TriMesh& src) {
  const auto base = static_cast<std::uint32_t>(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  dst.colors.insert(dst.colors.end(), src.colors.begin(), src.colors.end());
  for (const auto& f : src.faces) dst.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
}

}  // namespace

TriMesh shell_cap(const Cap& cap, double inner_radius, double outer_radius, int level) {
  if (!(inner_radius > 0 && outer_radius > inner_radius)) throw Error(ErrorCode::argument, "shell radii must satisfy 0 < inner < outer");
  if (!(cap.half_angle_deg > 0 && cap.half_angle_deg <= 90)) throw Error(ErrorCode::argument, "cap half-angle must lie in (0, 90] degrees");
  auto m = shell_from_cap(unit_cap(cap.half_angle_deg, level), inner_radius, outer_radius);
  rotate_to(m, cap.axis.normalized());
  return m;
}

TriMesh fixture_head(const FixtureRecipe& r) {
  validate(r);
  return icosphere(r.head_level, r.head_radius);
}

ScalpSpec fixture_scalp(const FixtureRecipe& r, const TriMesh& head) {
  return select_scalp(head, r.scalp_count, r.scalp_cap_deg,
                      "srm-icosphere-L" + std::to_string(r.head_level));
}

TriMesh fixture_hair(const FixtureRecipe& r) {
  validate(r);
  TriMesh hair;
  Uniform noise(r.seed ^ 0x5EEDF00Dull);
  for (const auto& cap : r.caps) {
    const TriMesh unit = unit_cap(cap.half_angle_deg, r.hair_level);
    TriMesh part = shell_from_cap(unit, r.inner_radius, r.outer_radius);
    const auto n = unit.vertices.size();
    part.colors.resize(part.vertices.size());
    for (std::size_t k = 0; k < part.vertices.size(); ++k) {
      const bool outer = k < n;
      if (r.noise > 0) part.vertices[k] *= 1.0 + r.noise * noise(-1.0, 1.0);
      part.colors[k] = hair_color(r, part.vertices[k], outer ? 1.0 : 0.0);
    }
    rotate_to(part, cap.axis.normalized());
    append(hair, part);
  }
  if (r.kind != FixtureKind::sphere_head) validate(hair);
  return hair;
}

Fixture generate(const FixtureRecipe& recipe) {
  Fixture fx;
  fx.recipe = recipe;
  fx.head = fixture_head(recipe);
  fx.scalp = fixture_scalp(recipe, fx.head);
  if (recipe.kind != FixtureKind::sphere_head) fx.hair = fixture_hair(recipe);
  fx.has_oracle = recipe.kind != FixtureKind::sphere_head && recipe.noise == 0;
  return fx;
}

// ---------------------------------------------------------------------------
// Analytic oracle

std::optional<std::pair<double, double>> shell_oracle(const FixtureRecipe& r, const Ray& ray) {
  if (r.noise != 0) throw Error(ErrorCode::argument, "noisy fixtures have no analytic oracle");
  const Vec3& o = ray.origin;
  const Vec3& d = ray.direction;
  constexpr double kSlack = 1e-9;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto accept = [&](double t) {
    if (t < 0) return;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  };

  for (const auto& cap : r.caps) {
    const Vec3 a = cap.axis.normalized();
    const double c = cos_deg(cap.half_angle_deg);
    auto in_cap = [&](const Vec3& p) { return p.dot(a) >= c * p.norm() - kSlack; };
    auto in_shell = [&](const Vec3& p) {
      const double n = p.norm();
      return n >= r.inner_radius - kSlack && n <= r.outer_radius + kSlack;
    };

    for (double radius : {r.inner_radius, r.outer_radius}) {
      const double b = o.dot(d);
      const double disc = b * b - (o.squaredNorm() - radius * radius);
      if (disc < 0) continue;
      const double s = std::sqrt(disc);
      for (double t : {-b - s, -b + s}) {
        if (t >= 0 && in_cap(o + t * d)) accept(t);
      }
    }

    const double oa = o.dot(a), da = d.dot(a);
    if (c == 0.0) {
      if (da != 0) {
        const double t = -oa / da;
        if (t >= 0 && in_shell(o + t * d)) accept(t);
      }
      continue;
    }
    const double c2 = c * c;
    const double qa = da * da - c2;
    const double qb = 2 * (oa * da - c2 * o.dot(d));
    const double qc = oa * oa - c2 * o.squaredNorm();
    std::vector<double> roots;
    if (std::abs(qa) < 1e-14) {
      if (qb != 0) roots.push_back(-qc / qb);
    } else {
      const double disc = qb * qb - 4 * qa * qc;
      if (disc >= 0) {
        const double s = std::sqrt(disc);
        const double q = -0.5 * (qb + std::copysign(s, qb));
        roots.push_back(q / qa);
        if (q != 0) roots.push_back(qc / q);
      }
    }
    for (double t : roots) {
      const Vec3 p = o + t * d;
      if (t >= 0 && p.dot(a) >= 0 && in_shell(p)) accept(t);
    }
  }
  if (!(lo <= hi)) return std::nullopt;
  return std::make_pair(lo, hi);
}

// ---------------------------------------------------------------------------
// Scalp selection

ScalpSpec select_scalp(const TriMesh& head, int count, double cap_deg, const std::string& topology) {
  if (count < 2 || count % 2 != 0) throw Error(ErrorCode::argument, "scalp count must be even and >= 2");
  const double c = cos_deg(cap_deg);
  std::map<std::array<double, 3>, std::uint32_t> by_position;
  for (std::uint32_t k = 0; k < head.vertices.size(); ++k) {
    const auto& p = head.vertices[k];
    by_position.emplace(std::array<double, 3>{p.x(), p.y(), p.z()}, k);
  }

  struct Candidate {
    std::uint32_t left, right;
    double polar_cos;
  };
  std::vector<Candidate> cands;
  for (std::uint32_t k = 0; k < head.vertices.size(); ++k) {
    const auto& p = head.vertices[k];
    const double n = p.norm();
    if (!(p.x() > 0) || !(n > 0) || p.z() / n < c) continue;
    auto it = by_position.find({-p.x(), p.y(), p.z()});
    if (it == by_position.end()) continue;
    cands.push_back({k, it->second, p.z() / n});
  }
  const auto half = static_cast<std::size_t>(count / 2);
  if (cands.size() < half) {
    throw Error(ErrorCode::argument, "head offers only " + std::to_string(cands.size()) +
                                         " mirrored left vertices in the scalp cap, " + std::to_string(half) + " needed");
  }

  // farthest-point sampling from the vertex nearest the crown
  std::size_t first = 0;
  for (std::size_t k = 1; k < cands.size(); ++k) {
    if (cands[k].polar_cos > cands[first].polar_cos) first = k;
  }
  std::vector<double> dist(cands.size(), std::numeric_limits<double>::infinity());
  std::vector<std::size_t> chosen;
  std::size_t next = first;
  while (chosen.size() < half) {
    chosen.push_back(next);
    const Vec3& q = head.vertices[cands[next].left];
    std::size_t best = 0;
    double best_d = -1;
    for (std::size_t k = 0; k < cands.size(); ++k) {
      dist[k] = std::min(dist[k], (head.vertices[cands[k].left] - q).squaredNorm());
      if (dist[k] > best_d) {
        best_d = dist[k];
        best = k;
      }
    }
    next = best;
  }

  ScalpSpec spec;
  spec.head_topology = topology;
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    const auto& cand = cands[chosen[k]];
    const auto i = static_cast<std::uint32_t>(2 * k);
    spec.vertex_ids.push_back(cand.left);
    spec.pair_of.push_back(i + 1);
    spec.side.push_back(Side::left);
    spec.vertex_ids.push_back(cand.right);
    spec.pair_of.push_back(i);
    spec.side.push_back(Side::right);
  }
  validate(spec);
  return spec;
}

std::string format_recipe(const FixtureRecipe& r) {
  nlohmann::json caps = nlohmann::json::array();
  for (const auto& c : r.caps) {
    caps.push_back({{"axis", {c.axis.x(), c.axis.y(), c.axis.z()}}, {"half_angle_deg", c.half_angle_deg}});
  }
  nlohmann::json j = {{"format", "srm-fixture"},
                      {"version", 1},
                      {"kind", std::string(to_string(r.kind))},
                      {"head_radius", r.head_radius},
                      {"inner_radius", r.inner_radius},
                      {"outer_radius", r.outer_radius},
                      {"caps", caps},
                      {"head_level", r.head_level},
                      {"hair_level", r.hair_level},
                      {"scalp_count", r.scalp_count},
                      {"scalp_cap_deg", r.scalp_cap_deg},
                      {"noise", r.noise},
                      {"base_color", {r.base_color.x(), r.base_color.y(), r.base_color.z()}},
                      {"seed", r.seed}};
  return j.dump(2) + "\n";
}

}  // namespace srm
