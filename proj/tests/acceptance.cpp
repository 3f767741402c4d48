// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "support/oracles.hpp"

#include "srm/accel.hpp"
#include "srm/error.hpp"
#include "srm/extract.hpp"
#include "srm/field.hpp"
#include "srm/fixtures.hpp"
#include "srm/kdtree.hpp"
#include "srm/metrics.hpp"
#include "srm/morphable.hpp"
#include "srm/service.hpp"
#include "srm/shading.hpp"

#include <nlohmann/json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using srm::Vec3;

namespace {

constexpr double kPi = 3.14159265358979323846;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failures so one criterion reports every broken sub-check.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      failures_ += (failures_.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : ", ") + s; }
  Outcome done() const { return {pass_, pass_ ? notes_ : failures_ + " | " + notes_}; }

 private:
  bool pass_ = true;
  std::string failures_, notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

srm::Fixture shell_fixture(int head_level, int scalp, double scalp_cap, int hair_level) {
  auto r = srm::default_recipe(srm::FixtureKind::shell_cap_hair);
  r.head_level = head_level;
  r.scalp_count = scalp;
  r.scalp_cap_deg = scalp_cap;
  r.hair_level = hair_level;
  return srm::generate(r);
}

bool invariants_hold(const srm::RayDistanceField& f) {
  for (std::size_t e = 0; e < f.entries(); ++e) {
    if (!(f.d_min[e] <= f.d_max[e]) || (f.d_min[e] == 0) != (f.d_max[e] == 0) || f.d_min[e] < 0) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Outcome analytic_oracle() {
  Checks c;
  const auto fx = shell_fixture(5, 900, 60, 7);
  const auto tmpl = srm::make_template(25);
  const auto rays = srm::make_rays(fx.head, fx.scalp, tmpl);
  c.expect(rays.n_s == 900 && rays.n_r == 25, "ray set is not 900 x 25");
  c.expect(fx.hair.faces.size() >= 50000, "hair mesh below 50k triangles");
  const auto t0 = Clock::now();
  const auto field = srm::analyze(fx.hair, rays);
  const double secs = seconds_since(t0);
  std::size_t hits = 0, good = 0;
  for (std::size_t i = 0; i < rays.n_s; ++i) {
    for (std::size_t n = 0; n < rays.n_r; ++n) {
      const auto e = field.index(i, n);
      const auto exact = srm::shell_oracle(fx.recipe, rays.ray(i, n));
      if (!exact) continue;
      ++hits;
      good += field.d_max[e] != 0 && std::abs(field.d_min[e] - exact->first) <= 1e-4 &&
              std::abs(field.d_max[e] - exact->second) <= 1e-4;
    }
  }
  const double frac = hits ? double(good) / hits : 0;
  c.expect(hits > 1000, "too few hitting rays");
  c.expect(frac >= 0.99, "fraction within 1e-4 below 0.99");
  c.expect(secs <= 2.0, "analyze slower than 2 s");
  c.note(std::to_string(fx.hair.faces.size()) + " triangles");
  c.note(std::to_string(hits) + " hitting rays");
  c.note(fmt("%.4f within 1e-4", frac));
  c.note(fmt("analyze %.3f s", secs));
  return c.done();
}

Outcome bvh_vs_brute_force() {
  Checks c;
  std::vector<std::pair<std::string, srm::TriMesh>> meshes;
  auto head = srm::icosphere(4);
  meshes.emplace_back("head", head);
  auto r = srm::default_recipe(srm::FixtureKind::asymmetric_cap);
  r.hair_level = 5;
  meshes.emplace_back("asymmetric-cap", srm::fixture_hair(r));
  r = srm::default_recipe(srm::FixtureKind::two_cap);
  r.hair_level = 6;
  meshes.emplace_back("two-cap", srm::fixture_hair(r));
  oracle::Rng rng(2024);
  std::size_t total_hits = 0;
  for (const auto& [name, mesh] : meshes) {
    const srm::AccelIndex index(mesh);
    std::size_t mismatches = 0;
    for (int k = 0; k < 10000; ++k) {
      // half the rays start inside the unit ball, half outside aimed at it
      srm::Ray ray;
      if (k % 2 == 0) {
        ray = {rng.in_box(0.5), rng.unit()};
      } else {
        const Vec3 o = 3.0 * rng.unit();
        ray = {o, (rng.in_box(1.2) - o).normalized()};
      }
      const auto a = index.cast_all_hits(ray);
      const auto b = oracle::brute_force_hits(mesh, ray);
      bool same = a.size() == b.size();
      for (std::size_t h = 0; same && h < a.size(); ++h) same = std::abs(a[h].t - b[h].t) <= 1e-9;
      mismatches += !same;
      total_hits += b.size();
    }
    c.expect(mismatches == 0, name + ": " + std::to_string(mismatches) + " mismatched rays");
    c.note(name + " " + std::to_string(mesh.faces.size()) + " tris");
  }
  c.note("3 x 10000 rays, " + std::to_string(total_hits) + " hits");
  return c.done();
}

Outcome reconstruction_fidelity() {
  Checks c;
  const auto fx = shell_fixture(4, 200, 50, 5);
  const auto rays = srm::make_rays(fx.head, fx.scalp, srm::make_template(25));
  const auto field = srm::analyze(fx.hair, rays);
  const auto recon = srm::reconstruct_vertices(field, rays, true);
  double worst = 0;
  for (const auto& p : recon.points) worst = std::max(worst, oracle::point_mesh_distance(p, fx.hair));
  c.expect(!recon.points.empty(), "no reconstructed vertices");
  c.expect(worst <= 1e-6, "vertex farther than 1e-6 from the hair mesh");
  c.note(std::to_string(recon.points.size()) + " vertices");
  c.note(fmt("max distance %.2e", worst));
  return c.done();
}

std::vector<srm::RayDistanceField> training_fields(const srm::RaySet& rays, const srm::FixtureRecipe& base, int count) {
  std::vector<srm::RayDistanceField> out;
  for (int k = 0; k < count; ++k) out.push_back(srm::analyze(srm::fixture_hair(srm::variant(base, k, 99)), rays));
  return out;
}

Outcome pca_identities() {
  Checks c;
  auto recipe = srm::default_recipe(srm::FixtureKind::asymmetric_cap);
  recipe.head_level = 3;
  recipe.scalp_count = 60;
  recipe.hair_level = 5;
  const auto fx = srm::generate(recipe);
  const auto rays = srm::make_rays(fx.head, fx.scalp, srm::make_template(25));
  const auto fields = training_fields(rays, recipe, 20);

  // two samples
  std::vector<srm::RayDistanceField> two{fields[3], fields[4]};
  const auto m2 = srm::build_model(two, 1, 0);
  const auto x1 = srm::distance_vector(two[0]), x2 = srm::distance_vector(two[1]);
  double two_err = 0;
  for (const auto& target : {x1, x2}) {
    double best = 1e300;
    for (double s : {1.0, -1.0}) {
      Eigen::VectorXd beta(1);
      beta[0] = s / std::sqrt(2.0);
      best = std::min(best, (srm::synthesize_raw(m2, beta, 1.0) - target).norm() / target.norm());
    }
    two_err = std::max(two_err, best);
  }
  c.expect(two_err <= 1e-5, "two-sample closed form off");
  c.expect((m2.mean_d - 0.5 * (x1 + x2)).cwiseAbs().maxCoeff() <= 1e-12, "two-sample mean off");
  c.note(fmt("two-sample rel err %.1e", two_err));

  // full-mode round trip
  const auto full = srm::build_model(fields, 19, 0);
  double round = 0;
  for (const auto& f : fields) {
    const auto x = srm::distance_vector(f);
    round = std::max(round, (srm::synthesize_raw(full, srm::project(full, f), 1.0) - x).norm() / x.norm());
  }
  c.expect(round <= 1e-4, "full-mode round trip above 1e-4");
  c.note(fmt("round trip %.1e", round));

  // monotone in K
  double prev = 1e300;
  bool monotone = true;
  for (int k = 0; k <= 19; ++k) {
    const auto m = srm::build_model(fields, k, 0);
    double err = 0;
    for (const auto& f : fields) {
      const Eigen::VectorXd beta = k ? srm::project(m, f) : Eigen::VectorXd();
      err += (m.mean_d + m.shape_basis * beta - srm::distance_vector(f)).squaredNorm();
    }
    monotone &= err <= prev * (1 + 1e-9) + 1e-12;
    prev = err;
  }
  c.expect(monotone, "reconstruction error increased with K");
  c.note("K = 0..19 monotone");
  return c.done();
}

Outcome property_suite() {
  Checks c;
  auto recipe = srm::default_recipe(srm::FixtureKind::asymmetric_cap);
  recipe.head_level = 3;
  recipe.scalp_count = 60;
  recipe.hair_level = 5;
  const auto fx = srm::generate(recipe);
  const auto rays = srm::make_rays(fx.head, fx.scalp, srm::make_template(25));
  const auto fields = training_fields(rays, recipe, 6);
  int checked = 0;
  auto ok = [&](const srm::RayDistanceField& f, const char* op) {
    ++checked;
    c.expect(invariants_hold(f), std::string("invariants broken after ") + op);
  };

  for (const auto& f : fields) {
    ok(f, "analyze");
    const auto once = srm::flip(f, fx.scalp);
    ok(once, "flip");
    c.expect(srm::bitwise_equal(srm::flip(once, fx.scalp), f), "flip is not an involution");

    std::vector<srm::RayDistanceField> pair{f, fields[0]};
    const std::vector<double> w{1.0, 0.0};
    c.expect(srm::bitwise_equal(srm::fuse(pair, w), f), "fuse (1,0) is not the identity");
    const std::vector<double> half{0.5, 0.5};
    ok(srm::fuse(pair, half), "fuse");
    ok(srm::fuse(pair, half, srm::FuseMode::mask_aware), "mask-aware fuse");

    for (double s : {0.5, 2.0, 3.7}) ok(srm::scale_thickness(f, s), "scale_thickness");

    const auto pert = srm::perturb(f, f.entries() / 10, 0.2, 42);
    ok(pert.field, "perturb");
    const auto restored = srm::apply_exclusion(pert.field, pert.truth);
    ok(restored, "apply_exclusion");
    bool kept_equal = true;
    for (std::size_t e = 0; e < f.entries(); ++e) {
      if (pert.truth.ex_min[e] || pert.truth.ex_max[e]) {
        kept_equal &= restored.d_min[e] == 0 && restored.d_max[e] == 0;
      } else {
        kept_equal &= restored.d_min[e] == f.d_min[e] && restored.d_max[e] == f.d_max[e] &&
                      restored.albedo(e, srm::Slot::min) == f.albedo(e, srm::Slot::min) &&
                      restored.albedo(e, srm::Slot::max) == f.albedo(e, srm::Slot::max);
      }
    }
    c.expect(kept_equal, "exclusion did not restore kept coordinates");
  }

  // thickness factorization through the model
  const auto model = srm::build_model(fields, 5, 2);
  oracle::Rng rng(77);
  for (int t = 0; t < 10; ++t) {
    srm::HairCoefficients co{Eigen::VectorXd(5), Eigen::VectorXd(2), 1.0};
    for (int k = 0; k < 5; ++k) co.beta_shape[k] = rng.uniform(-3, 3);
    for (int k = 0; k < 2; ++k) co.beta_alb[k] = rng.uniform(-3, 3);
    const auto unit = srm::synthesize(model, co);
    ok(unit, "synthesize");
    co.beta_s = rng.uniform(0.2, 3);
    c.expect(srm::bitwise_equal(srm::synthesize(model, co), srm::scale_thickness(unit, co.beta_s)),
             "thickness factorization not exact");
  }

  // symmetric fixture
  auto sym = srm::default_recipe(srm::FixtureKind::shell_cap_hair);
  sym.head_level = 3;
  sym.scalp_count = 60;
  sym.hair_level = 5;
  const auto sfx = srm::generate(sym);
  const auto srays = srm::make_rays(sfx.head, sfx.scalp, srm::make_template(25));
  const auto sf = srm::analyze(sfx.hair, srays);
  const auto sflip = srm::flip(sf, sfx.scalp);
  double worst = 0;
  for (std::size_t e = 0; e < sf.entries(); ++e) {
    worst = std::max({worst, double(std::abs(sf.d_min[e] - sflip.d_min[e])), double(std::abs(sf.d_max[e] - sflip.d_max[e]))});
  }
  c.expect(worst <= 1e-6, "symmetric fixture is not flip-invariant");

  // zero coupling on a field with explicit Case-1 entries
  auto z = fields[1];
  for (std::size_t e = 0; e < z.entries(); e += 7) z.d_min[e] = z.d_max[e] = 0;
  for (const auto& g : {srm::flip(z, fx.scalp), srm::scale_thickness(z, 2.5)}) {
    std::size_t zeros = 0;
    for (std::size_t e = 0; e < g.entries(); ++e) zeros += g.d_max[e] == 0;
    c.expect(zeros >= z.entries() / 7, "zero entries lost");
    ok(g, "zero-coupled op");
  }
  c.note(std::to_string(checked) + " invariant checks");
  c.note(fmt("symmetric flip dev %.1e", worst));
  return c.done();
}

std::vector<Vec3> fibonacci_sphere(int n) {
  std::vector<Vec3> pts;
  const double golden = kPi * (3 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    const double z = 1 - 2 * (k + 0.5) / n, r = std::sqrt(1 - z * z);
    pts.emplace_back(r * std::cos(golden * k), r * std::sin(golden * k), z);
  }
  return pts;
}

bool valid_faces(const std::vector<srm::Face>& faces, std::size_t n) {
  for (const auto& f : faces) {
    if (f[0] >= n || f[1] >= n || f[2] >= n || f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) return false;
  }
  return true;
}

Outcome extraction() {
  Checks c;
  oracle::Rng rng(3);
  auto cube = oracle::unit_cube().vertices;
  for (int k = 0; k < 5000; ++k) {
    Vec3 p(rng.uniform(), rng.uniform(), rng.uniform());
    p[rng.below(3)] = rng.below(2);
    cube.push_back(p);
  }
  srm::ExtractParams cp;
  cp.voxel_size = 0.25;
  const auto cf = srm::extract_faces(cube, cp);
  c.expect(!cf.empty() && valid_faces(cf, cube.size()), "cube faces invalid");
  c.expect(cf == srm::extract_faces(cube, cp), "cube extraction not deterministic");

  const auto sphere = fibonacci_sphere(10000);
  srm::ExtractParams sp;
  sp.voxel_size = 0.05;
  const auto sf = srm::extract_faces(sphere, sp);
  c.expect(!sf.empty() && valid_faces(sf, sphere.size()), "sphere faces invalid");
  c.expect(sf == srm::extract_faces(sphere, sp), "sphere extraction not deterministic");
  std::set<std::uint32_t> used;
  for (const auto& f : sf) used.insert(f.begin(), f.end());
  std::vector<Vec3> verts;
  for (auto v : used) verts.push_back(sphere[v]);
  const srm::PointIndex index(verts);
  const double limit = 2 * sp.voxel_size * srm::bbox_diagonal(sphere);
  std::size_t covered = 0;
  for (const auto& p : sphere) covered += std::sqrt(index.nearest(p).distance_sq) <= limit;
  const double coverage = double(covered) / sphere.size();
  c.expect(coverage >= 0.95, "sphere coverage below 95%");
  c.note(std::to_string(cf.size()) + " cube faces");
  c.note(std::to_string(sf.size()) + " sphere faces");
  c.note(fmt("coverage %.4f", coverage));
  return c.done();
}

Outcome metrics() {
  Checks c;
  const auto cube = oracle::unit_cube().vertices;
  double worst = 0;
  for (double eps : {1e-4, 1e-3, 1e-2, 0.05}) {
    auto moved = cube;
    for (auto& p : moved) p.x() += eps;
    worst = std::max(worst, std::abs(srm::chamfer(cube, moved) - 2 * eps * eps));
  }
  c.expect(worst <= 1e-10, "chamfer translation closed form off");
  oracle::Rng rng(5);
  std::vector<Vec3> a, b;
  for (int k = 0; k < 1000; ++k) {
    a.push_back(rng.in_box(1));
    b.push_back(rng.in_box(1));
  }
  double prev = -1;
  bool monotone = true;
  for (int k = 1; k <= 10; ++k) {
    const double r = srm::recall(a, b, 0.01 * k);
    monotone &= r >= prev;
    prev = r;
  }
  c.expect(monotone, "recall not monotone");
  const srm::PointIndex index(b);
  std::size_t wrong = 0;
  for (const auto& q : a) {
    const auto nb = index.nearest(q);
    wrong += nb.index != oracle::nearest_index(q, b) || nb.distance_sq != oracle::nearest_sq(q, b);
  }
  c.expect(wrong == 0, std::to_string(wrong) + " nearest-neighbour mismatches");
  c.note(fmt("chamfer err %.1e", worst));
  c.note("1000 NN queries");
  return c.done();
}

Outcome spherical_harmonics() {
  Checks c;
  oracle::Rng rng(11);
  const int samples = 1000000;
  std::vector<double> gram(81, 0.0);
  for (int s = 0; s < samples; ++s) {
    const auto y = srm::sh_basis(rng.unit());
    for (int i = 0; i < 9; ++i) {
      for (int j = 0; j < 9; ++j) gram[i * 9 + j] += y[i] * y[j];
    }
  }
  double ortho = 0;
  for (int i = 0; i < 9; ++i) {
    for (int j = 0; j < 9; ++j) ortho = std::max(ortho, std::abs(4 * kPi * gram[i * 9 + j] / samples - (i == j)));
  }
  c.expect(ortho <= 1e-2, "basis not orthonormal within 1e-2");

  double rot = 0;
  for (int t = 0; t < 1000; ++t) {
    const Eigen::Matrix3d r = Eigen::AngleAxisd(rng.uniform(0, 2 * kPi), rng.unit()).toRotationMatrix();
    const Vec3 l = rng.unit(), n = rng.unit();
    auto band1 = [](const Vec3& dir) {
      srm::ShCoefficients co;
      co.fill(Vec3::Zero());
      co[1] = Vec3::Constant(dir.y());
      co[2] = Vec3::Constant(dir.z());
      co[3] = Vec3::Constant(dir.x());
      return co;
    };
    const std::vector<Vec3> white{Vec3::Ones()};
    const std::vector<Vec3> n0{n}, n1{(r * n).normalized()};
    const auto s0 = srm::shade_unclamped(white, n0, band1(l));
    const auto s1 = srm::shade_unclamped(white, n1, band1(r * l));
    rot = std::max(rot, (s0[0] - s1[0]).cwiseAbs().maxCoeff());
  }
  c.expect(rot <= 1e-6, "band-1 rotation inconsistent");
  c.note(fmt("orthonormality err %.1e", ortho));
  c.note(fmt("rotation err %.1e", rot));
  return c.done();
}

// CLI helpers ----------------------------------------------------------------

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SRMHAIR_PATH) + " " + args + " >>" + quote(log) + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome end_to_end() {
  Checks c;
  const fs::path dir = fs::temp_directory_path() / ("srm_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir / "fields");
  const fs::path log = dir / "log.txt";
  const auto t0 = Clock::now();
  bool ok = run_cli("template gen --rays 25 --out " + quote(dir / "t.json"), log) == 0;
  ok = ok && run_cli("fixtures gen --kind shell-cap-hair --count 20 --seed 7 --out " + quote(dir / "fx"), log) == 0;
  for (int k = 0; ok && k < 20; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "hair_%03d", k);
    ok = run_cli("analyze --head " + quote(dir / "fx/head.obj") + " --hair " + quote(dir / "fx" / (std::string(name) + ".ply")) +
                     " --scalp " + quote(dir / "fx/scalp.json") + " --template " + quote(dir / "t.json") + " --out " +
                     quote(dir / "fields" / (std::string(name) + ".srmh")),
                 log) == 0;
  }
  ok = ok && run_cli("model build --fields " + quote(dir / "fields") + " --modes 19 --albedo-modes 19 --out " + quote(dir / "m.srmm"), log) == 0;
  ok = ok && run_cli("model project --model " + quote(dir / "m.srmm") + " --field " + quote(dir / "fields/hair_000.srmh") +
                         " --out " + quote(dir / "c.json"), log) == 0;
  ok = ok && run_cli("model synth --model " + quote(dir / "m.srmm") + " --coeffs " + quote(dir / "c.json") + " --out " +
                         quote(dir / "s.srmh"), log) == 0;
  ok = ok && run_cli("extract --field " + quote(dir / "s.srmh") + " --head " + quote(dir / "fx/head.obj") + " --scalp " +
                         quote(dir / "fx/scalp.json") + " --template " + quote(dir / "t.json") + " --out " + quote(dir / "pred.ply"),
                     log) == 0;
  ok = ok && run_cli("eval --pred " + quote(dir / "pred.ply") + " --gt " + quote(dir / "fx/hair_000.ply") + " --report " +
                         quote(dir / "report.json"), log) == 0;
  const double secs = seconds_since(t0);
  c.expect(ok, "a pipeline step failed (see " + log.string() + ")");
  if (ok) {
    std::ifstream in(dir / "report.json");
    const auto report = nlohmann::json::parse(in);
    const double nrmse = report["nrmse"].get<double>();
    const double bound = 2 * srm::kDefaultVoxelSize;
    c.expect(nrmse <= bound, "NRMSE above 2 voxel sizes");
    c.note(fmt("NRMSE %.5f", nrmse) + fmt(" (bound %.5f)", bound));
    c.note(fmt("recall %.3f", report["recall"].get<double>()));
    fs::remove_all(dir);
  }
  c.expect(secs <= 60, "pipeline slower than 60 s");
  c.note(fmt("%.1f s", secs));
  return c.done();
}

Outcome service_determinism() {
  Checks c;
  auto recipe = srm::default_recipe(srm::FixtureKind::shell_cap_hair);
  const auto fx = srm::generate(recipe);
  const auto tmpl = srm::make_template(25);
  const auto rays = srm::make_rays(fx.head, fx.scalp, tmpl);
  const auto fields = training_fields(rays, recipe, 8);
  const srm::HairService service(srm::build_model(fields, 7, 3), fx.head, fx.scalp, tmpl);
  const auto first = service.synthesize("{}");
  c.expect(first.status == 200, "zero-coefficient request failed");
  std::vector<double> ms;
  for (int k = 0; k < 9; ++k) {
    const auto t0 = Clock::now();
    const auto r = service.synthesize("{}");
    ms.push_back(1000 * seconds_since(t0));
    c.expect(r.body == first.body, "repeat request differs");
  }
  std::sort(ms.begin(), ms.end());
  c.expect(ms[4] <= 500, "median latency above 500 ms");
  c.note(fmt("median %.1f ms", ms[4]));
  return c.done();
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"analytic field oracle", analytic_oracle},
      {"BVH vs brute force", bvh_vs_brute_force},
      {"reconstruction fidelity", reconstruction_fidelity},
      {"PCA identities", pca_identities},
      {"property suite", property_suite},
      {"mesh extraction", extraction},
      {"metrics", metrics},
      {"spherical harmonics", spherical_harmonics},
      {"end-to-end CLI pipeline", end_to_end},
      {"service determinism and latency (secondary)", service_determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
