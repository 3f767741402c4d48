#include "support/oracles.hpp"

#include "srm/accel.hpp"
#include "srm/error.hpp"
#include "srm/fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <thread>

using srm::Vec3;

namespace {

bool same_t_sets(const std::vector<srm::Hit>& a, const std::vector<srm::Hit>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k].t - b[k].t) > tol) return false;
  }
  return true;
}

srm::TriMesh two_spheres() {
  auto a = srm::icosphere(3, 1.0);
  auto b = srm::icosphere(3, 1.0);
  for (auto& p : a.vertices) p.x() -= 2.0;
  for (auto& p : b.vertices) p.x() += 2.0;
  const auto base = static_cast<std::uint32_t>(a.vertices.size());
  a.vertices.insert(a.vertices.end(), b.vertices.begin(), b.vertices.end());
  for (auto f : b.faces) a.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
  return a;
}

}  // namespace

TEST_CASE("single triangle index has one leaf") {
  srm::TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.faces = {{0, 1, 2}};
  srm::AccelIndex index(m);
  CHECK(index.triangle_count() == 1);
  CHECK(index.leaf_count() == 1);
  auto hits = index.cast_all_hits({{0.2, 0.2, -1}, {0, 0, 1}});
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].t == doctest::Approx(1.0));
  CHECK(hits[0].bary.sum() == doctest::Approx(1.0));
  CHECK(hits[0].bary[1] == doctest::Approx(0.2));
  CHECK(hits[0].bary[2] == doctest::Approx(0.2));
}

TEST_CASE("empty mesh is rejected") {
  srm::TriMesh m;
  CHECK_THROWS_AS(srm::AccelIndex{m}, srm::Error);
}

TEST_CASE("random rays match brute force on an icosphere") {
  auto mesh = srm::icosphere(3, 1.0);
  srm::AccelIndex index(mesh);
  oracle::Rng rng(1);
  for (int k = 0; k < 2000; ++k) {
    srm::Ray r{rng.in_box(1.5), rng.unit()};
    const auto fast = index.cast_all_hits(r);
    const auto slow = oracle::brute_force_hits(mesh, r);
    REQUIRE(same_t_sets(fast, slow, 1e-9));
    for (std::size_t j = 1; j < fast.size(); ++j) CHECK(fast[j].t > fast[j - 1].t);
  }
}

TEST_CASE("rays through two disjoint spheres hit both") {
  auto mesh = two_spheres();
  srm::AccelIndex index(mesh);
  auto hits = index.cast_all_hits({{-5, 0.1, 0.05}, {1, 0, 0}});
  REQUIRE(hits.size() == 4);
  CHECK(hits[0].t < 3.1);
  CHECK(hits[1].t < 5.0);
  CHECK(hits[2].t > 5.0);
  CHECK(hits[3].t > 6.9);
  // chord lengths agree with the analytic spheres up to tessellation error
  const auto exact = oracle::sphere_hits(Vec3(-5 + 2, 0.1, 0.05), Vec3(1, 0, 0), 1.0);
  REQUIRE(exact.size() == 2);
  CHECK(std::abs(hits[0].t - exact[0]) < 2e-2);
  CHECK(std::abs(hits[1].t - exact[1]) < 2e-2);
}

TEST_CASE("ray from the center of a sphere crosses once") {
  auto mesh = srm::icosphere(5, 1.0);
  srm::AccelIndex index(mesh);
  auto hits = index.cast_all_hits({{0, 0, 0}, {0, 0, 1}});
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].t <= 1.0 + 1e-12);
  CHECK(hits[0].t > 0.999);
  CHECK(index.cast_all_hits({{0, 0, 2}, {0, 0, 1}}).empty());
}

TEST_CASE("tilted scalp rays follow the quadratic shell oracle") {
  // |p| = 1, angle theta to the radial direction, shell radius R
  auto shell = srm::icosphere(6, 1.5);
  srm::AccelIndex index(shell);
  const Vec3 p(0, 0, 1);
  for (double deg : {0.0, 15.0, 40.0, 70.0, 85.0}) {
    const double th = deg * std::numbers::pi / 180;
    const Vec3 d(std::sin(th), 0, std::cos(th));
    const double expected = -std::cos(th) + std::sqrt(std::cos(th) * std::cos(th) - 1 + 1.5 * 1.5);
    auto hits = index.cast_all_hits({p, d});
    REQUIRE(hits.size() == 1);
    CHECK(std::abs(hits[0].t - expected) < 1e-3);
    CHECK(hits[0].t <= expected + 1e-12);  // inscribed polytope
  }
}

TEST_CASE("scaling mesh and origin scales every hit parameter") {
  auto mesh = srm::icosphere(2, 1.0);
  auto big = mesh;
  const double s = 3.0;
  for (auto& p : big.vertices) p *= s;
  srm::AccelIndex a(mesh), b(big);
  oracle::Rng rng(5);
  for (int k = 0; k < 300; ++k) {
    srm::Ray r{rng.in_box(0.5), rng.unit()};
    auto ha = a.cast_all_hits(r);
    auto hb = b.cast_all_hits({s * r.origin, r.direction});
    REQUIRE(ha.size() == hb.size());
    for (std::size_t j = 0; j < ha.size(); ++j) CHECK(std::abs(hb[j].t - s * ha[j].t) < 1e-9);
  }
}

TEST_CASE("shared-edge hits are merged into one") {
  srm::TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  m.faces = {{0, 1, 2}, {1, 3, 2}};
  srm::AccelIndex index(m);
  auto hits = index.cast_all_hits({{0.5, 0.5, 1}, {0, 0, -1}});
  CHECK(hits.size() == 1);
  auto corner = index.cast_all_hits({{1, 0, 1}, {0, 0, -1}});
  CHECK(corner.size() == 1);
}

TEST_CASE("watertight test agrees with Moller-Trumbore away from edges") {
  oracle::Rng rng(9);
  int compared = 0;
  for (int k = 0; k < 5000; ++k) {
    const Vec3 a = rng.in_box(1), b = rng.in_box(1), c = rng.in_box(1);
    srm::Ray r{rng.in_box(2), rng.unit()};
    double t = 0;
    const bool mt = oracle::moller_trumbore(r, a, b, c, t);
    const auto h = srm::intersect_triangle(r, a, b, c, 0);
    if (h) {
      const auto& w = h->bary;
      if (w.minCoeff() < 1e-6) continue;  // near an edge either answer is fine
    }
    if (mt) {
      // skip near-edge cases from the other side
      const Vec3 q = r.origin + t * r.direction;
      if (oracle::point_triangle_distance(q, a, b, c) > 1e-9) continue;
      const double area = srm::triangle_area(a, b, c);
      Vec3 w(srm::triangle_area(q, b, c), srm::triangle_area(a, q, c), srm::triangle_area(a, b, q));
      if (w.minCoeff() / area < 1e-6) continue;
    }
    REQUIRE(mt == h.has_value());
    if (mt) CHECK(std::abs(h->t - t) < 1e-9 * std::max(1.0, t));
    ++compared;
  }
  CHECK(compared > 4000);
}

TEST_CASE("closest point query matches the projection oracle") {
  auto mesh = srm::icosphere(2, 1.3);
  srm::AccelIndex index(mesh);
  oracle::Rng rng(21);
  for (int k = 0; k < 300; ++k) {
    const Vec3 p = rng.in_box(2.5);
    const auto cp = index.closest_point(p);
    CHECK(std::abs(cp.distance - oracle::point_mesh_distance(p, mesh)) < 1e-12);
    CHECK(std::abs((cp.point - p).norm() - cp.distance) < 1e-12);
  }
}

TEST_CASE("index queries are safe from many threads") {
  auto mesh = srm::icosphere(4, 1.0);
  srm::AccelIndex index(mesh);
  oracle::Rng rng(3);
  std::vector<srm::Ray> rays;
  for (int k = 0; k < 400; ++k) rays.push_back({rng.in_box(0.5), rng.unit()});
  std::vector<std::vector<srm::Hit>> serial;
  for (const auto& r : rays) serial.push_back(index.cast_all_hits(r));
  std::vector<std::vector<srm::Hit>> parallel(rays.size());
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t k = w; k < rays.size(); k += 4) parallel[k] = index.cast_all_hits(rays[k]);
    });
  }
  for (auto& t : workers) t.join();
  for (std::size_t k = 0; k < rays.size(); ++k) CHECK(same_t_sets(serial[k], parallel[k], 0.0));
}
