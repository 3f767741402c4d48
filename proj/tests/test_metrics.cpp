#include "support/oracles.hpp"

#include "srm/error.hpp"
#include "srm/fixtures.hpp"
#include "srm/metrics.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>

using srm::Vec3;

namespace {

std::vector<Vec3> shifted(const std::vector<Vec3>& pts, const Vec3& by) {
  auto out = pts;
  for (auto& p : out) p += by;
  return out;
}

std::vector<Vec3> random_cloud(oracle::Rng& rng, int n, double h = 1.0) {
  std::vector<Vec3> pts;
  for (int k = 0; k < n; ++k) pts.push_back(rng.in_box(h));
  return pts;
}

}  // namespace

TEST_CASE("chamfer closed forms") {
  const auto cube = oracle::unit_cube().vertices;
  CHECK(srm::chamfer(cube, cube) == 0);
  for (double eps : {1e-3, 1e-2, 0.1}) {
    CHECK(std::abs(srm::chamfer(cube, shifted(cube, Vec3(eps, 0, 0))) - 2 * eps * eps) < 1e-10);
    CHECK(std::abs(srm::chamfer(cube, shifted(cube, Vec3(0, eps, eps))) - 4 * eps * eps) < 1e-10);
  }
  std::vector<Vec3> a{Vec3::Zero()}, b{Vec3(3, 4, 0)};
  CHECK(srm::chamfer(a, b) == doctest::Approx(50));
  CHECK_THROWS_AS(srm::chamfer(a, std::vector<Vec3>{}), srm::Error);
}

TEST_CASE("chamfer agrees with brute force, is symmetric and rigid-invariant") {
  oracle::Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = random_cloud(rng, 300), b = random_cloud(rng, 500);
    const double c = srm::chamfer(a, b);
    CHECK(c == doctest::Approx(oracle::chamfer(a, b)).epsilon(1e-12));
    CHECK(c == doctest::Approx(srm::chamfer(b, a)).epsilon(1e-12));
    const Eigen::Matrix3d r = Eigen::AngleAxisd(rng.uniform(0, 6), rng.unit()).toRotationMatrix();
    const Vec3 t = rng.in_box(5);
    std::vector<Vec3> ra, rb;
    for (const auto& p : a) ra.push_back(r * p + t);
    for (const auto& p : b) rb.push_back(r * p + t);
    CHECK(srm::chamfer(ra, rb) == doctest::Approx(c).epsilon(1e-9));
  }
}

TEST_CASE("nearest distances match brute force") {
  oracle::Rng rng(23);
  const auto targets = random_cloud(rng, 1000), queries = random_cloud(rng, 1000, 1.5);
  const auto d = srm::nearest_distances(queries, targets);
  for (std::size_t k = 0; k < queries.size(); ++k) {
    CHECK(d[k] == doctest::Approx(std::sqrt(oracle::nearest_sq(queries[k], targets))).epsilon(1e-12));
  }
}

TEST_CASE("nrmse closed forms") {
  const auto cube = oracle::unit_cube().vertices;
  const double diag = std::sqrt(3.0);
  CHECK(srm::nrmse(cube, cube) == 0);
  for (double eps : {1e-3, 0.05}) {
    CHECK(srm::nrmse(shifted(cube, Vec3(0, 0, eps)), cube) == doctest::Approx(eps / diag).epsilon(1e-12));
  }
  oracle::Rng rng(4);
  const auto a = random_cloud(rng, 200), b = random_cloud(rng, 300);
  const double base = srm::nrmse(a, b);
  for (double s : {0.1, 3.0, 1000.0}) {
    std::vector<Vec3> sa, sb;
    for (const auto& p : a) sa.push_back(s * p);
    for (const auto& p : b) sb.push_back(s * p);
    CHECK(srm::nrmse(sa, sb) == doctest::Approx(base).epsilon(1e-10));
  }
  std::vector<Vec3> point(5, Vec3(1, 1, 1));
  CHECK_THROWS_AS(srm::nrmse(cube, point), srm::Error);
}

TEST_CASE("recall closed forms and monotonicity") {
  const auto cube = oracle::unit_cube().vertices;
  CHECK(srm::recall(cube, cube, 1e-9) == 1.0);
  CHECK(srm::recall(shifted(cube, Vec3(10, 0, 0)), cube, 1.0) == 0.0);
  std::vector<Vec3> gt, pred;
  for (int k = 0; k < 10; ++k) {
    gt.emplace_back(0, 0, 0.01 * k);
    gt.emplace_back(5, 0, 0.01 * k);
    pred.emplace_back(0, 0, 0.01 * k);
  }
  CHECK(srm::recall(pred, gt, 0.1) == 0.5);
  oracle::Rng rng(9);
  const auto a = random_cloud(rng, 200), b = random_cloud(rng, 400);
  double prev = 0;
  for (int k = 0; k < 10; ++k) {
    const double r = srm::recall(a, b, 0.02 * (k + 1));
    CHECK(r >= prev);
    prev = r;
  }
  CHECK_THROWS_AS(srm::recall(a, b, -1.0), srm::Error);
}

TEST_CASE("evaluation report") {
  const auto cube = oracle::unit_cube().vertices;
  const auto pred = shifted(cube, Vec3(0.01, 0, 0));
  const auto r = srm::evaluate(pred, cube);
  CHECK(r.normalizer == doctest::Approx(std::sqrt(3.0)));
  CHECK(r.threshold == doctest::Approx(0.01 * std::sqrt(3.0)));
  CHECK(r.recall == 1.0);
  CHECK(r.chamfer == doctest::Approx(2e-4));
  CHECK(r.pred_points == 8);
  const auto j = nlohmann::json::parse(srm::format_report(r));
  CHECK(j["nrmse"].get<double>() == doctest::Approx(r.nrmse));
  CHECK(j["normalizer"] == "gt_bbox_diagonal");
  CHECK(srm::evaluate(pred, cube, 0.005).recall == 0.0);
}

TEST_CASE("mesh points add area-weighted surface samples") {
  auto cube = oracle::unit_cube();
  CHECK(srm::mesh_points(cube).size() == 8);
  const auto pts = srm::mesh_points(cube, 2000, 3);
  REQUIRE(pts.size() == 2008);
  for (const auto& p : pts) CHECK(oracle::point_mesh_distance(p, cube) < 1e-12);
  CHECK(pts == srm::mesh_points(cube, 2000, 3));
  // equal-area faces receive roughly equal shares
  int on_bottom = 0;
  for (std::size_t k = 8; k < pts.size(); ++k) on_bottom += pts[k].z() == 0;
  CHECK(on_bottom > 2000 / 6 - 80);
  CHECK(on_bottom < 2000 / 6 + 80);
}
