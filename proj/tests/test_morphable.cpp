#include "support/oracles.hpp"
#include "support/scenes.hpp"

#include "srm/error.hpp"
#include "srm/morphable.hpp"

#include <doctest.h>

#include <cmath>

namespace {

struct Training {
  scene::Captured base;
  std::vector<srm::RayDistanceField> fields;
};

const Training& training() {
  static const Training t = [] {
    Training t;
    auto recipe = scene::small_recipe(srm::FixtureKind::asymmetric_cap);
    t.base = scene::capture(recipe);
    for (int k = 0; k < 8; ++k) {
      auto v = srm::variant(recipe, k, 3);
      t.fields.push_back(srm::analyze(srm::fixture_hair(v), t.base.rays));
    }
    return t;
  }();
  return t;
}

double rel_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

srm::HairCoefficients zero_coeffs(const srm::MorphableHairModel& m, double beta_s = 1.0) {
  return {Eigen::VectorXd::Zero(m.modes()), Eigen::VectorXd::Zero(m.albedo_modes()), beta_s};
}

}  // namespace

TEST_CASE("two samples give the closed-form single mode") {
  const auto& t = training();
  std::vector<srm::RayDistanceField> two{t.fields[1], t.fields[2]};
  auto m = srm::build_model(two, 1, 1);
  const auto x1 = srm::distance_vector(two[0]), x2 = srm::distance_vector(two[1]);
  CHECK((m.mean_d - 0.5 * (x1 + x2)).cwiseAbs().maxCoeff() < 1e-12);
  // centered rows are +-(x1 - x2)/2, so sigma = |x1 - x2| / sqrt(2)
  const double sigma = (x1 - x2).norm() / std::sqrt(2.0);
  CHECK(m.shape_sv[0] == doctest::Approx(sigma).epsilon(1e-10));
  const Eigen::VectorXd u = m.shape_basis.col(0) / m.mode_scale(0);
  CHECK(std::abs(std::abs(u.dot((x1 - x2).normalized())) - 1) < 1e-10);
  for (double sign : {1.0, -1.0}) {
    Eigen::VectorXd beta(1);
    beta[0] = sign / std::sqrt(2.0);
    const auto raw = srm::synthesize_raw(m, beta, 1.0);
    const double e1 = rel_l2(raw, x1), e2 = rel_l2(raw, x2);
    CHECK(std::min(e1, e2) < 1e-5);
  }
}

TEST_CASE("identical samples have rank zero") {
  const auto& t = training();
  std::vector<srm::RayDistanceField> same{t.fields[0], t.fields[0], t.fields[0]};
  CHECK_THROWS_AS(srm::build_model(same, 1, 0), srm::Error);
  auto m = srm::build_model(same, 0, 0);
  CHECK(m.modes() == 0);
  CHECK(srm::bitwise_equal(srm::mean_field(m), t.fields[0]));
}

TEST_CASE("mode count limits") {
  const auto& t = training();
  std::vector<srm::RayDistanceField> one{t.fields[0]};
  CHECK_THROWS_AS(srm::build_model(one, 0, 0), srm::Error);
  CHECK_THROWS_AS(srm::build_model(t.fields, 8, 0), srm::Error);
  CHECK_NOTHROW(srm::build_model(t.fields, 7, 7));
  auto other = t.fields;
  other[3].scalp_hash[0] ^= 1;
  CHECK_THROWS_AS(srm::build_model(other, 2, 0), srm::Error);
}

TEST_CASE("basis is orthonormal, sorted and sign-normalized") {
  const auto& t = training();
  auto m = srm::build_model(t.fields, 7, 5);
  Eigen::MatrixXd u = m.shape_basis;
  for (int k = 0; k < m.modes(); ++k) u.col(k) /= m.mode_scale(k);
  CHECK((u.transpose() * u - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-6);
  for (int k = 1; k < m.modes(); ++k) CHECK(m.shape_sv[k] <= m.shape_sv[k - 1]);
  for (int k = 0; k < m.modes(); ++k) {
    Eigen::Index arg;
    u.col(k).cwiseAbs().maxCoeff(&arg);
    CHECK(u(arg, k) > 0);
  }
  CHECK((m.mean_d.array() >= 0).all());
}

TEST_CASE("zero coefficients give the mean field and thickness factors out") {
  const auto& t = training();
  auto m = srm::build_model(t.fields, 5, 3);
  auto mean = srm::synthesize(m, zero_coeffs(m));
  for (std::size_t e = 0; e < mean.entries(); ++e) {
    const float lo = static_cast<float>(m.mean_d[static_cast<Eigen::Index>(e)]);
    const float hi = static_cast<float>(m.mean_d[static_cast<Eigen::Index>(mean.entries() + e)]);
    if (lo > 0 && hi > 0) {
      CHECK(mean.d_min[e] == std::min(lo, hi));
      CHECK(mean.d_max[e] == std::max(lo, hi));
    } else {
      CHECK(mean.d_max[e] == 0);
    }
  }
  CHECK(srm::bitwise_equal(srm::synthesize(m, zero_coeffs(m, 2.0)), srm::scale_thickness(mean, 2.0)));

  oracle::Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = zero_coeffs(m);
    for (int k = 0; k < m.modes(); ++k) c.beta_shape[k] = rng.uniform(-3, 3);
    for (int k = 0; k < m.albedo_modes(); ++k) c.beta_alb[k] = rng.uniform(-3, 3);
    const double bs = rng.uniform(0.2, 3);
    auto unit = srm::synthesize(m, c);
    c.beta_s = bs;
    CHECK(srm::bitwise_equal(srm::synthesize(m, c), srm::scale_thickness(unit, bs)));
  }
}

TEST_CASE("opposite coefficients are symmetric about the mean") {
  const auto& t = training();
  auto m = srm::build_model(t.fields, 5, 0);
  oracle::Rng rng(10);
  Eigen::VectorXd beta(5);
  for (int k = 0; k < 5; ++k) beta[k] = rng.uniform(-2, 2);
  const auto plus = srm::synthesize_raw(m, beta, 1.0), minus = srm::synthesize_raw(m, -beta, 1.0);
  const double scale = m.mean_d.cwiseAbs().maxCoeff();
  CHECK(((0.5 * (plus + minus)) - m.mean_d).cwiseAbs().maxCoeff() <= 1e-6 * scale);
}

TEST_CASE("projection inverts synthesis") {
  const auto& t = training();
  auto m = srm::build_model(t.fields, 7, 7);
  CHECK(srm::project(m, srm::mean_field(m)).cwiseAbs().maxCoeff() < 1e-4);
  for (const auto& f : t.fields) {
    const auto beta = srm::project(m, f);
    const auto raw = srm::synthesize_raw(m, beta, 1.0);
    CHECK(rel_l2(raw, srm::distance_vector(f)) < 1e-4);
    // residual orthogonal to the basis
    const Eigen::VectorXd r = srm::distance_vector(f) - m.mean_d - m.shape_basis * beta;
    CHECK((m.shape_basis.transpose() * r).cwiseAbs().maxCoeff() < 1e-6 * r.size());
    auto c = zero_coeffs(m);
    c.beta_shape = beta;
    c.beta_alb = srm::project_albedo(m, f);
    auto syn = srm::synthesize(m, c);
    CHECK(rel_l2(srm::distance_vector(syn), srm::distance_vector(f)) < 1e-4);
    CHECK(rel_l2(srm::albedo_vector(syn), srm::albedo_vector(f)) < 1e-4);
  }
}

TEST_CASE("project of a synthesized in-hull field recovers the coefficients") {
  const auto& t = training();
  auto m = srm::build_model(t.fields, 4, 0);
  Eigen::VectorXd beta(4);
  beta << 0.3, -0.2, 0.1, 0.05;
  const auto raw = srm::synthesize_raw(m, beta, 1.0);
  REQUIRE((raw.array() >= 0).all());
  auto c = zero_coeffs(m);
  c.beta_shape = beta;
  auto f = srm::synthesize(m, c);
  bool clamped = false;
  for (std::size_t e = 0; e < f.entries(); ++e) {
    const auto ee = static_cast<Eigen::Index>(e);
    clamped |= (raw[ee] == 0) != (raw[ee + static_cast<Eigen::Index>(f.entries())] == 0);
    clamped |= raw[ee] > raw[ee + static_cast<Eigen::Index>(f.entries())];
  }
  if (!clamped) CHECK((srm::project(m, f) - beta).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("reconstruction error does not grow with more modes") {
  const auto& t = training();
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 7; ++k) {
    auto m = srm::build_model(t.fields, k, 0);
    double err = 0;
    for (const auto& f : t.fields) {
      Eigen::VectorXd beta = k > 0 ? srm::project(m, f) : Eigen::VectorXd();
      err += (m.mean_d + m.shape_basis * beta - srm::distance_vector(f)).squaredNorm();
    }
    CHECK(err <= prev * (1 + 1e-9) + 1e-12);
    prev = err;
  }
}

TEST_CASE("flip-closed training sets have a flip-invariant mean") {
  const auto& t = training();
  std::vector<srm::RayDistanceField> closed;
  for (int k = 0; k < 4; ++k) {
    closed.push_back(t.fields[k]);
    closed.push_back(srm::flip(t.fields[k], t.base.fixture.scalp));
  }
  auto m = srm::build_model(closed, 3, 0);
  auto mean = srm::mean_field(m);
  auto flipped = srm::flip(mean, t.base.fixture.scalp);
  double worst = 0;
  for (std::size_t e = 0; e < mean.entries(); ++e) {
    worst = std::max({worst, double(std::abs(mean.d_min[e] - flipped.d_min[e])),
                      double(std::abs(mean.d_max[e] - flipped.d_max[e]))});
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("coefficient validation") {
  const auto& t = training();
  auto m = srm::build_model(t.fields, 3, 2);
  auto c = zero_coeffs(m);
  c.beta_shape.resize(2);
  CHECK_THROWS_AS(srm::synthesize(m, c), srm::Error);
  c = zero_coeffs(m, 0.0);
  CHECK_THROWS_AS(srm::synthesize(m, c), srm::Error);
  auto parsed = srm::parse_coefficients(R"({"beta_shape":[1,2,3],"beta_s":1.5})", m);
  CHECK(parsed.beta_shape[2] == 3);
  CHECK(parsed.beta_alb.size() == 2);
  CHECK(parsed.beta_s == 1.5);
  CHECK_THROWS_AS(srm::parse_coefficients(R"({"beta_shape":[1,2]})", m), srm::Error);
  auto round = srm::parse_coefficients(srm::format_coefficients(parsed), m);
  CHECK(round.beta_shape == parsed.beta_shape);
}

TEST_CASE("SRMM round trip and corruption checks") {
  const auto& t = training();
  auto m = srm::build_model(t.fields, 4, 3);
  auto bytes = srm::encode_model(m);
  auto back = srm::decode_model({bytes.data(), bytes.size()});
  CHECK(back.shape_basis == m.shape_basis);
  CHECK(back.mean_d == m.mean_d);
  CHECK(back.albedo_basis == m.albedo_basis);
  CHECK(back.shape_sv == m.shape_sv);
  CHECK(back.n_samples == m.n_samples);
  CHECK(srm::encode_model(back) == bytes);
  auto ver = bytes;
  ver[4] = 2;
  CHECK_THROWS_AS(srm::decode_model({ver.data(), ver.size()}), srm::Error);
  auto cut = bytes;
  cut.resize(cut.size() - 8);
  CHECK_THROWS_AS(srm::decode_model({cut.data(), cut.size()}), srm::Error);
  cut.resize(20);
  CHECK_THROWS_AS(srm::decode_model({cut.data(), cut.size()}), srm::Error);
}
