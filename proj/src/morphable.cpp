#include "srm/morphable.hpp"

#include "srm/error.hpp"

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include <cmath>

namespace srm {

using nlohmann::json;

double MorphableHairModel::mode_scale(int k) const {
  return shape_sv[k] / std::sqrt(static_cast<double>(n_samples - 1));
}

double MorphableHairModel::albedo_mode_scale(int k) const {
  return albedo_sv[k] / std::sqrt(static_cast<double>(n_samples - 1));
}

Eigen::VectorXd distance_vector(const RayDistanceField& field) {
  const auto e = static_cast<Eigen::Index>(field.entries());
  Eigen::VectorXd v(2 * e);
  for (Eigen::Index k = 0; k < e; ++k) {
    v[k] = field.d_min[k];
    v[e + k] = field.d_max[k];
  }
  return v;
}

Eigen::VectorXd albedo_vector(const RayDistanceField& field) {
  const auto n = static_cast<Eigen::Index>(field.albedo_min.size());
  Eigen::VectorXd v(2 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    v[k] = field.albedo_min[k];
    v[n + k] = field.albedo_max[k];
  }
  return v;
}

namespace {

struct Pca {
  Eigen::VectorXd mean;
  Eigen::VectorXd sv;
  Eigen::MatrixXd basis;
};

Pca fit_pca(const Eigen::MatrixXd& samples, int modes, const char* what) {
  const auto n = samples.rows();
  Pca out;
  out.mean = samples.colwise().mean().transpose();
  if (modes < 0) throw Error(ErrorCode::argument, std::string(what) + ": mode count must be >= 0");
  if (modes > n - 1) {
    throw Error(ErrorCode::argument, std::string(what) + ": " + std::to_string(modes) + " modes requested but at most " +
                                         std::to_string(n - 1) + " are available from " + std::to_string(n) + " samples");
  }
  out.sv.resize(modes);
  out.basis.resize(samples.cols(), modes);
  if (modes == 0) return out;

  Eigen::MatrixXd centered = samples.rowwise() - out.mean.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double floor = 1e-12 * std::max(1.0, out.mean.cwiseAbs().maxCoeff());
  if (s.size() == 0 || s[0] <= floor) {
    throw Error(ErrorCode::degenerate, std::string(what) + ": rank zero sample set (all samples identical)");
  }
  int rank = 0;
  while (rank < s.size() && s[rank] > 1e-9 * s[0] && s[rank] > floor) ++rank;
  if (modes > rank) {
    throw Error(ErrorCode::argument, std::string(what) + ": " + std::to_string(modes) +
                                         " modes requested but the sample set has numerical rank " + std::to_string(rank));
  }
  const double norm = std::sqrt(static_cast<double>(n - 1));
  for (int k = 0; k < modes; ++k) {
    Eigen::VectorXd u = svd.matrixV().col(k);
    Eigen::Index arg = 0;
    u.cwiseAbs().maxCoeff(&arg);
    if (u[arg] < 0) u = -u;
    out.sv[k] = s[k];
    out.basis.col(k) = u * (s[k] / norm);
  }
  return out;
}

void check_coefficients(const MorphableHairModel& model, const HairCoefficients& c) {
  if (c.beta_shape.size() != model.modes()) {
    throw Error(ErrorCode::validation, "beta_shape has " + std::to_string(c.beta_shape.size()) + " entries, model has " +
                                           std::to_string(model.modes()) + " modes");
  }
  if (c.beta_alb.size() != model.albedo_modes()) {
    throw Error(ErrorCode::validation, "beta_alb has " + std::to_string(c.beta_alb.size()) + " entries, model has " +
                                           std::to_string(model.albedo_modes()) + " albedo modes");
  }
  if (!c.beta_shape.allFinite() || !c.beta_alb.allFinite()) throw Error(ErrorCode::validation, "coefficients must be finite");
  if (!(c.beta_s > 0) || !std::isfinite(c.beta_s)) throw Error(ErrorCode::validation, "beta_s must be positive and finite");
}

void check_layout(const MorphableHairModel& model, const RayDistanceField& field) {
  if (field.n_s != model.n_s || field.n_r != model.n_r) {
    throw Error(ErrorCode::hash_mismatch, "field shape does not match the model");
  }
  if (field.template_hash != model.template_hash || field.scalp_hash != model.scalp_hash) {
    throw Error(ErrorCode::hash_mismatch, "field hashes do not match the model");
  }
}

}  // namespace

MorphableHairModel build_model(std::span<const RayDistanceField> fields, int modes, int albedo_modes) {
  if (fields.size() < 2) throw Error(ErrorCode::argument, "building a model needs at least 2 fields");
  for (const auto& f : fields) {
    validate(f);
    require_same_layout(fields[0], f, "model build");
  }
  const auto n = static_cast<Eigen::Index>(fields.size());
  const auto dim = static_cast<Eigen::Index>(2 * fields[0].entries());
  Eigen::MatrixXd d(n, dim), a(n, 3 * dim);
  for (Eigen::Index j = 0; j < n; ++j) {
    d.row(j) = distance_vector(fields[j]).transpose();
    a.row(j) = albedo_vector(fields[j]).transpose();
  }

  MorphableHairModel m;
  m.n_s = fields[0].n_s;
  m.n_r = fields[0].n_r;
  m.n_samples = fields.size();
  m.template_hash = fields[0].template_hash;
  m.scalp_hash = fields[0].scalp_hash;
  auto shape = fit_pca(d, modes, "shape model");
  auto albedo = fit_pca(a, albedo_modes, "albedo model");
  m.mean_d = std::move(shape.mean);
  m.shape_sv = std::move(shape.sv);
  m.shape_basis = std::move(shape.basis);
  m.mean_a = std::move(albedo.mean);
  m.albedo_sv = std::move(albedo.sv);
  m.albedo_basis = std::move(albedo.basis);
  return m;
}

Eigen::VectorXd synthesize_raw(const MorphableHairModel& model, const Eigen::VectorXd& beta_shape, double beta_s) {
  if (beta_shape.size() != model.modes()) throw Error(ErrorCode::validation, "beta_shape length does not match the model");
  Eigen::VectorXd base = model.mean_d;
  if (model.modes() > 0) base.noalias() += model.shape_basis * beta_shape;
  for (auto& v : base) {
    v = static_cast<double>(static_cast<float>(static_cast<double>(static_cast<float>(v)) * beta_s));
  }
  return base;
}

RayDistanceField synthesize(const MorphableHairModel& model, const HairCoefficients& coeffs) {
  check_coefficients(model, coeffs);
  const auto e = model.n_s * model.n_r;
  auto field = RayDistanceField::empty(model.n_s, model.n_r, model.template_hash, model.scalp_hash);
  const auto d = synthesize_raw(model, coeffs.beta_shape, coeffs.beta_s);
  for (std::size_t k = 0; k < e; ++k) {
    field.d_min[k] = static_cast<float>(d[k]);
    field.d_max[k] = static_cast<float>(d[e + k]);
  }
  enforce_invariants(field);

  Eigen::VectorXd a = model.mean_a;
  if (model.albedo_modes() > 0) a.noalias() += model.albedo_basis * coeffs.beta_alb;
  for (std::size_t k = 0; k < 3 * e; ++k) {
    field.albedo_min[k] = static_cast<float>(std::clamp(a[k], 0.0, 1.0));
    field.albedo_max[k] = static_cast<float>(std::clamp(a[3 * e + k], 0.0, 1.0));
  }
  return field;
}

RayDistanceField mean_field(const MorphableHairModel& model) {
  HairCoefficients c{Eigen::VectorXd::Zero(model.modes()), Eigen::VectorXd::Zero(model.albedo_modes()), 1.0};
  return synthesize(model, c);
}

Eigen::VectorXd project(const MorphableHairModel& model, const RayDistanceField& field) {
  check_layout(model, field);
  const Eigen::VectorXd r = distance_vector(field) - model.mean_d;
  Eigen::VectorXd beta(model.modes());
  for (int k = 0; k < model.modes(); ++k) {
    const double s = model.mode_scale(k);
    beta[k] = model.shape_basis.col(k).dot(r) / (s * s);
  }
  return beta;
}

Eigen::VectorXd project_albedo(const MorphableHairModel& model, const RayDistanceField& field) {
  check_layout(model, field);
  const Eigen::VectorXd r = albedo_vector(field) - model.mean_a;
  Eigen::VectorXd beta(model.albedo_modes());
  for (int k = 0; k < model.albedo_modes(); ++k) {
    const double s = model.albedo_mode_scale(k);
    beta[k] = model.albedo_basis.col(k).dot(r) / (s * s);
  }
  return beta;
}

// ---------------------------------------------------------------------------
// SRMM serialization

namespace {

void put_array(ByteWriter& w, const double* data, Eigen::Index n) {
  for (Eigen::Index k = 0; k < n; ++k) w.put_f64(data[k]);
}

void get_array(ByteReader& r, double* data, Eigen::Index n) {
  for (Eigen::Index k = 0; k < n; ++k) data[k] = r.get_f64();
}

}  // namespace

std::basic_string<std::uint8_t> encode_model(const MorphableHairModel& m) {
  const auto dim = static_cast<Eigen::Index>(m.dim());
  if (dim != static_cast<Eigen::Index>(2 * m.n_s * m.n_r) || m.mean_a.size() != 3 * dim ||
      m.shape_basis.rows() != dim || m.shape_sv.size() != m.modes() || m.albedo_basis.rows() != 3 * dim ||
      m.albedo_sv.size() != m.albedo_modes()) {
    throw Error(ErrorCode::validation, "model arrays are inconsistent");
  }
  ByteWriter w;
  for (char c : {'S', 'R', 'M', 'M'}) w.put_u8(static_cast<std::uint8_t>(c));
  w.put_u16(kModelFormatVersion);
  w.put_u16(0);
  w.put_u32(static_cast<std::uint32_t>(m.n_s));
  w.put_u32(static_cast<std::uint32_t>(m.n_r));
  w.put_u32(static_cast<std::uint32_t>(dim));
  w.put_u32(static_cast<std::uint32_t>(m.modes()));
  w.put_u32(static_cast<std::uint32_t>(m.albedo_modes()));
  w.put_u32(static_cast<std::uint32_t>(m.n_samples));
  w.put_bytes(m.template_hash);
  w.put_bytes(m.scalp_hash);
  put_array(w, m.mean_d.data(), m.mean_d.size());
  put_array(w, m.shape_sv.data(), m.shape_sv.size());
  put_array(w, m.shape_basis.data(), m.shape_basis.size());
  put_array(w, m.mean_a.data(), m.mean_a.size());
  put_array(w, m.albedo_sv.data(), m.albedo_sv.size());
  put_array(w, m.albedo_basis.data(), m.albedo_basis.size());
  return w.take();
}

MorphableHairModel decode_model(std::span<const std::uint8_t> bytes, const std::string& name) {
  ByteReader r(bytes, name);
  char magic[4];
  for (auto& c : magic) c = static_cast<char>(r.get_u8());
  if (std::string_view(magic, 4) != "SRMM") throw Error(ErrorCode::parse, name + ": not an SRMM model file");
  const auto version = r.get_u16();
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::parse, name + ": unsupported SRMM version " + std::to_string(version));
  }
  r.get_u16();
  MorphableHairModel m;
  m.n_s = r.get_u32();
  m.n_r = r.get_u32();
  const std::uint64_t dim = r.get_u32();
  const std::uint64_t k = r.get_u32();
  const std::uint64_t ka = r.get_u32();
  m.n_samples = r.get_u32();
  r.get_bytes(m.template_hash);
  r.get_bytes(m.scalp_hash);
  if (dim != 2ull * m.n_s * m.n_r) throw Error(ErrorCode::parse, name + ": N does not equal 2 * n_s * n_r");
  if (k + 1 > m.n_samples || ka + 1 > m.n_samples) {
    throw Error(ErrorCode::parse, name + ": mode count exceeds n_samples - 1");
  }
  const std::uint64_t expected = 8 * (dim + k + dim * k + 3 * dim + ka + 3 * dim * ka);
  if (r.remaining() != expected) {
    throw Error(ErrorCode::parse, name + ": expected " + std::to_string(expected) + " payload bytes, found " +
                                      std::to_string(r.remaining()));
  }
  const auto n = static_cast<Eigen::Index>(dim);
  m.mean_d.resize(n);
  m.shape_sv.resize(static_cast<Eigen::Index>(k));
  m.shape_basis.resize(n, static_cast<Eigen::Index>(k));
  m.mean_a.resize(3 * n);
  m.albedo_sv.resize(static_cast<Eigen::Index>(ka));
  m.albedo_basis.resize(3 * n, static_cast<Eigen::Index>(ka));
  get_array(r, m.mean_d.data(), m.mean_d.size());
  get_array(r, m.shape_sv.data(), m.shape_sv.size());
  get_array(r, m.shape_basis.data(), m.shape_basis.size());
  get_array(r, m.mean_a.data(), m.mean_a.size());
  get_array(r, m.albedo_sv.data(), m.albedo_sv.size());
  get_array(r, m.albedo_basis.data(), m.albedo_basis.size());
  if (!m.mean_d.allFinite() || !m.shape_basis.allFinite() || !m.mean_a.allFinite() || !m.albedo_basis.allFinite()) {
    throw Error(ErrorCode::parse, name + ": model contains non-finite values");
  }
  return m;
}

void save_model(const std::string& path, const MorphableHairModel& model) {
  auto bytes = encode_model(model);
  write_file_bytes(path, {bytes.data(), bytes.size()});
}

MorphableHairModel load_model(const std::string& path) {
  auto bytes = read_file_bytes(path);
  return decode_model({bytes.data(), bytes.size()}, path);
}

HairCoefficients parse_coefficients(const std::string& text, const MorphableHairModel& model) {
  HairCoefficients c{Eigen::VectorXd::Zero(model.modes()), Eigen::VectorXd::Zero(model.albedo_modes()), 1.0};
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, std::string("coefficients: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::parse, "coefficients: expected a JSON object");
  auto read = [&](const char* key, Eigen::VectorXd& out) {
    if (!j.contains(key)) return;
    const auto& arr = j.at(key);
    if (!arr.is_array()) throw Error(ErrorCode::parse, std::string("coefficients: ") + key + " must be an array");
    if (arr.size() != static_cast<std::size_t>(out.size())) {
      throw Error(ErrorCode::validation, std::string("coefficients: ") + key + " has " + std::to_string(arr.size()) +
                                             " entries, model expects " + std::to_string(out.size()));
    }
    for (std::size_t k = 0; k < arr.size(); ++k) {
      if (!arr[k].is_number()) throw Error(ErrorCode::parse, std::string("coefficients: ") + key + " must hold numbers");
      out[static_cast<Eigen::Index>(k)] = arr[k].get<double>();
    }
  };
  read("beta_shape", c.beta_shape);
  read("beta_alb", c.beta_alb);
  if (j.contains("beta_s")) {
    if (!j["beta_s"].is_number()) throw Error(ErrorCode::parse, "coefficients: beta_s must be a number");
    c.beta_s = j["beta_s"].get<double>();
  }
  check_coefficients(model, c);
  return c;
}

std::string format_coefficients(const HairCoefficients& c) {
  json j = {{"beta_shape", std::vector<double>(c.beta_shape.begin(), c.beta_shape.end())},
            {"beta_alb", std::vector<double>(c.beta_alb.begin(), c.beta_alb.end())},
            {"beta_s", c.beta_s}};
  return j.dump(2) + "\n";
}

}  // namespace srm
