#include "srm/scalp.hpp"

#include "srm/error.hpp"
#include "srm/parallel.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <sstream>

namespace srm {

using nlohmann::json;

namespace {

std::string read_text(const std::string& path) {
  auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_text(const std::string& path, const std::string& text) {
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, std::string(what) + ": " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Scalp spec

void validate(const ScalpSpec& spec) {
  const auto n = spec.size();
  if (n < 2) throw Error(ErrorCode::validation, "scalp spec needs at least one left/right pair");
  if (n % 2 != 0) throw Error(ErrorCode::validation, "scalp spec has odd entry count " + std::to_string(n));
  if (spec.pair_of.size() != n || spec.side.size() != n) {
    throw Error(ErrorCode::validation, "scalp spec arrays have inconsistent lengths");
  }
  std::size_t left = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto j = spec.pair_of[i];
    auto at = "scalp entry " + std::to_string(i);
    if (j >= n) throw Error(ErrorCode::validation, at + ": pair index " + std::to_string(j) + " out of range");
    if (j == i) throw Error(ErrorCode::validation, at + ": paired with itself");
    if (spec.pair_of[j] != i) throw Error(ErrorCode::validation, at + ": pairing is not an involution");
    if (spec.side[i] == spec.side[j]) throw Error(ErrorCode::validation, at + ": paired entries lie on the same side");
    if (spec.side[i] == Side::left) ++left;
  }
  if (left * 2 != n) throw Error(ErrorCode::validation, "scalp spec sides are unbalanced");
}

Digest scalp_hash(const ScalpSpec& spec) {
  ByteWriter w;
  w.put_string("srm-scalp-v1");
  w.put_string(spec.head_topology);
  w.put_u32(static_cast<std::uint32_t>(spec.size()));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    w.put_u32(spec.vertex_ids[i]);
    w.put_u32(spec.pair_of[i]);
    w.put_u8(static_cast<std::uint8_t>(spec.side[i]));
  }
  return w.digest();
}

ScalpSpec parse_scalp_spec(const std::string& text) {
  auto j = parse_json(text, "scalp spec");
  ScalpSpec spec;
  try {
    if (j.at("format").get<std::string>() != "srm-scalp") throw Error(ErrorCode::parse, "scalp spec: wrong format tag");
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::parse, "scalp spec: unsupported version");
    spec.head_topology = j.at("head_topology").get<std::string>();
    const auto& entries = j.at("entries");
    auto n = j.at("n_s").get<std::size_t>();
    if (entries.size() != n) {
      throw Error(ErrorCode::validation, "scalp spec: n_s = " + std::to_string(n) + " but " +
                                             std::to_string(entries.size()) + " entries");
    }
    for (const auto& e : entries) {
      spec.vertex_ids.push_back(e.at("vertex_id").get<std::uint32_t>());
      spec.pair_of.push_back(e.at("pair_id").get<std::uint32_t>());
      auto side = e.at("side").get<std::string>();
      if (side == "left") spec.side.push_back(Side::left);
      else if (side == "right") spec.side.push_back(Side::right);
      else throw Error(ErrorCode::validation, "scalp spec: side must be 'left' or 'right', got '" + side + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("scalp spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

std::string format_scalp_spec(const ScalpSpec& spec) {
  validate(spec);
  json entries = json::array();
  for (std::size_t i = 0; i < spec.size(); ++i) {
    entries.push_back({{"vertex_id", spec.vertex_ids[i]},
                       {"pair_id", spec.pair_of[i]},
                       {"side", spec.side[i] == Side::left ? "left" : "right"}});
  }
  json j = {{"format", "srm-scalp"},
            {"version", 1},
            {"head_topology", spec.head_topology},
            {"n_s", spec.size()},
            {"entries", entries}};
  return j.dump(1) + "\n";
}

ScalpSpec load_scalp_spec(const std::string& path) { return parse_scalp_spec(read_text(path)); }
void write_scalp_spec(const std::string& path, const ScalpSpec& spec) { write_text(path, format_scalp_spec(spec)); }

// ---------------------------------------------------------------------------
// Ray template

RayTemplate make_template(int n_rays, double max_polar_deg) {
  if (n_rays < 3) throw Error(ErrorCode::argument, "ray template needs at least 3 directions");
  if (!(max_polar_deg > 0 && max_polar_deg <= 90)) {
    throw Error(ErrorCode::argument, "max polar angle must lie in (0, 90] degrees");
  }
  RayTemplate tmpl;
  tmpl.max_polar_deg = max_polar_deg;
  tmpl.directions = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};

  const int m = n_rays - 3;
  const double cos_cap = std::cos(max_polar_deg * std::numbers::pi / 180.0);
  const double cos_sep = std::cos(kMinTemplateSeparationDeg * std::numbers::pi / 180.0);
  const double golden_fraction = std::numbers::phi - 1.0;
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  const int max_attempts = 64 * std::max(m, 1);

  for (int j = 0; j < m; ++j) {
    bool placed = false;
    for (int attempt = 0; attempt < max_attempts && !placed; ++attempt) {
      const double s = j + attempt * golden_fraction;
      double u = (s + 0.5) / m;
      u -= std::floor(u);
      const double z = 1.0 - (1.0 - cos_cap) * u;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden_angle * s;
      Vec3 d(r * std::cos(phi), r * std::sin(phi), z);
      d.normalize();
      bool clear = true;
      for (const auto& e : tmpl.directions) {
        if (e.dot(d) > cos_sep) {
          clear = false;
          break;
        }
      }
      if (clear) {
        tmpl.directions.push_back(d);
        placed = true;
      }
    }
    if (!placed) {
      throw Error(ErrorCode::argument, "cannot place " + std::to_string(n_rays) + " directions " +
                                           "with 1 degree separation in the requested cap");
    }
  }
  return tmpl;
}

void validate(const RayTemplate& tmpl) {
  const auto& d = tmpl.directions;
  if (d.size() < 3) throw Error(ErrorCode::validation, "ray template has fewer than 3 directions");
  if (d[0] != Vec3::UnitX() || d[1] != Vec3::UnitY() || d[2] != Vec3::UnitZ()) {
    throw Error(ErrorCode::validation, "ray template must start with the canonical triad");
  }
  const double cos_sep = std::cos(kMinTemplateSeparationDeg * std::numbers::pi / 180.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (std::abs(d[i].norm() - 1.0) > 1e-9) throw Error(ErrorCode::validation, "template direction " + std::to_string(i) + " is not unit length");
    if (d[i].z() < -1e-12) throw Error(ErrorCode::validation, "template direction " + std::to_string(i) + " leaves the hemisphere");
    for (std::size_t j = 0; j < i; ++j) {
      if (d[i].dot(d[j]) > cos_sep) {
        throw Error(ErrorCode::validation, "template directions " + std::to_string(j) + " and " +
                                               std::to_string(i) + " are closer than 1 degree");
      }
    }
  }
}

Digest template_hash(const RayTemplate& tmpl) {
  ByteWriter w;
  w.put_string("srm-template-v1");
  w.put_u32(static_cast<std::uint32_t>(tmpl.size()));
  for (const auto& d : tmpl.directions) {
    for (int k = 0; k < 3; ++k) w.put_f64(d[k]);
  }
  return w.digest();
}

RayTemplate parse_template(const std::string& text) {
  auto j = parse_json(text, "ray template");
  RayTemplate tmpl;
  try {
    if (j.at("format").get<std::string>() != "srm-ray-template") throw Error(ErrorCode::parse, "ray template: wrong format tag");
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::parse, "ray template: unsupported version");
    tmpl.max_polar_deg = j.at("max_polar_deg").get<double>();
    auto n = j.at("n_r").get<std::size_t>();
    for (const auto& d : j.at("directions")) {
      if (d.size() != 3) throw Error(ErrorCode::parse, "ray template: direction needs 3 components");
      tmpl.directions.emplace_back(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
    }
    if (tmpl.size() != n) throw Error(ErrorCode::validation, "ray template: n_r disagrees with direction count");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("ray template: ") + e.what());
  }
  validate(tmpl);
  return tmpl;
}

std::string format_template(const RayTemplate& tmpl) {
  json dirs = json::array();
  for (const auto& d : tmpl.directions) dirs.push_back({d.x(), d.y(), d.z()});
  json j = {{"format", "srm-ray-template"},
            {"version", 1},
            {"n_r", tmpl.size()},
            {"max_polar_deg", tmpl.max_polar_deg},
            {"directions", dirs}};
  return j.dump(1) + "\n";
}

RayTemplate load_template(const std::string& path) { return parse_template(read_text(path)); }
void write_template(const std::string& path, const RayTemplate& tmpl) { write_text(path, format_template(tmpl)); }

// ---------------------------------------------------------------------------
// Frames and ray placement

std::vector<Vec3> scalp_positions(const TriMesh& head, const ScalpSpec& scalp) {
  std::vector<Vec3> out;
  out.reserve(scalp.size());
  for (auto vid : scalp.vertex_ids) {
    if (vid >= head.vertices.size()) {
      throw Error(ErrorCode::validation, "scalp vertex id " + std::to_string(vid) + " exceeds head vertex count " +
                                             std::to_string(head.vertices.size()));
    }
    out.push_back(head.vertices[vid]);
  }
  return out;
}

std::vector<LocalFrame> build_frames(const TriMesh& head, const ScalpSpec& scalp) {
  validate(scalp);
  const auto positions = scalp_positions(head, scalp);
  const auto normals = vertex_normals(head);
  const auto n = scalp.size();
  std::vector<LocalFrame> frames(n);
  std::vector<char> bad(n, 0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (auto i = begin; i < end; ++i) {
      const Vec3& z = normals[scalp.vertex_ids[i]];
      const Vec3 t = positions[i] - positions[scalp.pair_of[i]];
      Vec3 x_prime = t.cross(z);
      double len = x_prime.norm();
      if (z.squaredNorm() == 0 || len < 1e-8) {
        bad[i] = 1;
        continue;
      }
      x_prime /= len;
      Vec3 y = z.cross(x_prime).normalized();
      const double delta = scalp.side[i] == Side::left ? 1.0 : -1.0;
      frames[i] = {delta * x_prime, y, z, scalp.side[i] == Side::left ? Handedness::right : Handedness::left};
    }
  });
  std::string offenders;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!bad[i]) continue;
    if (count++ < 32) offenders += (offenders.empty() ? "" : ", ") + std::to_string(i);
  }
  if (count > 0) {
    if (count > 32) offenders += ", ...";
    throw Error(ErrorCode::degenerate, "degenerate local frame (t parallel to normal or coincident pair) at " +
                                           std::to_string(count) + " scalp entries: " + offenders);
  }
  return frames;
}

RaySet place_rays(std::span<const LocalFrame> frames, std::span<const Vec3> positions, const RayTemplate& tmpl,
                  const Digest& scalp_digest) {
  if (frames.size() != positions.size()) throw Error(ErrorCode::argument, "frame and position counts differ");
  RaySet rays;
  rays.n_s = frames.size();
  rays.n_r = tmpl.size();
  rays.origins.assign(positions.begin(), positions.end());
  rays.directions.resize(rays.n_s * rays.n_r);
  rays.template_hash = template_hash(tmpl);
  rays.scalp_hash = scalp_digest;
  for (std::size_t i = 0; i < rays.n_s; ++i) {
    const auto& f = frames[i];
    for (std::size_t k = 0; k < rays.n_r; ++k) {
      const Vec3& r = tmpl.directions[k];
      rays.directions[i * rays.n_r + k] = r.x() * f.x + r.y() * f.y + r.z() * f.z;
    }
  }
  return rays;
}

RaySet make_rays(const TriMesh& head, const ScalpSpec& scalp, const RayTemplate& tmpl) {
  auto frames = build_frames(head, scalp);
  auto positions = scalp_positions(head, scalp);
  return place_rays(frames, positions, tmpl, scalp_hash(scalp));
}

}  // namespace srm
