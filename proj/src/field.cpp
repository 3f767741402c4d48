#include "srm/field.hpp"

#include "srm/error.hpp"
#include "srm/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

namespace srm {

Rgb RayDistanceField::albedo(std::size_t e, Slot s) const {
  const auto& a = s == Slot::min ? albedo_min : albedo_max;
  return {a[3 * e], a[3 * e + 1], a[3 * e + 2]};
}

void RayDistanceField::set_albedo(std::size_t e, Slot s, const Rgb& c) {
  auto& a = s == Slot::min ? albedo_min : albedo_max;
  for (int k = 0; k < 3; ++k) a[3 * e + k] = static_cast<float>(c[k]);
}

RayDistanceField RayDistanceField::empty(std::size_t n_s, std::size_t n_r, const Digest& template_hash,
                                         const Digest& scalp_hash, const Rgb& skin) {
  RayDistanceField f;
  f.n_s = n_s;
  f.n_r = n_r;
  f.template_hash = template_hash;
  f.scalp_hash = scalp_hash;
  const auto e = n_s * n_r;
  f.d_min.assign(e, 0.0f);
  f.d_max.assign(e, 0.0f);
  f.albedo_min.resize(3 * e);
  f.albedo_max.resize(3 * e);
  for (std::size_t i = 0; i < e; ++i) {
    f.set_albedo(i, Slot::min, skin);
    f.set_albedo(i, Slot::max, skin);
  }
  return f;
}

namespace {

template <typename T>
bool same_bits(const std::vector<T>& a, const std::vector<T>& b) {
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0);
}

float clamp_unit(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

void check_shape(const RayDistanceField& f) {
  const auto e = f.entries();
  if (f.d_min.size() != e || f.d_max.size() != e || f.albedo_min.size() != 3 * e || f.albedo_max.size() != 3 * e) {
    throw Error(ErrorCode::validation, "ray distance field arrays do not match n_s x n_r");
  }
}

}  // namespace

bool bitwise_equal(const RayDistanceField& a, const RayDistanceField& b) {
  return a.n_s == b.n_s && a.n_r == b.n_r && a.template_hash == b.template_hash && a.scalp_hash == b.scalp_hash &&
         same_bits(a.d_min, b.d_min) && same_bits(a.d_max, b.d_max) && same_bits(a.albedo_min, b.albedo_min) &&
         same_bits(a.albedo_max, b.albedo_max);
}

void validate(const RayDistanceField& f) {
  check_shape(f);
  for (std::size_t e = 0; e < f.entries(); ++e) {
    const float lo = f.d_min[e], hi = f.d_max[e];
    auto at = " at entry " + std::to_string(e);
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw Error(ErrorCode::validation, "non-finite distance" + at);
    if (lo < 0 || hi < 0) throw Error(ErrorCode::validation, "negative distance" + at);
    if (lo > hi) throw Error(ErrorCode::validation, "d_min exceeds d_max" + at);
    if ((lo == 0) != (hi == 0)) throw Error(ErrorCode::validation, "zero coupling broken" + at);
  }
  for (const auto* arr : {&f.albedo_min, &f.albedo_max}) {
    for (float v : *arr) {
      if (!(v >= 0.0f && v <= 1.0f)) throw Error(ErrorCode::validation, "albedo outside [0,1]");
    }
  }
}

void require_same_layout(const RayDistanceField& a, const RayDistanceField& b, const char* context) {
  if (a.n_s != b.n_s || a.n_r != b.n_r) {
    throw Error(ErrorCode::hash_mismatch, std::string(context) + ": field shapes differ (" + std::to_string(a.n_s) +
                                              "x" + std::to_string(a.n_r) + " vs " + std::to_string(b.n_s) + "x" +
                                              std::to_string(b.n_r) + ")");
  }
  if (a.template_hash != b.template_hash) throw Error(ErrorCode::hash_mismatch, std::string(context) + ": template hashes differ");
  if (a.scalp_hash != b.scalp_hash) throw Error(ErrorCode::hash_mismatch, std::string(context) + ": scalp hashes differ");
}

void require_compatible(const RayDistanceField& field, const RaySet& rays, const char* context) {
  if (field.n_s != rays.n_s || field.n_r != rays.n_r) {
    throw Error(ErrorCode::hash_mismatch, std::string(context) + ": field shape does not match the ray set");
  }
  if (field.template_hash != rays.template_hash) {
    throw Error(ErrorCode::hash_mismatch, std::string(context) + ": field was produced with a different ray template");
  }
  if (field.scalp_hash != rays.scalp_hash) {
    throw Error(ErrorCode::hash_mismatch, std::string(context) + ": field was produced with a different scalp spec");
  }
}

void enforce_invariants(RayDistanceField& f) {
  for (std::size_t e = 0; e < f.entries(); ++e) {
    float lo = f.d_min[e], hi = f.d_max[e];
    if (!(lo > 0) || !std::isfinite(lo)) lo = 0;
    if (!(hi > 0) || !std::isfinite(hi)) hi = 0;
    if (lo == 0 || hi == 0) {
      lo = hi = 0;
    } else if (lo > hi) {
      std::swap(lo, hi);
    }
    f.d_min[e] = lo;
    f.d_max[e] = hi;
  }
}

std::size_t ExclusionMap::flagged() const {
  return static_cast<std::size_t>(std::count(ex_min.begin(), ex_min.end(), 1) + std::count(ex_max.begin(), ex_max.end(), 1));
}

ExclusionMap ExclusionMap::zeros(std::size_t n_s, std::size_t n_r) {
  return {n_s, n_r, std::vector<std::uint8_t>(n_s * n_r, 0), std::vector<std::uint8_t>(n_s * n_r, 0)};
}

// ---------------------------------------------------------------------------
// Capture

RayDistanceField analyze(const TriMesh& hair, const RaySet& rays, const Rgb& skin) {
  AccelIndex index(hair);
  return analyze(index, hair, rays, skin);
}

RayDistanceField analyze(const AccelIndex& index, const TriMesh& hair, const RaySet& rays, const Rgb& skin) {
  if (hair.faces.empty()) throw Error(ErrorCode::argument, "hair mesh has no faces");
  if (index.triangle_count() != hair.faces.size()) throw Error(ErrorCode::argument, "acceleration index was built for another mesh");
  auto field = RayDistanceField::empty(rays.n_s, rays.n_r, rays.template_hash, rays.scalp_hash, skin);

  auto hit_color = [&](const Hit& h) -> Rgb {
    if (!hair.has_colors()) return skin;
    const auto& f = hair.faces[h.face];
    Rgb c = h.bary[0] * hair.colors[f[0]] + h.bary[1] * hair.colors[f[1]] + h.bary[2] * hair.colors[f[2]];
    return c.cwiseMax(0.0).cwiseMin(1.0);
  };

  parallel_for(rays.n_s, [&](std::size_t begin, std::size_t end) {
    std::vector<Hit> hits;
    for (auto i = begin; i < end; ++i) {
      for (std::size_t n = 0; n < rays.n_r; ++n) {
        index.cast_all_hits(rays.ray(i, n), hits);
        if (hits.empty()) continue;
        const auto e = field.index(i, n);
        field.d_min[e] = static_cast<float>(hits.front().t);
        field.d_max[e] = static_cast<float>(hits.back().t);
        field.set_albedo(e, Slot::min, hit_color(hits.front()));
        field.set_albedo(e, Slot::max, hit_color(hits.back()));
      }
    }
  });
  // a hit exactly at the ray origin would break the zero coupling
  enforce_invariants(field);
  for (std::size_t e = 0; e < field.entries(); ++e) {
    if (field.d_max[e] == 0) {
      field.set_albedo(e, Slot::min, skin);
      field.set_albedo(e, Slot::max, skin);
    }
  }
  return field;
}

ReconstructedVertices reconstruct_vertices(const RayDistanceField& field, const RaySet& rays, bool drop_zeros) {
  require_compatible(field, rays, "reconstruct");
  ReconstructedVertices out;
  out.points.reserve(2 * field.entries());
  out.tags.reserve(2 * field.entries());
  for (std::size_t i = 0; i < field.n_s; ++i) {
    for (std::size_t n = 0; n < field.n_r; ++n) {
      const auto e = field.index(i, n);
      for (Slot k : {Slot::min, Slot::max}) {
        const double d = field.distance(e, k);
        if (drop_zeros && d == 0) continue;
        out.points.push_back(rays.origins[i] + d * rays.directions[e]);
        out.tags.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(n), k});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Field algebra

RayDistanceField fuse(std::span<const RayDistanceField> fields, std::span<const double> weights, FuseMode mode,
                      const Rgb& skin) {
  if (fields.empty()) throw Error(ErrorCode::argument, "fuse needs at least one field");
  if (fields.size() != weights.size()) throw Error(ErrorCode::argument, "fuse needs one weight per field");
  if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0; })) {
    throw Error(ErrorCode::argument, "fuse weights are all zero");
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::argument, "fuse weight is not finite");
  }
  for (const auto& f : fields) {
    check_shape(f);
    require_same_layout(fields[0], f, "fuse");
  }

  RayDistanceField out = fields[0];
  const auto e_count = out.entries();
  for (std::size_t e = 0; e < e_count; ++e) {
    double total = 0;
    bool any_active = false;
    if (mode == FuseMode::mask_aware) {
      for (std::size_t j = 0; j < fields.size(); ++j) {
        if (fields[j].d_max[e] != 0) {
          total += weights[j];
          any_active = true;
        }
      }
      if (!any_active || total == 0) {
        out.d_min[e] = out.d_max[e] = 0;
        out.set_albedo(e, Slot::min, skin);
        out.set_albedo(e, Slot::max, skin);
        continue;
      }
    }
    double lo = 0, hi = 0;
    Rgb a_lo = Rgb::Zero(), a_hi = Rgb::Zero();
    for (std::size_t j = 0; j < fields.size(); ++j) {
      double w = weights[j];
      if (mode == FuseMode::mask_aware) {
        if (fields[j].d_max[e] == 0) continue;
        w /= total;
      }
      lo += w * fields[j].d_min[e];
      hi += w * fields[j].d_max[e];
      a_lo += w * fields[j].albedo(e, Slot::min);
      a_hi += w * fields[j].albedo(e, Slot::max);
    }
    out.d_min[e] = static_cast<float>(lo);
    out.d_max[e] = static_cast<float>(hi);
    for (int k = 0; k < 3; ++k) {
      out.albedo_min[3 * e + k] = clamp_unit(a_lo[k]);
      out.albedo_max[3 * e + k] = clamp_unit(a_hi[k]);
    }
  }
  enforce_invariants(out);
  return out;
}

RayDistanceField flip(const RayDistanceField& field, const ScalpSpec& scalp) {
  check_shape(field);
  validate(scalp);
  if (field.n_s != scalp.size() || field.scalp_hash != scalp_hash(scalp)) {
    throw Error(ErrorCode::hash_mismatch, "flip: field was not produced with this scalp spec");
  }
  RayDistanceField out = field;
  for (std::size_t i = 0; i < field.n_s; ++i) {
    const std::size_t src = scalp.pair_of[i];
    for (std::size_t n = 0; n < field.n_r; ++n) {
      const auto to = field.index(i, n), from = field.index(src, n);
      out.d_min[to] = field.d_min[from];
      out.d_max[to] = field.d_max[from];
      for (int k = 0; k < 3; ++k) {
        out.albedo_min[3 * to + k] = field.albedo_min[3 * from + k];
        out.albedo_max[3 * to + k] = field.albedo_max[3 * from + k];
      }
    }
  }
  return out;
}

RayDistanceField scale_thickness(const RayDistanceField& field, double beta_s) {
  if (!(beta_s > 0) || !std::isfinite(beta_s)) throw Error(ErrorCode::argument, "thickness scale must be positive and finite");
  check_shape(field);
  RayDistanceField out = field;
  for (auto& v : out.d_min) v = static_cast<float>(static_cast<double>(v) * beta_s);
  for (auto& v : out.d_max) v = static_cast<float>(static_cast<double>(v) * beta_s);
  enforce_invariants(out);
  return out;
}

RayDistanceField apply_exclusion(const RayDistanceField& field, const ExclusionMap& map, const Rgb& skin) {
  check_shape(field);
  if (map.n_s != field.n_s || map.n_r != field.n_r || map.ex_min.size() != field.entries() ||
      map.ex_max.size() != field.entries()) {
    throw Error(ErrorCode::validation, "exclusion map shape does not match the field");
  }
  RayDistanceField out = field;
  for (std::size_t e = 0; e < field.entries(); ++e) {
    if (map.ex_min[e] > 1 || map.ex_max[e] > 1) throw Error(ErrorCode::validation, "exclusion map values must be 0 or 1");
    if (!map.ex_min[e] && !map.ex_max[e]) continue;
    out.d_min[e] = 0;
    out.d_max[e] = 0;
    out.set_albedo(e, Slot::min, skin);
    out.set_albedo(e, Slot::max, skin);
  }
  return out;
}

Perturbation perturb(const RayDistanceField& field, std::size_t count, double magnitude, std::uint64_t seed) {
  check_shape(field);
  const auto e_count = field.entries();
  const auto positions = 2 * e_count;
  if (count > positions) throw Error(ErrorCode::argument, "perturbation count exceeds the number of field positions");
  if (!(magnitude >= 0) || !std::isfinite(magnitude)) throw Error(ErrorCode::argument, "perturbation magnitude must be finite and >= 0");

  std::mt19937_64 rng(seed);
  // 53-bit uniform in [0, 1), independent of the standard library's distributions
  auto uniform01 = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  // partial Fisher-Yates over slot-major positions
  std::vector<std::uint32_t> pool(positions);
  for (std::uint32_t p = 0; p < positions; ++p) pool[p] = p;
  Perturbation result{field, ExclusionMap::zeros(field.n_s, field.n_r)};
  for (std::size_t k = 0; k < count; ++k) {
    auto j = k + static_cast<std::size_t>(uniform01() * static_cast<double>(positions - k));
    j = std::min(j, positions - 1);
    std::swap(pool[k], pool[j]);
    const auto p = pool[k];
    const double noise = (2.0 * uniform01() - 1.0) * magnitude;
    const std::size_t e = p % e_count;
    if (p < e_count) {
      result.field.d_min[e] = static_cast<float>(std::max(0.0, result.field.d_min[e] + noise));
      result.truth.ex_min[e] = 1;
    } else {
      result.field.d_max[e] = static_cast<float>(std::max(0.0, result.field.d_max[e] + noise));
      result.truth.ex_max[e] = 1;
    }
  }
  enforce_invariants(result.field);
  return result;
}

ExclusionMap binarize_exclusion(std::span<const double> scores, std::size_t n_s, std::size_t n_r) {
  const auto e_count = n_s * n_r;
  if (scores.size() != 2 * e_count) throw Error(ErrorCode::validation, "exclusion scores must hold 2 * n_s * n_r values");
  auto map = ExclusionMap::zeros(n_s, n_r);
  for (std::size_t e = 0; e < e_count; ++e) {
    if (!std::isfinite(scores[e]) || !std::isfinite(scores[e_count + e])) {
      throw Error(ErrorCode::validation, "exclusion score is not finite");
    }
    // sigmoid(s) > 0.5 exactly when s > 0
    map.ex_min[e] = scores[e] > 0 ? 1 : 0;
    map.ex_max[e] = scores[e_count + e] > 0 ? 1 : 0;
  }
  return map;
}

// ---------------------------------------------------------------------------
// SRMH serialization

std::basic_string<std::uint8_t> encode_field(const RayDistanceField& field) {
  validate(field);
  ByteWriter w;
  for (char c : {'S', 'R', 'M', 'H'}) w.put_u8(static_cast<std::uint8_t>(c));
  w.put_u16(kFieldFormatVersion);
  w.put_u16(0);
  w.put_u32(static_cast<std::uint32_t>(field.n_s));
  w.put_u32(static_cast<std::uint32_t>(field.n_r));
  w.put_bytes(field.template_hash);
  w.put_bytes(field.scalp_hash);
  for (const auto* arr : {&field.d_min, &field.d_max, &field.albedo_min, &field.albedo_max}) {
    for (float v : *arr) w.put_f32(v);
  }
  return w.take();
}

RayDistanceField decode_field(std::span<const std::uint8_t> bytes, const std::string& name) {
  ByteReader r(bytes, name);
  char magic[4];
  for (auto& c : magic) c = static_cast<char>(r.get_u8());
  if (std::string_view(magic, 4) != "SRMH") throw Error(ErrorCode::parse, name + ": not an SRMH field file");
  const auto version = r.get_u16();
  if (version != kFieldFormatVersion) {
    throw Error(ErrorCode::parse, name + ": unsupported SRMH version " + std::to_string(version));
  }
  r.get_u16();
  RayDistanceField f;
  f.n_s = r.get_u32();
  f.n_r = r.get_u32();
  r.get_bytes(f.template_hash);
  r.get_bytes(f.scalp_hash);
  const auto e = f.entries();
  if (r.remaining() != 32 * e) {
    throw Error(ErrorCode::parse, name + ": expected " + std::to_string(32 * e) + " payload bytes, found " +
                                      std::to_string(r.remaining()));
  }
  f.d_min.resize(e);
  f.d_max.resize(e);
  f.albedo_min.resize(3 * e);
  f.albedo_max.resize(3 * e);
  for (auto* arr : {&f.d_min, &f.d_max, &f.albedo_min, &f.albedo_max}) {
    for (auto& v : *arr) v = r.get_f32();
  }
  validate(f);
  return f;
}

void save_field(const std::string& path, const RayDistanceField& field) {
  auto bytes = encode_field(field);
  write_file_bytes(path, {bytes.data(), bytes.size()});
}

RayDistanceField load_field(const std::string& path) {
  auto bytes = read_file_bytes(path);
  return decode_field({bytes.data(), bytes.size()}, path);
}

}  // namespace srm
