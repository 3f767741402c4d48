#include "srm/mesh.hpp"

#include "srm/error.hpp"
#include "srm/hash.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string_view>

namespace srm {

namespace {

std::string lower_ext(const std::string& path) {
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return {};
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

bool is_degenerate(const Face& f) { return f[0] == f[1] || f[1] == f[2] || f[0] == f[2]; }

// Drops faces with repeated corners, then validates what remains.
void finish_mesh(TriMesh& mesh, MeshLoadInfo* info) {
  auto before = mesh.faces.size();
  std::erase_if(mesh.faces, is_degenerate);
  if (info) info->dropped_degenerate = before - mesh.faces.size();
  if (mesh.has_normals()) {
    for (auto& n : mesh.normals) {
      double len = n.norm();
      if (!(len > 0) || !std::isfinite(len)) {
        mesh.normals.clear();
        break;
      }
      n /= len;
    }
  }
  validate(mesh);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

bool parse_double(std::string_view s, double& out) {
  // from_chars for double is available in libstdc++ 11
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_long(std::string_view s, long& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

void validate(const TriMesh& mesh) {
  const auto nv = mesh.vertices.size();
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    for (auto idx : face) {
      if (idx >= nv) {
        throw Error(ErrorCode::validation, "face " + std::to_string(f) + " references vertex " +
                                               std::to_string(idx) + " but mesh has " +
                                               std::to_string(nv) + " vertices");
      }
    }
    if (is_degenerate(face)) {
      throw Error(ErrorCode::validation, "face " + std::to_string(f) + " has repeated corners");
    }
  }
  for (const auto& v : mesh.vertices) {
    if (!v.allFinite()) throw Error(ErrorCode::validation, "non-finite vertex coordinate");
  }
  if (mesh.has_colors()) {
    if (mesh.colors.size() != nv) throw Error(ErrorCode::validation, "color count differs from vertex count");
    for (const auto& c : mesh.colors) {
      if (!c.allFinite() || (c.array() < 0.0).any() || (c.array() > 1.0).any()) {
        throw Error(ErrorCode::validation, "vertex color outside [0,1]");
      }
    }
  }
  if (mesh.has_normals()) {
    if (mesh.normals.size() != nv) throw Error(ErrorCode::validation, "normal count differs from vertex count");
    for (const auto& n : mesh.normals) {
      if (std::abs(n.norm() - 1.0) > 1e-6) throw Error(ErrorCode::validation, "stored normal is not unit length");
    }
  }
}

// ---------------------------------------------------------------------------
// OBJ

TriMesh parse_obj(const std::string& text, const std::string& name, MeshLoadInfo* info) {
  TriMesh mesh;
  std::size_t colored = 0;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::parse, name + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    std::string_view view(line);
    if (hash != std::string::npos) view = view.substr(0, hash);
    auto tok = split_ws(view);
    if (tok.empty()) continue;
    if (tok[0] == "v") {
      if (tok.size() != 4 && tok.size() != 7) fail("vertex needs 3 or 6 numbers");
      double vals[6];
      for (std::size_t k = 1; k < tok.size(); ++k) {
        if (!parse_double(tok[k], vals[k - 1])) fail("bad number '" + std::string(tok[k]) + "'");
      }
      mesh.vertices.emplace_back(vals[0], vals[1], vals[2]);
      if (tok.size() == 7) {
        mesh.colors.resize(mesh.vertices.size(), Vec3::Zero());
        mesh.colors.back() = Vec3(vals[3], vals[4], vals[5]);
        ++colored;
      }
    } else if (tok[0] == "f") {
      if (tok.size() < 4) fail("face needs at least 3 vertices");
      std::vector<std::uint32_t> poly;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        auto head = tok[k].substr(0, tok[k].find('/'));
        long idx = 0;
        if (!parse_long(head, idx) || idx == 0) fail("bad face index '" + std::string(tok[k]) + "'");
        long resolved = idx > 0 ? idx - 1 : static_cast<long>(mesh.vertices.size()) + idx;
        if (resolved < 0) fail("relative face index before first vertex");
        poly.push_back(static_cast<std::uint32_t>(resolved));
      }
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
    }
    // vn, vt, g, o, s, usemtl, mtllib are ignored
  }
  if (colored != 0 && colored != mesh.vertices.size()) {
    throw Error(ErrorCode::parse, name + ": only " + std::to_string(colored) + " of " +
                                      std::to_string(mesh.vertices.size()) + " vertices carry colors");
  }
  finish_mesh(mesh, info);
  return mesh;
}

std::string format_obj(const TriMesh& mesh) {
  std::string out;
  out.reserve(mesh.vertices.size() * 64 + mesh.faces.size() * 24);
  char buf[256];
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& v = mesh.vertices[i];
    int n;
    if (mesh.has_colors()) {
      const auto& c = mesh.colors[i];
      n = std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g %.17g %.17g %.17g\n", v.x(), v.y(), v.z(),
                        c.x(), c.y(), c.z());
    } else {
      n = std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    }
    out.append(buf, n);
  }
  for (const auto& f : mesh.faces) {
    int n = std::snprintf(buf, sizeof buf, "f %u %u %u\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out.append(buf, n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PLY

namespace {

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

PlyType ply_type(std::string_view s, const std::string& where) {
  if (s == "char" || s == "int8") return PlyType::i8;
  if (s == "uchar" || s == "uint8") return PlyType::u8;
  if (s == "short" || s == "int16") return PlyType::i16;
  if (s == "ushort" || s == "uint16") return PlyType::u16;
  if (s == "int" || s == "int32") return PlyType::i32;
  if (s == "uint" || s == "uint32") return PlyType::u32;
  if (s == "float" || s == "float32") return PlyType::f32;
  if (s == "double" || s == "float64") return PlyType::f64;
  throw Error(ErrorCode::parse, where + ": unknown PLY type '" + std::string(s) + "'");
}

bool is_float_type(PlyType t) { return t == PlyType::f32 || t == PlyType::f64; }

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::f32;
  bool is_list = false;
  PlyType count_type = PlyType::u8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

// Reads scalars either from ASCII tokens or binary little-endian bytes.
class PlyScalarSource {
 public:
  PlyScalarSource(std::span<const std::uint8_t> body, bool binary, const std::string& name)
      : binary_(binary), name_(name), reader_(body, name) {
    if (!binary_) {
      text_ = std::string_view(reinterpret_cast<const char*>(body.data()), body.size());
    }
  }

  double read(PlyType t) {
    if (binary_) {
      switch (t) {
        case PlyType::i8: return static_cast<std::int8_t>(reader_.get_u8());
        case PlyType::u8: return reader_.get_u8();
        case PlyType::i16: return static_cast<std::int16_t>(reader_.get_u16());
        case PlyType::u16: return reader_.get_u16();
        case PlyType::i32: return static_cast<std::int32_t>(reader_.get_u32());
        case PlyType::u32: return reader_.get_u32();
        case PlyType::f32: return reader_.get_f32();
        case PlyType::f64: return reader_.get_f64();
      }
    }
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::size_t end = pos_;
    while (end < text_.size() && !std::isspace(static_cast<unsigned char>(text_[end]))) ++end;
    if (end == pos_) throw Error(ErrorCode::parse, name_ + ": unexpected end of ASCII body at offset " + std::to_string(pos_));
    double v = 0;
    if (!parse_double(text_.substr(pos_, end - pos_), v)) {
      throw Error(ErrorCode::parse, name_ + ": bad number at body offset " + std::to_string(pos_));
    }
    pos_ = end;
    return v;
  }

  std::size_t offset() const { return binary_ ? reader_.offset() : pos_; }

 private:
  bool binary_;
  std::string name_;
  ByteReader reader_;
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

TriMesh parse_ply(std::span<const std::uint8_t> bytes, const std::string& name, MeshLoadInfo* info) {
  std::string_view all(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  auto header_end = all.find("end_header");
  if (all.substr(0, 3) != "ply" || header_end == std::string_view::npos) {
    throw Error(ErrorCode::parse, name + ": missing PLY magic or end_header");
  }
  auto body_start = all.find('\n', header_end);
  if (body_start == std::string_view::npos) throw Error(ErrorCode::parse, name + ": header not terminated");
  ++body_start;

  bool binary = false;
  std::vector<PlyElement> elements;
  std::istringstream header{std::string(all.substr(0, header_end))};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(header, line)) {
    ++line_no;
    auto where = name + ":" + std::to_string(line_no);
    auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info" || tok[0] == "ply") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw Error(ErrorCode::parse, where + ": bad format line");
      if (tok[1] == "ascii") binary = false;
      else if (tok[1] == "binary_little_endian") binary = true;
      else throw Error(ErrorCode::parse, where + ": unsupported PLY format '" + std::string(tok[1]) + "'");
    } else if (tok[0] == "element") {
      long count = 0;
      if (tok.size() != 3 || !parse_long(tok[2], count) || count < 0) {
        throw Error(ErrorCode::parse, where + ": bad element line");
      }
      elements.push_back({std::string(tok[1]), static_cast<std::size_t>(count), {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw Error(ErrorCode::parse, where + ": property before element");
      PlyProperty prop;
      if (tok.size() == 5 && tok[1] == "list") {
        prop.is_list = true;
        prop.count_type = ply_type(tok[2], where);
        prop.type = ply_type(tok[3], where);
        prop.name = tok[4];
      } else if (tok.size() == 3) {
        prop.type = ply_type(tok[1], where);
        prop.name = tok[2];
      } else {
        throw Error(ErrorCode::parse, where + ": bad property line");
      }
      elements.back().props.push_back(prop);
    } else {
      throw Error(ErrorCode::parse, where + ": unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }

  TriMesh mesh;
  PlyScalarSource src(bytes.subspan(body_start), binary, name);
  for (const auto& el : elements) {
    if (el.name == "vertex") {
      int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, ir = -1, ig = -1, ib = -1;
      for (int p = 0; p < static_cast<int>(el.props.size()); ++p) {
        const auto& n = el.props[p].name;
        if (n == "x") ix = p;
        else if (n == "y") iy = p;
        else if (n == "z") iz = p;
        else if (n == "nx") inx = p;
        else if (n == "ny") iny = p;
        else if (n == "nz") inz = p;
        else if (n == "red" || n == "r") ir = p;
        else if (n == "green" || n == "g") ig = p;
        else if (n == "blue" || n == "b") ib = p;
      }
      if (ix < 0 || iy < 0 || iz < 0) throw Error(ErrorCode::parse, name + ": vertex element lacks x/y/z");
      bool has_n = inx >= 0 && iny >= 0 && inz >= 0;
      bool has_c = ir >= 0 && ig >= 0 && ib >= 0;
      mesh.vertices.resize(el.count);
      if (has_n) mesh.normals.resize(el.count);
      if (has_c) mesh.colors.resize(el.count);
      std::vector<double> row(el.props.size());
      for (std::size_t v = 0; v < el.count; ++v) {
        for (std::size_t p = 0; p < el.props.size(); ++p) {
          const auto& prop = el.props[p];
          if (prop.is_list) {
            auto n = static_cast<std::size_t>(src.read(prop.count_type));
            for (std::size_t k = 0; k < n; ++k) src.read(prop.type);
            row[p] = 0;
          } else {
            row[p] = src.read(prop.type);
          }
        }
        mesh.vertices[v] = Vec3(row[ix], row[iy], row[iz]);
        if (has_n) mesh.normals[v] = Vec3(row[inx], row[iny], row[inz]);
        if (has_c) {
          Vec3 c(row[ir], row[ig], row[ib]);
          if (!is_float_type(el.props[ir].type)) c /= 255.0;
          mesh.colors[v] = c;
        }
      }
    } else if (el.name == "face") {
      int il = -1;
      for (int p = 0; p < static_cast<int>(el.props.size()); ++p) {
        const auto& prop = el.props[p];
        if (prop.is_list && (prop.name == "vertex_indices" || prop.name == "vertex_index")) il = p;
      }
      if (il < 0) throw Error(ErrorCode::parse, name + ": face element lacks vertex_indices list");
      std::vector<std::uint32_t> poly;
      for (std::size_t f = 0; f < el.count; ++f) {
        for (std::size_t p = 0; p < el.props.size(); ++p) {
          const auto& prop = el.props[p];
          if (!prop.is_list) {
            src.read(prop.type);
            continue;
          }
          auto at = src.offset();
          double count_d = src.read(prop.count_type);
          if (count_d < 0) throw Error(ErrorCode::parse, name + ": negative list length at body offset " + std::to_string(at));
          auto count = static_cast<std::size_t>(count_d);
          poly.clear();
          for (std::size_t k = 0; k < count; ++k) {
            double idx = src.read(prop.type);
            if (static_cast<int>(p) == il) {
              if (idx < 0) throw Error(ErrorCode::validation, name + ": negative face index in face " + std::to_string(f));
              poly.push_back(static_cast<std::uint32_t>(idx));
            }
          }
          if (static_cast<int>(p) == il) {
            if (poly.size() < 3) throw Error(ErrorCode::parse, name + ": face " + std::to_string(f) + " has fewer than 3 vertices");
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
          }
        }
      }
    } else {
      for (std::size_t i = 0; i < el.count; ++i) {
        for (const auto& prop : el.props) {
          if (prop.is_list) {
            auto n = static_cast<std::size_t>(src.read(prop.count_type));
            for (std::size_t k = 0; k < n; ++k) src.read(prop.type);
          } else {
            src.read(prop.type);
          }
        }
      }
    }
  }
  finish_mesh(mesh, info);
  return mesh;
}

std::basic_string<std::uint8_t> format_ply(const TriMesh& mesh, PlyEncoding encoding) {
  const bool binary = encoding == PlyEncoding::binary_little_endian;
  std::ostringstream h;
  h << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  h << "element vertex " << mesh.vertices.size() << "\n";
  h << "property double x\nproperty double y\nproperty double z\n";
  if (mesh.has_normals()) h << "property double nx\nproperty double ny\nproperty double nz\n";
  if (mesh.has_colors()) h << "property float red\nproperty float green\nproperty float blue\n";
  h << "element face " << mesh.faces.size() << "\n";
  h << "property list uchar int vertex_indices\nend_header\n";
  ByteWriter w;
  for (char c : h.str()) w.put_u8(static_cast<std::uint8_t>(c));
  if (binary) {
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      for (int k = 0; k < 3; ++k) w.put_f64(mesh.vertices[i][k]);
      if (mesh.has_normals()) for (int k = 0; k < 3; ++k) w.put_f64(mesh.normals[i][k]);
      if (mesh.has_colors()) for (int k = 0; k < 3; ++k) w.put_f32(static_cast<float>(mesh.colors[i][k]));
    }
    for (const auto& f : mesh.faces) {
      w.put_u8(3);
      for (auto idx : f) w.put_u32(idx);
    }
  } else {
    std::string body;
    char buf[160];
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      const auto& v = mesh.vertices[i];
      body.append(buf, std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", v.x(), v.y(), v.z()));
      if (mesh.has_normals()) {
        const auto& n = mesh.normals[i];
        body.append(buf, std::snprintf(buf, sizeof buf, " %.17g %.17g %.17g", n.x(), n.y(), n.z()));
      }
      if (mesh.has_colors()) {
        const auto& c = mesh.colors[i];
        body.append(buf, std::snprintf(buf, sizeof buf, " %.9g %.9g %.9g", static_cast<float>(c.x()),
                                       static_cast<float>(c.y()), static_cast<float>(c.z())));
      }
      body.push_back('\n');
    }
    for (const auto& f : mesh.faces) body.append(buf, std::snprintf(buf, sizeof buf, "3 %u %u %u\n", f[0], f[1], f[2]));
    for (char c : body) w.put_u8(static_cast<std::uint8_t>(c));
  }
  return w.take();
}

TriMesh load_mesh(const std::string& path, MeshLoadInfo* info) {
  auto ext = lower_ext(path);
  if (ext == "obj") {
    auto bytes = read_file_bytes(path);
    return parse_obj(std::string(bytes.begin(), bytes.end()), path, info);
  }
  if (ext == "ply") {
    auto bytes = read_file_bytes(path);
    return parse_ply({bytes.data(), bytes.size()}, path, info);
  }
  throw Error(ErrorCode::argument, "unsupported mesh extension for " + path + " (expected .obj or .ply)");
}

void write_mesh(const std::string& path, const TriMesh& mesh, PlyEncoding encoding) {
  validate(mesh);
  auto ext = lower_ext(path);
  if (ext == "obj") {
    auto text = format_obj(mesh);
    write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
  } else if (ext == "ply") {
    auto bytes = format_ply(mesh, encoding);
    write_file_bytes(path, {bytes.data(), bytes.size()});
  } else {
    throw Error(ErrorCode::argument, "unsupported mesh extension for " + path + " (expected .obj or .ply)");
  }
}

// ---------------------------------------------------------------------------
// Geometry

std::vector<Vec3> vertex_normals(const TriMesh& mesh) {
  std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
  for (const auto& f : mesh.faces) {
    const auto& a = mesh.vertices[f[0]];
    const auto& b = mesh.vertices[f[1]];
    const auto& c = mesh.vertices[f[2]];
    // cross product magnitude is twice the area, so this is area weighting
    Vec3 n = (b - a).cross(c - a);
    for (auto idx : f) normals[idx] += n;
  }
  for (auto& n : normals) {
    double len = n.norm();
    n = len > 0 ? Vec3(n / len) : Vec3::Zero();
  }
  return normals;
}

Aabb bounding_box(std::span<const Vec3> points) {
  Aabb box;
  for (const auto& p : points) box.extend(p);
  return box;
}

double bbox_diagonal(std::span<const Vec3> points) {
  if (points.empty()) throw Error(ErrorCode::argument, "bounding box of an empty point set");
  return bounding_box(points).extent().norm();
}

}  // namespace srm
