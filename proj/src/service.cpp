#include "srm/service.hpp"

#include "srm/error.hpp"
#include "srm/shading.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

namespace srm {

using nlohmann::json;

namespace {

struct RequestError {
  int status;
  std::string code;
  std::string field;
  std::string message;
};

HairService::Response error_response(const RequestError& e) {
  json j = {{"error", e.code}, {"message", e.message}};
  if (!e.field.empty()) j["field"] = e.field;
  return {e.status, j.dump()};
}

[[noreturn]] void reject(const std::string& field, const std::string& message) {
  throw RequestError{400, "validation", field, message};
}

Eigen::VectorXd read_vector(const json& body, const char* key, int expected) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(expected);
  if (!body.contains(key) || body[key].is_null()) return v;
  const auto& arr = body[key];
  if (!arr.is_array()) reject(key, "must be an array of numbers");
  if (arr.size() != static_cast<std::size_t>(expected)) {
    reject(key, "expected " + std::to_string(expected) + " values, got " + std::to_string(arr.size()));
  }
  for (std::size_t k = 0; k < arr.size(); ++k) {
    if (!arr[k].is_number()) reject(key, "entry " + std::to_string(k) + " is not a number");
    v[static_cast<Eigen::Index>(k)] = arr[k].get<double>();
    if (!std::isfinite(v[static_cast<Eigen::Index>(k)])) reject(key, "entry " + std::to_string(k) + " is not finite");
  }
  return v;
}

double read_number(const json& body, const char* key, double fallback) {
  if (!body.contains(key) || body[key].is_null()) return fallback;
  if (!body[key].is_number()) reject(key, "must be a number");
  const double v = body[key].get<double>();
  if (!std::isfinite(v)) reject(key, "must be finite");
  return v;
}

std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

HairService::HairService(MorphableHairModel model, TriMesh head, ScalpSpec scalp, RayTemplate tmpl,
                         std::map<std::string, RayDistanceField> samples, ServiceDefaults defaults)
    : model_(std::move(model)),
      head_(std::move(head)),
      scalp_(std::move(scalp)),
      template_(std::move(tmpl)),
      samples_(std::move(samples)),
      defaults_(defaults) {
  rays_ = make_rays(head_, scalp_, template_);
  if (rays_.n_s != model_.n_s || rays_.n_r != model_.n_r || rays_.template_hash != model_.template_hash ||
      rays_.scalp_hash != model_.scalp_hash) {
    throw Error(ErrorCode::hash_mismatch, "model was built for a different scalp spec or ray template");
  }
  for (const auto& [id, field] : samples_) require_compatible(field, rays_, ("sample " + id).c_str());
}

HairService::Response HairService::health() const { return {200, R"({"status":"ok"})"}; }

HairService::Response HairService::meta() const {
  json j = {{"K", model_.modes()},
            {"K_a", model_.albedo_modes()},
            {"N_s", model_.n_s},
            {"N_r", model_.n_r},
            {"n_samples", model_.n_samples},
            {"singular_values", std::vector<double>(model_.shape_sv.begin(), model_.shape_sv.end())},
            {"albedo_singular_values", std::vector<double>(model_.albedo_sv.begin(), model_.albedo_sv.end())},
            {"slider_range", {-defaults_.slider_range, defaults_.slider_range}},
            {"defaults", {{"voxel", defaults_.voxel_size}, {"smooth", defaults_.smooth_iterations}}},
            {"template_hash", to_hex(model_.template_hash)},
            {"scalp_hash", to_hex(model_.scalp_hash)}};
  return {200, j.dump()};
}

HairService::Response HairService::samples() const {
  json ids = json::array();
  for (const auto& [id, field] : samples_) ids.push_back(id);
  return {200, json{{"samples", ids}}.dump()};
}

HairService::Response HairService::synthesize(const std::string& request_body) const {
  try {
    json body;
    try {
      body = json::parse(request_body.empty() ? std::string("{}") : request_body);
    } catch (const json::parse_error& e) {
      throw RequestError{400, "parse", "", std::string("request body is not valid JSON: ") + e.what()};
    }
    if (!body.is_object()) reject("", "request body must be a JSON object");

    HairCoefficients coeffs;
    coeffs.beta_shape = read_vector(body, "beta_shape", model_.modes());
    coeffs.beta_alb = read_vector(body, "beta_alb", model_.albedo_modes());
    coeffs.beta_s = read_number(body, "beta_s", 1.0);
    if (!(coeffs.beta_s > 0)) reject("beta_s", "must be positive");
    bool do_flip = false;
    if (body.contains("flip") && !body["flip"].is_null()) {
      if (!body["flip"].is_boolean()) reject("flip", "must be a boolean");
      do_flip = body["flip"].get<bool>();
    }
    ExtractParams extract;
    extract.voxel_size = read_number(body, "voxel", defaults_.voxel_size);
    if (!(extract.voxel_size > 0 && extract.voxel_size <= 0.5)) reject("voxel", "must lie in (0, 0.5]");
    const double smooth_raw = read_number(body, "smooth", defaults_.smooth_iterations);
    if (smooth_raw < 0 || smooth_raw > 100 || smooth_raw != std::floor(smooth_raw)) {
      reject("smooth", "must be an integer in [0, 100]");
    }
    const int smooth_iters = static_cast<int>(smooth_raw);
    std::optional<ShCoefficients> sh;
    if (body.contains("sh") && !body["sh"].is_null()) {
      try {
        sh = parse_sh_coefficients(body["sh"].dump());
      } catch (const Error& e) {
        reject("sh", e.what());
      }
    }
    std::string format = "json";
    if (body.contains("format") && !body["format"].is_null()) {
      if (!body["format"].is_string()) reject("format", "must be \"json\" or \"obj\"");
      format = body["format"].get<std::string>();
      if (format != "json" && format != "obj") reject("format", "must be \"json\" or \"obj\"");
    }

    RayDistanceField field = srm::synthesize(model_, coeffs);

    if (body.contains("fuse") && !body["fuse"].is_null()) {
      const auto& fz = body["fuse"];
      if (!fz.is_object()) reject("fuse", "must be an object");
      if (!fz.contains("sample_ids") || !fz["sample_ids"].is_array()) reject("fuse.sample_ids", "must be an array of ids");
      if (!fz.contains("weights") || !fz["weights"].is_array()) reject("fuse.weights", "must be an array of numbers");
      const auto& ids = fz["sample_ids"];
      const auto& ws = fz["weights"];
      if (ids.size() != ws.size()) reject("fuse.weights", "needs one weight per sample id");
      std::vector<RayDistanceField> inputs{field};
      std::vector<double> weights{0.0};
      double sum = 0;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (!ids[k].is_string()) reject("fuse.sample_ids", "ids must be strings");
        auto it = samples_.find(ids[k].get<std::string>());
        if (it == samples_.end()) reject("fuse.sample_ids", "unknown sample '" + ids[k].get<std::string>() + "'");
        if (!ws[k].is_number() || !std::isfinite(ws[k].get<double>())) reject("fuse.weights", "weights must be finite numbers");
        inputs.push_back(it->second);
        weights.push_back(ws[k].get<double>());
        sum += weights.back();
      }
      weights[0] = read_number(fz, "base_weight", 1.0 - sum);
      FuseMode mode = FuseMode::plain;
      if (fz.contains("mask_aware") && fz["mask_aware"].is_boolean() && fz["mask_aware"].get<bool>()) {
        mode = FuseMode::mask_aware;
      }
      try {
        field = fuse(inputs, weights, mode);
      } catch (const Error& e) {
        reject("fuse", e.what());
      }
    }
    if (do_flip) field = flip(field, scalp_);

    const auto recon = reconstruct_vertices(field, rays_, true);
    if (recon.points.size() < 4) throw RequestError{422, "empty_mesh", "", "the synthesized field has no hair"};
    TriMesh mesh;
    mesh.vertices = recon.points;
    mesh.colors.reserve(recon.points.size());
    for (const auto& t : recon.tags) mesh.colors.push_back(field.albedo(field.index(t.i, t.n), t.slot));
    try {
      mesh.faces = extract_faces(mesh.vertices, extract);
    } catch (const Error& e) {
      throw RequestError{422, "empty_mesh", "", std::string("mesh extraction failed: ") + e.what()};
    }
    if (mesh.faces.empty()) throw RequestError{422, "empty_mesh", "", "mesh extraction produced no faces"};

    std::vector<std::uint32_t> kept;
    mesh = compact(mesh, &kept);
    mesh = smooth(mesh, smooth_iters, defaults_.smooth_lambda);
    if (sh) {
      auto normals = vertex_normals(mesh);
      for (std::size_t v = 0; v < normals.size(); ++v) {
        if (normals[v].squaredNorm() == 0) {
          const auto& t = recon.tags[kept[v]];
          normals[v] = rays_.directions[field.index(t.i, t.n)];
        }
      }
      mesh.colors = shade(mesh.colors, normals, *sh);
    }

    if (format == "obj") return {200, format_obj(mesh), "text/plain"};
    std::string out;
    out.reserve(mesh.vertices.size() * 60 + mesh.faces.size() * 24);
    out += "{\"positions\":[";
    bool first = true;
    for (const auto& p : mesh.vertices) {
      for (int a = 0; a < 3; ++a) {
        if (!first) out += ',';
        first = false;
        out += format_float(p[a]);
      }
    }
    out += "],\"faces\":[";
    first = true;
    for (const auto& f : mesh.faces) {
      for (auto v : f) {
        if (!first) out += ',';
        first = false;
        out += std::to_string(v);
      }
    }
    out += "],\"colors\":[";
    first = true;
    for (const auto& c : mesh.colors) {
      for (int a = 0; a < 3; ++a) {
        if (!first) out += ',';
        first = false;
        out += format_float(c[a]);
      }
    }
    out += "]}";
    return {200, std::move(out)};
  } catch (const RequestError& e) {
    return error_response(e);
  } catch (const Error& e) {
    return error_response({400, std::string(to_string(e.code())), "", e.what()});
  }
}

std::map<std::string, RayDistanceField> load_sample_fields(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::io, "sample directory '" + dir + "' does not exist");
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".srmh") paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  std::map<std::string, RayDistanceField> out;
  for (const auto& p : paths) out.emplace(p.stem().string(), load_field(p.string()));
  return out;
}

void serve(const HairService& service, const ServeOptions& options) {
  httplib::Server server;
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  auto send = [](httplib::Response& res, const HairService::Response& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get("/api/health", [&](const httplib::Request&, httplib::Response& res) { send(res, service.health()); });
  server.Get("/api/meta", [&](const httplib::Request&, httplib::Response& res) { send(res, service.meta()); });
  server.Get("/api/samples", [&](const httplib::Request&, httplib::Response& res) { send(res, service.samples()); });
  server.Post("/api/synthesize", [&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.synthesize(req.body));
  });
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  if (!options.static_dir.empty() && !server.set_mount_point("/", options.static_dir)) {
    throw Error(ErrorCode::io, "static directory '" + options.static_dir + "' does not exist");
  }
  int port = options.port;
  if (port == 0) {
    port = server.bind_to_any_port(options.host);
  } else if (!server.bind_to_port(options.host, port)) {
    port = -1;
  }
  if (port <= 0) throw Error(ErrorCode::io, "cannot bind " + options.host + ":" + std::to_string(options.port));
  std::fprintf(stderr, "listening on http://%s:%d\n", options.host.c_str(), port);
  if (options.on_listening) options.on_listening(port, [&server] { server.stop(); });
  server.listen_after_bind();
}

}  // namespace srm
