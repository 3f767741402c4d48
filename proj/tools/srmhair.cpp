// srmhair: command-line front end for the ray-field hair toolkit.

#include "srm/error.hpp"
#include "srm/extract.hpp"
#include "srm/field.hpp"
#include "srm/fixtures.hpp"
#include "srm/metrics.hpp"
#include "srm/morphable.hpp"
#include "srm/scalp.hpp"
#include "srm/service.hpp"
#include "srm/shading.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const std::string& path) {
  auto bytes = srm::read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

void write_text(const std::string& path, const std::string& text) {
  srm::write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

srm::Rgb parse_color(const std::string& text) {
  srm::Rgb c;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf%c", &c[0], &c[1], &c[2], &tail) != 3) {
    throw srm::Error(srm::ErrorCode::argument, "color must be r,g,b: '" + text + "'");
  }
  if ((c.array() < 0).any() || (c.array() > 1).any()) throw srm::Error(srm::ErrorCode::argument, "color must lie in [0,1]");
  return c;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, end - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw srm::Error(srm::ErrorCode::argument, "not a number list: '" + text + "'");
    }
    pos = end + 1;
  }
  return out;
}

srm::TriMesh load_mesh(const std::string& path) {
  srm::MeshLoadInfo info;
  auto mesh = srm::load_mesh(path, &info);
  if (info.dropped_degenerate > 0) {
    std::fprintf(stderr, "warning: %s: dropped %zu degenerate faces\n", path.c_str(), info.dropped_degenerate);
  }
  return mesh;
}

// Head and scalp must agree before any rays are built.
srm::RaySet load_rays(const std::string& head_path, const std::string& scalp_path, const std::string& template_path,
                      srm::TriMesh* head_out = nullptr, srm::ScalpSpec* scalp_out = nullptr) {
  auto tmpl = srm::load_template(template_path);
  auto scalp = srm::load_scalp_spec(scalp_path);
  auto head = load_mesh(head_path);
  for (auto v : scalp.vertex_ids) {
    if (v >= head.vertices.size()) {
      throw srm::Error(srm::ErrorCode::hash_mismatch, "scalp spec references vertex " + std::to_string(v) +
                                                          " but the head mesh has " + std::to_string(head.vertices.size()));
    }
  }
  auto rays = srm::make_rays(head, scalp, tmpl);
  if (head_out) *head_out = std::move(head);
  if (scalp_out) *scalp_out = std::move(scalp);
  return rays;
}

std::string format_exclusion(const srm::ExclusionMap& m) {
  json j = {{"format", "srm-exclusion"}, {"version", 1}, {"n_s", m.n_s}, {"n_r", m.n_r},
            {"ex_min", m.ex_min},        {"ex_max", m.ex_max}};
  return j.dump() + "\n";
}

srm::ExclusionMap parse_exclusion(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw srm::Error(srm::ErrorCode::parse, std::string("exclusion map: ") + e.what());
  }
  try {
    if (j.contains("scores")) {
      return srm::binarize_exclusion(j.at("scores").get<std::vector<double>>(), j.at("n_s").get<std::size_t>(),
                                     j.at("n_r").get<std::size_t>());
    }
    srm::ExclusionMap m{j.at("n_s").get<std::size_t>(), j.at("n_r").get<std::size_t>(),
                        j.at("ex_min").get<std::vector<std::uint8_t>>(), j.at("ex_max").get<std::vector<std::uint8_t>>()};
    return m;
  } catch (const json::exception& e) {
    throw srm::Error(srm::ErrorCode::parse, std::string("exclusion map: ") + e.what());
  }
}

std::vector<srm::RayDistanceField> load_field_dir(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw srm::Error(srm::ErrorCode::io, "field directory '" + dir + "' does not exist");
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".srmh") paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<srm::RayDistanceField> fields;
  for (const auto& p : paths) fields.push_back(srm::load_field(p.string()));
  return fields;
}

std::string stem_index(const std::string& stem, int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%03d", k);
  return stem + buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic ray-field hair toolkit"};
  app.require_subcommand(1);

  // template gen
  auto* tmpl_cmd = app.add_subcommand("template", "ray templates")->require_subcommand(1);
  auto* tmpl_gen = tmpl_cmd->add_subcommand("gen", "generate a hemisphere ray template");
  int n_rays = 25;
  double max_polar = 90.0;
  std::string out;
  tmpl_gen->add_option("--rays", n_rays, "number of rays (>= 3)");
  tmpl_gen->add_option("--max-polar", max_polar, "maximum polar angle in degrees");
  tmpl_gen->add_option("--out", out, "output file")->required();

  // scalp validate
  auto* scalp_cmd = app.add_subcommand("scalp", "scalp specs")->require_subcommand(1);
  auto* scalp_validate = scalp_cmd->add_subcommand("validate", "check a scalp spec");
  std::string scalp_path, head_path;
  scalp_validate->add_option("spec", scalp_path, "scalp spec file")->required();
  scalp_validate->add_option("--head", head_path, "also build frames on this head mesh");

  // fixtures gen
  auto* fix_cmd = app.add_subcommand("fixtures", "synthetic fixtures")->require_subcommand(1);
  auto* fix_gen = fix_cmd->add_subcommand("gen", "write head, scalp spec and hair meshes");
  std::string kind = "shell-cap-hair";
  int count = 1, head_level = 4, hair_level = 6, scalp_count = 200;
  std::uint64_t seed = 0;
  std::string out_dir;
  fix_gen->add_option("--kind", kind, "sphere-head | shell-cap-hair | asymmetric-cap | two-cap | noisy-shell");
  fix_gen->add_option("--out", out_dir, "output directory")->required();
  fix_gen->add_option("--count", count, "number of hair variants");
  fix_gen->add_option("--seed", seed, "variant seed");
  fix_gen->add_option("--head-level", head_level, "head icosphere level");
  fix_gen->add_option("--hair-level", hair_level, "hair icosphere level");
  fix_gen->add_option("--scalp-count", scalp_count, "scalp entries (even)");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "capture a ray distance field from a hair mesh");
  std::string hair_path, template_path, skin = "0.6,0.45,0.35";
  analyze_cmd->add_option("--head", head_path)->required();
  analyze_cmd->add_option("--hair", hair_path)->required();
  analyze_cmd->add_option("--scalp", scalp_path)->required();
  analyze_cmd->add_option("--template", template_path)->required();
  analyze_cmd->add_option("--out", out)->required();
  analyze_cmd->add_option("--skin-color", skin, "r,g,b in [0,1]");

  // model build | synth | project
  auto* model_cmd = app.add_subcommand("model", "morphable model")->require_subcommand(1);
  auto* model_build = model_cmd->add_subcommand("build", "PCA over a directory of fields");
  std::string fields_dir, model_path, coeffs_path, field_path;
  int modes = 0, albedo_modes = 0;
  model_build->add_option("--fields", fields_dir)->required();
  model_build->add_option("--modes", modes)->required();
  model_build->add_option("--albedo-modes", albedo_modes);
  model_build->add_option("--out", out)->required();
  auto* model_synth = model_cmd->add_subcommand("synth", "synthesize a field from coefficients");
  double beta_s = 1.0;
  bool beta_s_given = false;
  model_synth->add_option("--model", model_path)->required();
  model_synth->add_option("--coeffs", coeffs_path, "JSON with beta_shape, beta_alb, beta_s");
  auto* beta_opt = model_synth->add_option("--beta-s", beta_s, "thickness scale");
  model_synth->add_option("--out", out)->required();
  auto* model_project = model_cmd->add_subcommand("project", "coefficients of a field");
  model_project->add_option("--model", model_path)->required();
  model_project->add_option("--field", field_path)->required();
  model_project->add_option("--out", out)->required();

  // field ops
  auto* field_cmd = app.add_subcommand("field", "ray distance field operations")->require_subcommand(1);
  std::vector<std::string> inputs;
  std::string weights_text, map_path, map_out;
  bool mask_aware = false;
  double magnitude = 0.1;
  std::size_t perturb_count = 0;
  auto* fuse_cmd = field_cmd->add_subcommand("fuse", "weighted sum of fields");
  fuse_cmd->add_option("--in", inputs)->required();
  fuse_cmd->add_option("--weights", weights_text, "comma separated, one per input")->required();
  fuse_cmd->add_flag("--mask-aware", mask_aware);
  fuse_cmd->add_option("--out", out)->required();
  auto* flip_cmd = field_cmd->add_subcommand("flip", "mirror a field through its scalp pairing");
  flip_cmd->add_option("--in", field_path)->required();
  flip_cmd->add_option("--scalp", scalp_path)->required();
  flip_cmd->add_option("--out", out)->required();
  auto* thicken_cmd = field_cmd->add_subcommand("thicken", "scale all distances");
  thicken_cmd->add_option("--in", field_path)->required();
  thicken_cmd->add_option("--beta-s", beta_s)->required();
  thicken_cmd->add_option("--out", out)->required();
  auto* exclude_cmd = field_cmd->add_subcommand("exclude", "apply an exclusion map");
  exclude_cmd->add_option("--in", field_path)->required();
  exclude_cmd->add_option("--map", map_path, "exclusion map JSON (ex_min/ex_max or raw scores)")->required();
  exclude_cmd->add_option("--skin-color", skin);
  exclude_cmd->add_option("--out", out)->required();
  auto* perturb_cmd = field_cmd->add_subcommand("perturb", "add noise at random positions");
  perturb_cmd->add_option("--in", field_path)->required();
  perturb_cmd->add_option("--count", perturb_count)->required();
  perturb_cmd->add_option("--magnitude", magnitude);
  perturb_cmd->add_option("--seed", seed);
  perturb_cmd->add_option("--out", out)->required();
  perturb_cmd->add_option("--map-out", map_out, "ground-truth exclusion map");

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "field to hair mesh");
  double voxel = srm::kDefaultVoxelSize, threshold = -1, lambda = 0.5;
  int smooth_iters = 0;
  std::string sh_path;
  extract_cmd->add_option("--field", field_path)->required();
  extract_cmd->add_option("--head", head_path)->required();
  extract_cmd->add_option("--scalp", scalp_path)->required();
  extract_cmd->add_option("--template", template_path)->required();
  extract_cmd->add_option("--voxel", voxel, "voxel size in the unit cube");
  extract_cmd->add_option("--threshold", threshold, "match threshold in model units");
  extract_cmd->add_option("--smooth", smooth_iters, "Laplacian iterations");
  extract_cmd->add_option("--lambda", lambda, "Laplacian step");
  extract_cmd->add_option("--sh-coeffs", sh_path, "JSON with 9 RGB triples");
  extract_cmd->add_option("--out", out)->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "compare a prediction to ground truth");
  std::string pred_path, gt_path, report_path;
  bool as_json = false;
  std::size_t surface_samples = 0;
  eval_cmd->add_option("--pred", pred_path)->required();
  eval_cmd->add_option("--gt", gt_path)->required();
  eval_cmd->add_option("--threshold", threshold, "recall threshold in model units");
  eval_cmd->add_option("--samples", surface_samples, "extra uniform surface samples per mesh");
  eval_cmd->add_option("--seed", seed);
  eval_cmd->add_option("--report", report_path, "write the JSON report here");
  eval_cmd->add_flag("--json", as_json, "print the JSON report");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "HTTP exploration service");
  std::string samples_dir, static_dir, host = "127.0.0.1";
  int port = 8080;
  serve_cmd->add_option("--model", model_path)->required();
  serve_cmd->add_option("--head", head_path)->required();
  serve_cmd->add_option("--scalp", scalp_path)->required();
  serve_cmd->add_option("--template", template_path)->required();
  serve_cmd->add_option("--samples", samples_dir, "directory of .srmh fields for fusion");
  serve_cmd->add_option("--static", static_dir, "viewer assets served at /");
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--voxel", voxel);
  serve_cmd->add_option("--smooth", smooth_iters);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "argument"}, {"message", e.what()}}.dump() << "\n";
    return 2;
  }
  beta_s_given = beta_opt->count() > 0;

  try {
    if (tmpl_gen->parsed()) {
      srm::write_template(out, srm::make_template(n_rays, max_polar));
    } else if (scalp_validate->parsed()) {
      auto spec = srm::load_scalp_spec(scalp_path);
      if (!head_path.empty()) srm::build_frames(load_mesh(head_path), spec);
      std::cout << json{{"valid", true}, {"n_s", spec.size()}, {"scalp_hash", srm::to_hex(srm::scalp_hash(spec))}}.dump()
                << "\n";
    } else if (fix_gen->parsed()) {
      if (count < 1) throw srm::Error(srm::ErrorCode::argument, "--count must be >= 1");
      auto base = srm::default_recipe(srm::parse_fixture_kind(kind), seed);
      base.head_level = head_level;
      base.hair_level = hair_level;
      base.scalp_count = scalp_count;
      srm::validate(base);
      fs::create_directories(out_dir);
      const auto head = srm::fixture_head(base);
      srm::write_mesh((fs::path(out_dir) / "head.obj").string(), head);
      srm::write_scalp_spec((fs::path(out_dir) / "scalp.json").string(), srm::fixture_scalp(base, head));
      if (base.kind != srm::FixtureKind::sphere_head) {
        for (int k = 0; k < count; ++k) {
          const auto recipe = srm::variant(base, k, seed);
          const auto stem = stem_index("hair", k);
          srm::write_mesh((fs::path(out_dir) / (stem + ".ply")).string(), srm::fixture_hair(recipe));
          write_text((fs::path(out_dir) / (stem_index("recipe", k) + ".json")).string(), srm::format_recipe(recipe));
        }
      }
    } else if (analyze_cmd->parsed()) {
      const auto rays = load_rays(head_path, scalp_path, template_path);
      const auto hair = load_mesh(hair_path);
      srm::save_field(out, srm::analyze(hair, rays, parse_color(skin)));
    } else if (model_build->parsed()) {
      const auto fields = load_field_dir(fields_dir);
      srm::save_model(out, srm::build_model(fields, modes, albedo_modes));
    } else if (model_synth->parsed()) {
      const auto model = srm::load_model(model_path);
      srm::HairCoefficients c{Eigen::VectorXd::Zero(model.modes()), Eigen::VectorXd::Zero(model.albedo_modes()), 1.0};
      if (!coeffs_path.empty()) c = srm::parse_coefficients(read_text(coeffs_path), model);
      if (beta_s_given) c.beta_s = beta_s;
      srm::save_field(out, srm::synthesize(model, c));
    } else if (model_project->parsed()) {
      const auto model = srm::load_model(model_path);
      const auto field = srm::load_field(field_path);
      srm::HairCoefficients c{srm::project(model, field), srm::project_albedo(model, field), 1.0};
      write_text(out, srm::format_coefficients(c));
    } else if (fuse_cmd->parsed()) {
      const auto weights = parse_list(weights_text);
      std::vector<srm::RayDistanceField> fields;
      for (const auto& p : inputs) fields.push_back(srm::load_field(p));
      srm::save_field(out, srm::fuse(fields, weights, mask_aware ? srm::FuseMode::mask_aware : srm::FuseMode::plain));
    } else if (flip_cmd->parsed()) {
      const auto field = srm::load_field(field_path);
      srm::save_field(out, srm::flip(field, srm::load_scalp_spec(scalp_path)));
    } else if (thicken_cmd->parsed()) {
      srm::save_field(out, srm::scale_thickness(srm::load_field(field_path), beta_s));
    } else if (exclude_cmd->parsed()) {
      const auto field = srm::load_field(field_path);
      srm::save_field(out, srm::apply_exclusion(field, parse_exclusion(read_text(map_path)), parse_color(skin)));
    } else if (perturb_cmd->parsed()) {
      auto result = srm::perturb(srm::load_field(field_path), perturb_count, magnitude, seed);
      srm::save_field(out, result.field);
      if (!map_out.empty()) write_text(map_out, format_exclusion(result.truth));
    } else if (extract_cmd->parsed()) {
      std::optional<srm::ShCoefficients> sh;
      if (!sh_path.empty()) sh = srm::parse_sh_coefficients(read_text(sh_path));
      const auto field = srm::load_field(field_path);
      const auto rays = load_rays(head_path, scalp_path, template_path);
      srm::require_compatible(field, rays, "extract");
      const auto recon = srm::reconstruct_vertices(field, rays, true);
      srm::TriMesh mesh;
      mesh.vertices = recon.points;
      for (const auto& t : recon.tags) mesh.colors.push_back(field.albedo(field.index(t.i, t.n), t.slot));
      mesh.faces = srm::extract_faces(mesh.vertices, {voxel, threshold});
      if (mesh.faces.empty()) throw srm::Error(srm::ErrorCode::degenerate, "mesh extraction produced no faces");
      std::vector<std::uint32_t> kept;
      mesh = srm::smooth(srm::compact(mesh, &kept), smooth_iters, lambda);
      if (sh) {
        auto normals = srm::vertex_normals(mesh);
        for (std::size_t v = 0; v < normals.size(); ++v) {
          if (normals[v].squaredNorm() == 0) {
            const auto& t = recon.tags[kept[v]];
            normals[v] = rays.directions[field.index(t.i, t.n)];
          }
        }
        mesh.colors = srm::shade(mesh.colors, normals, *sh);
      }
      srm::write_mesh(out, mesh);
    } else if (eval_cmd->parsed()) {
      const auto pred = srm::mesh_points(load_mesh(pred_path), surface_samples, seed);
      const auto gt = srm::mesh_points(load_mesh(gt_path), surface_samples, seed + 1);
      const auto report = srm::evaluate(pred, gt, threshold);
      const auto text = srm::format_report(report);
      if (!report_path.empty()) write_text(report_path, text);
      if (as_json) {
        std::cout << text;
      } else {
        std::printf("chamfer   %.9g\nnrmse     %.9g\nrecall    %.9g\nthreshold %.9g\n", report.chamfer, report.nrmse,
                    report.recall, report.threshold);
      }
    } else if (serve_cmd->parsed()) {
      srm::TriMesh head;
      srm::ScalpSpec scalp;
      load_rays(head_path, scalp_path, template_path, &head, &scalp);
      std::map<std::string, srm::RayDistanceField> samples;
      if (!samples_dir.empty()) samples = srm::load_sample_fields(samples_dir);
      srm::ServiceDefaults defaults;
      defaults.voxel_size = voxel;
      defaults.smooth_iterations = smooth_iters;
      srm::HairService service(srm::load_model(model_path), std::move(head), std::move(scalp),
                               srm::load_template(template_path), std::move(samples), defaults);
      srm::serve(service, {host, port, static_dir});
    }
  } catch (const srm::Error& e) {
    std::cerr << json{{"error", std::string(srm::to_string(e.code()))}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  }
  return 0;
}
