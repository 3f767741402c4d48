#include "srm/metrics.hpp"

#include "srm/error.hpp"
#include "srm/kdtree.hpp"
#include "srm/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace srm {

std::vector<double> nearest_distances(std::span<const Vec3> queries, std::span<const Vec3> targets) {
  if (queries.empty() || targets.empty()) throw Error(ErrorCode::argument, "point sets must be non-empty");
  PointIndex index(targets);
  std::vector<double> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t begin, std::size_t end) {
    for (auto k = begin; k < end; ++k) out[k] = std::sqrt(index.nearest(queries[k]).distance_sq);
  });
  return out;
}

namespace {

double mean_square(const std::vector<double>& d) {
  double sum = 0;
  for (double v : d) sum += v * v;
  return sum / static_cast<double>(d.size());
}

}  // namespace

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
  return mean_square(nearest_distances(a, b)) + mean_square(nearest_distances(b, a));
}

double nrmse(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  if (gt.empty()) throw Error(ErrorCode::argument, "point sets must be non-empty");
  const double diag = bbox_diagonal(gt);
  if (!(diag > 0)) throw Error(ErrorCode::degenerate, "ground truth has a zero bounding-box diagonal");
  return std::sqrt(mean_square(nearest_distances(gt, pred))) / diag;
}

double recall(std::span<const Vec3> pred, std::span<const Vec3> gt, double threshold) {
  if (!(threshold > 0)) throw Error(ErrorCode::argument, "recall threshold must be positive");
  const auto d = nearest_distances(gt, pred);
  const auto covered = std::count_if(d.begin(), d.end(), [&](double v) { return v <= threshold; });
  return static_cast<double>(covered) / static_cast<double>(d.size());
}

EvalReport evaluate(std::span<const Vec3> pred, std::span<const Vec3> gt, double threshold) {
  if (pred.empty() || gt.empty()) throw Error(ErrorCode::argument, "point sets must be non-empty");
  EvalReport r;
  r.normalizer = bbox_diagonal(gt);
  if (!(r.normalizer > 0)) throw Error(ErrorCode::degenerate, "ground truth has a zero bounding-box diagonal");
  r.threshold = threshold >= 0 ? threshold : kDefaultRecallFraction * r.normalizer;
  if (!(r.threshold > 0)) throw Error(ErrorCode::argument, "recall threshold must be positive");
  r.pred_points = pred.size();
  r.gt_points = gt.size();

  const auto to_pred = nearest_distances(gt, pred);
  const auto to_gt = nearest_distances(pred, gt);
  r.chamfer = mean_square(to_pred) + mean_square(to_gt);
  r.nrmse = std::sqrt(mean_square(to_pred)) / r.normalizer;
  const auto covered = std::count_if(to_pred.begin(), to_pred.end(), [&](double v) { return v <= r.threshold; });
  r.recall = static_cast<double>(covered) / static_cast<double>(to_pred.size());
  return r;
}

std::string format_report(const EvalReport& r) {
  nlohmann::json j = {{"format", "srm-eval"},      {"version", 1},
                      {"chamfer", r.chamfer},      {"nrmse", r.nrmse},
                      {"recall", r.recall},        {"threshold", r.threshold},
                      {"normalizer", "gt_bbox_diagonal"}, {"normalizer_value", r.normalizer},
                      {"pred_points", r.pred_points}, {"gt_points", r.gt_points}};
  return j.dump(2) + "\n";
}

std::vector<Vec3> mesh_points(const TriMesh& mesh, std::size_t count, std::uint64_t seed) {
  std::vector<Vec3> out = mesh.vertices;
  if (count == 0 || mesh.faces.empty()) return out;

  std::vector<double> cdf(mesh.faces.size());
  double total = 0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    total += triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    cdf[f] = total;
  }
  if (!(total > 0)) return out;

  std::mt19937_64 rng(seed);
  auto uniform01 = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  out.reserve(out.size() + count);
  for (std::size_t k = 0; k < count; ++k) {
    const double pick = uniform01() * total;
    auto f = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), pick) - cdf.begin());
    f = std::min(f, cdf.size() - 1);
    double r1 = std::sqrt(uniform01()), r2 = uniform01();
    const auto& t = mesh.faces[f];
    out.push_back((1 - r1) * mesh.vertices[t[0]] + r1 * (1 - r2) * mesh.vertices[t[1]] + r1 * r2 * mesh.vertices[t[2]]);
  }
  return out;
}

}  // namespace srm
