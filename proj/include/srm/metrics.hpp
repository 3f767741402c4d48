#pragma once

#include "srm/mesh.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace srm {

// Distance from every query point to its nearest point in `targets`.
std::vector<double> nearest_distances(std::span<const Vec3> queries, std::span<const Vec3> targets);

// mean_a min_b |a-b|^2 + mean_b min_a |b-a|^2
double chamfer(std::span<const Vec3> a, std::span<const Vec3> b);

// RMS of gt-to-pred nearest distances over the gt bounding-box diagonal.
double nrmse(std::span<const Vec3> pred, std::span<const Vec3> gt);

// Fraction of gt points within `threshold` of some pred point.
double recall(std::span<const Vec3> pred, std::span<const Vec3> gt, double threshold);

inline constexpr double kDefaultRecallFraction = 0.01;

struct EvalReport {
  double chamfer = 0;
  double nrmse = 0;
  double recall = 0;
  double threshold = 0;
  double normalizer = 0;  // gt bounding-box diagonal
  std::size_t pred_points = 0;
  std::size_t gt_points = 0;
};

// threshold < 0 selects kDefaultRecallFraction * gt diagonal.
EvalReport evaluate(std::span<const Vec3> pred, std::span<const Vec3> gt, double threshold = -1);
std::string format_report(const EvalReport& report);

// Mesh vertices followed by `count` area-weighted uniform surface samples.
std::vector<Vec3> mesh_points(const TriMesh& mesh, std::size_t count = 0, std::uint64_t seed = 0);

}  // namespace srm
