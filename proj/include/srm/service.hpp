#pragma once

#include "srm/extract.hpp"
#include "srm/field.hpp"
#include "srm/morphable.hpp"
#include "srm/scalp.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace srm {

struct ServiceDefaults {
  double voxel_size = kDefaultVoxelSize;
  int smooth_iterations = 0;
  double smooth_lambda = 0.5;
  double slider_range = 3.0;
};

// HTTP-independent core of the exploration service. Immutable after
// construction, so concurrent requests share it without locking.
class HairService {
 public:
  HairService(MorphableHairModel model, TriMesh head, ScalpSpec scalp, RayTemplate tmpl,
              std::map<std::string, RayDistanceField> samples = {}, ServiceDefaults defaults = {});

  struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
  };

  Response health() const;
  Response meta() const;
  Response samples() const;
  Response synthesize(const std::string& request_body) const;

  const MorphableHairModel& model() const { return model_; }
  const RaySet& rays() const { return rays_; }

 private:
  MorphableHairModel model_;
  TriMesh head_;
  ScalpSpec scalp_;
  RayTemplate template_;
  RaySet rays_;
  std::map<std::string, RayDistanceField> samples_;
  ServiceDefaults defaults_;
};

// Loads every *.srmh file of a directory, keyed by file stem.
std::map<std::string, RayDistanceField> load_sample_fields(const std::string& dir);

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;  // served at / when set
  // Called once the socket is bound, with the actual port (port 0 picks a free
  // one) and a handle that stops the server from any thread.
  std::function<void(int port, std::function<void()> stop)> on_listening;
};

// Blocks until the server stops.
void serve(const HairService& service, const ServeOptions& options);

}  // namespace srm
