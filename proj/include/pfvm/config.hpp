#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pfvm/model.hpp"
#include "pfvm/scheme.hpp"

namespace pfvm {

struct MeshSpec {
  enum class Kind { Box, File };
  Kind kind = Kind::Box;
  std::array<double, 3> extents{1.0, 1.0, 1.0};
  std::array<int, 3> cells{16, 16, 16};
  std::optional<std::array<std::vector<double>, 3>> spacings;  // overrides cells
  std::string path;  // Kind::File
};

struct InitialSpec {
  enum class Kind { PlanarFront, SphericalNucleus, Expression };
  Kind kind = Kind::SphericalNucleus;
  // planar front: 0.5 (1 - tanh((x.normal - position) / (2 sqrt(2) xi)))
  Vec3 normal{1.0, 0.0, 0.0};
  double position = 0.25;
  // spherical nucleus
  Vec3 center{0.5, 0.5, 0.5};
  double radius = 0.2;
  // both tanh profiles: melt undercooling amplitude, walls at zero
  double undercooling = 1.0;
  // named analytic problem (also selects the manufactured sources)
  std::string expression_id;
};

struct DtPolicy {
  enum class Kind { Fixed, Stable };
  Kind kind = Kind::Stable;
  double value = 0.0;    // Kind::Fixed
  double safety = 0.5;   // Kind::Stable
};

struct RunConfig {
  MeshSpec mesh;
  ModelParams params;
  std::string boundary = "homogeneous";
  InitialSpec initial;
  double end_time = 0.1;
  DtPolicy dt;
  Integrator integrator = Integrator::Rk4;
  std::string forcing = "none";  // "none" or a named analytic problem id
  int snapshot_cadence = 10;
  std::string output_dir = "out";
  int study_levels = 3;
  unsigned long long seed = 0;
};

/// Parses and validates a strict-schema JSON config; unknown keys are
/// rejected with their path.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);
std::string serialize_config(const RunConfig& config);

}  // namespace pfvm
