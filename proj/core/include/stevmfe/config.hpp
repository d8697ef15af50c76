#pragma once

#include <optional>
#include <string>

#include "stevmfe/mesh.hpp"
#include "stevmfe/model.hpp"
#include "stevmfe/newton.hpp"

namespace stevmfe::driver {

struct OutputOptions {
  std::string directory = "out";
  bool csv = true;
  bool vtk = true;
  bool dat = false;
  int cadence = 1;  ///< write every n-th time level of each subdomain
};

struct ConvergenceSpec {
  int levels = 3;
  Scalar c1 = 1.0;
};

struct RunConfig {
  mesh::MeshSpec mesh;
  models::ModelProblem model;
  solver::NewtonOptions solver;
  OutputOptions output;
  std::optional<ConvergenceSpec> convergence;
};

/// Parse and fully validate a JSON run configuration. Permeability and
/// porosity file references are resolved relative to the config file's
/// directory. Throws ConfigError with a field-specific message.
RunConfig load_config(const std::string& path);

/// Same, from an in-memory JSON document (tests); `base_dir` anchors file
/// references.
RunConfig parse_config(const std::string& json_text, const std::string& base_dir = ".");

}  // namespace stevmfe::driver
