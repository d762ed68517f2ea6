#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "nahm/algnahm.hpp"
#include "nahm/monopole.hpp"
#include "nahm/serialize.hpp"

namespace nahm {

enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitValidation = 2, kExitNoSolution = 3, kExitCertification = 4 };

struct SolverParams {
  double T = 20.0;
  int grid_n = 2001;
  double tol = 1e-8;
  int max_iter = 40;
  double perturbation = 0.0;
  double interp_tol = 1e-5;
};

struct TransformParams {
  double mode_margin = 1.0;
  std::array<int, 3> xi_grid{9, 9, 9};
  double gap_min = 1e-8;
  double angle_tol = 1e-6;
  double angle_uncertain = 1e-4;
  int extra_shells = 0;
  bool convexity_shortcut = true;
  std::optional<double> d0;
  int radii = 5;
};

struct PipelineConfig {
  Eigen::Matrix3d lattice_rows = Eigen::Matrix3d::Identity();
  ModelSolution minus;
  ModelSolution plus;
  SolverParams solver;
  TransformParams transform;
  std::filesystem::path output_dir = "out";
  int threads = 1;
  bool cache = true;
  unsigned long long seed = 1;
  int refine = 0;
  Json source;  // the parsed document, hashed into the manifest

  Lattice3 lattice() const { return Lattice3::from_rows(lattice_rows); }
  std::string hash() const;
};

// Throws ValidationError for malformed or inconsistent configurations.
PipelineConfig config_from_json(const Json& j);
PipelineConfig load_config(const std::filesystem::path& p);

struct CommandResult {
  int exit_code = kExitOk;
  Json report;
  std::string summary;
};

CommandResult cmd_validate(const PipelineConfig& cfg);
CommandResult cmd_solve(const PipelineConfig& cfg);
CommandResult cmd_transform(const PipelineConfig& cfg, const std::optional<std::filesystem::path>& curve_file = {});
CommandResult cmd_weights(const PipelineConfig& cfg, const Eigen::Vector3d& point_coeffs,
                          const std::optional<std::filesystem::path>& curve_file = {});
CommandResult cmd_report(const PipelineConfig& cfg);

// Records a stage in <out>/manifest.json.
void update_manifest(const PipelineConfig& cfg, const std::string& stage, int exit_code, double seconds);

}  // namespace nahm
