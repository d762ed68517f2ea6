#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <sstream>

#include "nahm/pipeline.hpp"

namespace {

Eigen::Vector3d parse_point(const std::string& s) {
  std::stringstream ss(s);
  std::string tok;
  std::vector<double> v;
  while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
  if (v.size() != 3) throw nahm::ValidationError({{"--point needs three comma-separated coefficients", 0}});
  return {v[0], v[1], v[2]};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nahm transform toolkit for the three-torus"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  std::string config_path, out_dir, curve_path, point;
  int threads = 0, refine = -1;
  long long seed = -1;
  app.add_option("-c,--config", config_path, "configuration JSON")->required();
  app.add_option("-o,--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("-j,--threads", threads, "worker threads");
  app.add_option("--seed", seed, "random seed");
  auto* validate = app.add_subcommand("validate", "check the boundary model solutions and list Sing");
  auto* solve = app.add_subcommand("solve", "solve the heteroclinic boundary value problem");
  auto* transform = app.add_subcommand("transform", "sample the transformed monopole on the dual torus");
  transform->add_option("--curve", curve_path, "curve file (default <out>/curve.json)");
  transform->add_option("--refine", refine, "halve the sample spacing this many times");
  auto* weights = app.add_subcommand("weights", "fit singularity weights at a point of Sing");
  weights->add_option("--point", point, "dual coefficients a,b,c")->required();
  weights->add_option("--curve", curve_path, "curve file (default <out>/curve.json)");
  auto* report = app.add_subcommand("report", "collect stage reports into report.json");
  CLI11_PARSE(app, argc, argv);

  std::string stage = app.get_subcommands().front()->get_name();
  std::optional<nahm::PipelineConfig> cfg;
  try {
    cfg = nahm::load_config(config_path);
    if (!out_dir.empty()) cfg->output_dir = out_dir;
    if (threads > 0) cfg->threads = threads;
    if (seed >= 0) cfg->seed = static_cast<unsigned long long>(seed);
    if (refine >= 0) cfg->refine = refine;
    std::filesystem::create_directories(cfg->output_dir);
  } catch (const nahm::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nahm::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nahm::kExitInternal;
  }

  const auto start = std::chrono::steady_clock::now();
  int code = nahm::kExitInternal;
  try {
    std::optional<std::filesystem::path> curve;
    if (!curve_path.empty()) curve = curve_path;
    nahm::CommandResult r;
    if (*validate) r = nahm::cmd_validate(*cfg);
    else if (*solve) r = nahm::cmd_solve(*cfg);
    else if (*transform) r = nahm::cmd_transform(*cfg, curve);
    else if (*weights) r = nahm::cmd_weights(*cfg, parse_point(point), curve);
    else if (*report) r = nahm::cmd_report(*cfg);
    std::cout << r.summary << '\n';
    code = r.exit_code;
  } catch (const nahm::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    code = nahm::kExitValidation;
  } catch (const nahm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = nahm::kExitCertification;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    code = nahm::kExitInternal;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    nahm::update_manifest(*cfg, stage, code, secs);
  } catch (const std::exception& e) {
    std::cerr << "warning: manifest not updated: " << e.what() << '\n';
  }
  return code;
}
