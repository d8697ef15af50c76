#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "stevmfe/convergence.hpp"
#include "stevmfe/dofmap.hpp"
#include "stevmfe/fields_io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNoConvergence = 3;

using namespace stevmfe;

void print_mesh_summary(const mesh::SpaceTimeMesh& m, const mesh::DofMap& dofs) {
  std::cout << "domain: " << m.dim() << "D x time, " << m.n_slabs() << " matching slabs (slab dt "
            << m.slab_dt() << ")\n";
  for (const auto& s : m.subdomains()) {
    std::cout << "  subdomain " << s.id() << " (" << s.role() << "): ";
    for (int a = 0; a < m.dim(); ++a) std::cout << (a ? " x " : "") << s.cells()[a];
    std::cout << " cells, dt " << s.dt() << ", " << s.n_levels() << " levels\n";
  }
  const auto ratios = m.matching_time_ratios();
  for (size_t p = 0; p < m.patches().size(); ++p) {
    const auto& patch = m.patches()[p];
    std::cout << "  interface " << patch.fine_sub << "|" << patch.coarse_sub << ": axis "
              << patch.axis << ", time ratio l=" << ratios[p] << ", "
              << patch.subface_count_per_level() << " sub-faces per fine level\n";
  }
  std::cout << "unknowns: " << dofs.n_cell_unknowns() << " cell + " << dofs.n_flux_dofs()
            << " flux (" << dofs.n_flux_interior() << " interior, " << dofs.n_flux_boundary()
            << " boundary, " << dofs.n_flux_interface() << " interface) = " << dofs.total()
            << " total\n";
}

int cmd_run(const std::string& config_path, const std::string& output_dir) {
  driver::RunConfig cfg = driver::load_config(config_path);
  if (!output_dir.empty()) cfg.output.directory = output_dir;
  const auto result = driver::run_simulation(cfg);
  int max_iters = 0;
  for (const auto& r : result.reports) max_iters = std::max(max_iters, r.iterations);
  std::cout << "completed " << result.reports.size() << " slabs, max Newton iterations "
            << max_iters << "\n";
  std::cout << "output written to " << cfg.output.directory << "\n";
  return 0;
}

int cmd_converge(const std::string& config_path) {
  driver::RunConfig cfg = driver::load_config(config_path);
  const auto report = driver::convergence_study(cfg);
  std::printf("%-10s %-10s %-12s %-12s %-10s %-8s\n", "h_c", "h_f", "err_coarse", "err_fine",
              "DOF", "CPUTIM");
  for (const auto& r : report.rows)
    std::printf("%-10.5g %-10.5g %-12.5g %-12.5g %-10lld %-8.2f\n", r.h_coarse, r.h_fine,
                r.err_coarse, r.err_fine, static_cast<long long>(r.dof), r.seconds);
  const std::string path = cfg.output.directory + "/error_report.csv";
  std::filesystem::create_directories(cfg.output.directory);
  driver::write_error_report(report, path);
  std::cout << "report written to " << path << "\n";
  return 0;
}

int cmd_validate(const std::string& config_path) {
  const driver::RunConfig cfg = driver::load_config(config_path);
  const auto m = mesh::SpaceTimeMesh::build(cfg.mesh);
  const auto dofs = mesh::DofMap::enumerate(m, cfg.model.n_cell_fields());
  std::cout << "config OK: " << config_path << "\n";
  print_mesh_summary(m, dofs);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time multiblock flow and transport solver"};
  app.require_subcommand(1);

  std::string config_path, output_dir;

  auto* run = app.add_subcommand("run", "run a simulation from a JSON config");
  run->add_option("--config", config_path, "path to the JSON run configuration")->required();
  run->add_option("--output-dir", output_dir, "override the configured output directory");

  auto* converge = app.add_subcommand("converge", "run the mesh-refinement error study");
  converge->add_option("--config", config_path, "path to the JSON run configuration")->required();

  auto* validate = app.add_subcommand("validate", "parse and validate a config, print a summary");
  validate->add_option("--config", config_path, "path to the JSON run configuration")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, output_dir);
    if (converge->parsed()) return cmd_converge(config_path);
    return cmd_validate(config_path);
  } catch (const stevmfe::solver::NonConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const stevmfe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const stevmfe::MeshError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const stevmfe::IoError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
