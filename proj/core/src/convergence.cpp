#include "stevmfe/convergence.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "stevmfe/fields_io.hpp"

namespace stevmfe::driver {

namespace fs = std::filesystem;

std::pair<Scalar, Scalar> l2_spacetime_error(
    const mesh::SpaceTimeMesh& mesh, const solver::SimulationState& state,
    const std::function<Scalar(Scalar, Scalar, Scalar)>& exact) {
  Scalar coarse2 = 0, fine2 = 0;
  for (int si = 0; si < mesh.subdomain_count(); ++si) {
    const auto& s = mesh.subdomain(si);
    const bool fine = s.role() == "fine";
    Scalar acc = 0;
    for (int level = 0; level < s.n_levels(); ++level) {
      const Scalar t_mid = (level + 0.5) * s.dt();
      const Scalar st_measure = s.cell_measure() * s.dt();
      for (int c = 0; c < s.cell_count(); ++c) {
        const Coord xc = s.cell_center(c);
        const Scalar diff = exact(xc[0], xc[1], t_mid) - state.value(si, level, c, 0, s.cell_count());
        acc += diff * diff * st_measure;
      }
    }
    (fine ? fine2 : coarse2) += acc;
  }
  return {std::sqrt(coarse2), std::sqrt(fine2)};
}

namespace {

/// Measure-weighted RMS error of the recovered face velocities against the
/// exact flux at face space-time midpoints.
Scalar flux_midpoint_error(const mesh::SpaceTimeMesh& mesh, const mesh::DofMap& dofs,
                           const solver::SimulationState& state, Scalar c1) {
  Scalar acc = 0, total = 0;
  for (int si = 0; si < mesh.subdomain_count(); ++si) {
    const auto& s = mesh.subdomain(si);
    const auto& faces = mesh.faces(si);
    for (int level = 0; level < s.n_levels(); ++level) {
      const Scalar t_mid = (level + 0.5) * s.dt();
      for (int f = 0; f < s.face_count(); ++f) {
        if (faces[f].kind == mesh::FaceKind::InterfaceCovered) continue;
        const std::int64_t dof = dofs.flux_dof(si, level, f);
        const int axis = faces[f].axis;
        const Scalar measure = s.face_area(axis) * s.dt();
        const Coord mid = s.face_center(f);
        const Scalar u_exact = models::manufactured_velocity(axis, mid[0], mid[1], t_mid, c1);
        const Scalar u_num = state.flux[dof] / measure;
        acc += (u_exact - u_num) * (u_exact - u_num) * measure;
        total += measure;
      }
    }
  }
  return std::sqrt(acc / total);
}

mesh::MeshSpec refine(const mesh::MeshSpec& base, int factor, const std::string& context) {
  mesh::MeshSpec out = base;
  for (auto& s : out.subdomains) {
    for (int a = 0; a < out.dim; ++a) {
      s.cells[a] *= factor;
      if (s.perm[a].size() > 1)
        throw ConfigError(context + ": refinement requires uniform permeability");
    }
    if (s.porosity.size() > 1)
      throw ConfigError(context + ": refinement requires uniform porosity");
    s.dt /= factor;
  }
  return out;
}

}  // namespace

ErrorReport convergence_study(const RunConfig& base) {
  if (base.model.kind != models::ModelKind::LinearParabolic)
    throw ConfigError("config.convergence: the study runs the linear_parabolic model");
  const ConvergenceSpec spec = base.convergence.value_or(ConvergenceSpec{});
  ErrorReport report;
  for (int level = 0; level < spec.levels; ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    mesh::MeshSpec ms = refine(base.mesh, 1 << level, "config.convergence");
    models::ModelProblem model = base.model;
    model.c1 = spec.c1;
    const auto stmesh = mesh::SpaceTimeMesh::build(ms);
    const auto dofs = mesh::DofMap::enumerate(stmesh, model.n_cell_fields());
    const auto result = solver::advance(stmesh, dofs, model, base.solver);
    const auto t1 = std::chrono::steady_clock::now();

    ErrorRow row;
    for (const auto& s : stmesh.subdomains()) {
      if (s.role() == "fine" && row.h_fine == 0) row.h_fine = s.h(0);
      if (s.role() == "coarse" && row.h_coarse == 0) row.h_coarse = s.h(0);
    }
    const Scalar c1 = model.c1;
    auto exact = [c1](Scalar x, Scalar y, Scalar t) {
      return models::manufactured_solution(x, y, t, c1).p;
    };
    std::tie(row.err_coarse, row.err_fine) = l2_spacetime_error(stmesh, result.state, exact);
    row.dof = dofs.n_cell_unknowns();
    row.seconds = std::chrono::duration<double>(t1 - t0).count();
    for (const auto& r : result.reports)
      row.max_newton_iters = std::max(row.max_newton_iters, r.iterations);
    row.flux_error = flux_midpoint_error(stmesh, dofs, result.state, c1);
    report.rows.push_back(row);
  }
  return report;
}

void write_error_report(const ErrorReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "h_c,h_f,err_coarse,err_fine,DOF,CPUTIM\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%lld,%.3f\n", r.h_coarse, r.h_fine,
                  r.err_coarse, r.err_fine, static_cast<long long>(r.dof), r.seconds);
    out << buf;
  }
}

solver::AdvanceResult run_simulation(const RunConfig& cfg) {
  const auto stmesh = mesh::SpaceTimeMesh::build(cfg.mesh);
  const auto dofs = mesh::DofMap::enumerate(stmesh, cfg.model.n_cell_fields());
  auto result = solver::advance(stmesh, dofs, cfg.model, cfg.solver);
  fs::create_directories(cfg.output.directory);
  write_fields(stmesh, cfg.model, result.state, cfg.output);
  write_newton_reports(result.reports, (fs::path(cfg.output.directory) / "newton_reports.csv").string());
  if (cfg.model.kind != models::ModelKind::LinearParabolic)
    write_mass_balance(result.balance, cfg.model,
                       (fs::path(cfg.output.directory) / "mass_balance.csv").string());
  return result;
}

}  // namespace stevmfe::driver
