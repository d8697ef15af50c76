#include "stevmfe/newton.hpp"

#include <Eigen/SparseLU>
#include <chrono>
#include <cmath>

namespace stevmfe::solver {

using assembly::SlabContext;
using assembly::SlabIterate;
using assembly::SlabTopology;
using models::ModelKind;

Scalar scaled_residual_norm(const SlabSystem& sys) {
  Scalar norm = 0;
  for (int i = 0; i < sys.r_p.size(); ++i)
    norm = std::max(norm, std::abs(sys.r_p[i]) / sys.row_scale[i]);
  return norm;
}

SlabSolver::SlabSolver(const mesh::SpaceTimeMesh& mesh, const mesh::DofMap& dofs,
                       const models::ModelProblem& model, NewtonOptions opts)
    : mesh_(mesh), model_(model), opts_(opts), topo_(SlabTopology::build(mesh, dofs, model)) {}

SlabSolution SlabSolver::solve_slab(int slab, const std::vector<std::vector<Scalar>>& data) const {
  using clock = std::chrono::steady_clock;
  const int nf = model_.n_cell_fields();
  SlabContext ctx{slab, slab * mesh_.slab_dt(), &data};

  SlabSolution sol;
  sol.report.slab = slab;
  SlabIterate& x = sol.x;
  x.cells.resize(static_cast<Eigen::Index>(topo_.n_cell_geo) * nf);
  for (const auto& e : topo_.elements)
    for (int f = 0; f < nf; ++f)
      x.cells[e.slab_cell * nf + f] = data[e.sub][static_cast<size_t>(e.cell) * nf + f];
  x.fluxes = Vec::Zero(static_cast<Eigen::Index>(topo_.n_flux_geo) * model_.n_flux_families());

  auto upwind = assembly::compute_upwind(topo_, model_, x.fluxes);
  SlabSystem sys = assembly::assemble(mesh_, topo_, model_, ctx, x, upwind);
  x.fluxes = consistent_fluxes(sys, x.fluxes);
  upwind = assembly::compute_upwind(topo_, model_, x.fluxes);
  sys = assembly::assemble(mesh_, topo_, model_, ctx, x, upwind);

  Eigen::SparseLU<SpMat> lu;
  for (int k = 1; k <= opts_.max_iterations; ++k) {
    try {
      ReducedSystem red = schur_reduce(sys);
      const auto t0 = clock::now();
      lu.compute(red.S);
      if (lu.info() != Eigen::Success)
        throw AssemblyError("reduced system factorization failed");
      const auto t1 = clock::now();
      Vec dp = lu.solve(red.rhs);
      const auto t2 = clock::now();
      sol.report.factor_seconds += std::chrono::duration<double>(t1 - t0).count();
      sol.report.solve_seconds += std::chrono::duration<double>(t2 - t1).count();
      sol.report.reduced_nonzeros = red.S.nonZeros();
      ++sol.report.linear_solves;

      if (opts_.saturation_clamp > 0 && model_.kind == ModelKind::TwoPhase)
        for (Eigen::Index i = 1; i < dp.size(); i += nf)
          dp[i] = std::clamp(dp[i], -opts_.saturation_clamp, opts_.saturation_clamp);

      x.cells += dp;
      x.fluxes += recover_flux_update(red, dp);

      // keep the iterate on the flux-consistent manifold
      upwind = assembly::compute_upwind(topo_, model_, x.fluxes);
      SlabSystem mid = assembly::assemble(mesh_, topo_, model_, ctx, x, upwind);
      x.fluxes = consistent_fluxes(mid, x.fluxes);
      upwind = assembly::compute_upwind(topo_, model_, x.fluxes);
      sys = assembly::assemble(mesh_, topo_, model_, ctx, x, upwind);
    } catch (const AssemblyError& e) {
      sol.report.iterations = k;
      throw NonConvergence("slab " + std::to_string(slab) + ": Newton diverged at iteration " +
                               std::to_string(k) + " (" + e.what() + ")",
                           {slab, k}, sol.report);
    }

    const Scalar res = scaled_residual_norm(sys);
    sol.report.residual_history.push_back(res);
    sol.report.iterations = k;
    if (res < opts_.tolerance) {
      sol.report.converged = true;
      return sol;
    }
  }
  throw NonConvergence(
      "slab " + std::to_string(slab) + ": Newton did not converge within " +
          std::to_string(opts_.max_iterations) + " iterations (residual " +
          std::to_string(sol.report.residual_history.empty()
                             ? -1.0
                             : sol.report.residual_history.back()) +
          ")",
      {slab, opts_.max_iterations}, sol.report);
}

MassBalanceRow SlabSolver::mass_balance(int slab, const std::vector<std::vector<Scalar>>& data,
                                        const SlabIterate& x) const {
  MassBalanceRow row;
  row.slab = slab;
  if (model_.kind == ModelKind::LinearParabolic) return row;
  const int nf = model_.n_cell_fields();
  const int nfam = model_.n_flux_families();
  SlabContext ctx{slab, slab * mesh_.slab_dt(), &data};
  assembly::StateProbe probe{mesh_, topo_, model_, ctx, x};

  for (const auto& e : topo_.elements) {
    const auto acc = probe.accumulation(e);
    for (int f = 0; f < nf; ++f) row.accumulated[f] += acc[f];
    const auto q = probe.well_rates(e);
    for (int f = 0; f < nf; ++f) {
      if (q[f] >= 0)
        row.injected[f] += q[f] * e.dt;
      else
        row.produced[f] -= q[f] * e.dt;
    }
  }
  const auto upwind = assembly::compute_upwind(topo_, model_, x.fluxes);
  for (const auto& fr : topo_.fluxes) {
    if (fr.boundary_side < 0) continue;
    const Scalar sign = (fr.boundary_side % 2 == 1) ? 1.0 : -1.0;  // outward
    const auto out = probe.boundary_outflow(fr, upwind);
    for (int f = 0; f < nf; ++f) row.boundary_out[f] += sign * out[f];
  }
  (void)nfam;
  for (int f = 0; f < nf; ++f)
    row.defect[f] = row.accumulated[f] + row.boundary_out[f] - row.injected[f] + row.produced[f];
  return row;
}

SimulationState initial_state(const mesh::SpaceTimeMesh& mesh, const mesh::DofMap& dofs,
                              const models::ModelProblem& model) {
  SimulationState st;
  st.n_fields = model.n_cell_fields();
  st.n_families = model.n_flux_families();
  const int nsub = mesh.subdomain_count();
  st.values.resize(nsub);
  st.initial.resize(nsub);
  for (int si = 0; si < nsub; ++si) {
    const auto& s = mesh.subdomain(si);
    st.values[si].assign(
        static_cast<size_t>(s.cell_count()) * s.n_levels() * st.n_fields, 0);
    st.initial[si].resize(static_cast<size_t>(s.cell_count()) * st.n_fields);
    for (int c = 0; c < s.cell_count(); ++c) {
      const Coord xc = s.cell_center(c);
      Scalar p0 = model.p0, second = 0;
      if (model.kind == ModelKind::LinearParabolic && model.manufactured_initial)
        p0 = models::manufactured_solution(xc[0], xc[1], 0, model.c1).p;
      if (model.kind == ModelKind::SinglePhaseTracer) second = model.c0;
      if (model.kind == ModelKind::TwoPhase) second = model.sw0;
      st.initial[si][static_cast<size_t>(c) * st.n_fields + 0] = p0;
      if (st.n_fields > 1) st.initial[si][static_cast<size_t>(c) * st.n_fields + 1] = second;
    }
  }
  st.flux.assign(static_cast<size_t>(dofs.n_flux_dofs()) * st.n_families, 0);
  return st;
}

AdvanceResult advance(const mesh::SpaceTimeMesh& mesh, const mesh::DofMap& dofs,
                      const models::ModelProblem& model, const NewtonOptions& opts) {
  AdvanceResult out;
  out.state = initial_state(mesh, dofs, model);
  SlabSolver solver(mesh, dofs, model, opts);
  const auto& topo = solver.topology();
  const int nf = model.n_cell_fields();
  const int nfam = model.n_flux_families();

  std::vector<std::vector<Scalar>> data = out.state.initial;
  for (int slab = 0; slab < mesh.n_slabs(); ++slab) {
    SlabSolution sol = solver.solve_slab(slab, data);
    out.balance.push_back(solver.mass_balance(slab, data, sol.x));

    // commit cell values
    for (const auto& e : topo.elements) {
      const auto& s = mesh.subdomain(e.sub);
      const int level = slab * mesh.levels_per_slab(e.sub) + e.level_in_slab;
      for (int f = 0; f < nf; ++f)
        out.state.values[e.sub][(static_cast<size_t>(level) * s.cell_count() + e.cell) * nf + f] =
            sol.x.cells[e.slab_cell * nf + f];
    }
    // commit recovered fluxes at global ids
    for (int g = 0; g < topo.n_flux_geo; ++g) {
      const std::int64_t gid = topo.flux_global0[g] + static_cast<std::int64_t>(slab) * topo.flux_stride;
      for (int fam = 0; fam < nfam; ++fam)
        out.state.flux[static_cast<size_t>(gid) * nfam + fam] = sol.x.fluxes[g * nfam + fam];
    }
    // seed the next slab with each subdomain's final level
    for (int si = 0; si < mesh.subdomain_count(); ++si) {
      const auto& s = mesh.subdomain(si);
      const int last = mesh.levels_per_slab(si) - 1;
      for (int c = 0; c < s.cell_count(); ++c)
        for (int f = 0; f < nf; ++f)
          data[si][static_cast<size_t>(c) * nf + f] =
              sol.x.cells[topo.cell_local[si][static_cast<size_t>(last) * s.cell_count() + c] * nf + f];
    }
    out.state.committed_slabs = slab + 1;
    out.reports.push_back(std::move(sol.report));
  }
  return out;
}

}  // namespace stevmfe::solver
