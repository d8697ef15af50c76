#pragma once

#include <vector>

#include "stevmfe/assembler.hpp"

namespace stevmfe::solver {

struct NewtonOptions {
  Scalar tolerance = 1e-6;       ///< max-norm of mass rows scaled by pore volume
  int max_iterations = 20;
  Scalar saturation_clamp = 0;   ///< per-iteration |ds| clamp; 0 disables
};

struct NewtonReport {
  int slab = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<Scalar> residual_history;  ///< post-update scaled norms, one per iteration
  std::int64_t reduced_nonzeros = 0;
  int linear_solves = 0;
  double factor_seconds = 0;
  double solve_seconds = 0;
};

struct NonConvergence : SolverError {
  NonConvergence(const std::string& what, Detail d, NewtonReport r)
      : SolverError(what, d), report(std::move(r)) {}
  NewtonReport report;
};

/// Committed per-subdomain field values at every time level plus recovered
/// flux DOF values (indexed by the DofMap's global ids). Committed levels
/// are never rewritten.
struct SimulationState {
  int n_fields = 1;
  int n_families = 1;
  std::vector<std::vector<Scalar>> values;   ///< [sub][(level*ncells + cell)*nf + f]
  std::vector<std::vector<Scalar>> initial;  ///< [sub][cell*nf + f]
  std::vector<Scalar> flux;                  ///< [global_flux_dof*nfam + fam]
  int committed_slabs = 0;

  Scalar value(int sub, int level, int cell, int field, int ncells) const {
    return values[sub][(static_cast<size_t>(level) * ncells + cell) * n_fields + field];
  }
};

/// Per-slab mass accounting for the conserved fields. `defect` equals the
/// sum of the converged mass-row residuals, i.e. accumulated + boundary_out
/// - injected + produced.
struct MassBalanceRow {
  int slab = 0;
  std::array<Scalar, 2> injected{};
  std::array<Scalar, 2> produced{};
  std::array<Scalar, 2> accumulated{};
  std::array<Scalar, 2> boundary_out{};
  std::array<Scalar, 2> defect{};
};

struct SlabSolution {
  assembly::SlabIterate x;
  NewtonReport report;
};

Scalar scaled_residual_norm(const SlabSystem& sys);

/// Newton solve of one matching slab. Every iterate keeps the constitutive
/// rows exactly satisfied (the flux unknowns are re-solved face-locally
/// after each cell update), so the Schur system is the exact Jacobian of
/// the reduced problem.
class SlabSolver {
 public:
  SlabSolver(const mesh::SpaceTimeMesh& mesh, const mesh::DofMap& dofs,
             const models::ModelProblem& model, NewtonOptions opts);

  SlabSolution solve_slab(int slab, const std::vector<std::vector<Scalar>>& data) const;

  const assembly::SlabTopology& topology() const { return topo_; }
  const mesh::SpaceTimeMesh& mesh() const { return mesh_; }
  const models::ModelProblem& model() const { return model_; }

  MassBalanceRow mass_balance(int slab, const std::vector<std::vector<Scalar>>& data,
                              const assembly::SlabIterate& x) const;

 private:
  const mesh::SpaceTimeMesh& mesh_;
  const models::ModelProblem& model_;
  NewtonOptions opts_;
  assembly::SlabTopology topo_;
};

SimulationState initial_state(const mesh::SpaceTimeMesh& mesh, const mesh::DofMap& dofs,
                              const models::ModelProblem& model);

struct AdvanceResult {
  SimulationState state;
  std::vector<NewtonReport> reports;
  std::vector<MassBalanceRow> balance;
};

/// Sequential matching-slab march: each slab's converged final level seeds
/// the next. Throws NonConvergence (with the slab index) when a slab fails.
AdvanceResult advance(const mesh::SpaceTimeMesh& mesh, const mesh::DofMap& dofs,
                      const models::ModelProblem& model, const NewtonOptions& opts);

}  // namespace stevmfe::solver
