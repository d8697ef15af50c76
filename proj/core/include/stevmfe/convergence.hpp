#pragma once

#include <functional>

#include "stevmfe/config.hpp"
#include "stevmfe/newton.hpp"

namespace stevmfe::driver {

/// Space-time L2 errors against an exact solution sampled at element
/// space-time midpoints: sqrt( sum (p_exact - P)^2 |E| ), split by
/// subdomain role (coarse, fine).
std::pair<Scalar, Scalar> l2_spacetime_error(
    const mesh::SpaceTimeMesh& mesh, const solver::SimulationState& state,
    const std::function<Scalar(Scalar, Scalar, Scalar)>& exact);

struct ErrorRow {
  Scalar h_coarse = 0, h_fine = 0;
  Scalar err_coarse = 0, err_fine = 0;
  std::int64_t dof = 0;  ///< cell unknowns (reduced monolithic system size)
  double seconds = 0;
  int max_newton_iters = 0;
  Scalar flux_error = 0;  ///< face-midpoint velocity error of recovered fluxes
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
};

/// Refine the configured mesh `levels` times (halving h and dt everywhere),
/// run each level, and report errors, DOF counts, and wall-clock time.
ErrorReport convergence_study(const RunConfig& base);

void write_error_report(const ErrorReport& report, const std::string& path);

/// Full simulation run: advance all slabs and write snapshots and reports
/// into the output directory. Returns the advance result for callers that
/// inspect it.
solver::AdvanceResult run_simulation(const RunConfig& cfg);

}  // namespace stevmfe::driver
