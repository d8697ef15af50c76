#pragma once

#include <string>
#include <vector>

#include "stevmfe/config.hpp"
#include "stevmfe/newton.hpp"

namespace stevmfe::driver {

/// Whitespace-separated scalar field, mapped lexicographically to cells
/// (x fastest). With `log_scale` the values are natural-log encoded and
/// exponentiated on load. Throws IoError naming the line on bad tokens and
/// on count mismatches.
std::vector<Scalar> read_scalar_field(const std::string& path, std::int64_t expected,
                                      bool log_scale = false);

/// Field snapshots: a full-precision CSV over all elements, plus optional
/// legacy-VTK rectilinear grids and gnuplot-ready matrices per subdomain
/// per time level (at the configured cadence).
void write_fields(const mesh::SpaceTimeMesh& mesh, const models::ModelProblem& model,
                  const solver::SimulationState& state, const OutputOptions& out);

void write_newton_reports(const std::vector<solver::NewtonReport>& reports,
                          const std::string& path);

void write_mass_balance(const std::vector<solver::MassBalanceRow>& rows,
                        const models::ModelProblem& model, const std::string& path);

std::vector<std::string> field_names(const models::ModelProblem& model);

}  // namespace stevmfe::driver
