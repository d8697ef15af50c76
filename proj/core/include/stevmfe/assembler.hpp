#pragma once

#include <unordered_map>
#include <vector>

#include "stevmfe/dofmap.hpp"
#include "stevmfe/model.hpp"
#include "stevmfe/slab_system.hpp"

namespace stevmfe::assembly {

struct FluxTerm {
  std::int32_t flux;  ///< slab-local geometric flux index
  Scalar sign;        ///< +1 outflow through the upper face, -1 lower
};

struct ElemRec {
  std::int32_t slab_cell = -1;
  std::int32_t sub = -1, cell = -1;
  std::int32_t level_in_slab = 0;
  std::int32_t prev_slab_cell = -1;  ///< -1: predecessor is slab-initial data
  Scalar cell_measure = 0;
  Scalar dt = 0;
  Scalar t_mid_off = 0;  ///< midpoint offset from slab start
  Coord mid{};
  std::int32_t flux_begin = 0, flux_end = 0;
};

struct FluxRec {
  std::int32_t slab_flux = -1;
  std::int8_t axis = 0;
  std::int8_t boundary_side = -1;  ///< 2*axis (+1 for the high side); -1 if interior
  bool interface = false;
  std::int32_t minus_slab_cell = -1, plus_slab_cell = -1;
  std::int32_t minus_sub = -1, minus_cell = -1, plus_sub = -1, plus_cell = -1;
  Scalar h_minus = 0, h_plus = 0;
  Scalar measure = 0;  ///< space-time face measure
  Coord mid{};
  Scalar t_mid_off = 0;
  Scalar dt = 0;
};

/// Assembly-ready view of one matching slab. Slabs are structurally
/// identical, so a single topology serves the whole march; global DOF ids
/// advance by a fixed stride per slab. Slab-local unknowns are ordered
/// time-major (earliest level first), then by subdomain, then axis-major
/// lexicographic, reproducing the temporal/spatial block layout of the
/// monolithic matrix.
struct SlabTopology {
  int n_cell_geo = 0;
  int n_flux_geo = 0;
  std::vector<ElemRec> elements;
  std::vector<FluxTerm> flux_terms;
  std::vector<FluxRec> fluxes;

  /// slab-local cell index per (sub, level_in_slab * ncells + cell)
  std::vector<std::vector<std::int32_t>> cell_local;
  /// global DofMap ids for slab 0 plus the per-slab stride
  std::vector<std::int64_t> cell_global0, flux_global0;
  std::int64_t cell_stride = 0, flux_stride = 0;

  static SlabTopology build(const mesh::SpaceTimeMesh& mesh, const mesh::DofMap& dofs,
                            const models::ModelProblem& model);
};

struct SlabContext {
  int slab = 0;
  Scalar t0 = 0;
  /// Slab-initial data per subdomain: values[cell * n_fields + field].
  const std::vector<std::vector<Scalar>>* data = nullptr;
};

struct SlabIterate {
  Eigen::VectorXd cells;
  Eigen::VectorXd fluxes;
};

/// Upwind switches per flux unknown, frozen for one Newton iteration:
/// 1 selects the lower-coordinate (minus) side.
using UpwindFlags = std::vector<std::uint8_t>;

UpwindFlags compute_upwind(const SlabTopology& topo, const models::ModelProblem& model,
                           const Eigen::VectorXd& fluxes);

/// Residual and analytic Jacobian of one slab at the given iterate.
solver::SlabSystem assemble(const mesh::SpaceTimeMesh& mesh, const SlabTopology& topo,
                            const models::ModelProblem& model, const SlabContext& ctx,
                            const SlabIterate& x, const UpwindFlags& upwind);

/// Read-only evaluation of selected residual pieces at one iterate, used for
/// mass accounting. Uses the same formulas as the assembler.
class StateProbe {
 public:
  StateProbe(const mesh::SpaceTimeMesh& mesh, const SlabTopology& topo,
             const models::ModelProblem& model, const SlabContext& ctx, const SlabIterate& x);

  /// Accumulated conserved quantity per equation over the element's step.
  std::array<Scalar, 2> accumulation(const ElemRec& e) const;
  /// Net well mass rates per equation (injection positive).
  std::array<Scalar, 2> well_rates(const ElemRec& e) const;
  /// Conserved flux through a boundary face per equation, oriented along the
  /// positive axis (the caller applies the outward sign).
  std::array<Scalar, 2> boundary_outflow(const FluxRec& f, const UpwindFlags& upwind) const;

 private:
  const mesh::SpaceTimeMesh& mesh_;
  const SlabTopology& topo_;
  const models::ModelProblem& model_;
  const SlabContext& ctx_;
  const SlabIterate& x_;
  std::unordered_map<std::int64_t, std::vector<int>> wells_;
};

}  // namespace stevmfe::assembly
