#pragma once

#include <cstdint>
#include <vector>

#include "stevmfe/mesh.hpp"

namespace stevmfe::mesh {

/// Global enumeration of cell unknowns and enhanced-velocity flux unknowns.
///
/// Ordering is slab-major, then subdomain, then time level within the slab,
/// then lexicographic spatial index (x fastest; for fluxes axis-major within
/// a level). Flux DOFs are geometric: one per spatial-normal face, with
/// interface sub-faces carried by the fine side and shared by both sides.
/// Models with several unknown fields or flux families stack them on top of
/// this enumeration.
class DofMap {
 public:
  static DofMap enumerate(const SpaceTimeMesh& mesh, int n_fields);

  int n_fields() const { return n_fields_; }

  std::int64_t cell_dof(int sub, int level, int cell) const;
  std::int64_t cell_unknown(int sub, int level, int cell, int field) const {
    return cell_dof(sub, level, cell) * n_fields_ + field;
  }

  /// Flux DOF of an owned face (interior, boundary, or interface fine side).
  /// Returns -1 for a coarse-side covered face, which has no DOF of its own.
  std::int64_t flux_dof(int sub, int level, int spatial_face) const;

  /// The shared sub-face flux DOFs covering one coarse-side face of `patch`
  /// at coarse time level `level`, ordered by fine level then tangential
  /// index. All returned ids equal the fine-side flux_dof of the sub-faces.
  std::vector<std::int64_t> covered_face_dofs(const SpaceTimeMesh& mesh, int patch,
                                              int coarse_level, int coarse_face) const;

  std::int64_t n_cell_dofs() const { return n_cells_; }
  std::int64_t n_cell_unknowns() const { return n_cells_ * n_fields_; }
  std::int64_t n_flux_interior() const { return n_interior_; }
  std::int64_t n_flux_boundary() const { return n_boundary_; }
  std::int64_t n_flux_interface() const { return n_interface_; }
  std::int64_t n_flux_dofs() const { return n_interior_ + n_boundary_ + n_interface_; }
  std::int64_t total() const { return n_cell_unknowns() + n_flux_dofs(); }

  /// Rank of `spatial_face` among the owned faces of `sub` (-1 if covered).
  int owned_face_index(int sub, int spatial_face) const {
    return owned_idx_[sub][spatial_face];
  }
  int owned_face_count(int sub) const { return n_owned_[sub]; }

 private:
  int n_fields_ = 1;
  std::int64_t n_cells_ = 0, n_interior_ = 0, n_boundary_ = 0, n_interface_ = 0;
  std::int64_t cells_per_slab_ = 0, flux_per_slab_ = 0;
  std::vector<std::int64_t> sub_cell_base_;  ///< within-slab base per subdomain
  std::vector<std::int64_t> sub_flux_base_;
  std::vector<int> levels_per_slab_;
  std::vector<int> n_cells_sub_;
  std::vector<int> n_owned_;
  std::vector<std::vector<int>> owned_idx_;
};

}  // namespace stevmfe::mesh
