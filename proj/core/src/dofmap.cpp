#include "stevmfe/dofmap.hpp"

namespace stevmfe::mesh {

DofMap DofMap::enumerate(const SpaceTimeMesh& mesh, int n_fields) {
  DofMap d;
  d.n_fields_ = n_fields;
  const int nsub = mesh.subdomain_count();
  d.sub_cell_base_.resize(nsub);
  d.sub_flux_base_.resize(nsub);
  d.levels_per_slab_.resize(nsub);
  d.n_cells_sub_.resize(nsub);
  d.n_owned_.resize(nsub);
  d.owned_idx_.resize(nsub);

  std::int64_t cell_base = 0, flux_base = 0;
  for (int si = 0; si < nsub; ++si) {
    const Subdomain& s = mesh.subdomain(si);
    const auto& faces = mesh.faces(si);
    d.levels_per_slab_[si] = mesh.levels_per_slab(si);
    d.n_cells_sub_[si] = s.cell_count();
    d.sub_cell_base_[si] = cell_base;
    cell_base += static_cast<std::int64_t>(s.cell_count()) * d.levels_per_slab_[si];

    auto& owned = d.owned_idx_[si];
    owned.assign(s.face_count(), -1);
    int rank = 0;
    for (int f = 0; f < s.face_count(); ++f) {
      if (faces[f].kind == FaceKind::InterfaceCovered) continue;
      owned[f] = rank++;
      const std::int64_t levels = mesh.n_slabs() * static_cast<std::int64_t>(d.levels_per_slab_[si]);
      switch (faces[f].kind) {
        case FaceKind::Interior: d.n_interior_ += levels; break;
        case FaceKind::Boundary: d.n_boundary_ += levels; break;
        case FaceKind::InterfaceOwned: d.n_interface_ += levels; break;
        default: break;
      }
    }
    d.n_owned_[si] = rank;
    d.sub_flux_base_[si] = flux_base;
    flux_base += static_cast<std::int64_t>(rank) * d.levels_per_slab_[si];
  }
  d.cells_per_slab_ = cell_base;
  d.flux_per_slab_ = flux_base;
  d.n_cells_ = cell_base * mesh.n_slabs();
  return d;
}

std::int64_t DofMap::cell_dof(int sub, int level, int cell) const {
  const int lps = levels_per_slab_[sub];
  const int slab = level / lps;
  const int k = level % lps;
  return slab * cells_per_slab_ + sub_cell_base_[sub] +
         static_cast<std::int64_t>(k) * n_cells_sub_[sub] + cell;
}

std::int64_t DofMap::flux_dof(int sub, int level, int spatial_face) const {
  const int rank = owned_idx_[sub][spatial_face];
  if (rank < 0) return -1;
  const int lps = levels_per_slab_[sub];
  const int slab = level / lps;
  const int k = level % lps;
  return slab * flux_per_slab_ + sub_flux_base_[sub] +
         static_cast<std::int64_t>(k) * n_owned_[sub] + rank;
}

std::vector<std::int64_t> DofMap::covered_face_dofs(const SpaceTimeMesh& mesh, int patch,
                                                    int coarse_level, int coarse_face) const {
  const InterfacePatch& p = mesh.patches()[patch];
  std::vector<std::int64_t> out;
  for (int k = 0; k < p.time_ratio; ++k) {
    const int fine_level = coarse_level * p.time_ratio + k;
    for (const auto& sf : p.spatial)
      if (sf.coarse_face == coarse_face)
        out.push_back(flux_dof(p.fine_sub, fine_level, sf.fine_face));
  }
  return out;
}

}  // namespace stevmfe::mesh
