#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "stevmfe/common.hpp"

namespace stevmfe::solver {

using SpMat = Eigen::SparseMatrix<Scalar>;
using SpMatRow = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

/// Linearized monolithic slab system in block form. Flux unknowns are laid
/// out per geometric face with `nfam` families interleaved; the flux-flux
/// block is dense nfam x nfam per face (block-diagonal across faces under
/// the trapezoid-midpoint quadrature).
struct SlabSystem {
  int n_cell = 0;  ///< cell unknowns including fields
  int n_flux = 0;  ///< flux unknowns including families
  int n_face = 0;  ///< geometric faces in the slab
  int nfam = 1;

  std::vector<Scalar> uu;  ///< per-face blocks, row-major nfam*nfam each
  SpMatRow up;             ///< flux rows x cell unknowns
  SpMat pu;                ///< cell rows x flux unknowns
  SpMat pp;                ///< cell rows x cell unknowns
  Vec r_u, r_p;
  Vec row_scale;           ///< pore-volume scale per cell row (residual norm)
};

/// Schur-reduced system over cell unknowns plus the data needed to recover
/// flux updates: S = A_pp - A_pu A_uu^-1 A_up, rhs = -R_p + A_pu A_uu^-1 R_u.
struct ReducedSystem {
  SpMat S;
  Vec rhs;
  int n_face = 0;
  int nfam = 1;
  std::vector<Scalar> uu_inv;  ///< per-face inverse blocks
  SpMatRow up;
  Vec r_u;
};

/// Eliminate the flux unknowns face-block by face-block. Throws
/// AssemblyError naming the face if a block is singular.
ReducedSystem schur_reduce(const SlabSystem& sys);

/// Newton flux update du = -A_uu^-1 (R_u + A_up dp).
Vec recover_flux_update(const ReducedSystem& red, const Vec& dp);

/// Exact flux solve at fixed cell unknowns: u* = u - A_uu^-1 R_u(u). The
/// constitutive rows are linear in the fluxes, so u* satisfies them exactly.
Vec consistent_fluxes(const SlabSystem& sys, const Vec& u);

}  // namespace stevmfe::solver
