#include "stevmfe/slab_system.hpp"

#include <algorithm>
#include <cmath>

namespace stevmfe::solver {

namespace {

/// Invert every nfam x nfam face block of `uu` in place into `inv`.
std::vector<Scalar> invert_blocks(const std::vector<Scalar>& uu, int n_face, int nfam) {
  std::vector<Scalar> inv(uu.size());
  const int bs = nfam * nfam;
  if (nfam == 1) {
    for (int f = 0; f < n_face; ++f) {
      const Scalar a = uu[f];
      if (a == 0 || !std::isfinite(a))
        throw AssemblyError("singular flux block at face " + std::to_string(f));
      inv[f] = 1 / a;
    }
    return inv;
  }
  Eigen::MatrixXd block(nfam, nfam);
  for (int f = 0; f < n_face; ++f) {
    for (int i = 0; i < nfam; ++i)
      for (int j = 0; j < nfam; ++j) block(i, j) = uu[f * bs + i * nfam + j];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(block);
    if (!lu.isInvertible())
      throw AssemblyError("singular flux block at face " + std::to_string(f));
    const Eigen::MatrixXd binv = lu.inverse();
    for (int i = 0; i < nfam; ++i)
      for (int j = 0; j < nfam; ++j) inv[f * bs + i * nfam + j] = binv(i, j);
  }
  return inv;
}

/// y = blockdiag(inv) * x
Vec apply_blocks(const std::vector<Scalar>& inv, int n_face, int nfam, const Vec& x) {
  Vec y(x.size());
  const int bs = nfam * nfam;
  for (int f = 0; f < n_face; ++f)
    for (int i = 0; i < nfam; ++i) {
      Scalar s = 0;
      for (int j = 0; j < nfam; ++j) s += inv[f * bs + i * nfam + j] * x[f * nfam + j];
      y[f * nfam + i] = s;
    }
  return y;
}

}  // namespace

ReducedSystem schur_reduce(const SlabSystem& sys) {
  ReducedSystem red;
  red.n_face = sys.n_face;
  red.nfam = sys.nfam;
  red.up = sys.up;
  red.r_u = sys.r_u;
  red.uu_inv = invert_blocks(sys.uu, sys.n_face, sys.nfam);

  // W = A_uu^-1 A_up, assembled face block by face block
  const int nfam = sys.nfam;
  const int bs = nfam * nfam;
  std::vector<Eigen::Triplet<Scalar>> trips;
  trips.reserve(static_cast<size_t>(sys.up.nonZeros()) * nfam);
  std::vector<std::int64_t> cols;
  std::vector<Scalar> dense;
  for (int f = 0; f < sys.n_face; ++f) {
    cols.clear();
    for (int i = 0; i < nfam; ++i)
      for (SpMatRow::InnerIterator it(sys.up, f * nfam + i); it; ++it)
        if (std::find(cols.begin(), cols.end(), it.col()) == cols.end())
          cols.push_back(it.col());
    if (cols.empty()) continue;
    dense.assign(nfam * cols.size(), 0);
    for (int i = 0; i < nfam; ++i)
      for (SpMatRow::InnerIterator it(sys.up, f * nfam + i); it; ++it) {
        const auto c = std::find(cols.begin(), cols.end(), it.col()) - cols.begin();
        dense[i * cols.size() + c] = it.value();
      }
    for (int i = 0; i < nfam; ++i)
      for (size_t c = 0; c < cols.size(); ++c) {
        Scalar s = 0;
        for (int j = 0; j < nfam; ++j)
          s += red.uu_inv[f * bs + i * nfam + j] * dense[j * cols.size() + c];
        if (s != 0) trips.emplace_back(f * nfam + i, static_cast<int>(cols[c]), s);
      }
  }
  SpMat w(sys.n_flux, sys.n_cell);
  w.setFromTriplets(trips.begin(), trips.end());

  red.S = (sys.pp - SpMat(sys.pu * w)).pruned();
  const Vec y = apply_blocks(red.uu_inv, sys.n_face, nfam, sys.r_u);
  red.rhs = -sys.r_p + sys.pu * y;
  return red;
}

Vec recover_flux_update(const ReducedSystem& red, const Vec& dp) {
  Vec v = red.r_u + red.up * dp;
  return -apply_blocks(red.uu_inv, red.n_face, red.nfam, v);
}

Vec consistent_fluxes(const SlabSystem& sys, const Vec& u) {
  const auto inv = invert_blocks(sys.uu, sys.n_face, sys.nfam);
  return u - apply_blocks(inv, sys.n_face, sys.nfam, sys.r_u);
}

}  // namespace stevmfe::solver
