#include "stevmfe/assembler.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "stevmfe/kernels.hpp"

namespace stevmfe::assembly {

using mesh::FaceKind;
using mesh::SpaceTimeMesh;
using mesh::Subdomain;
using models::ModelKind;
using models::ModelProblem;

namespace {

struct FacePos {
  int axis;
  IndexVec pos;  ///< pos[axis] in 0..cells[axis]; cross axis a cell index
};

FacePos face_position(const Subdomain& s, int face) {
  FacePos fp{};
  fp.axis = s.face_axis(face);
  const int local = face - s.face_offset(fp.axis);
  if (fp.axis == 0) {
    fp.pos[0] = local % (s.cells()[0] + 1);
    fp.pos[1] = s.dim() > 1 ? local / (s.cells()[0] + 1) : 0;
  } else {
    fp.pos[0] = local % s.cells()[0];
    fp.pos[1] = local / s.cells()[0];
  }
  return fp;
}

}  // namespace

SlabTopology SlabTopology::build(const SpaceTimeMesh& mesh, const mesh::DofMap& dofs,
                                 const ModelProblem& model) {
  SlabTopology topo;
  const int nsub = mesh.subdomain_count();
  const int nf = model.n_cell_fields();
  (void)nf;

  // time-major level order within the slab; ties broken by subdomain id.
  // Level end times are compared as exact fractions (k+1)/levels_per_slab.
  struct LevelKey {
    long num, den;
    int sub, k;
  };
  std::vector<LevelKey> order;
  for (int si = 0; si < nsub; ++si) {
    const int lps = mesh.levels_per_slab(si);
    for (int k = 0; k < lps; ++k) order.push_back({k + 1, lps, si, k});
  }
  std::sort(order.begin(), order.end(), [](const LevelKey& a, const LevelKey& b) {
    const long lhs = a.num * b.den, rhs = b.num * a.den;
    if (lhs != rhs) return lhs < rhs;
    return a.sub < b.sub;
  });

  // interface lookup tables
  struct IfaceRef {
    int patch = -1;
    int spatial = -1;
  };
  std::vector<std::unordered_map<int, IfaceRef>> fine_face_ref(nsub);
  std::vector<std::unordered_map<int, std::vector<int>>> covered_face_ref(nsub);
  for (size_t pi = 0; pi < mesh.patches().size(); ++pi) {
    const auto& p = mesh.patches()[pi];
    for (size_t si = 0; si < p.spatial.size(); ++si) {
      fine_face_ref[p.fine_sub][p.spatial[si].fine_face] = {static_cast<int>(pi),
                                                            static_cast<int>(si)};
      covered_face_ref[p.coarse_sub][p.spatial[si].coarse_face].push_back(static_cast<int>(si));
    }
  }

  // cell numbering
  topo.cell_local.resize(nsub);
  for (int si = 0; si < nsub; ++si)
    topo.cell_local[si].assign(
        static_cast<size_t>(mesh.levels_per_slab(si)) * mesh.subdomain(si).cell_count(), -1);
  std::int32_t cid = 0;
  for (const auto& lk : order) {
    const int ncells = mesh.subdomain(lk.sub).cell_count();
    for (int c = 0; c < ncells; ++c)
      topo.cell_local[lk.sub][static_cast<size_t>(lk.k) * ncells + c] = cid++;
  }
  topo.n_cell_geo = cid;

  // flux numbering (owned faces minus no-flow boundary faces)
  std::vector<std::vector<std::int32_t>> flux_local(nsub);
  for (int si = 0; si < nsub; ++si)
    flux_local[si].assign(
        static_cast<size_t>(mesh.levels_per_slab(si)) * mesh.subdomain(si).face_count(), -1);

  auto boundary_side = [&](const Subdomain& s, int face) {
    const FacePos fp = face_position(s, face);
    return 2 * fp.axis + (fp.pos[fp.axis] == s.cells()[fp.axis] ? 1 : 0);
  };

  std::int32_t fid = 0;
  for (const auto& lk : order) {
    const Subdomain& s = mesh.subdomain(lk.sub);
    const auto& faces = mesh.faces(lk.sub);
    for (int face = 0; face < s.face_count(); ++face) {
      const auto& sf = faces[face];
      if (sf.kind == FaceKind::InterfaceCovered) continue;
      if (sf.kind == FaceKind::Boundary &&
          model.boundary[boundary_side(s, face)].type == models::BoundaryType::NoFlow)
        continue;

      flux_local[lk.sub][static_cast<size_t>(lk.k) * s.face_count() + face] = fid;

      FluxRec fr;
      fr.slab_flux = fid;
      fr.axis = sf.axis;
      fr.dt = s.dt();
      fr.t_mid_off = (lk.k + 0.5) * s.dt();
      fr.mid = s.face_center(face);
      fr.measure = s.face_area(sf.axis) * s.dt();
      if (sf.kind == FaceKind::InterfaceOwned) {
        fr.interface = true;
        const IfaceRef ref = fine_face_ref[lk.sub].at(face);
        const auto& patch = mesh.patches()[ref.patch];
        const auto& spf = patch.spatial[ref.spatial];
        const Subdomain& cs = mesh.subdomain(patch.coarse_sub);
        const int coarse_k = lk.k / patch.time_ratio;
        const int ccell = spf.coarse_cell;
        const std::int32_t coarse_slab_cell =
            topo.cell_local[patch.coarse_sub][static_cast<size_t>(coarse_k) * cs.cell_count() +
                                              ccell];
        const std::int32_t fine_slab_cell =
            topo.cell_local[lk.sub][static_cast<size_t>(lk.k) * s.cell_count() + spf.fine_cell];
        if (patch.fine_is_lower) {
          fr.minus_sub = lk.sub;
          fr.minus_cell = spf.fine_cell;
          fr.minus_slab_cell = fine_slab_cell;
          fr.plus_sub = patch.coarse_sub;
          fr.plus_cell = ccell;
          fr.plus_slab_cell = coarse_slab_cell;
        } else {
          fr.minus_sub = patch.coarse_sub;
          fr.minus_cell = ccell;
          fr.minus_slab_cell = coarse_slab_cell;
          fr.plus_sub = lk.sub;
          fr.plus_cell = spf.fine_cell;
          fr.plus_slab_cell = fine_slab_cell;
        }
        fr.h_minus = mesh.subdomain(fr.minus_sub).h(sf.axis);
        fr.h_plus = mesh.subdomain(fr.plus_sub).h(sf.axis);
      } else {
        if (sf.minus_cell >= 0) {
          fr.minus_sub = lk.sub;
          fr.minus_cell = sf.minus_cell;
          fr.minus_slab_cell =
              topo.cell_local[lk.sub][static_cast<size_t>(lk.k) * s.cell_count() + sf.minus_cell];
          fr.h_minus = s.h(sf.axis);
        }
        if (sf.plus_cell >= 0) {
          fr.plus_sub = lk.sub;
          fr.plus_cell = sf.plus_cell;
          fr.plus_slab_cell =
              topo.cell_local[lk.sub][static_cast<size_t>(lk.k) * s.cell_count() + sf.plus_cell];
          fr.h_plus = s.h(sf.axis);
        }
        if (sf.kind == FaceKind::Boundary)
          fr.boundary_side = static_cast<std::int8_t>(boundary_side(s, face));
      }
      topo.fluxes.push_back(fr);
      ++fid;
    }
  }
  topo.n_flux_geo = fid;

  // elements with flux stencils
  topo.elements.reserve(topo.n_cell_geo);
  for (const auto& lk : order) {
    const Subdomain& s = mesh.subdomain(lk.sub);
    const auto& faces = mesh.faces(lk.sub);
    const int ncells = s.cell_count();
    for (int c = 0; c < ncells; ++c) {
      ElemRec e;
      e.slab_cell = topo.cell_local[lk.sub][static_cast<size_t>(lk.k) * ncells + c];
      e.sub = lk.sub;
      e.cell = c;
      e.level_in_slab = lk.k;
      e.prev_slab_cell =
          lk.k > 0 ? topo.cell_local[lk.sub][static_cast<size_t>(lk.k - 1) * ncells + c] : -1;
      e.cell_measure = s.cell_measure();
      e.dt = s.dt();
      e.t_mid_off = (lk.k + 0.5) * s.dt();
      e.mid = s.cell_center(c);
      e.flux_begin = static_cast<std::int32_t>(topo.flux_terms.size());
      const IndexVec idx = s.cell_multi_index(c);
      for (int axis = 0; axis < mesh.dim(); ++axis) {
        for (int side = 0; side < 2; ++side) {
          IndexVec pos = idx;
          pos[axis] += side;
          const int face = s.face_index(axis, pos);
          const Scalar sign = side == 1 ? 1.0 : -1.0;
          const auto& sf = faces[face];
          if (sf.kind == FaceKind::InterfaceCovered) {
            const auto& list = covered_face_ref[lk.sub].at(face);
            const auto& patch = mesh.patches()[sf.patch];
            const Subdomain& fs = mesh.subdomain(patch.fine_sub);
            for (int kk = 0; kk < patch.time_ratio; ++kk) {
              const int fine_k = lk.k * patch.time_ratio + kk;
              for (int si : list) {
                const int ff = patch.spatial[si].fine_face;
                const std::int32_t fl =
                    flux_local[patch.fine_sub][static_cast<size_t>(fine_k) * fs.face_count() + ff];
                topo.flux_terms.push_back({fl, sign});
              }
            }
          } else {
            const std::int32_t fl =
                flux_local[lk.sub][static_cast<size_t>(lk.k) * s.face_count() + face];
            if (fl >= 0) topo.flux_terms.push_back({fl, sign});
          }
        }
      }
      e.flux_end = static_cast<std::int32_t>(topo.flux_terms.size());
      topo.elements.push_back(e);
    }
  }

  // global DofMap ids for slab 0; they advance by a fixed stride per slab
  topo.cell_global0.assign(topo.n_cell_geo, -1);
  topo.flux_global0.assign(topo.n_flux_geo, -1);
  for (const auto& lk : order) {
    const Subdomain& s = mesh.subdomain(lk.sub);
    for (int c = 0; c < s.cell_count(); ++c)
      topo.cell_global0[topo.cell_local[lk.sub][static_cast<size_t>(lk.k) * s.cell_count() + c]] =
          dofs.cell_dof(lk.sub, lk.k, c);
    for (int face = 0; face < s.face_count(); ++face) {
      const std::int32_t fl = flux_local[lk.sub][static_cast<size_t>(lk.k) * s.face_count() + face];
      if (fl >= 0) topo.flux_global0[fl] = dofs.flux_dof(lk.sub, lk.k, face);
    }
  }
  std::int64_t cells_per_slab = 0, flux_per_slab = 0;
  for (int si = 0; si < nsub; ++si) {
    cells_per_slab +=
        static_cast<std::int64_t>(mesh.subdomain(si).cell_count()) * mesh.levels_per_slab(si);
    flux_per_slab +=
        static_cast<std::int64_t>(dofs.owned_face_count(si)) * mesh.levels_per_slab(si);
  }
  topo.cell_stride = cells_per_slab;
  topo.flux_stride = flux_per_slab;
  return topo;
}

UpwindFlags compute_upwind(const SlabTopology& topo, const ModelProblem& model,
                           const Eigen::VectorXd& fluxes) {
  const int nfam = model.n_flux_families();
  UpwindFlags flags(static_cast<size_t>(topo.n_flux_geo) * nfam, 0);
  for (size_t i = 0; i < flags.size(); ++i) flags[i] = fluxes[i] > 0 ? 1 : 0;
  return flags;
}

namespace {

/// Triplet-collecting view over the block system under construction.
struct Builder {
  solver::SlabSystem sys;
  std::vector<Eigen::Triplet<Scalar>> tpp, tpu, tup;
  int nf = 1, nfam = 1;

  Builder(int n_cell_geo, int n_flux_geo, int nfields, int nfamilies) {
    nf = nfields;
    nfam = nfamilies;
    sys.n_cell = n_cell_geo * nf;
    sys.n_flux = n_flux_geo * nfam;
    sys.n_face = n_flux_geo;
    sys.nfam = nfam;
    sys.uu.assign(static_cast<size_t>(n_flux_geo) * nfam * nfam, 0);
    sys.r_u = solver::Vec::Zero(sys.n_flux);
    sys.r_p = solver::Vec::Zero(sys.n_cell);
    sys.row_scale = solver::Vec::Ones(sys.n_cell);
  }
  void uu(int face, int fi, int fj, Scalar v) {
    sys.uu[static_cast<size_t>(face) * nfam * nfam + fi * nfam + fj] += v;
  }
  void up(int face, int fam, int cell, int field, Scalar v) {
    tup.emplace_back(face * nfam + fam, cell * nf + field, v);
  }
  void pu(int cell, int feq, int face, int fam, Scalar v) {
    tpu.emplace_back(cell * nf + feq, face * nfam + fam, v);
  }
  void pp(int cell, int feq, int cell2, int field, Scalar v) {
    tpp.emplace_back(cell * nf + feq, cell2 * nf + field, v);
  }
  void ru(int face, int fam, Scalar v) { sys.r_u[face * nfam + fam] += v; }
  void rp(int cell, int feq, Scalar v) { sys.r_p[cell * nf + feq] += v; }

  solver::SlabSystem finish() {
    sys.up.resize(sys.n_flux, sys.n_cell);
    sys.up.setFromTriplets(tup.begin(), tup.end());
    sys.pu.resize(sys.n_cell, sys.n_flux);
    sys.pu.setFromTriplets(tpu.begin(), tpu.end());
    sys.pp.resize(sys.n_cell, sys.n_cell);
    sys.pp.setFromTriplets(tpp.begin(), tpp.end());
    return std::move(sys);
  }
};

struct StateView {
  const SlabTopology& topo;
  const SlabContext& ctx;
  const SlabIterate& x;
  int nf;
  Scalar cellv(int slab_cell, int field) const { return x.cells[slab_cell * nf + field]; }
  Scalar prev(const ElemRec& e, int field) const {
    if (e.prev_slab_cell >= 0) return cellv(e.prev_slab_cell, field);
    return (*ctx.data)[e.sub][static_cast<size_t>(e.cell) * nf + field];
  }
  Scalar flux(int geo_flux, int fam, int nfam) const { return x.fluxes[geo_flux * nfam + fam]; }
};

Scalar dirichlet_pressure(const ModelProblem& m, int side, const Coord& mid, Scalar t) {
  const auto& bc = m.boundary[side];
  if (bc.manufactured) return models::manufactured_solution(mid[0], mid[1], t, m.c1).p;
  return bc.pressure;
}

using WellIndexMap = std::unordered_map<std::int64_t, std::vector<int>>;

WellIndexMap index_wells(const ModelProblem& m, const SpaceTimeMesh& mesh) {
  WellIndexMap map;
  for (size_t w = 0; w < m.wells.size(); ++w) {
    const auto& spec = m.wells[w];
    const auto& s = mesh.subdomain(spec.sub);
    const std::int64_t key =
        static_cast<std::int64_t>(spec.sub) * (1LL << 32) + s.cell_index(spec.cell);
    map[key].push_back(static_cast<int>(w));
  }
  return map;
}

models::WellCellCtx well_ctx(const SpaceTimeMesh& mesh, const ElemRec& e) {
  const Subdomain& s = mesh.subdomain(e.sub);
  models::WellCellCtx c;
  c.perm_x = s.perm(e.cell, 0);
  c.perm_y = mesh.dim() > 1 ? s.perm(e.cell, 1) : c.perm_x;
  c.hx = s.h(0);
  c.hy = mesh.dim() > 1 ? s.h(1) : 1.0;
  return c;
}

void assemble_linear(const SpaceTimeMesh& mesh, const SlabTopology& topo, const ModelProblem& m,
                     const SlabContext& ctx, const StateView& st, Builder& b) {
  for (const FluxRec& f : topo.fluxes) {
    const Scalar u = st.flux(f.slab_flux, 0, 1);
    Scalar a, pm, pp;
    if (f.boundary_side >= 0) {
      const Scalar t = ctx.t0 + f.t_mid_off;
      const Scalar g = dirichlet_pressure(m, f.boundary_side, f.mid, t);
      const bool minus_in = f.minus_slab_cell >= 0;
      const int sub = minus_in ? f.minus_sub : f.plus_sub;
      const int cell = minus_in ? f.minus_cell : f.plus_cell;
      const Scalar k_in = mesh.subdomain(sub).perm(cell, f.axis);
      a = kernels::velocity_mass_coeff_boundary(f.measure, minus_in ? f.h_minus : f.h_plus, k_in);
      pm = minus_in ? st.cellv(f.minus_slab_cell, 0) : g;
      pp = minus_in ? g : st.cellv(f.plus_slab_cell, 0);
    } else {
      const Scalar km = mesh.subdomain(f.minus_sub).perm(f.minus_cell, f.axis);
      const Scalar kp = mesh.subdomain(f.plus_sub).perm(f.plus_cell, f.axis);
      a = kernels::velocity_mass_coeff(f.measure, f.h_minus, km, f.h_plus, kp);
      pm = st.cellv(f.minus_slab_cell, 0);
      pp = st.cellv(f.plus_slab_cell, 0);
    }
    b.ru(f.slab_flux, 0, a * u - (pm - pp));
    b.uu(f.slab_flux, 0, 0, a);
    if (f.minus_slab_cell >= 0) b.up(f.slab_flux, 0, f.minus_slab_cell, 0, -1);
    if (f.plus_slab_cell >= 0) b.up(f.slab_flux, 0, f.plus_slab_cell, 0, 1);
  }

  for (const ElemRec& e : topo.elements) {
    const Scalar w = e.cell_measure;
    const Scalar p = st.cellv(e.slab_cell, 0);
    const Scalar p_prev = st.prev(e, 0);
    Scalar r = kernels::accumulation_row(p, p_prev, w);
    b.pp(e.slab_cell, 0, e.slab_cell, 0, w);
    if (e.prev_slab_cell >= 0) b.pp(e.slab_cell, 0, e.prev_slab_cell, 0, -w);
    for (int t = e.flux_begin; t < e.flux_end; ++t) {
      const FluxTerm& ft = topo.flux_terms[t];
      r += ft.sign * st.flux(ft.flux, 0, 1);
      b.pu(e.slab_cell, 0, ft.flux, 0, ft.sign);
    }
    if (m.manufactured_forcing) {
      const Scalar t = ctx.t0 + e.t_mid_off;
      const Scalar f_mid = models::manufactured_solution(e.mid[0], e.mid[1], t, m.c1).f;
      r -= kernels::source_row(f_mid, w * e.dt);
    }
    b.rp(e.slab_cell, 0, r);
    b.sys.row_scale[e.slab_cell] = w;
  }
}

void assemble_tracer(const SpaceTimeMesh& mesh, const SlabTopology& topo, const ModelProblem& m,
                     const SlabContext& ctx, const StateView& st, const UpwindFlags& upwind,
                     Builder& b) {
  const Scalar mu = m.fluid.viscosity;
  const Scalar beta = m.darcy_constant();
  const WellIndexMap wells = index_wells(m, mesh);

  for (const FluxRec& f : topo.fluxes) {
    const int g = f.slab_flux;
    const Scalar u = st.flux(g, 0, 2);
    const Scalar z = st.flux(g, 1, 2);
    if (f.boundary_side >= 0) {
      const Scalar t = ctx.t0 + f.t_mid_off;
      const auto& bc = m.boundary[f.boundary_side];
      const Scalar gp = dirichlet_pressure(m, f.boundary_side, f.mid, t);
      const bool minus_in = f.minus_slab_cell >= 0;
      const int sc = minus_in ? f.minus_slab_cell : f.plus_slab_cell;
      const int sub = minus_in ? f.minus_sub : f.plus_sub;
      const int cell = minus_in ? f.minus_cell : f.plus_cell;
      const Scalar h_in = minus_in ? f.h_minus : f.h_plus;
      const Scalar p_in = st.cellv(sc, 0), c_in = st.cellv(sc, 1);
      const Scalar rho = models::density(p_in, m.fluid);
      const Scalar drho = models::density_dp(p_in, m.fluid);
      const Scalar k_in = mesh.subdomain(sub).perm(cell, f.axis);
      const Scalar phi_in = mesh.subdomain(sub).porosity(cell);
      // Darcy row
      const Scalar au = mu / beta * kernels::velocity_mass_coeff_boundary(f.measure, h_in, k_in) / rho;
      const Scalar pm = minus_in ? p_in : gp;
      const Scalar pp = minus_in ? gp : p_in;
      b.ru(g, 0, au * u - (pm - pp));
      b.uu(g, 0, 0, au);
      b.up(g, 0, sc, 0, (minus_in ? -1.0 : 1.0) + u * au * (-drho / rho));
      // diffusive row
      const Scalar az =
          kernels::velocity_mass_coeff_boundary(f.measure, h_in, phi_in) / (m.diffusion * rho);
      const Scalar cm = minus_in ? c_in : bc.concentration;
      const Scalar cp = minus_in ? bc.concentration : c_in;
      b.ru(g, 1, az * z - (cm - cp));
      b.uu(g, 1, 1, az);
      b.up(g, 1, sc, 1, minus_in ? -1.0 : 1.0);
      b.up(g, 1, sc, 0, z * az * (-drho / rho));
      continue;
    }
    const Scalar pm = st.cellv(f.minus_slab_cell, 0), pp = st.cellv(f.plus_slab_cell, 0);
    const Scalar cm = st.cellv(f.minus_slab_cell, 1), cp = st.cellv(f.plus_slab_cell, 1);
    const Scalar rho_m = models::density(pm, m.fluid), rho_p = models::density(pp, m.fluid);
    const Scalar drho_m = models::density_dp(pm, m.fluid), drho_p = models::density_dp(pp, m.fluid);
    const Scalar rho_sum = rho_m + rho_p;
    const Scalar km = mesh.subdomain(f.minus_sub).perm(f.minus_cell, f.axis);
    const Scalar kp = mesh.subdomain(f.plus_sub).perm(f.plus_cell, f.axis);
    const Scalar phim = mesh.subdomain(f.minus_sub).porosity(f.minus_cell);
    const Scalar phip = mesh.subdomain(f.plus_sub).porosity(f.plus_cell);

    const Scalar au = mu / beta * kernels::velocity_mass_coeff(f.measure, f.h_minus, km, f.h_plus, kp) *
                      2 / rho_sum;
    b.ru(g, 0, au * u - (pm - pp));
    b.uu(g, 0, 0, au);
    b.up(g, 0, f.minus_slab_cell, 0, -1 + u * au * (-drho_m / rho_sum));
    b.up(g, 0, f.plus_slab_cell, 0, 1 + u * au * (-drho_p / rho_sum));

    const Scalar az = kernels::velocity_mass_coeff(f.measure, f.h_minus, phim, f.h_plus, phip) *
                      2 / (m.diffusion * rho_sum);
    b.ru(g, 1, az * z - (cm - cp));
    b.uu(g, 1, 1, az);
    b.up(g, 1, f.minus_slab_cell, 1, -1);
    b.up(g, 1, f.plus_slab_cell, 1, 1);
    b.up(g, 1, f.minus_slab_cell, 0, z * az * (-drho_m / rho_sum));
    b.up(g, 1, f.plus_slab_cell, 0, z * az * (-drho_p / rho_sum));
  }

  for (const ElemRec& e : topo.elements) {
    const Scalar w = e.cell_measure;
    const Scalar phi = mesh.subdomain(e.sub).porosity(e.cell);
    const Scalar p = st.cellv(e.slab_cell, 0), c = st.cellv(e.slab_cell, 1);
    const Scalar p_prev = st.prev(e, 0), c_prev = st.prev(e, 1);
    const Scalar rho = models::density(p, m.fluid), rho_prev = models::density(p_prev, m.fluid);
    const Scalar drho = models::density_dp(p, m.fluid);

    Scalar r0 = phi * kernels::accumulation_row(rho, rho_prev, w);
    Scalar r1 = phi * kernels::accumulation_row(rho * c, rho_prev * c_prev, w);
    b.pp(e.slab_cell, 0, e.slab_cell, 0, phi * drho * w);
    b.pp(e.slab_cell, 1, e.slab_cell, 0, phi * drho * c * w);
    b.pp(e.slab_cell, 1, e.slab_cell, 1, phi * rho * w);
    if (e.prev_slab_cell >= 0) {
      const Scalar drho_prev = models::density_dp(p_prev, m.fluid);
      b.pp(e.slab_cell, 0, e.prev_slab_cell, 0, -phi * drho_prev * w);
      b.pp(e.slab_cell, 1, e.prev_slab_cell, 0, -phi * drho_prev * c_prev * w);
      b.pp(e.slab_cell, 1, e.prev_slab_cell, 1, -phi * rho_prev * w);
    }

    for (int t = e.flux_begin; t < e.flux_end; ++t) {
      const FluxTerm& ft = topo.flux_terms[t];
      const FluxRec& fr = topo.fluxes[ft.flux];
      const Scalar u = st.flux(ft.flux, 0, 2);
      const Scalar z = st.flux(ft.flux, 1, 2);
      r0 += ft.sign * u;
      b.pu(e.slab_cell, 0, ft.flux, 0, ft.sign);
      // advected concentration, upwinded by the Darcy flux sign
      const bool up_minus = upwind[ft.flux * 2 + 0] != 0;
      Scalar c_face;
      int c_cell = -1;
      if (up_minus) {
        if (fr.minus_slab_cell >= 0) {
          c_cell = fr.minus_slab_cell;
          c_face = st.cellv(c_cell, 1);
        } else {
          c_face = m.boundary[fr.boundary_side].concentration;
        }
      } else {
        if (fr.plus_slab_cell >= 0) {
          c_cell = fr.plus_slab_cell;
          c_face = st.cellv(c_cell, 1);
        } else {
          c_face = m.boundary[fr.boundary_side].concentration;
        }
      }
      r1 += ft.sign * (u * c_face + z);
      b.pu(e.slab_cell, 1, ft.flux, 0, ft.sign * c_face);
      b.pu(e.slab_cell, 1, ft.flux, 1, ft.sign);
      if (c_cell >= 0) b.pp(e.slab_cell, 1, c_cell, 1, ft.sign * u);
    }

    const std::int64_t key = static_cast<std::int64_t>(e.sub) * (1LL << 32) + e.cell;
    if (auto it = wells.find(key); it != wells.end()) {
      for (int wi : it->second) {
        const auto terms = models::well_contribution(m.wells[wi], m, well_ctx(mesh, e), p, c);
        r0 -= terms.q[0] * e.dt;
        r1 -= terms.q[1] * e.dt;
        for (int eq = 0; eq < 2; ++eq)
          for (int un = 0; un < 2; ++un)
            if (terms.dq[eq][un] != 0)
              b.pp(e.slab_cell, eq, e.slab_cell, un, -terms.dq[eq][un] * e.dt);
      }
    }
    b.rp(e.slab_cell, 0, r0);
    b.rp(e.slab_cell, 1, r1);
    b.sys.row_scale[e.slab_cell * 2 + 0] = phi * w;
    b.sys.row_scale[e.slab_cell * 2 + 1] = phi * w;
  }
}

void assemble_twophase(const SpaceTimeMesh& mesh, const SlabTopology& topo, const ModelProblem& m,
                       const SlabContext& ctx, const StateView& st, const UpwindFlags& upwind,
                       Builder& b) {
  (void)ctx;  // no boundary data: the model is restricted to no-flow boundaries
  const Scalar beta = m.darcy_constant();
  const WellIndexMap wells = index_wells(m, mesh);
  constexpr int kAuxO = 0, kAuxW = 1, kDarO = 2, kDarW = 3;

  for (const FluxRec& f : topo.fluxes) {
    if (f.boundary_side >= 0)
      throw AssemblyError("two-phase model supports no-flow outer boundaries only");
    const int g = f.slab_flux;
    const Scalar po_m = st.cellv(f.minus_slab_cell, 0), po_p = st.cellv(f.plus_slab_cell, 0);
    const Scalar sw_m = st.cellv(f.minus_slab_cell, 1), sw_p = st.cellv(f.plus_slab_cell, 1);
    const auto pc_m = models::van_genuchten_pc(sw_m, m.capillary);
    const auto pc_p = models::van_genuchten_pc(sw_p, m.capillary);
    const Scalar km = mesh.subdomain(f.minus_sub).perm(f.minus_cell, f.axis);
    const Scalar kp = mesh.subdomain(f.plus_sub).perm(f.plus_cell, f.axis);
    const Scalar a_k =
        kernels::velocity_mass_coeff(f.measure, f.h_minus, km, f.h_plus, kp) / beta;
    const Scalar t_e = (f.h_minus + f.h_plus) / (2 * f.measure);

    const Scalar ut_o = st.flux(g, kAuxO, 4), ut_w = st.flux(g, kAuxW, 4);
    const Scalar u_o = st.flux(g, kDarO, 4), u_w = st.flux(g, kDarW, 4);

    // auxiliary Darcy rows (no mobility inversion)
    b.ru(g, kAuxO, a_k * ut_o - (po_m - po_p));
    b.uu(g, kAuxO, kAuxO, a_k);
    b.up(g, kAuxO, f.minus_slab_cell, 0, -1);
    b.up(g, kAuxO, f.plus_slab_cell, 0, 1);

    b.ru(g, kAuxW, a_k * ut_w - (po_m - po_p) + (pc_m.pc - pc_p.pc));
    b.uu(g, kAuxW, kAuxW, a_k);
    b.up(g, kAuxW, f.minus_slab_cell, 0, -1);
    b.up(g, kAuxW, f.plus_slab_cell, 0, 1);
    b.up(g, kAuxW, f.minus_slab_cell, 1, pc_m.dpc_dsw);
    b.up(g, kAuxW, f.plus_slab_cell, 1, -pc_p.dpc_dsw);

    // expansion rows u_alpha = lambda* ut_alpha under the same quadrature
    const Scalar rho_om = models::density(po_m, m.oil), rho_op = models::density(po_p, m.oil);
    const Scalar drho_om = models::density_dp(po_m, m.oil),
                 drho_op = models::density_dp(po_p, m.oil);
    const Scalar pw_m = po_m - pc_m.pc, pw_p = po_p - pc_p.pc;
    const Scalar rho_wm = models::density(pw_m, m.water), rho_wp = models::density(pw_p, m.water);
    const Scalar drho_wm = models::density_dp(pw_m, m.water),
                 drho_wp = models::density_dp(pw_p, m.water);
    const auto kr_m = models::brooks_corey(sw_m, m.relperm);
    const auto kr_p = models::brooks_corey(sw_p, m.relperm);

    // oil: upwind side from the oil auxiliary flux sign
    {
      const bool up_minus = upwind[g * 4 + kAuxO] != 0;
      const Scalar kro = up_minus ? kr_m.kro : kr_p.kro;
      const Scalar dkro = up_minus ? kr_m.dkro_dsw : kr_p.dkro_dsw;
      const int s_cell = up_minus ? f.minus_slab_cell : f.plus_slab_cell;
      const Scalar lam = (rho_om + rho_op) * kro / (2 * m.oil.viscosity);
      b.ru(g, kDarO, t_e * (u_o - lam * ut_o));
      b.uu(g, kDarO, kDarO, t_e);
      b.uu(g, kDarO, kAuxO, -t_e * lam);
      const Scalar dfac = -t_e * ut_o / (2 * m.oil.viscosity);
      b.up(g, kDarO, f.minus_slab_cell, 0, dfac * drho_om * kro);
      b.up(g, kDarO, f.plus_slab_cell, 0, dfac * drho_op * kro);
      b.up(g, kDarO, s_cell, 1, dfac * (rho_om + rho_op) * dkro);
    }
    // water: rho_w depends on p_o and s_w through the capillary shift
    {
      const bool up_minus = upwind[g * 4 + kAuxW] != 0;
      const Scalar krw = up_minus ? kr_m.krw : kr_p.krw;
      const Scalar dkrw = up_minus ? kr_m.dkrw_dsw : kr_p.dkrw_dsw;
      const int s_cell = up_minus ? f.minus_slab_cell : f.plus_slab_cell;
      const Scalar lam = (rho_wm + rho_wp) * krw / (2 * m.water.viscosity);
      b.ru(g, kDarW, t_e * (u_w - lam * ut_w));
      b.uu(g, kDarW, kDarW, t_e);
      b.uu(g, kDarW, kAuxW, -t_e * lam);
      const Scalar dfac = -t_e * ut_w / (2 * m.water.viscosity);
      b.up(g, kDarW, f.minus_slab_cell, 0, dfac * drho_wm * krw);
      b.up(g, kDarW, f.plus_slab_cell, 0, dfac * drho_wp * krw);
      b.up(g, kDarW, f.minus_slab_cell, 1, dfac * drho_wm * (-pc_m.dpc_dsw) * krw);
      b.up(g, kDarW, f.plus_slab_cell, 1, dfac * drho_wp * (-pc_p.dpc_dsw) * krw);
      b.up(g, kDarW, s_cell, 1, dfac * (rho_wm + rho_wp) * dkrw);
    }
  }

  for (const ElemRec& e : topo.elements) {
    const Scalar w = e.cell_measure;
    const Scalar phi = mesh.subdomain(e.sub).porosity(e.cell);
    const Scalar po = st.cellv(e.slab_cell, 0), sw = st.cellv(e.slab_cell, 1);
    const Scalar po_prev = st.prev(e, 0), sw_prev = st.prev(e, 1);

    const auto pc = models::van_genuchten_pc(sw, m.capillary);
    const auto pc_prev = models::van_genuchten_pc(sw_prev, m.capillary);
    const Scalar rho_o = models::density(po, m.oil);
    const Scalar rho_w = models::density(po - pc.pc, m.water);
    const Scalar rho_o_prev = models::density(po_prev, m.oil);
    const Scalar rho_w_prev = models::density(po_prev - pc_prev.pc, m.water);
    const Scalar drho_o = models::density_dp(po, m.oil);
    const Scalar drho_w = models::density_dp(po - pc.pc, m.water);

    const Scalar mass_w = rho_w * sw, mass_w_prev = rho_w_prev * sw_prev;
    const Scalar mass_t = mass_w + rho_o * (1 - sw);
    const Scalar mass_t_prev = mass_w_prev + rho_o_prev * (1 - sw_prev);

    Scalar r0 = phi * kernels::accumulation_row(mass_t, mass_t_prev, w);
    Scalar r1 = phi * kernels::accumulation_row(mass_w, mass_w_prev, w);

    const Scalar dmw_dpo = drho_w * sw;
    const Scalar dmw_dsw = rho_w - drho_w * pc.dpc_dsw * sw;
    b.pp(e.slab_cell, 0, e.slab_cell, 0, phi * w * (dmw_dpo + drho_o * (1 - sw)));
    b.pp(e.slab_cell, 0, e.slab_cell, 1, phi * w * (dmw_dsw - rho_o));
    b.pp(e.slab_cell, 1, e.slab_cell, 0, phi * w * dmw_dpo);
    b.pp(e.slab_cell, 1, e.slab_cell, 1, phi * w * dmw_dsw);
    if (e.prev_slab_cell >= 0) {
      const Scalar drho_o_prev = models::density_dp(po_prev, m.oil);
      const Scalar drho_w_prev = models::density_dp(po_prev - pc_prev.pc, m.water);
      const Scalar dmwp_dpo = drho_w_prev * sw_prev;
      const Scalar dmwp_dsw = rho_w_prev - drho_w_prev * pc_prev.dpc_dsw * sw_prev;
      b.pp(e.slab_cell, 0, e.prev_slab_cell, 0,
           -phi * w * (dmwp_dpo + drho_o_prev * (1 - sw_prev)));
      b.pp(e.slab_cell, 0, e.prev_slab_cell, 1, -phi * w * (dmwp_dsw - rho_o_prev));
      b.pp(e.slab_cell, 1, e.prev_slab_cell, 0, -phi * w * dmwp_dpo);
      b.pp(e.slab_cell, 1, e.prev_slab_cell, 1, -phi * w * dmwp_dsw);
    }

    for (int t = e.flux_begin; t < e.flux_end; ++t) {
      const FluxTerm& ft = topo.flux_terms[t];
      const Scalar u_o = st.flux(ft.flux, 2, 4);
      const Scalar u_w = st.flux(ft.flux, 3, 4);
      r0 += ft.sign * (u_o + u_w);
      r1 += ft.sign * u_w;
      b.pu(e.slab_cell, 0, ft.flux, 2, ft.sign);
      b.pu(e.slab_cell, 0, ft.flux, 3, ft.sign);
      b.pu(e.slab_cell, 1, ft.flux, 3, ft.sign);
    }

    const std::int64_t key = static_cast<std::int64_t>(e.sub) * (1LL << 32) + e.cell;
    if (auto it = wells.find(key); it != wells.end()) {
      for (int wi : it->second) {
        const auto terms = models::well_contribution(m.wells[wi], m, well_ctx(mesh, e), po, sw);
        r0 -= terms.q[0] * e.dt;
        r1 -= terms.q[1] * e.dt;
        for (int eq = 0; eq < 2; ++eq)
          for (int un = 0; un < 2; ++un)
            if (terms.dq[eq][un] != 0)
              b.pp(e.slab_cell, eq, e.slab_cell, un, -terms.dq[eq][un] * e.dt);
      }
    }
    b.rp(e.slab_cell, 0, r0);
    b.rp(e.slab_cell, 1, r1);
    b.sys.row_scale[e.slab_cell * 2 + 0] = phi * w;
    b.sys.row_scale[e.slab_cell * 2 + 1] = phi * w;
  }
}

void check_finite(const SlabTopology& topo, const solver::SlabSystem& sys, int nf, int nfam) {
  for (int i = 0; i < sys.r_p.size(); ++i)
    if (!std::isfinite(sys.r_p[i])) {
      const ElemRec& e = topo.elements[i / nf];
      throw AssemblyError("non-finite residual on element (subdomain " + std::to_string(e.sub) +
                          ", cell " + std::to_string(e.cell) + ", slab level " +
                          std::to_string(e.level_in_slab) + ")");
    }
  for (int i = 0; i < sys.r_u.size(); ++i)
    if (!std::isfinite(sys.r_u[i])) {
      const FluxRec& f = topo.fluxes[i / nfam];
      throw AssemblyError("non-finite residual on face of axis " + std::to_string(f.axis) +
                          " (subdomain " + std::to_string(f.minus_sub >= 0 ? f.minus_sub : f.plus_sub) +
                          ")");
    }
}

}  // namespace

solver::SlabSystem assemble(const SpaceTimeMesh& mesh, const SlabTopology& topo,
                            const ModelProblem& model, const SlabContext& ctx,
                            const SlabIterate& x, const UpwindFlags& upwind) {
  const int nf = model.n_cell_fields();
  const int nfam = model.n_flux_families();
  Builder b(topo.n_cell_geo, topo.n_flux_geo, nf, nfam);
  StateView st{topo, ctx, x, nf};
  switch (model.kind) {
    case ModelKind::LinearParabolic: assemble_linear(mesh, topo, model, ctx, st, b); break;
    case ModelKind::SinglePhaseTracer: assemble_tracer(mesh, topo, model, ctx, st, upwind, b); break;
    case ModelKind::TwoPhase: assemble_twophase(mesh, topo, model, ctx, st, upwind, b); break;
  }
  solver::SlabSystem sys = b.finish();
  check_finite(topo, sys, nf, nfam);
  return sys;
}

StateProbe::StateProbe(const SpaceTimeMesh& mesh, const SlabTopology& topo,
                       const ModelProblem& model, const SlabContext& ctx, const SlabIterate& x)
    : mesh_(mesh), topo_(topo), model_(model), ctx_(ctx), x_(x),
      wells_(index_wells(model, mesh)) {}

std::array<Scalar, 2> StateProbe::accumulation(const ElemRec& e) const {
  const int nf = model_.n_cell_fields();
  StateView st{topo_, ctx_, x_, nf};
  const Scalar w = e.cell_measure;
  const Scalar phi = mesh_.subdomain(e.sub).porosity(e.cell);
  std::array<Scalar, 2> out{};
  if (model_.kind == ModelKind::LinearParabolic) {
    out[0] = kernels::accumulation_row(st.cellv(e.slab_cell, 0), st.prev(e, 0), w);
  } else if (model_.kind == ModelKind::SinglePhaseTracer) {
    const Scalar p = st.cellv(e.slab_cell, 0), c = st.cellv(e.slab_cell, 1);
    const Scalar pp = st.prev(e, 0), cp = st.prev(e, 1);
    const Scalar rho = models::density(p, model_.fluid);
    const Scalar rho_prev = models::density(pp, model_.fluid);
    out[0] = phi * kernels::accumulation_row(rho, rho_prev, w);
    out[1] = phi * kernels::accumulation_row(rho * c, rho_prev * cp, w);
  } else {
    const Scalar po = st.cellv(e.slab_cell, 0), sw = st.cellv(e.slab_cell, 1);
    const Scalar pop = st.prev(e, 0), swp = st.prev(e, 1);
    const Scalar pc = models::van_genuchten_pc(sw, model_.capillary).pc;
    const Scalar pcp = models::van_genuchten_pc(swp, model_.capillary).pc;
    const Scalar mw = models::density(po - pc, model_.water) * sw;
    const Scalar mwp = models::density(pop - pcp, model_.water) * swp;
    const Scalar mt = mw + models::density(po, model_.oil) * (1 - sw);
    const Scalar mtp = mwp + models::density(pop, model_.oil) * (1 - swp);
    out[0] = phi * kernels::accumulation_row(mt, mtp, w);
    out[1] = phi * kernels::accumulation_row(mw, mwp, w);
  }
  return out;
}

std::array<Scalar, 2> StateProbe::well_rates(const ElemRec& e) const {
  std::array<Scalar, 2> out{};
  const std::int64_t key = static_cast<std::int64_t>(e.sub) * (1LL << 32) + e.cell;
  const auto it = wells_.find(key);
  if (it == wells_.end()) return out;
  const int nf = model_.n_cell_fields();
  StateView st{topo_, ctx_, x_, nf};
  const Scalar p = st.cellv(e.slab_cell, 0);
  const Scalar second = nf > 1 ? st.cellv(e.slab_cell, 1) : 0;
  for (int wi : it->second) {
    const auto terms = models::well_contribution(model_.wells[wi], model_, well_ctx(mesh_, e), p, second);
    out[0] += terms.q[0];
    out[1] += terms.q[1];
  }
  return out;
}

std::array<Scalar, 2> StateProbe::boundary_outflow(const FluxRec& f, const UpwindFlags& upwind) const {
  const int nf = model_.n_cell_fields();
  const int nfam = model_.n_flux_families();
  StateView st{topo_, ctx_, x_, nf};
  std::array<Scalar, 2> out{};
  if (model_.kind == ModelKind::LinearParabolic) {
    out[0] = st.flux(f.slab_flux, 0, nfam);
  } else if (model_.kind == ModelKind::SinglePhaseTracer) {
    const Scalar u = st.flux(f.slab_flux, 0, nfam);
    const Scalar z = st.flux(f.slab_flux, 1, nfam);
    const bool up_minus = upwind[f.slab_flux * nfam + 0] != 0;
    Scalar c_face;
    if (up_minus)
      c_face = f.minus_slab_cell >= 0 ? st.cellv(f.minus_slab_cell, 1)
                                      : model_.boundary[f.boundary_side].concentration;
    else
      c_face = f.plus_slab_cell >= 0 ? st.cellv(f.plus_slab_cell, 1)
                                     : model_.boundary[f.boundary_side].concentration;
    out[0] = u;
    out[1] = u * c_face + z;
  } else {
    out[0] = st.flux(f.slab_flux, 2, nfam) + st.flux(f.slab_flux, 3, nfam);
    out[1] = st.flux(f.slab_flux, 3, nfam);
  }
  return out;
}

}  // namespace stevmfe::assembly
