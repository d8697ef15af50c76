#include "stevmfe/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stevmfe::mesh {

namespace {

bool near(Scalar a, Scalar b, Scalar scale) {
  return std::abs(a - b) <= 1e-9 * std::max({std::abs(a), std::abs(b), scale});
}

/// Nearest-integer ratio of a/b, or -1 when not an integer within tolerance.
int integer_ratio(Scalar a, Scalar b) {
  const Scalar r = a / b;
  const int n = static_cast<int>(std::lround(r));
  if (n < 1 || std::abs(r - n) > 1e-9 * std::max(1.0, r)) return -1;
  return n;
}

int grid_index(Scalar x, Scalar origin, Scalar h, const char* what) {
  const Scalar r = (x - origin) / h;
  const int n = static_cast<int>(std::lround(r));
  if (std::abs(r - n) > 1e-9 * std::max(1.0, std::abs(r)))
    throw MeshError(std::string("interface boundary does not align with the ") + what + " grid");
  return n;
}

}  // namespace

Subdomain::Subdomain(const SubdomainSpec& spec, int dim, Scalar t_end)
    : id_(spec.id), dim_(dim), origin_(spec.origin), extent_(spec.extent),
      cells_(spec.cells), dt_(spec.dt), role_(spec.role) {
  std::ostringstream tag;
  tag << "subdomain " << id_;
  if (dt_ <= 0) throw MeshError(tag.str() + ": dt must be strictly positive");
  n_cells_ = 1;
  cell_measure_ = 1;
  for (int a = 0; a < dim_; ++a) {
    if (cells_[a] <= 0) throw MeshError(tag.str() + ": cell count must be positive");
    if (extent_[a] <= 0) throw MeshError(tag.str() + ": extent must be positive");
    h_[a] = extent_[a] / cells_[a];
    n_cells_ *= cells_[a];
    cell_measure_ *= h_[a];
  }
  for (int a = dim_; a < kMaxDim; ++a) {
    h_[a] = 1;
    cells_[a] = 1;
  }
  const Scalar levels = t_end / dt_;
  n_levels_ = static_cast<int>(std::lround(levels));
  if (n_levels_ < 1 || std::abs(levels - n_levels_) > 1e-9 * levels)
    throw MeshError(tag.str() + ": dt must divide the simulated time interval");

  for (int a = 0; a < dim_; ++a) {
    perm_[a] = spec.perm[a];
    if (perm_[a].empty()) perm_[a] = {1.0};
    if (perm_[a].size() != 1 && static_cast<int>(perm_[a].size()) != n_cells_)
      throw MeshError(tag.str() + ": permeability value count must be 1 or one per cell");
    for (Scalar k : perm_[a])
      if (!(k > 0)) throw MeshError(tag.str() + ": permeability entries must be strictly positive");
  }
  poro_ = spec.porosity;
  if (poro_.empty()) poro_ = {1.0};
  if (poro_.size() != 1 && static_cast<int>(poro_.size()) != n_cells_)
    throw MeshError(tag.str() + ": porosity value count must be 1 or one per cell");
  for (Scalar p : poro_)
    if (!(p > 0 && p <= 1)) throw MeshError(tag.str() + ": porosity must lie in (0, 1]");

  // axis-major face layout: x-normal block, then y-normal block
  face_offset_[0] = 0;
  int total = 0;
  for (int a = 0; a < dim_; ++a) {
    int count = cells_[a] + 1;
    for (int b = 0; b < dim_; ++b)
      if (b != a) count *= cells_[b];
    total += count;
    face_offset_[a + 1] = total;
  }
  n_faces_ = total;
  face_area_[0] = face_area_[1] = 1;
  for (int a = 0; a < dim_; ++a)
    for (int b = 0; b < dim_; ++b)
      if (b != a) face_area_[a] *= h_[b];
}

int Subdomain::cell_index(const IndexVec& idx) const {
  return idx[0] + cells_[0] * (dim_ > 1 ? idx[1] : 0);
}

IndexVec Subdomain::cell_multi_index(int cell) const {
  IndexVec idx{};
  idx[0] = cell % cells_[0];
  if (dim_ > 1) idx[1] = cell / cells_[0];
  return idx;
}

Coord Subdomain::cell_center(int cell) const {
  const IndexVec idx = cell_multi_index(cell);
  Coord c{};
  for (int a = 0; a < dim_; ++a) c[a] = origin_[a] + (idx[a] + 0.5) * h_[a];
  return c;
}

int Subdomain::face_index(int axis, const IndexVec& pos) const {
  // pos[axis] in 0..cells[axis]; cross axes in 0..cells-1
  if (axis == 0) return face_offset_[0] + pos[0] + (cells_[0] + 1) * (dim_ > 1 ? pos[1] : 0);
  return face_offset_[1] + pos[0] + cells_[0] * pos[1];
}

std::int8_t Subdomain::face_axis(int face) const {
  for (int a = 0; a < dim_; ++a)
    if (face < face_offset_[a + 1]) return static_cast<std::int8_t>(a);
  return -1;
}

Coord Subdomain::face_center(int face) const {
  const int axis = face_axis(face);
  const int local = face - face_offset_[axis];
  IndexVec pos{};
  if (axis == 0) {
    pos[0] = local % (cells_[0] + 1);
    pos[1] = dim_ > 1 ? local / (cells_[0] + 1) : 0;
  } else {
    pos[0] = local % cells_[0];
    pos[1] = local / cells_[0];
  }
  Coord c{};
  for (int a = 0; a < dim_; ++a)
    c[a] = origin_[a] + (a == axis ? pos[a] * h_[a] : (pos[a] + 0.5) * h_[a]);
  return c;
}

InterfacePatch intersect_traces(const Subdomain& a, const Subdomain& b, int dim) {
  InterfacePatch patch;
  // locate the touching axis: one box's upper side meets the other's lower side
  int axis = -1;
  bool a_lower = false;
  for (int ax = 0; ax < dim; ++ax) {
    const Scalar scale = std::max(a.extent()[ax], b.extent()[ax]);
    if (near(a.origin()[ax] + a.extent()[ax], b.origin()[ax], scale)) {
      axis = ax;
      a_lower = true;
      break;
    }
    if (near(b.origin()[ax] + b.extent()[ax], a.origin()[ax], scale)) {
      axis = ax;
      a_lower = false;
      break;
    }
  }
  if (axis < 0) return patch;  // no shared plane -> empty

  // tangential overlap must have positive measure in every tangential axis
  Coord olo{}, ohi{};
  for (int ax = 0; ax < dim; ++ax) {
    if (ax == axis) continue;
    olo[ax] = std::max(a.origin()[ax], b.origin()[ax]);
    ohi[ax] = std::min(a.origin()[ax] + a.extent()[ax], b.origin()[ax] + b.extent()[ax]);
    if (ohi[ax] - olo[ax] <= 1e-12 * std::max(a.extent()[ax], b.extent()[ax]))
      return patch;  // zero-measure intersection
  }

  // the fine side must be weakly finer in time and every tangential axis
  int ratio_ab_t = integer_ratio(a.dt(), b.dt());   // a coarser in time by this factor
  int ratio_ba_t = integer_ratio(b.dt(), a.dt());
  if (ratio_ab_t < 0 && ratio_ba_t < 0)
    throw MeshError("non-integer time refinement ratio between subdomains " +
                    std::to_string(a.id()) + " and " + std::to_string(b.id()));
  bool a_fine = ratio_ba_t > 0;  // b.dt = l * a.dt (or equal)
  if (ratio_ab_t == 1 && ratio_ba_t == 1) {
    // equal time steps: decide by tangential refinement, tie-break on id
    a_fine = true;
    for (int ax = 0; ax < dim; ++ax) {
      if (ax == axis) continue;
      if (integer_ratio(a.h(ax), b.h(ax)) > 1) a_fine = false;
    }
    if (a_fine && a.id() > b.id()) {
      bool all_equal = true;
      for (int ax = 0; ax < dim; ++ax)
        if (ax != axis && integer_ratio(b.h(ax), a.h(ax)) != 1) all_equal = false;
      if (all_equal) a_fine = false;
    }
  }
  const Subdomain& fine = a_fine ? a : b;
  const Subdomain& coarse = a_fine ? b : a;

  patch.fine_sub = fine.id();
  patch.coarse_sub = coarse.id();
  patch.axis = axis;
  patch.fine_is_lower = (a_fine == a_lower);
  patch.plane = a_lower ? a.origin()[axis] + a.extent()[axis] : a.origin()[axis];
  patch.time_ratio = integer_ratio(coarse.dt(), fine.dt());
  if (patch.time_ratio < 0)
    throw MeshError("non-integer time refinement ratio between subdomains " +
                    std::to_string(a.id()) + " and " + std::to_string(b.id()));

  patch.space_ratio = {1, 1};
  for (int ax = 0; ax < dim; ++ax) {
    if (ax == axis) continue;
    patch.space_ratio[ax] = integer_ratio(coarse.h(ax), fine.h(ax));
    if (patch.space_ratio[ax] < 0)
      throw MeshError("non-integer spatial refinement ratio between subdomains " +
                      std::to_string(a.id()) + " and " + std::to_string(b.id()) +
                      " along axis " + std::to_string(ax));
  }

  // normal-axis face positions
  const int fine_pos = patch.fine_is_lower ? fine.cells()[axis] : 0;
  const int coarse_pos = patch.fine_is_lower ? 0 : coarse.cells()[axis];

  // tangential index ranges; the overlap must land on grid lines of each side
  IndexVec f_lo{}, f_n{}, c_lo{};
  patch.intersection_area = 1;
  for (int ax = 0; ax < dim; ++ax) {
    if (ax == axis) continue;
    f_lo[ax] = grid_index(olo[ax], fine.origin()[ax], fine.h(ax), "fine");
    const int f_hi = grid_index(ohi[ax], fine.origin()[ax], fine.h(ax), "fine");
    c_lo[ax] = grid_index(olo[ax], coarse.origin()[ax], coarse.h(ax), "coarse");
    grid_index(ohi[ax], coarse.origin()[ax], coarse.h(ax), "coarse");
    f_n[ax] = f_hi - f_lo[ax];
    patch.intersection_area *= ohi[ax] - olo[ax];
  }

  const int tan = (dim == 2) ? (axis == 0 ? 1 : 0) : -1;
  const int count = (dim == 2) ? f_n[tan] : 1;
  patch.spatial.reserve(count);
  for (int k = 0; k < count; ++k) {
    InterfaceSpatialSubface sf;
    IndexVec fpos{}, fcell{}, cpos{}, ccell{};
    fpos[axis] = fine_pos;
    cpos[axis] = coarse_pos;
    if (dim == 2) {
      fpos[tan] = f_lo[tan] + k;
      cpos[tan] = c_lo[tan] + k / patch.space_ratio[tan];
    }
    fcell = fpos;
    fcell[axis] = patch.fine_is_lower ? fine.cells()[axis] - 1 : 0;
    ccell = cpos;
    ccell[axis] = patch.fine_is_lower ? 0 : coarse.cells()[axis] - 1;
    sf.fine_face = fine.face_index(axis, fpos);
    sf.fine_cell = fine.cell_index(fcell);
    sf.coarse_face = coarse.face_index(axis, cpos);
    sf.coarse_cell = coarse.cell_index(ccell);
    sf.area = fine.face_area(axis);
    patch.spatial.push_back(sf);
  }
  return patch;
}

SpaceTimeMesh SpaceTimeMesh::build(const MeshSpec& spec) {
  SpaceTimeMesh m;
  m.dim_ = spec.dim;
  if (m.dim_ < 1 || m.dim_ > kMaxDim)
    throw MeshError("spatial dimension must be 1 or 2");
  m.lo_ = spec.domain_lo;
  m.hi_ = spec.domain_hi;
  m.t_end_ = spec.t_end;
  if (!(m.t_end_ > 0)) throw MeshError("t_end must be strictly positive");
  for (int a = 0; a < m.dim_; ++a)
    if (!(m.hi_[a] > m.lo_[a])) throw MeshError("domain extent must be positive");
  if (spec.subdomains.empty()) throw MeshError("at least one subdomain is required");

  m.subs_.reserve(spec.subdomains.size());
  for (const auto& s : spec.subdomains) m.subs_.emplace_back(s, m.dim_, m.t_end_);

  // matching-slab structure: the slab length is the coarsest dt; every
  // subdomain's dt must divide it and slabs must tile (0, t_end]
  m.slab_dt_ = 0;
  for (const auto& s : m.subs_) m.slab_dt_ = std::max(m.slab_dt_, s.dt());
  for (const auto& s : m.subs_)
    if (integer_ratio(m.slab_dt_, s.dt()) < 0)
      throw MeshError("subdomain " + std::to_string(s.id()) +
                      ": dt does not divide the matching-slab length");
  const Scalar slabs = m.t_end_ / m.slab_dt_;
  m.n_slabs_ = static_cast<int>(std::lround(slabs));
  if (std::abs(slabs - m.n_slabs_) > 1e-9 * slabs)
    throw MeshError("matching-slab length does not divide t_end");

  // disjointness and coverage of the spatial domain
  Scalar dom_vol = 1;
  for (int a = 0; a < m.dim_; ++a) dom_vol *= m.hi_[a] - m.lo_[a];
  Scalar sum_vol = 0;
  for (const auto& s : m.subs_) {
    sum_vol += s.volume();
    for (int a = 0; a < m.dim_; ++a) {
      const Scalar scale = m.hi_[a] - m.lo_[a];
      if (s.origin()[a] < m.lo_[a] - 1e-9 * scale ||
          s.origin()[a] + s.extent()[a] > m.hi_[a] + 1e-9 * scale)
        throw MeshError("subdomain " + std::to_string(s.id()) + " extends outside the domain");
    }
  }
  for (size_t i = 0; i < m.subs_.size(); ++i)
    for (size_t j = i + 1; j < m.subs_.size(); ++j) {
      Scalar overlap = 1;
      for (int a = 0; a < m.dim_; ++a) {
        const Scalar lo = std::max(m.subs_[i].origin()[a], m.subs_[j].origin()[a]);
        const Scalar hi = std::min(m.subs_[i].origin()[a] + m.subs_[i].extent()[a],
                                   m.subs_[j].origin()[a] + m.subs_[j].extent()[a]);
        overlap *= std::max<Scalar>(0, hi - lo);
      }
      if (overlap > kGeomRelTol * dom_vol)
        throw MeshError("subdomains " + std::to_string(m.subs_[i].id()) + " and " +
                        std::to_string(m.subs_[j].id()) + " overlap");
    }
  if (std::abs(sum_vol - dom_vol) > kGeomRelTol * dom_vol)
    throw MeshError(sum_vol < dom_vol ? "gap detected: subdomains do not cover the domain"
                                      : "subdomain volumes exceed the domain volume");

  for (size_t i = 0; i < m.subs_.size(); ++i)
    for (size_t j = i + 1; j < m.subs_.size(); ++j) {
      InterfacePatch p = intersect_traces(m.subs_[i], m.subs_[j], m.dim_);
      if (!p.spatial.empty()) m.patches_.push_back(std::move(p));
    }

  // classify spatial faces of every subdomain
  m.faces_.resize(m.subs_.size());
  for (size_t si = 0; si < m.subs_.size(); ++si) {
    const Subdomain& s = m.subs_[si];
    auto& table = m.faces_[si];
    table.resize(s.face_count());
    for (int axis = 0; axis < m.dim_; ++axis) {
      const int tan = (m.dim_ == 2) ? (axis == 0 ? 1 : 0) : -1;
      const int npos = s.cells()[axis] + 1;
      const int ncross = (m.dim_ == 2) ? s.cells()[tan] : 1;
      for (int cross = 0; cross < ncross; ++cross) {
        for (int pos = 0; pos < npos; ++pos) {
          IndexVec fpos{};
          fpos[axis] = pos;
          if (tan >= 0) fpos[tan] = cross;
          const int fid = s.face_index(axis, fpos);
          SpatialFace& f = table[fid];
          f.axis = static_cast<std::int8_t>(axis);
          IndexVec cidx = fpos;
          if (pos > 0) {
            cidx[axis] = pos - 1;
            f.minus_cell = s.cell_index(cidx);
          }
          if (pos < s.cells()[axis]) {
            cidx[axis] = pos;
            f.plus_cell = s.cell_index(cidx);
          }
          if (pos > 0 && pos < s.cells()[axis]) {
            f.kind = FaceKind::Interior;
            continue;
          }
          const Scalar coord = s.origin()[axis] + pos * s.h(axis);
          const Scalar scale = m.hi_[axis] - m.lo_[axis];
          if (near(coord, m.lo_[axis], scale) || near(coord, m.hi_[axis], scale)) {
            f.kind = FaceKind::Boundary;
            continue;
          }
          f.kind = FaceKind::Interior;  // provisional; must be claimed by a patch below
          f.patch = -2;
        }
      }
    }
  }
  for (size_t pi = 0; pi < m.patches_.size(); ++pi) {
    const InterfacePatch& p = m.patches_[pi];
    const int fs = p.fine_sub, cs = p.coarse_sub;
    for (const auto& sf : p.spatial) {
      m.faces_[fs][sf.fine_face].kind = FaceKind::InterfaceOwned;
      m.faces_[fs][sf.fine_face].patch = static_cast<std::int16_t>(pi);
      m.faces_[cs][sf.coarse_face].kind = FaceKind::InterfaceCovered;
      m.faces_[cs][sf.coarse_face].patch = static_cast<std::int16_t>(pi);
    }
  }
  for (size_t si = 0; si < m.subs_.size(); ++si)
    for (int fid = 0; fid < m.subs_[si].face_count(); ++fid)
      if (m.faces_[si][fid].patch == -2)
        throw MeshError("gap detected: subdomain " + std::to_string(m.subs_[si].id()) +
                        " has an interior-plane boundary face not covered by any interface");

  return m;
}

Element SpaceTimeMesh::element(int sub, int level, int cell) const {
  const Subdomain& s = subs_[sub];
  Element e;
  e.sub = sub;
  e.level = level;
  e.cell = cell;
  e.idx = s.cell_multi_index(cell);
  e.cell_measure = s.cell_measure();
  e.t_lo = level * s.dt();
  e.t_hi = (level + 1) * s.dt();
  return e;
}

int SpaceTimeMesh::levels_per_slab(int sub) const {
  return static_cast<int>(std::lround(slab_dt_ / subs_[sub].dt()));
}

std::int64_t SpaceTimeMesh::element_count() const {
  std::int64_t n = 0;
  for (const auto& s : subs_) n += static_cast<std::int64_t>(s.cell_count()) * s.n_levels();
  return n;
}

std::vector<SubFaceView> SpaceTimeMesh::subfaces(int p) const {
  const InterfacePatch& patch = patches_[p];
  const Subdomain& fine = subs_[patch.fine_sub];
  std::vector<SubFaceView> out;
  out.reserve(patch.spatial.size() * fine.n_levels());
  for (int lvl = 0; lvl < fine.n_levels(); ++lvl) {
    const int clvl = lvl / patch.time_ratio;
    for (const auto& sf : patch.spatial) {
      SubFaceView v;
      v.fine_elem = element(patch.fine_sub, lvl, sf.fine_cell);
      v.coarse_elem = element(patch.coarse_sub, clvl, sf.coarse_cell);
      v.measure = sf.area * fine.dt();
      out.push_back(v);
    }
  }
  return out;
}

Scalar SpaceTimeMesh::total_spacetime_measure() const {
  Scalar sum = 0;
  for (const auto& s : subs_)
    sum += s.volume() * s.dt() * s.n_levels();
  return sum;
}

Scalar SpaceTimeMesh::domain_spacetime_measure() const {
  Scalar v = 1;
  for (int a = 0; a < dim_; ++a) v *= hi_[a] - lo_[a];
  return v * t_end_;
}

std::vector<int> SpaceTimeMesh::matching_time_ratios() const {
  std::vector<int> ratios;
  ratios.reserve(patches_.size());
  for (const auto& p : patches_) {
    const Subdomain& fine = subs_[p.fine_sub];
    const Subdomain& coarse = subs_[p.coarse_sub];
    const int l = integer_ratio(coarse.dt(), fine.dt());
    if (l < 0)
      throw MeshError("non-integer time ratio on interface between subdomains " +
                      std::to_string(fine.id()) + " and " + std::to_string(coarse.id()));
    // both step sequences must land exactly on every slab boundary
    for (const Subdomain* s : {&fine, &coarse}) {
      const Scalar per_slab = slab_dt_ / s->dt();
      if (std::abs(per_slab - std::lround(per_slab)) > 1e-9 * per_slab)
        throw MeshError("subdomain " + std::to_string(s->id()) +
                        " time grid misses a matching-slab boundary");
    }
    ratios.push_back(l);
  }
  return ratios;
}

}  // namespace stevmfe::mesh
