#pragma once

#include <string>
#include <vector>

#include "stevmfe/common.hpp"

namespace stevmfe::mesh {

/// Input description of one axis-aligned space-time subdomain: a spatial box
/// with a uniform structured grid and its own uniform time-step size. The
/// subdomain spans the whole simulated time interval.
struct SubdomainSpec {
  int id = -1;
  Coord origin{};        ///< lower corner of the spatial box
  Coord extent{};        ///< box side lengths
  IndexVec cells{};      ///< cell counts per spatial axis
  Scalar dt = 0;         ///< time-step size
  /// Per-axis diagonal permeability, either one value (uniform) or one per
  /// cell in lexicographic order (x fastest).
  std::array<std::vector<Scalar>, kMaxDim> perm{};
  std::vector<Scalar> porosity{};  ///< one value or one per cell
  std::string role = "coarse";     ///< "coarse" or "fine"; used for error reporting
};

struct MeshSpec {
  int dim = 2;
  Coord domain_lo{};
  Coord domain_hi{};
  Scalar t_end = 0;
  std::vector<SubdomainSpec> subdomains;
};

enum class FaceKind : std::uint8_t {
  Interior,           ///< between two cells of the same subdomain
  Boundary,           ///< on the outer domain boundary
  InterfaceOwned,     ///< fine side of an interface; carries the shared flux DOFs
  InterfaceCovered,   ///< coarse side of an interface; covered by fine sub-faces
};

/// One spatial face position of a subdomain grid. Faces are replicated over
/// the subdomain's time levels; everything here is level-independent.
struct SpatialFace {
  FaceKind kind = FaceKind::Interior;
  std::int8_t axis = 0;
  std::int32_t minus_cell = -1;  ///< adjacent cell on the lower-coordinate side
  std::int32_t plus_cell = -1;   ///< adjacent cell on the upper-coordinate side
  std::int16_t patch = -1;       ///< interface patch id for interface kinds
};

/// A space-time element view: one grid cell over one time level.
struct Element {
  int sub = 0;
  int level = 0;
  int cell = 0;
  IndexVec idx{};
  Scalar cell_measure = 0;  ///< spatial measure |cell|
  Scalar t_lo = 0, t_hi = 0;
  Scalar spacetime_measure() const { return cell_measure * (t_hi - t_lo); }
};

class Subdomain {
 public:
  explicit Subdomain(const SubdomainSpec& spec, int dim, Scalar t_end);

  int id() const { return id_; }
  int dim() const { return dim_; }
  const Coord& origin() const { return origin_; }
  const Coord& extent() const { return extent_; }
  const IndexVec& cells() const { return cells_; }
  Scalar h(int axis) const { return h_[axis]; }
  Scalar dt() const { return dt_; }
  int n_levels() const { return n_levels_; }
  const std::string& role() const { return role_; }

  int cell_count() const { return n_cells_; }
  Scalar cell_measure() const { return cell_measure_; }
  Scalar volume() const { return cell_measure_ * n_cells_; }

  int cell_index(const IndexVec& idx) const;
  IndexVec cell_multi_index(int cell) const;
  Coord cell_center(int cell) const;

  Scalar perm(int cell, int axis) const {
    return perm_[axis].size() == 1 ? perm_[axis][0] : perm_[axis][cell];
  }
  Scalar porosity(int cell) const {
    return poro_.size() == 1 ? poro_[0] : poro_[cell];
  }

  /// Spatial faces are enumerated axis-major: all x-normal faces (x fastest
  /// lexicographic), then y-normal faces.
  int face_count() const { return n_faces_; }
  int face_offset(int axis) const { return face_offset_[axis]; }
  /// Face id for position i along `axis` (0..cells[axis]) and cross index.
  int face_index(int axis, const IndexVec& pos) const;
  std::int8_t face_axis(int face) const;
  /// Spatial area of a face normal to `axis` (product of the other h's).
  Scalar face_area(int axis) const { return face_area_[axis]; }
  Coord face_center(int face) const;

 private:
  int id_, dim_;
  Coord origin_{}, extent_{}, h_{};
  IndexVec cells_{};
  Scalar dt_;
  int n_levels_;
  int n_cells_;
  Scalar cell_measure_;
  int n_faces_;
  std::array<int, kMaxDim + 1> face_offset_{};
  Coord face_area_{};
  std::array<std::vector<Scalar>, kMaxDim> perm_;
  std::vector<Scalar> poro_;
  std::string role_;
};

/// One fine-side face position within a trace intersection, together with the
/// coarse cell its extension reaches into. Sub-face instances are this
/// spatial record replicated over the fine subdomain's time levels.
struct InterfaceSpatialSubface {
  int fine_face = -1;    ///< spatial face id within the fine subdomain
  int fine_cell = -1;    ///< adjacent fine cell
  int coarse_face = -1;  ///< spatial face id within the coarse subdomain
  int coarse_cell = -1;  ///< coarse cell containing the sub-face footprint
  Scalar area = 0;       ///< spatial face area
};

/// Materialized space-time sub-face (used by tests and invariant checks).
struct SubFaceView {
  Element fine_elem;
  Element coarse_elem;
  Scalar measure = 0;  ///< area x fine time interval
};

/// The intersection of two subdomain boundary traces, partitioned by the
/// fine side's tangential grid and time levels. One flux DOF lives on each
/// sub-face and is shared by both sides.
struct InterfacePatch {
  int fine_sub = -1;
  int coarse_sub = -1;
  int axis = 0;             ///< interface normal axis
  bool fine_is_lower = false;  ///< fine subdomain on the lower-coordinate side
  Scalar plane = 0;         ///< interface coordinate along `axis`
  IndexVec space_ratio{};   ///< fine-per-coarse ratio per tangential axis
  int time_ratio = 1;       ///< l = dt_coarse / dt_fine
  Scalar intersection_area = 0;
  std::vector<InterfaceSpatialSubface> spatial;

  int subface_count_per_level() const { return static_cast<int>(spatial.size()); }
};

/// Multiblock space-time mesh: subdomain grids, interface patches, and the
/// matching-slab structure. Immutable after construction.
class SpaceTimeMesh {
 public:
  static SpaceTimeMesh build(const MeshSpec& spec);

  int dim() const { return dim_; }
  Scalar t_end() const { return t_end_; }
  Scalar slab_dt() const { return slab_dt_; }
  int n_slabs() const { return n_slabs_; }
  const Coord& domain_lo() const { return lo_; }
  const Coord& domain_hi() const { return hi_; }

  int subdomain_count() const { return static_cast<int>(subs_.size()); }
  const Subdomain& subdomain(int i) const { return subs_[i]; }
  const std::vector<Subdomain>& subdomains() const { return subs_; }

  const std::vector<InterfacePatch>& patches() const { return patches_; }
  const std::vector<SpatialFace>& faces(int sub) const { return faces_[sub]; }

  Element element(int sub, int level, int cell) const;
  /// Number of time levels of subdomain `sub` within one matching slab.
  int levels_per_slab(int sub) const;
  std::int64_t element_count() const;

  /// Materialize all space-time sub-faces of patch `p`.
  std::vector<SubFaceView> subfaces(int p) const;

  /// Sum of |E| over all elements; equals |domain| * t_end for a valid mesh.
  Scalar total_spacetime_measure() const;
  Scalar domain_spacetime_measure() const;

  /// Per-patch time refinement ratios l = dt_coarse/dt_fine, re-validating
  /// that both time grids align at every matching-slab boundary.
  std::vector<int> matching_time_ratios() const;

 private:
  int dim_;
  Coord lo_{}, hi_{};
  Scalar t_end_, slab_dt_;
  int n_slabs_;
  std::vector<Subdomain> subs_;
  std::vector<InterfacePatch> patches_;
  std::vector<std::vector<SpatialFace>> faces_;
};

/// Intersect the boundary traces of two subdomains. Returns a patch with an
/// empty sub-face list when the traces do not share a positive-measure
/// intersection. Throws MeshError for non-integer refinement ratios or grids
/// whose lines do not align on the intersection.
InterfacePatch intersect_traces(const Subdomain& a, const Subdomain& b, int dim);

}  // namespace stevmfe::mesh
