#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stevmfe/common.hpp"

namespace stevmfe::kernels {

/// Sparse fragment of one algebraic equation: coefficients on unknown DOFs
/// plus a constant term.
struct RowEntry {
  std::int64_t dof;
  Scalar coef;
};

struct AssemblyRow {
  std::int64_t target = -1;
  std::vector<RowEntry> entries;
  Scalar constant = 0;
};

enum class Rule1D : char { Trapezoid = 'T', Midpoint = 'M' };

/// Quadrature tags for one velocity-component mass term: trapezoidal along
/// the component axis, midpoint along the other spatial axes and along time.
struct QuadratureRule {
  static std::vector<Rule1D> tags(int component, int dim) {
    std::vector<Rule1D> t(dim + 1, Rule1D::Midpoint);
    t[component] = Rule1D::Trapezoid;
    return t;
  }
};

/// Piecewise-constant space-time cell indicator.
Scalar cell_indicator(Scalar x, Scalar x_lo, Scalar x_hi, Scalar t, Scalar t_lo, Scalar t_hi);

/// Flux basis along its axis, linear over the two adjacent space-time
/// elements and normalized so its value on the shared face is 1/|e|.
/// One-sided (boundary) faces pass a zero measure for the missing side.
Scalar flux_basis_value(Scalar x, Scalar x_face, Scalar x_minus_lo, Scalar st_measure_minus,
                        Scalar x_plus_hi, Scalar st_measure_plus);

/// Coefficient multiplying the flux DOF in a constitutive (Darcy-type) row
/// under the trapezoid-midpoint quadrature: (1/(2|e|)) (h_m/c_m + h_p/c_p).
Scalar velocity_mass_coeff(Scalar face_measure, Scalar h_minus, Scalar coeff_minus,
                           Scalar h_plus, Scalar coeff_plus);

/// One-sided variant for an outer-boundary face (half-cell contribution).
Scalar velocity_mass_coeff_boundary(Scalar face_measure, Scalar h_in, Scalar coeff_in);

/// (p, div phi) fragment: +1 on the lower-side cell unknown, -1 on the
/// upper-side one. For an interface sub-face the unknowns are the fine-side
/// value at its own fine level and the coarse-side value at the coarse level.
AssemblyRow pressure_divergence_row(std::int64_t p_minus, std::int64_t p_plus);

/// Dirichlet datum evaluated at the face space-time midpoint.
template <class G>
Scalar boundary_term(const G& g, const Coord& mid, Scalar t_mid) {
  return g(mid, t_mid);
}

/// Time-jump accumulation fragment: (value - value_prev) * weight, where the
/// weight is the predecessor cell measure.
Scalar accumulation_row(Scalar value, Scalar value_prev, Scalar weight);

/// Signed sum of the flux DOFs on an element's spatial-normal faces. A
/// coarse element adjacent to an interface lists every fine sub-face DOF on
/// that side.
AssemblyRow flux_divergence_row(std::int64_t target,
                                std::span<const std::pair<std::int64_t, Scalar>> fluxes);

/// Source integral: midpoint value times the space-time element measure.
Scalar source_row(Scalar f_mid, Scalar st_measure);

}  // namespace stevmfe::kernels
