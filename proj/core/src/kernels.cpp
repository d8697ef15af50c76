#include "stevmfe/kernels.hpp"

namespace stevmfe::kernels {

Scalar cell_indicator(Scalar x, Scalar x_lo, Scalar x_hi, Scalar t, Scalar t_lo, Scalar t_hi) {
  return (x >= x_lo && x <= x_hi && t > t_lo && t <= t_hi) ? 1.0 : 0.0;
}

Scalar flux_basis_value(Scalar x, Scalar x_face, Scalar x_minus_lo, Scalar st_measure_minus,
                        Scalar x_plus_hi, Scalar st_measure_plus) {
  if (x <= x_face) {
    if (st_measure_minus <= 0 || x < x_minus_lo) return 0;
    return (x - x_minus_lo) / st_measure_minus;
  }
  if (st_measure_plus <= 0 || x > x_plus_hi) return 0;
  return (x_plus_hi - x) / st_measure_plus;
}

Scalar velocity_mass_coeff(Scalar face_measure, Scalar h_minus, Scalar coeff_minus,
                           Scalar h_plus, Scalar coeff_plus) {
  if (coeff_minus == 0 || coeff_plus == 0)
    throw AssemblyError("velocity mass coefficient: zero coefficient");
  return (h_minus / coeff_minus + h_plus / coeff_plus) / (2 * face_measure);
}

Scalar velocity_mass_coeff_boundary(Scalar face_measure, Scalar h_in, Scalar coeff_in) {
  if (coeff_in == 0) throw AssemblyError("velocity mass coefficient: zero coefficient");
  return h_in / coeff_in / (2 * face_measure);
}

AssemblyRow pressure_divergence_row(std::int64_t p_minus, std::int64_t p_plus) {
  AssemblyRow row;
  row.entries = {{p_minus, 1.0}, {p_plus, -1.0}};
  return row;
}

Scalar accumulation_row(Scalar value, Scalar value_prev, Scalar weight) {
  return (value - value_prev) * weight;
}

AssemblyRow flux_divergence_row(std::int64_t target,
                                std::span<const std::pair<std::int64_t, Scalar>> fluxes) {
  AssemblyRow row;
  row.target = target;
  row.entries.reserve(fluxes.size());
  for (const auto& [dof, sign] : fluxes) row.entries.push_back({dof, sign});
  return row;
}

Scalar source_row(Scalar f_mid, Scalar st_measure) { return f_mid * st_measure; }

}  // namespace stevmfe::kernels
