#include "stevmfe/properties.hpp"

#include <algorithm>
#include <cmath>

namespace stevmfe::models {

Scalar density(Scalar p, const FluidProps& f) {
  return f.rho_ref * std::exp(f.compressibility * (p - f.p_ref));
}

Scalar density_dp(Scalar p, const FluidProps& f) {
  return f.compressibility * density(p, f);
}

RelPerm brooks_corey(Scalar s_w, const RelPermParams& p) {
  RelPerm out;
  const Scalar span = 1 - p.s_or - p.s_wirr;
  const Scalar s = std::clamp(s_w, p.s_wirr, 1 - p.s_or);
  const Scalar sew = (s - p.s_wirr) / span;
  const Scalar seo = (1 - s - p.s_or) / span;
  out.krw = p.krw0 * std::pow(sew, p.nw);
  out.kro = p.kro0 * std::pow(seo, p.no);
  const bool clamped = s_w < p.s_wirr || s_w > 1 - p.s_or;
  if (!clamped) {
    out.dkrw_dsw = sew > 0 ? p.krw0 * p.nw * std::pow(sew, p.nw - 1) / span : 0;
    out.dkro_dsw = seo > 0 ? -p.kro0 * p.no * std::pow(seo, p.no - 1) / span : 0;
  }
  return out;
}

namespace {

/// Exact curve and derivative at argument s - s_wirr > 0.
Capillary vg_exact(Scalar arg, const CapillaryParams& p) {
  Capillary out;
  const Scalar br = std::max<Scalar>(std::pow(arg, -1 / p.b) - 1, 0.0);
  out.pc = p.a * std::pow(br, 1 / p.c);
  if (br > 0) {
    const Scalar dbracket = (-1 / p.b) * std::pow(arg, -1 / p.b - 1);
    out.dpc_dsw = p.a / p.c * std::pow(br, 1 / p.c - 1) * dbracket;
  }
  return out;
}

}  // namespace

Capillary van_genuchten_pc(Scalar s_w, const CapillaryParams& p) {
  if (p.regularization > 0) {
    const Scalar s_reg = p.s_wirr + p.regularization;
    if (s_w >= s_reg) return vg_exact(s_w - p.s_wirr, p);
    const Capillary edge = vg_exact(p.regularization, p);
    if (s_w >= p.s_wirr)  // linear extension down to the irreducible point
      return {edge.pc + edge.dpc_dsw * (s_w - s_reg), edge.dpc_dsw};
    return {edge.pc - edge.dpc_dsw * p.regularization, 0.0};  // constant cap
  }
  // unregularized: flat delta-clamp
  const Scalar floor = p.s_wirr + p.clamp_delta;
  Capillary out = vg_exact(std::max(s_w, floor) - p.s_wirr, p);
  if (s_w <= floor) out.dpc_dsw = 0;
  return out;
}

Scalar upwind_concentration(Scalar flux, Scalar c_up, Scalar c_down) {
  return flux > 0 ? c_up : c_down;
}

Scalar upwind_mobility(Scalar aux_flux, Scalar rho_minus, Scalar rho_plus,
                       Scalar kr_minus, Scalar kr_plus, Scalar viscosity) {
  const Scalar kr = aux_flux > 0 ? kr_minus : kr_plus;
  return (rho_minus + rho_plus) * kr / (2 * viscosity);
}

Manufactured manufactured_solution(Scalar x, Scalar y, Scalar t, Scalar c1) {
  constexpr Scalar two_pi = 2 * M_PI;
  const Scalar shape = std::sin(two_pi * x) * std::sin(two_pi * y);
  const Scalar amp = std::exp(c1 * t);
  return {amp * shape, amp * (c1 + 8 * M_PI * M_PI) * shape};
}

Scalar manufactured_velocity(int axis, Scalar x, Scalar y, Scalar t, Scalar c1) {
  constexpr Scalar two_pi = 2 * M_PI;
  const Scalar amp = std::exp(c1 * t);
  if (axis == 0) return -amp * two_pi * std::cos(two_pi * x) * std::sin(two_pi * y);
  return -amp * two_pi * std::sin(two_pi * x) * std::cos(two_pi * y);
}

}  // namespace stevmfe::models
