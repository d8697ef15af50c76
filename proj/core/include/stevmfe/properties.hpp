#pragma once

#include "stevmfe/common.hpp"

namespace stevmfe::models {

struct FluidProps {
  Scalar rho_ref = 1;         ///< density at the reference pressure
  Scalar p_ref = 0;
  Scalar compressibility = 0; ///< c_f
  Scalar viscosity = 1;
};

/// Slightly compressible density rho_ref * exp(c_f (p - p_ref)).
Scalar density(Scalar p, const FluidProps& f);
Scalar density_dp(Scalar p, const FluidProps& f);  ///< d(density)/dp

struct RelPermParams {
  Scalar s_wirr = 0.2;
  Scalar s_or = 0.2;
  Scalar krw0 = 1.0;
  Scalar kro0 = 1.0;
  Scalar nw = 2.0;
  Scalar no = 2.0;
};

struct RelPerm {
  Scalar krw = 0, kro = 0;
  Scalar dkrw_dsw = 0, dkro_dsw = 0;
};

/// Brooks-Corey relative permeabilities as functions of water saturation;
/// inputs outside [s_wirr, 1 - s_or] are clamped to the endpoints (zero
/// slope outside).
RelPerm brooks_corey(Scalar s_w, const RelPermParams& p);

struct CapillaryParams {
  Scalar a = 0.8;
  Scalar b = 0.6255;
  Scalar c = 2.67;
  Scalar s_wirr = 0.2;
  Scalar clamp_delta = 1e-6;  ///< evaluation floor above s_wirr when unregularized
  /// Width of the C1 regularization zone above s_wirr: the exact curve is
  /// kept above s_wirr + regularization and extended linearly below, with a
  /// constant cap below s_wirr. Zero falls back to the flat delta-clamp,
  /// whose value cliff (~3e3 psi over 1e-6 in saturation) defeats Newton on
  /// flood fronts that start at the irreducible saturation.
  Scalar regularization = 1e-3;
};

struct Capillary {
  Scalar pc = 0;
  Scalar dpc_dsw = 0;
};

/// van Genuchten capillary pressure a [ (s_w - s_wirr)^(-1/b) - 1 ]^(1/c)
/// with the singular corner replaced per CapillaryParams::regularization.
/// Always finite, monotone non-increasing, capped below s_wirr.
Capillary van_genuchten_pc(Scalar s_w, const CapillaryParams& p);

/// Upwinded face concentration: the "up" cell value for positive flux, the
/// "down" cell value otherwise (including zero flux).
Scalar upwind_concentration(Scalar flux, Scalar c_up, Scalar c_down);

/// Upwind phase mobility (rho_m + rho_p) k_r(S_upwind) / (2 mu); the
/// relative permeability side follows the sign of the auxiliary flux
/// (zero flux takes the downstream side).
Scalar upwind_mobility(Scalar aux_flux, Scalar rho_minus, Scalar rho_plus,
                       Scalar kr_minus, Scalar kr_plus, Scalar viscosity);

struct Manufactured {
  Scalar p = 0;  ///< exact pressure
  Scalar f = 0;  ///< matching forcing
};

/// Separable exact solution e^{c1 t} sin(2 pi x) sin(2 pi y) for the unit
/// square, with the forcing that reproduces it for u = -grad p.
Manufactured manufactured_solution(Scalar x, Scalar y, Scalar t, Scalar c1);

/// Exact flux component -dp/dx (or y) of the manufactured solution.
Scalar manufactured_velocity(int axis, Scalar x, Scalar y, Scalar t, Scalar c1);

}  // namespace stevmfe::models
