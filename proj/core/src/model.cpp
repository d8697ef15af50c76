#include "stevmfe/model.hpp"

#include <cmath>

namespace stevmfe::models {

Scalar peaceman_well_index(const WellCellCtx& ctx, Scalar r_w) {
  const Scalar r_eq = 0.2 * std::sqrt(ctx.hx * ctx.hy);
  if (r_eq <= r_w)
    throw ConfigError("well: equivalent radius 0.2 sqrt(hx hy) = " + std::to_string(r_eq) +
                      " does not exceed the wellbore radius " + std::to_string(r_w) +
                      "; give well_index or a smaller r_w");
  return 2 * M_PI * std::sqrt(ctx.perm_x * ctx.perm_y) * ctx.dz / std::log(r_eq / r_w);
}

WellTerms well_contribution(const WellSpec& w, const ModelProblem& m, const WellCellCtx& ctx,
                            Scalar p, Scalar second) {
  WellTerms out;
  if (w.type == WellSpec::Type::RateInjector) {
    if (m.kind == ModelKind::SinglePhaseTracer) {
      const Scalar mass_rate = w.rate_stb * kStbToCubicFt * m.fluid.rho_ref;
      out.q[0] = mass_rate;
      out.q[1] = mass_rate * w.injected_concentration;
    } else if (m.kind == ModelKind::TwoPhase) {
      const Scalar mass_rate = w.rate_stb * kStbToCubicFt * m.water.rho_ref;
      out.q[0] = mass_rate;  // total
      out.q[1] = mass_rate;  // water
    }
    return out;
  }

  const Scalar wi = w.well_index > 0 ? w.well_index : peaceman_well_index(ctx, w.r_w);
  const Scalar dp = p - w.bhp;
  if (m.kind == ModelKind::SinglePhaseTracer) {
    const Scalar rho = density(p, m.fluid);
    const Scalar drho = density_dp(p, m.fluid);
    const Scalar tx = wi * kDarcyUnit / m.fluid.viscosity;
    const Scalar c = second;
    out.q[0] = -tx * rho * dp;
    out.dq[0][0] = -tx * (drho * dp + rho);
    // produced tracer leaves at the cell concentration
    out.q[1] = out.q[0] * c;
    out.dq[1][0] = out.dq[0][0] * c;
    out.dq[1][1] = out.q[0];
  } else if (m.kind == ModelKind::TwoPhase) {
    const Scalar s_w = second;
    const RelPerm kr = brooks_corey(s_w, m.relperm);
    const Capillary pc = van_genuchten_pc(s_w, m.capillary);
    const Scalar p_w = p - pc.pc;
    const Scalar rho_o = density(p, m.oil), drho_o = density_dp(p, m.oil);
    const Scalar rho_w = density(p_w, m.water), drho_w_dpw = density_dp(p_w, m.water);
    const Scalar to = wi * kDarcyUnit / m.oil.viscosity;
    const Scalar tw = wi * kDarcyUnit / m.water.viscosity;
    const Scalar q_o = -to * rho_o * kr.kro * dp;
    const Scalar q_w = -tw * rho_w * kr.krw * dp;
    const Scalar dqo_dp = -to * kr.kro * (drho_o * dp + rho_o);
    const Scalar dqo_ds = -to * rho_o * kr.dkro_dsw * dp;
    const Scalar dqw_dp = -tw * kr.krw * (drho_w_dpw * dp + rho_w);
    const Scalar dqw_ds = -tw * dp * (kr.dkrw_dsw * rho_w + kr.krw * drho_w_dpw * (-pc.dpc_dsw));
    out.q[0] = q_o + q_w;
    out.q[1] = q_w;
    out.dq[0][0] = dqo_dp + dqw_dp;
    out.dq[0][1] = dqo_ds + dqw_ds;
    out.dq[1][0] = dqw_dp;
    out.dq[1][1] = dqw_ds;
  }
  return out;
}

}  // namespace stevmfe::models
