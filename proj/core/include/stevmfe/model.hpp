#pragma once

#include <string>
#include <vector>

#include "stevmfe/properties.hpp"

namespace stevmfe::models {

enum class ModelKind { LinearParabolic, SinglePhaseTracer, TwoPhase };

enum class BoundaryType { NoFlow, Dirichlet };

/// Boundary data for one side of the domain box. Dirichlet faces take a
/// constant pressure datum (and concentration for the tracer model) or the
/// manufactured exact solution for the linear model.
struct BoundaryCondition {
  BoundaryType type = BoundaryType::NoFlow;
  Scalar pressure = 0;
  Scalar concentration = 0;
  bool manufactured = false;
};

struct WellSpec {
  enum class Type { RateInjector, PressureProducer };
  Type type = Type::RateInjector;
  int sub = 0;
  IndexVec cell{};
  Scalar rate_stb = 0;                ///< injector surface rate [STB/day]
  Scalar injected_concentration = 0;  ///< tracer concentration of injected fluid
  Scalar bhp = 0;                     ///< producer bottom-hole pressure
  Scalar well_index = -1;             ///< <0: Peaceman-type index from cell data
  Scalar r_w = 0.1;                   ///< wellbore radius [ft]
};

/// Physics selection plus all fluid/rock parameters, wells, and boundary and
/// initial data. Geometry and per-cell material fields live on the mesh.
struct ModelProblem {
  ModelKind kind = ModelKind::LinearParabolic;
  int dim = 2;

  // linear parabolic (dimensionless verification problem)
  Scalar c1 = 1.0;
  bool manufactured_forcing = false;
  bool manufactured_initial = false;

  // single-phase fluid (tracer model)
  FluidProps fluid;
  Scalar diffusion = 0;  ///< tracer diffusion coefficient [ft^2/day]

  // two-phase fluids
  FluidProps oil, water;
  RelPermParams relperm;
  CapillaryParams capillary;

  // initial fields (uniform)
  Scalar p0 = 0;
  Scalar c0 = 0;
  Scalar sw0 = 0;

  std::vector<WellSpec> wells;
  std::array<BoundaryCondition, 2 * kMaxDim> boundary{};  ///< per domain side: x-,x+,y-,y+

  int n_cell_fields() const {
    return kind == ModelKind::LinearParabolic ? 1 : 2;
  }
  int n_flux_families() const {
    switch (kind) {
      case ModelKind::LinearParabolic: return 1;
      case ModelKind::SinglePhaseTracer: return 2;  // Darcy u, diffusive z
      case ModelKind::TwoPhase: return 4;           // aux o/w, Darcy o/w
    }
    return 1;
  }
  /// Unit conversion inside Darcy-type rows; 1 for the dimensionless model.
  Scalar darcy_constant() const {
    return kind == ModelKind::LinearParabolic ? 1.0 : kDarcyUnit;
  }
};

/// Geometric and material context of the well cell.
struct WellCellCtx {
  Scalar perm_x = 1, perm_y = 1;
  Scalar hx = 1, hy = 1;
  Scalar dz = 1;
};

/// Mass rates into the cell conservation equations (positive = injection)
/// and their derivatives with respect to the cell unknowns.
struct WellTerms {
  std::array<Scalar, 2> q{};                 ///< per equation
  std::array<std::array<Scalar, 2>, 2> dq{}; ///< dq[eq][unknown]; unknowns (p, c|s_w)
};

/// Peaceman-type well index 2 pi sqrt(kx ky) dz / ln(r_eq / r_w) with
/// r_eq = 0.2 sqrt(hx hy).
Scalar peaceman_well_index(const WellCellCtx& ctx, Scalar r_w);

WellTerms well_contribution(const WellSpec& w, const ModelProblem& m, const WellCellCtx& ctx,
                            Scalar p, Scalar second);

}  // namespace stevmfe::models
