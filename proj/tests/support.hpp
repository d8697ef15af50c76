#pragma once

#include <string>

#include "stevmfe/dofmap.hpp"
#include "stevmfe/mesh.hpp"
#include "stevmfe/model.hpp"

namespace testsup {

using namespace stevmfe;

inline mesh::SubdomainSpec make_sub(int id, Coord lo, Coord hi, IndexVec cells, Scalar dt,
                                    const std::string& role = "coarse") {
  mesh::SubdomainSpec s;
  s.id = id;
  s.origin = lo;
  for (int a = 0; a < kMaxDim; ++a) s.extent[a] = hi[a] - lo[a];
  s.cells = cells;
  s.dt = dt;
  s.role = role;
  return s;
}

/// Unit square x unit time, single subdomain.
inline mesh::MeshSpec unit_square(int n, Scalar dt) {
  mesh::MeshSpec ms;
  ms.dim = 2;
  ms.domain_lo = {0, 0};
  ms.domain_hi = {1, 1};
  ms.t_end = 1.0;
  ms.subdomains = {make_sub(0, {0, 0}, {1, 1}, {n, n}, dt)};
  return ms;
}

/// Unit square split at x = 0.5 into two subdomains.
inline mesh::MeshSpec split_square(int n_left, Scalar dt_left, int n_right, Scalar dt_right,
                                   Scalar t_end = 1.0) {
  mesh::MeshSpec ms;
  ms.dim = 2;
  ms.domain_lo = {0, 0};
  ms.domain_hi = {1, 1};
  ms.t_end = t_end;
  ms.subdomains = {
      make_sub(0, {0, 0}, {0.5, 1}, {n_left, 2 * n_left}, dt_left, "fine"),
      make_sub(1, {0.5, 0}, {1, 1}, {n_right, 2 * n_right}, dt_right, "coarse"),
  };
  return ms;
}

/// 1D interval split at x = 0.5.
inline mesh::MeshSpec split_interval(int n_left, Scalar dt_left, int n_right, Scalar dt_right,
                                     Scalar t_end = 1.0) {
  mesh::MeshSpec ms;
  ms.dim = 1;
  ms.domain_lo = {0, 0};
  ms.domain_hi = {1, 1};
  ms.t_end = t_end;
  ms.subdomains = {
      make_sub(0, {0, 0}, {0.5, 0}, {n_left, 1}, dt_left, "fine"),
      make_sub(1, {0.5, 0}, {1, 0}, {n_right, 1}, dt_right, "coarse"),
  };
  return ms;
}

/// The convergence-study geometry: fine corner box [0,0.4]^2 refined by
/// `ratio`, coarse remainder as two boxes.
inline mesh::MeshSpec corner_refined(int n_coarse, int ratio = 4) {
  mesh::MeshSpec ms;
  ms.dim = 2;
  ms.domain_lo = {0, 0};
  ms.domain_hi = {1, 1};
  ms.t_end = 1.0;
  const Scalar hc = 1.0 / n_coarse;
  const int nf = (4 * n_coarse) / 10;  // fine box spans 0.4 of the domain
  ms.subdomains = {
      make_sub(0, {0, 0}, {0.4, 0.4}, {ratio * nf, ratio * nf}, hc / ratio, "fine"),
      make_sub(1, {0.4, 0}, {1, 0.4}, {n_coarse - nf, nf}, hc, "coarse"),
      make_sub(2, {0, 0.4}, {1, 1}, {n_coarse, n_coarse - nf}, hc, "coarse"),
  };
  return ms;
}

inline models::ModelProblem linear_model(bool manufactured = true, Scalar c1 = 1.0) {
  models::ModelProblem m;
  m.kind = models::ModelKind::LinearParabolic;
  m.c1 = c1;
  m.manufactured_forcing = manufactured;
  m.manufactured_initial = manufactured;
  for (auto& bc : m.boundary) {
    bc.type = models::BoundaryType::Dirichlet;
    bc.manufactured = manufactured;
    bc.pressure = 0;
  }
  return m;
}

inline models::ModelProblem tracer_model() {
  models::ModelProblem m;
  m.kind = models::ModelKind::SinglePhaseTracer;
  m.fluid = {64.0, 1000.0, 1e-6, 1.0};
  m.diffusion = 0.1;
  m.p0 = 1000;
  m.c0 = 0;
  for (auto& bc : m.boundary) bc.type = models::BoundaryType::NoFlow;
  return m;
}

inline models::ModelProblem twophase_model() {
  models::ModelProblem m;
  m.kind = models::ModelKind::TwoPhase;
  m.oil = {53.0, 1000.0, 1e-4, 3.0};
  m.water = {64.0, 1000.0, 3e-6, 1.0};
  m.relperm = {};
  m.capillary = {};
  m.p0 = 1000;
  m.sw0 = 0.2;
  for (auto& bc : m.boundary) bc.type = models::BoundaryType::NoFlow;
  return m;
}

inline models::WellSpec injector(int sub, IndexVec cell, Scalar rate_stb, Scalar conc = 1.0) {
  models::WellSpec w;
  w.type = models::WellSpec::Type::RateInjector;
  w.sub = sub;
  w.cell = cell;
  w.rate_stb = rate_stb;
  w.injected_concentration = conc;
  return w;
}

inline models::WellSpec producer(int sub, IndexVec cell, Scalar bhp, Scalar wi = -1) {
  models::WellSpec w;
  w.type = models::WellSpec::Type::PressureProducer;
  w.sub = sub;
  w.cell = cell;
  w.bhp = bhp;
  w.well_index = wi;
  return w;
}

}  // namespace testsup
