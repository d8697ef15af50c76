#include "stevmfe/config.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "stevmfe/fields_io.hpp"

namespace stevmfe::driver {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) fail(path + "." + key, "missing required field");
  return j.at(key);
}

Scalar num(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<Scalar>();
}

Scalar num(const json& j, const char* key, const std::string& path) {
  return num(require(j, key, path), path + "." + key);
}

Scalar num_or(const json& j, const char* key, Scalar fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  return num(j.at(key), path + "." + std::string(key));
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

Coord coord(const json& j, int dim, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    fail(path, "expected an array of " + std::to_string(dim) + " numbers");
  Coord c{};
  for (int a = 0; a < dim; ++a) c[a] = num(j.at(a), path + "[" + std::to_string(a) + "]");
  return c;
}

std::vector<Scalar> scalar_field(const json& j, std::int64_t ncells, const std::string& base_dir,
                                 const std::string& path) {
  if (j.is_number()) return {j.get<Scalar>()};
  if (j.is_object()) {
    const std::string file = require(j, "file", path).get<std::string>();
    const bool log_scale = j.value("log_scale", false);
    return read_scalar_field((fs::path(base_dir) / file).string(), ncells, log_scale);
  }
  fail(path, "expected a number or {\"file\": ..., \"log_scale\": ...}");
}

models::FluidProps fluid_props(const json& j, const std::string& path) {
  models::FluidProps f;
  f.rho_ref = num(j, "rho_ref", path);
  f.p_ref = num_or(j, "p_ref", 0, path);
  f.compressibility = num_or(j, "compressibility", 0, path);
  f.viscosity = num(j, "viscosity", path);
  if (!(f.viscosity > 0)) fail(path + ".viscosity", "must be strictly positive");
  if (f.compressibility < 0) fail(path + ".compressibility", "must be non-negative");
  if (!(f.rho_ref > 0)) fail(path + ".rho_ref", "must be strictly positive");
  return f;
}

models::BoundaryCondition boundary_condition(const json& j, const std::string& path) {
  models::BoundaryCondition bc;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "noflow") return bc;
    if (s == "manufactured") {
      bc.type = models::BoundaryType::Dirichlet;
      bc.manufactured = true;
      return bc;
    }
    fail(path, "expected \"noflow\", \"manufactured\", or an object with \"pressure\"");
  }
  if (!j.is_object()) fail(path, "expected a string tag or an object");
  bc.type = models::BoundaryType::Dirichlet;
  bc.pressure = num(j, "pressure", path);
  bc.concentration = num_or(j, "concentration", 0, path);
  return bc;
}

void parse_boundary(const json& jm, models::ModelProblem& m, int dim, const std::string& path) {
  static const char* side_keys[4] = {"x_lo", "x_hi", "y_lo", "y_hi"};
  models::BoundaryCondition def;  // no-flow
  if (jm.contains("boundary")) {
    const json& jb = jm.at("boundary");
    if (jb.contains("default"))
      def = boundary_condition(jb.at("default"), path + ".boundary.default");
    for (auto& bc : m.boundary) bc = def;
    for (int s = 0; s < 2 * dim; ++s)
      if (jb.contains(side_keys[s]))
        m.boundary[s] = boundary_condition(jb.at(side_keys[s]), path + ".boundary." + side_keys[s]);
  } else {
    for (auto& bc : m.boundary) bc = def;
  }
  if (m.kind == models::ModelKind::TwoPhase)
    for (int s = 0; s < 2 * dim; ++s)
      if (m.boundary[s].type != models::BoundaryType::NoFlow)
        fail(path + ".boundary." + side_keys[s], "two_phase supports no-flow boundaries only");
}

void parse_wells(const json& jm, models::ModelProblem& m, const mesh::MeshSpec& ms,
                 const std::string& path) {
  if (!jm.contains("wells")) return;
  if (m.kind == models::ModelKind::LinearParabolic)
    fail(path + ".wells", "the linear model takes its source from the forcing, not wells");
  if (ms.dim != 2) fail(path + ".wells", "wells require a 2D spatial mesh");
  const json& jw = jm.at("wells");
  if (!jw.is_array()) fail(path + ".wells", "expected an array");
  for (size_t i = 0; i < jw.size(); ++i) {
    const std::string wp = path + ".wells[" + std::to_string(i) + "]";
    const json& j = jw.at(i);
    models::WellSpec w;
    const std::string type = require(j, "type", wp).get<std::string>();
    if (type == "injector")
      w.type = models::WellSpec::Type::RateInjector;
    else if (type == "producer")
      w.type = models::WellSpec::Type::PressureProducer;
    else
      fail(wp + ".type", "expected \"injector\" or \"producer\"");
    w.sub = integer(require(j, "subdomain", wp), wp + ".subdomain");
    const mesh::SubdomainSpec* sd = nullptr;
    for (const auto& s : ms.subdomains)
      if (s.id == w.sub) sd = &s;
    if (!sd) fail(wp + ".subdomain", "no subdomain with this id");
    const json& jc = require(j, "cell", wp);
    if (!jc.is_array() || jc.size() != 2) fail(wp + ".cell", "expected [i, j]");
    for (int a = 0; a < 2; ++a) {
      w.cell[a] = integer(jc.at(a), wp + ".cell");
      if (w.cell[a] < 0 || w.cell[a] >= sd->cells[a])
        fail(wp + ".cell", "index outside the subdomain grid");
    }
    if (w.type == models::WellSpec::Type::RateInjector) {
      w.rate_stb = num(j, "rate_stb_per_day", wp);
      if (w.rate_stb < 0) fail(wp + ".rate_stb_per_day", "must be non-negative");
      w.injected_concentration = num_or(j, "concentration", 0, wp);
    } else {
      w.bhp = num(j, "bhp_psi", wp);
      w.well_index = num_or(j, "well_index", -1, wp);
      if (j.contains("well_index") && !(w.well_index > 0))
        fail(wp + ".well_index", "must be strictly positive when given");
      w.r_w = num_or(j, "r_w", 0.1, wp);
    }
    m.wells.push_back(w);
  }
  for (const auto& a : m.wells)
    for (const auto& b : m.wells)
      if (&a != &b && a.type != b.type && a.sub == b.sub && a.cell == b.cell)
        fail(path + ".wells", "producer and injector share a cell");
}

models::ModelProblem parse_model(const json& jm, const mesh::MeshSpec& ms,
                                 const std::string& path) {
  models::ModelProblem m;
  m.dim = ms.dim;
  const std::string kind = require(jm, "kind", path).get<std::string>();
  if (kind == "linear_parabolic") {
    m.kind = models::ModelKind::LinearParabolic;
    m.c1 = num_or(jm, "c1", 1.0, path);
    const std::string forcing = jm.value("forcing", "none");
    if (forcing == "manufactured")
      m.manufactured_forcing = true;
    else if (forcing != "none")
      fail(path + ".forcing", "expected \"manufactured\" or \"none\"");
    if (jm.contains("initial") && jm.at("initial").is_string()) {
      if (jm.at("initial").get<std::string>() != "manufactured")
        fail(path + ".initial", "expected a number or \"manufactured\"");
      m.manufactured_initial = true;
    } else {
      m.p0 = num_or(jm, "initial", 0, path);
    }
  } else if (kind == "single_phase_tracer") {
    m.kind = models::ModelKind::SinglePhaseTracer;
    m.fluid = fluid_props(require(jm, "fluid", path), path + ".fluid");
    m.diffusion = num(jm, "diffusion", path);  // ft^2/day
    if (!(m.diffusion > 0)) fail(path + ".diffusion", "must be strictly positive");
    m.p0 = num(jm, "initial_pressure", path);
    m.c0 = num_or(jm, "initial_concentration", 0, path);
    if (m.c0 < 0 || m.c0 > 1) fail(path + ".initial_concentration", "must lie in [0, 1]");
  } else if (kind == "two_phase") {
    m.kind = models::ModelKind::TwoPhase;
    m.oil = fluid_props(require(jm, "oil", path), path + ".oil");
    m.water = fluid_props(require(jm, "water", path), path + ".water");
    if (jm.contains("relperm")) {
      const json& jr = jm.at("relperm");
      const std::string rp = path + ".relperm";
      m.relperm.s_wirr = num_or(jr, "s_wirr", 0.2, rp);
      m.relperm.s_or = num_or(jr, "s_or", 0.2, rp);
      m.relperm.krw0 = num_or(jr, "krw0", 1.0, rp);
      m.relperm.kro0 = num_or(jr, "kro0", 1.0, rp);
      m.relperm.nw = num_or(jr, "nw", 2.0, rp);
      m.relperm.no = num_or(jr, "no", 2.0, rp);
    }
    if (m.relperm.s_wirr < 0 || m.relperm.s_or < 0 ||
        m.relperm.s_wirr + m.relperm.s_or >= 1)
      fail(path + ".relperm", "endpoint saturations must be non-negative with s_wirr + s_or < 1");
    if (jm.contains("capillary")) {
      const json& jc = jm.at("capillary");
      const std::string cp = path + ".capillary";
      m.capillary.a = num_or(jc, "a", 0.8, cp);
      m.capillary.b = num_or(jc, "b", 0.6255, cp);
      m.capillary.c = num_or(jc, "c", 2.67, cp);
      m.capillary.regularization = num_or(jc, "regularization", 1e-3, cp);
      if (m.capillary.regularization < 0)
        fail(cp + ".regularization", "must be non-negative");
    }
    m.capillary.s_wirr = m.relperm.s_wirr;
    if (!(m.capillary.a > 0)) fail(path + ".capillary.a", "must be strictly positive");
    if (!(m.capillary.b > 0 && m.capillary.b <= 1))
      fail(path + ".capillary.b", "must lie in (0, 1]");
    if (!(m.capillary.c > 1)) fail(path + ".capillary.c", "must exceed 1");
    m.p0 = num(jm, "initial_pressure", path);
    m.sw0 = num(jm, "initial_water_saturation", path);
    if (m.sw0 < 0 || m.sw0 > 1) fail(path + ".initial_water_saturation", "must lie in [0, 1]");
  } else {
    fail(path + ".kind",
         "expected \"linear_parabolic\", \"single_phase_tracer\", or \"two_phase\"");
  }
  parse_boundary(jm, m, ms.dim, path);
  parse_wells(jm, m, ms, path);
  return m;
}

mesh::MeshSpec parse_mesh(const json& jm, const std::string& base_dir, const std::string& path) {
  mesh::MeshSpec ms;
  ms.dim = jm.contains("dim") ? integer(jm.at("dim"), path + ".dim") : 2;
  if (ms.dim < 1 || ms.dim > 2) fail(path + ".dim", "spatial dimension must be 1 or 2");
  const json& jd = require(jm, "domain", path);
  ms.domain_lo = coord(require(jd, "lo", path + ".domain"), ms.dim, path + ".domain.lo");
  ms.domain_hi = coord(require(jd, "hi", path + ".domain"), ms.dim, path + ".domain.hi");
  ms.t_end = num(jm, "t_end", path);
  if (!(ms.t_end > 0)) fail(path + ".t_end", "must be strictly positive");

  const json& js = require(jm, "subdomains", path);
  if (!js.is_array() || js.empty()) fail(path + ".subdomains", "expected a non-empty array");
  for (size_t i = 0; i < js.size(); ++i) {
    const std::string sp = path + ".subdomains[" + std::to_string(i) + "]";
    const json& j = js.at(i);
    mesh::SubdomainSpec s;
    s.id = j.contains("id") ? integer(j.at("id"), sp + ".id") : static_cast<int>(i);
    const json& jb = require(j, "box", sp);
    const Coord lo = coord(require(jb, "lo", sp + ".box"), ms.dim, sp + ".box.lo");
    const Coord hi = coord(require(jb, "hi", sp + ".box"), ms.dim, sp + ".box.hi");
    s.origin = lo;
    std::int64_t ncells = 1;
    const json& jc = require(j, "cells", sp);
    if (!jc.is_array() || static_cast<int>(jc.size()) != ms.dim)
      fail(sp + ".cells", "expected an array of " + std::to_string(ms.dim) + " integers");
    for (int a = 0; a < ms.dim; ++a) {
      s.extent[a] = hi[a] - lo[a];
      if (!(s.extent[a] > 0)) fail(sp + ".box", "extent must be positive");
      s.cells[a] = integer(jc.at(a), sp + ".cells");
      if (s.cells[a] <= 0) fail(sp + ".cells", "cell counts must be positive");
      ncells *= s.cells[a];
    }
    s.dt = num(j, "dt", sp);
    if (!(s.dt > 0)) fail(sp + ".dt", "must be strictly positive");
    s.role = j.value("role", "coarse");
    if (s.role != "coarse" && s.role != "fine")
      fail(sp + ".role", "expected \"coarse\" or \"fine\"");

    if (j.contains("permeability")) {
      const json& jp = j.at("permeability");
      if (jp.is_array()) {
        if (static_cast<int>(jp.size()) != ms.dim)
          fail(sp + ".permeability", "per-axis array needs one entry per axis");
        for (int a = 0; a < ms.dim; ++a)
          s.perm[a] = scalar_field(jp.at(a), ncells, base_dir,
                                   sp + ".permeability[" + std::to_string(a) + "]");
      } else {
        s.perm[0] = scalar_field(jp, ncells, base_dir, sp + ".permeability");
        for (int a = 1; a < ms.dim; ++a) s.perm[a] = s.perm[0];
      }
      for (int a = 0; a < ms.dim; ++a)
        for (Scalar v : s.perm[a])
          if (!(v > 0)) fail(sp + ".permeability", "entries must be strictly positive");
    }
    if (j.contains("porosity")) {
      s.porosity = scalar_field(j.at("porosity"), ncells, base_dir, sp + ".porosity");
      for (Scalar v : s.porosity)
        if (!(v > 0 && v <= 1)) fail(sp + ".porosity", "entries must lie in (0, 1]");
    }
    ms.subdomains.push_back(std::move(s));
  }
  return ms;
}

RunConfig parse(const json& root, const std::string& base_dir) {
  RunConfig cfg;
  cfg.mesh = parse_mesh(require(root, "mesh", "config"), base_dir, "config.mesh");
  cfg.model = parse_model(require(root, "model", "config"), cfg.mesh, "config.model");
  if (root.contains("solver")) {
    const json& js = root.at("solver");
    cfg.solver.tolerance = num_or(js, "tolerance", 1e-6, "config.solver");
    if (!(cfg.solver.tolerance > 0)) fail("config.solver.tolerance", "must be strictly positive");
    if (js.contains("max_iterations"))
      cfg.solver.max_iterations = integer(js.at("max_iterations"), "config.solver.max_iterations");
    if (cfg.solver.max_iterations < 1) fail("config.solver.max_iterations", "must be at least 1");
    cfg.solver.saturation_clamp = num_or(js, "saturation_clamp", 0, "config.solver");
    if (cfg.solver.saturation_clamp < 0)
      fail("config.solver.saturation_clamp", "must be non-negative");
  }
  if (root.contains("output")) {
    const json& jo = root.at("output");
    cfg.output.directory = jo.value("directory", "out");
    if (jo.contains("formats")) {
      cfg.output.csv = cfg.output.vtk = cfg.output.dat = false;
      for (const auto& f : jo.at("formats")) {
        const std::string s = f.get<std::string>();
        if (s == "csv")
          cfg.output.csv = true;
        else if (s == "vtk")
          cfg.output.vtk = true;
        else if (s == "dat")
          cfg.output.dat = true;
        else
          fail("config.output.formats", "unknown format \"" + s + "\"");
      }
    }
    if (jo.contains("cadence")) {
      cfg.output.cadence = integer(jo.at("cadence"), "config.output.cadence");
      if (cfg.output.cadence < 1) fail("config.output.cadence", "must be at least 1");
    }
  }
  if (root.contains("convergence")) {
    const json& jc = root.at("convergence");
    ConvergenceSpec cs;
    if (jc.contains("levels")) cs.levels = integer(jc.at("levels"), "config.convergence.levels");
    if (cs.levels < 1) fail("config.convergence.levels", "must be at least 1");
    cs.c1 = num_or(jc, "c1", 1.0, "config.convergence");
    cfg.convergence = cs;
  }
  return cfg;
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return parse(root, fs::path(path).parent_path().string());
}

RunConfig parse_config(const std::string& json_text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse(root, base_dir);
}

}  // namespace stevmfe::driver
