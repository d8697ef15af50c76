#include "stevmfe/fields_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace stevmfe::driver {

namespace fs = std::filesystem;
using models::ModelKind;

std::vector<std::string> field_names(const models::ModelProblem& model) {
  switch (model.kind) {
    case ModelKind::LinearParabolic: return {"p"};
    case ModelKind::SinglePhaseTracer: return {"p", "c"};
    case ModelKind::TwoPhase: return {"p_o", "s_w"};
  }
  return {"p"};
}

std::vector<Scalar> read_scalar_field(const std::string& path, std::int64_t expected,
                                      bool log_scale) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open field file: " + path);
  std::vector<Scalar> values;
  values.reserve(expected > 0 ? expected : 0);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      try {
        size_t used = 0;
        const Scalar v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        values.push_back(log_scale ? std::exp(v) : v);
      } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(line_no) + ": non-numeric token \"" + tok + "\"");
      }
    }
  }
  if (static_cast<std::int64_t>(values.size()) != expected)
    throw IoError(path + ": expected " + std::to_string(expected) + " values, found " +
                  std::to_string(values.size()));
  return values;
}

namespace {

std::string fmt(Scalar v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_vtk_snapshot(const mesh::SpaceTimeMesh& mesh, const models::ModelProblem& model,
                        const solver::SimulationState& state, int sub, int level,
                        const std::string& path) {
  const auto& s = mesh.subdomain(sub);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  const int nx = s.cells()[0];
  const int ny = mesh.dim() > 1 ? s.cells()[1] : 1;
  out << "# vtk DataFile Version 3.0\n";
  out << "subdomain " << s.id() << " t=" << fmt((level + 1) * s.dt()) << "\n";
  out << "ASCII\nDATASET RECTILINEAR_GRID\n";
  out << "DIMENSIONS " << nx + 1 << " " << ny + 1 << " 1\n";
  out << "X_COORDINATES " << nx + 1 << " double\n";
  for (int i = 0; i <= nx; ++i) out << fmt(s.origin()[0] + i * s.h(0)) << (i == nx ? "\n" : " ");
  out << "Y_COORDINATES " << ny + 1 << " double\n";
  if (mesh.dim() > 1)
    for (int i = 0; i <= ny; ++i) out << fmt(s.origin()[1] + i * s.h(1)) << (i == ny ? "\n" : " ");
  else
    out << "0 1\n";
  out << "Z_COORDINATES 1 double\n0\n";
  out << "CELL_DATA " << s.cell_count() << "\n";
  const auto names = field_names(model);
  for (size_t f = 0; f < names.size(); ++f) {
    out << "SCALARS " << names[f] << " double 1\nLOOKUP_TABLE default\n";
    for (int c = 0; c < s.cell_count(); ++c)
      out << fmt(state.value(sub, level, c, static_cast<int>(f), s.cell_count())) << "\n";
  }
}

void write_dat_snapshot(const mesh::SpaceTimeMesh& mesh, const models::ModelProblem& model,
                        const solver::SimulationState& state, int sub, int level,
                        const std::string& dir) {
  const auto& s = mesh.subdomain(sub);
  const auto names = field_names(model);
  for (size_t f = 0; f < names.size(); ++f) {
    std::ostringstream name;
    name << "grid_" << names[f] << "_sub" << s.id() << "_l" << level << ".dat";
    std::ofstream out(fs::path(dir) / name.str());
    if (!out) throw IoError("cannot write " + name.str());
    const int ny = mesh.dim() > 1 ? s.cells()[1] : 1;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < s.cells()[0]; ++i) {
        const int c = i + s.cells()[0] * j;
        const Coord xc = s.cell_center(c);
        out << fmt(xc[0]) << " " << fmt(xc[1]) << " "
            << fmt(state.value(sub, level, c, static_cast<int>(f), s.cell_count())) << "\n";
      }
      out << "\n";
    }
  }
}

}  // namespace

void write_fields(const mesh::SpaceTimeMesh& mesh, const models::ModelProblem& model,
                  const solver::SimulationState& state, const OutputOptions& opt) {
  fs::create_directories(opt.directory);
  const auto names = field_names(model);

  if (opt.csv) {
    std::ofstream out(fs::path(opt.directory) / "fields.csv");
    if (!out) throw IoError("cannot write fields.csv");
    out << "subdomain,ix,iy,t";
    for (const auto& n : names) out << "," << n;
    out << "\n";
    for (int si = 0; si < mesh.subdomain_count(); ++si) {
      const auto& s = mesh.subdomain(si);
      for (int level = 0; level < s.n_levels(); ++level) {
        if (level % opt.cadence != 0 && level != s.n_levels() - 1) continue;
        for (int c = 0; c < s.cell_count(); ++c) {
          const IndexVec idx = s.cell_multi_index(c);
          out << s.id() << "," << idx[0] << "," << idx[1] << "," << fmt((level + 1) * s.dt());
          for (size_t f = 0; f < names.size(); ++f)
            out << "," << fmt(state.value(si, level, c, static_cast<int>(f), s.cell_count()));
          out << "\n";
        }
      }
    }
  }
  for (int si = 0; si < mesh.subdomain_count(); ++si) {
    const auto& s = mesh.subdomain(si);
    for (int level = 0; level < s.n_levels(); ++level) {
      if (level % opt.cadence != 0 && level != s.n_levels() - 1) continue;
      if (opt.vtk) {
        std::ostringstream name;
        name << "snap_sub" << s.id() << "_l" << level << ".vtk";
        write_vtk_snapshot(mesh, model, state, si, level,
                           (fs::path(opt.directory) / name.str()).string());
      }
      if (opt.dat) write_dat_snapshot(mesh, model, state, si, level, opt.directory);
    }
  }
}

void write_newton_reports(const std::vector<solver::NewtonReport>& reports,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "slab,iterations,converged,final_residual,reduced_nonzeros,linear_solves,"
         "factor_seconds,solve_seconds\n";
  for (const auto& r : reports) {
    out << r.slab << "," << r.iterations << "," << (r.converged ? 1 : 0) << ","
        << fmt(r.residual_history.empty() ? 0.0 : r.residual_history.back()) << ","
        << r.reduced_nonzeros << "," << r.linear_solves << "," << fmt(r.factor_seconds) << ","
        << fmt(r.solve_seconds) << "\n";
  }
}

void write_mass_balance(const std::vector<solver::MassBalanceRow>& rows,
                        const models::ModelProblem& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  const bool two_phase = model.kind == ModelKind::TwoPhase;
  const char* f0 = two_phase ? "total" : "fluid";
  const char* f1 = two_phase ? "water" : "tracer";
  out << "slab";
  for (const char* f : {f0, f1})
    out << ",injected_" << f << ",produced_" << f << ",accumulated_" << f << ",boundary_out_" << f
        << ",defect_" << f;
  out << "\n";
  for (const auto& r : rows) {
    out << r.slab;
    for (int f = 0; f < 2; ++f)
      out << "," << fmt(r.injected[f]) << "," << fmt(r.produced[f]) << ","
          << fmt(r.accumulated[f]) << "," << fmt(r.boundary_out[f]) << "," << fmt(r.defect[f]);
    out << "\n";
  }
}

}  // namespace stevmfe::driver
