#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "stevmfe/convergence.hpp"
#include "stevmfe/fields_io.hpp"
#include "support.hpp"

using namespace stevmfe;
using namespace testsup;
namespace fs = std::filesystem;

namespace {

std::string tmpdir() {
  static int counter = 0;
  const auto dir = fs::temp_directory_path() / ("stevmfe_test_" + std::to_string(counter++));
  fs::create_directories(dir);
  return dir.string();
}

std::string write_file(const std::string& dir, const std::string& name, const std::string& text) {
  const auto path = fs::path(dir) / name;
  std::ofstream out(path);
  out << text;
  return path.string();
}

const char* kTracerConfig = R"({
  "model": {
    "kind": "single_phase_tracer",
    "fluid": {"rho_ref": 64.0, "p_ref": 1000.0, "compressibility": 1e-6, "viscosity": 1.0},
    "diffusion": 0.1,
    "initial_pressure": 1000.0,
    "initial_concentration": 0.0,
    "wells": [
      {"type": "injector", "subdomain": 0, "cell": [0, 0], "rate_stb_per_day": 4.0, "concentration": 1.0},
      {"type": "producer", "subdomain": 2, "cell": [21, 1], "bhp_psi": 1000.0}
    ]
  },
  "mesh": {
    "dim": 2,
    "domain": {"lo": [0, 0], "hi": [110, 30]},
    "t_end": 100.0,
    "subdomains": [
      {"id": 0, "role": "fine", "box": {"lo": [0, 0], "hi": [20, 20]}, "cells": [40, 40], "dt": 1.0,
       "permeability": 50.0, "porosity": 0.2},
      {"id": 1, "box": {"lo": [20, 0], "hi": [110, 20]}, "cells": [18, 4], "dt": 5.0,
       "permeability": 50.0, "porosity": 0.2},
      {"id": 2, "box": {"lo": [0, 20], "hi": [110, 30]}, "cells": [22, 2], "dt": 5.0,
       "permeability": 50.0, "porosity": 0.2}
    ]
  },
  "solver": {"tolerance": 1e-9, "max_iterations": 20},
  "output": {"directory": "out", "formats": ["csv"], "cadence": 1}
})";

}  // namespace

TEST_CASE("config parsing accepts the transport configuration") {
  const auto cfg = driver::parse_config(kTracerConfig);
  CHECK(cfg.model.kind == models::ModelKind::SinglePhaseTracer);
  CHECK(cfg.model.wells.size() == 2);
  CHECK(cfg.model.diffusion == 0.1);
  CHECK(cfg.solver.tolerance == 1e-9);
  CHECK(cfg.mesh.subdomains.size() == 3);
  CHECK(cfg.mesh.subdomains[0].role == "fine");
  const auto m = mesh::SpaceTimeMesh::build(cfg.mesh);
  CHECK(m.matching_time_ratios() == std::vector<int>{5, 5, 1});
}

TEST_CASE("config validation rejects invariant violations with field paths") {
  auto patch = [&](const std::string& needle, const std::string& replacement) {
    std::string text = kTracerConfig;
    const auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, needle.size(), replacement);
    return text;
  };
  auto expect_error = [](const std::string& text, const char* fragment) {
    try {
      driver::parse_config(text);
      FAIL_CHECK("expected ConfigError containing: " << fragment);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  expect_error(patch("\"viscosity\": 1.0", "\"viscosity\": 0.0"), "model.fluid.viscosity");
  expect_error(patch("\"diffusion\": 0.1", "\"diffusion\": -1"), "model.diffusion");
  expect_error(patch("\"porosity\": 0.2}\n    ]", "\"porosity\": 1.5}\n    ]"),
               "porosity");
  expect_error(patch("\"permeability\": 50.0, \"porosity\": 0.2}\n    ]",
                     "\"permeability\": -3, \"porosity\": 0.2}\n    ]"),
               "permeability");
  expect_error(patch("\"cell\": [21, 1]", "\"cell\": [40, 1]"), "wells[1].cell");
  expect_error(patch("\"rate_stb_per_day\": 4.0", "\"rate_stb_per_day\": -1"),
               "rate_stb_per_day");
  expect_error(patch("\"dt\": 5.0,\n       \"permeability\": 50.0, \"porosity\": 0.2}\n    ]",
                     "\"dt\": 0,\n       \"permeability\": 50.0, \"porosity\": 0.2}\n    ]"),
               "dt");
  expect_error(patch("\"tolerance\": 1e-9", "\"tolerance\": -1"), "solver.tolerance");
  // two-phase rejects Dirichlet sides
  std::string two_phase = R"({
    "model": {"kind": "two_phase",
      "oil": {"rho_ref": 53, "viscosity": 3, "compressibility": 1e-4, "p_ref": 1000},
      "water": {"rho_ref": 64, "viscosity": 1, "compressibility": 3e-6, "p_ref": 1000},
      "initial_pressure": 1000, "initial_water_saturation": 0.2,
      "boundary": {"x_lo": {"pressure": 500.0}}},
    "mesh": {"dim": 2, "domain": {"lo": [0,0], "hi": [10,10]}, "t_end": 1,
      "subdomains": [{"box": {"lo": [0,0], "hi": [10,10]}, "cells": [2,2], "dt": 1}]}
  })";
  expect_error(two_phase, "no-flow");
}

TEST_CASE("scalar field ingestion") {
  const auto dir = tmpdir();
  SUBCASE("values map lexicographically") {
    const auto path = write_file(dir, "k.txt", "1 2\n3 4\n");
    const auto v = driver::read_scalar_field(path, 4);
    CHECK(v == std::vector<Scalar>{1, 2, 3, 4});
  }
  SUBCASE("count mismatch names both counts") {
    const auto path = write_file(dir, "short.txt", "1 2 3");
    try {
      driver::read_scalar_field(path, 4);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("expected 4") != std::string::npos);
      CHECK(std::string(e.what()).find("found 3") != std::string::npos);
    }
  }
  SUBCASE("non-numeric token names the line") {
    const auto path = write_file(dir, "bad.txt", "1 2\nx 4\n");
    try {
      driver::read_scalar_field(path, 4);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
  }
  SUBCASE("natural-log decoding") {
    const auto path = write_file(dir, "logk.txt", "0 1\n2 3\n");
    const auto v = driver::read_scalar_field(path, 4, true);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[1] == doctest::Approx(std::exp(1.0)));
    CHECK(v[3] == doctest::Approx(std::exp(3.0)));
  }
}

TEST_CASE("field snapshots round-trip at full precision") {
  auto model = tracer_model();
  auto ms = split_square(2, 0.5, 2, 0.5);
  for (auto& s : ms.subdomains) {
    s.perm[0] = s.perm[1] = {50.0};
    s.porosity = {0.2};
  }
  const auto m = mesh::SpaceTimeMesh::build(ms);
  const auto dofs = mesh::DofMap::enumerate(m, 2);
  auto state = solver::initial_state(m, dofs, model);
  // fill with awkward values
  std::mt19937 rng(99);
  std::uniform_real_distribution<Scalar> u(900, 1100);
  for (auto& sub : state.values)
    for (auto& v : sub) v = u(rng) + 1.0 / 3.0;

  driver::OutputOptions opt;
  opt.directory = tmpdir();
  opt.csv = true;
  opt.vtk = true;
  opt.dat = true;
  driver::write_fields(m, model, state, opt);

  // parse the CSV back and compare bit-exactly
  std::ifstream in(fs::path(opt.directory) / "fields.csv");
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "subdomain,ix,iy,t,p,c");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int sub, ix, iy;
    Scalar t, p, c;
    ls >> sub >> ix >> iy >> t >> p >> c;
    const auto& s = m.subdomain(sub);
    const int level = static_cast<int>(std::lround(t / s.dt())) - 1;
    const int cell = s.cell_index({ix, iy});
    CHECK(p == state.value(sub, level, cell, 0, s.cell_count()));
    CHECK(c == state.value(sub, level, cell, 1, s.cell_count()));
    ++rows;
  }
  CHECK(rows == 2 * 2 * 2 * 2 * 2);  // 2 subs x 4 cells x 2 levels
  CHECK(fs::exists(fs::path(opt.directory) / "snap_sub0_l0.vtk"));
  CHECK(fs::exists(fs::path(opt.directory) / "grid_c_sub1_l1.dat"));
}

TEST_CASE("small CSV example: 2x2 grid, one field, one level") {
  auto model = linear_model(false);
  mesh::MeshSpec ms = unit_square(2, 1.0);
  const auto m = mesh::SpaceTimeMesh::build(ms);
  const auto dofs = mesh::DofMap::enumerate(m, 1);
  auto state = solver::initial_state(m, dofs, model);
  driver::OutputOptions opt;
  opt.directory = tmpdir();
  opt.vtk = false;
  driver::write_fields(m, model, state, opt);
  std::ifstream in(fs::path(opt.directory) / "fields.csv");
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 5);  // header + 4 data rows
}

TEST_CASE("space-time L2 error") {
  const auto m = mesh::SpaceTimeMesh::build(split_square(2, 0.5, 2, 0.5));
  const auto dofs = mesh::DofMap::enumerate(m, 1);
  auto model = linear_model();
  auto state = solver::initial_state(m, dofs, model);

  SUBCASE("exact midpoint values give zero error") {
    for (int si = 0; si < m.subdomain_count(); ++si) {
      const auto& s = m.subdomain(si);
      for (int level = 0; level < s.n_levels(); ++level)
        for (int c = 0; c < s.cell_count(); ++c) {
          const Coord xc = s.cell_center(c);
          state.values[si][static_cast<size_t>(level) * s.cell_count() + c] =
              models::manufactured_solution(xc[0], xc[1], (level + 0.5) * s.dt(), 1.0).p;
        }
    }
    const auto [ec, ef] = driver::l2_spacetime_error(m, state, [](Scalar x, Scalar y, Scalar t) {
      return models::manufactured_solution(x, y, t, 1.0).p;
    });
    CHECK(ec == doctest::Approx(0.0));
    CHECK(ef == doctest::Approx(0.0));
  }
  SUBCASE("single-element difference of 2 with |E| = 0.25 gives error 1") {
    mesh::MeshSpec one;
    one.dim = 2;
    one.domain_lo = {0, 0};
    one.domain_hi = {1, 0.5};
    one.t_end = 0.5;
    one.subdomains = {make_sub(0, {0, 0}, {1, 0.5}, {1, 1}, 0.5)};
    const auto m1 = mesh::SpaceTimeMesh::build(one);
    const auto d1 = mesh::DofMap::enumerate(m1, 1);
    auto st = solver::initial_state(m1, d1, linear_model(false));
    st.values[0][0] = 2.0;  // exact = 0
    const auto [ec, ef] = driver::l2_spacetime_error(
        m1, st, [](Scalar, Scalar, Scalar) { return 0.0; });
    CHECK(ec == doctest::Approx(1.0));
    CHECK(ef == doctest::Approx(0.0));
  }
}

TEST_CASE("degenerate single-level study emits one row") {
  driver::RunConfig cfg;
  cfg.mesh = corner_refined(10);
  cfg.model = linear_model();
  cfg.convergence = driver::ConvergenceSpec{1, 1.0};
  const auto report = driver::convergence_study(cfg);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].dof == 11080);  // 10 slabs x 1108 cell unknowns
  CHECK(report.rows[0].err_coarse > 0);
  CHECK(report.rows[0].err_fine > 0);
  CHECK(report.rows[0].max_newton_iters == 1);
  const auto dir = tmpdir();
  driver::write_error_report(report, dir + "/report.csv");
  std::ifstream in(dir + "/report.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "h_c,h_f,err_coarse,err_fine,DOF,CPUTIM");
}

TEST_CASE("run_simulation writes snapshots and reports") {
  auto cfg = driver::parse_config(kTracerConfig);
  // shrink to a quick smoke run
  cfg.mesh.t_end = 10.0;
  cfg.output.directory = tmpdir();
  cfg.output.vtk = false;
  cfg.solver.tolerance = 1e-6;
  const auto result = driver::run_simulation(cfg);
  CHECK(result.reports.size() == 2);
  CHECK(fs::exists(fs::path(cfg.output.directory) / "fields.csv"));
  CHECK(fs::exists(fs::path(cfg.output.directory) / "newton_reports.csv"));
  CHECK(fs::exists(fs::path(cfg.output.directory) / "mass_balance.csv"));
}
