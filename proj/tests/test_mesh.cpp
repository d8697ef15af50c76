#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support.hpp"

using namespace stevmfe;
using namespace testsup;

TEST_CASE("single subdomain unit cube tiles exactly") {
  const auto m = mesh::SpaceTimeMesh::build(unit_square(10, 0.1));
  CHECK(m.element_count() == 1000);
  CHECK(m.patches().empty());
  CHECK(m.n_slabs() == 10);
  CHECK(m.total_spacetime_measure() == doctest::Approx(m.domain_spacetime_measure()).epsilon(1e-12));
}

TEST_CASE("conforming split produces matching sub-faces with one DOF each") {
  const auto m = mesh::SpaceTimeMesh::build(split_square(5, 0.1, 5, 0.1));
  REQUIRE(m.patches().size() == 1);
  const auto& p = m.patches()[0];
  CHECK(p.time_ratio == 1);
  CHECK(p.space_ratio[1] == 1);
  CHECK(p.subface_count_per_level() == 10);
  const auto subs = m.subfaces(0);
  for (const auto& sf : subs) {
    CHECK(sf.measure == doctest::Approx(0.1 * 0.1));
    CHECK(sf.fine_elem.t_lo == doctest::Approx(sf.coarse_elem.t_lo));
  }
  const auto dofs = mesh::DofMap::enumerate(m, 1);
  // both sides of every covered face resolve to the same shared DOF ids
  for (int level = 0; level < 10; ++level)
    for (const auto& spf : p.spatial) {
      const auto fine_dof = dofs.flux_dof(p.fine_sub, level, spf.fine_face);
      const auto covered = dofs.covered_face_dofs(m, 0, level, spf.coarse_face);
      REQUIRE(covered.size() == 1);
      CHECK(covered[0] == fine_dof);
      CHECK(dofs.flux_dof(p.coarse_sub, level, spf.coarse_face) == -1);
    }
}

TEST_CASE("field-scale refinement ratios 10 in space and 5 in time are accepted") {
  mesh::MeshSpec ms;
  ms.dim = 2;
  ms.domain_lo = {0, 0};
  ms.domain_hi = {110, 30};
  ms.t_end = 100;
  ms.subdomains = {
      make_sub(0, {0, 0}, {20, 20}, {40, 40}, 1.0, "fine"),
      make_sub(1, {20, 0}, {110, 20}, {18, 4}, 5.0),
      make_sub(2, {0, 20}, {110, 30}, {22, 2}, 5.0),
  };
  const auto m = mesh::SpaceTimeMesh::build(ms);
  REQUIRE(m.patches().size() == 3);
  const auto ratios = m.matching_time_ratios();
  for (const auto& p : m.patches()) {
    const int tan = p.axis == 0 ? 1 : 0;
    if (p.fine_sub == 0) CHECK(p.space_ratio[tan] == 10);
  }
  CHECK(ratios[0] == 5);
  CHECK(m.n_slabs() == 20);
  CHECK(m.total_spacetime_measure() ==
        doctest::Approx(m.domain_spacetime_measure()).epsilon(1e-12));
}

TEST_CASE("trace intersection: time ratio 3 with matching spatial grids") {
  const auto ms = split_interval(4, 1.0 / 12, 2, 0.25);
  const auto m = mesh::SpaceTimeMesh::build(ms);
  REQUIRE(m.patches().size() == 1);
  const auto& p = m.patches()[0];
  CHECK(p.time_ratio == 3);
  CHECK(p.subface_count_per_level() == 1);
  // each coarse space-time face is covered by 3 sub-faces at consecutive fine levels
  const auto dofs = mesh::DofMap::enumerate(m, 1);
  const auto covered = dofs.covered_face_dofs(m, 0, 0, p.spatial[0].coarse_face);
  CHECK(covered.size() == 3);
  const auto views = m.subfaces(0);
  Scalar sum = 0;
  for (int k = 0; k < 3; ++k) {
    CHECK(views[k].coarse_elem.level == 0);
    CHECK(views[k].fine_elem.level == k);
    sum += views[k].measure;
  }
  CHECK(sum == doctest::Approx(0.25).epsilon(1e-12));  // coarse face measure = 1 * dt_c
}

TEST_CASE("trace intersection: spatial ratio 2 and time ratio 3 tile each coarse face") {
  // exhaustive enumeration oracle of the 2x3 tiling
  const int rs = 2, rt = 3;
  const auto ms = split_square(8, 1.0 / 12, 4, 0.25);  // h: 1/16 vs 1/8, dt ratio 3
  const auto m = mesh::SpaceTimeMesh::build(ms);
  REQUIRE(m.patches().size() == 1);
  const auto& p = m.patches()[0];
  CHECK(p.space_ratio[1] == rs);
  CHECK(p.time_ratio == rt);

  const auto& coarse = m.subdomain(p.coarse_sub);
  const auto views = m.subfaces(0);
  // group sub-face measures per coarse space-time face and compare with the
  // enumerated tiling: rs*rt tiles of measure (h_f_tan * dt_f) each
  for (int clevel = 0; clevel < coarse.n_levels(); ++clevel) {
    for (const auto& spf : p.spatial) {
      Scalar covered = 0;
      int count = 0;
      for (const auto& v : views)
        if (v.coarse_elem.level == clevel && v.coarse_elem.cell == spf.coarse_cell &&
            v.fine_elem.t_hi <= (clevel + 1) * coarse.dt() + 1e-12) {
          // tangential containment: the fine cell's span lies inside the coarse cell's
          const auto fidx = v.fine_elem.idx;
          const auto cidx = v.coarse_elem.idx;
          if (fidx[1] / rs == cidx[1] && v.fine_elem.t_lo >= clevel * coarse.dt() - 1e-12) {
            covered += v.measure;
            ++count;
          }
        }
      CHECK(count == rs * rt);
      const Scalar coarse_face_measure = coarse.h(1) * coarse.dt();
      CHECK(covered == doctest::Approx(coarse_face_measure).epsilon(1e-12));
    }
  }
}

TEST_CASE("identical grids intersect into one sub-face per face with equal measures") {
  const auto a = mesh::Subdomain(make_sub(0, {0, 0}, {0.5, 1}, {2, 4}, 0.25), 2, 1.0);
  const auto b = mesh::Subdomain(make_sub(1, {0.5, 0}, {1, 1}, {2, 4}, 0.25), 2, 1.0);
  const auto patch = mesh::intersect_traces(a, b, 2);
  CHECK(patch.time_ratio == 1);
  CHECK(patch.spatial.size() == 4);
  for (const auto& sf : patch.spatial) CHECK(sf.area == doctest::Approx(0.25));
}

TEST_CASE("zero-measure intersection yields an empty patch") {
  const auto a = mesh::Subdomain(make_sub(0, {0, 0}, {0.5, 0.5}, {2, 2}, 0.5), 2, 1.0);
  const auto b = mesh::Subdomain(make_sub(1, {0.5, 0.5}, {1, 1}, {2, 2}, 0.5), 2, 1.0);
  const auto patch = mesh::intersect_traces(a, b, 2);
  CHECK(patch.spatial.empty());
}

TEST_CASE("non-integer refinement ratios are rejected") {
  SUBCASE("time") {
    const auto ms = split_interval(2, 0.4, 2, 1.0);
    CHECK_THROWS_AS(mesh::SpaceTimeMesh::build(ms), MeshError);
  }
  SUBCASE("space") {
    auto ms = split_square(3, 0.5, 2, 0.5);  // tangential h: 1/6 vs 1/4
    CHECK_THROWS_AS(mesh::SpaceTimeMesh::build(ms), MeshError);
  }
}

TEST_CASE("matching-time ratios are validated per interface") {
  SUBCASE("l = 5") {
    const auto m = mesh::SpaceTimeMesh::build(split_interval(10, 1, 2, 5, 100));
    CHECK(m.matching_time_ratios() == std::vector<int>{5});
  }
  SUBCASE("l = 1") {
    const auto m = mesh::SpaceTimeMesh::build(split_interval(2, 0.5, 2, 0.5));
    CHECK(m.matching_time_ratios() == std::vector<int>{1});
  }
  SUBCASE("l = 3") {
    const auto m = mesh::SpaceTimeMesh::build(split_interval(2, 1, 2, 3, 12));
    CHECK(m.matching_time_ratios() == std::vector<int>{3});
  }
}

TEST_CASE("configuration errors: overlap, gap, bad sizes") {
  mesh::MeshSpec ms = unit_square(4, 0.25);
  SUBCASE("overlap") {
    ms.subdomains.push_back(make_sub(1, {0.5, 0}, {1, 1}, {2, 4}, 0.25));
    CHECK_THROWS_WITH_AS(mesh::SpaceTimeMesh::build(ms), doctest::Contains("overlap"), MeshError);
  }
  SUBCASE("gap") {
    ms.subdomains[0] = make_sub(0, {0, 0}, {0.5, 1}, {2, 4}, 0.25);
    CHECK_THROWS_WITH_AS(mesh::SpaceTimeMesh::build(ms), doctest::Contains("gap"), MeshError);
  }
  SUBCASE("non-positive dt") {
    ms.subdomains[0].dt = 0;
    CHECK_THROWS_AS(mesh::SpaceTimeMesh::build(ms), MeshError);
  }
  SUBCASE("dt not dividing the slab") {
    ms.subdomains[0] = make_sub(0, {0, 0}, {0.5, 1}, {2, 4}, 0.4);
    ms.subdomains.push_back(make_sub(1, {0.5, 0}, {1, 1}, {2, 4}, 1.0));
    CHECK_THROWS_AS(mesh::SpaceTimeMesh::build(ms), MeshError);
  }
}

TEST_CASE("DOF enumeration: 1D two-cell single-level mesh has 5 DOFs") {
  mesh::MeshSpec ms;
  ms.dim = 1;
  ms.domain_lo = {0, 0};
  ms.domain_hi = {1, 1};
  ms.t_end = 1.0;
  ms.subdomains = {make_sub(0, {0, 0}, {1, 0}, {2, 1}, 1.0)};
  const auto m = mesh::SpaceTimeMesh::build(ms);
  const auto dofs = mesh::DofMap::enumerate(m, 1);
  CHECK(dofs.n_cell_unknowns() == 2);
  CHECK(dofs.n_flux_interior() == 1);
  CHECK(dofs.n_flux_boundary() == 2);
  CHECK(dofs.total() == 5);
}

TEST_CASE("conforming degeneration: split mesh has the DOF total of the single mesh") {
  const auto whole = mesh::DofMap::enumerate(mesh::SpaceTimeMesh::build(unit_square(4, 0.25)), 1);
  const auto split = mesh::DofMap::enumerate(
      mesh::SpaceTimeMesh::build(split_square(2, 0.25, 2, 0.25)), 1);
  CHECK(whole.total() == split.total());
  CHECK(whole.n_cell_unknowns() == split.n_cell_unknowns());
  CHECK(whole.n_flux_interior() + whole.n_flux_boundary() ==
        split.n_flux_interior() + split.n_flux_boundary() + split.n_flux_interface());
}

TEST_CASE("non-matching interface carries one DOF per fine sub-face") {
  const auto m = mesh::SpaceTimeMesh::build(split_interval(2, 1, 2, 3, 3));
  const auto dofs = mesh::DofMap::enumerate(m, 1);
  // single slab of length 3: fine side has 3 levels, one interface face each
  CHECK(dofs.n_flux_interface() == 3);
  const auto& p = m.patches()[0];
  const auto covered = dofs.covered_face_dofs(m, 0, 0, p.spatial[0].coarse_face);
  REQUIRE(covered.size() == 3);
  for (int k = 0; k < 3; ++k)
    CHECK(covered[k] == dofs.flux_dof(p.fine_sub, k, p.spatial[0].fine_face));
}

TEST_CASE("randomized partition and sharing properties") {
  std::mt19937 rng(20240817);
  for (int trial = 0; trial < 25; ++trial) {
    const int rs = 1 + static_cast<int>(rng() % 3);
    const int rt = 1 + static_cast<int>(rng() % 4);
    const int nc = 1 + static_cast<int>(rng() % 3);
    const int steps = 1 + static_cast<int>(rng() % 3);
    const Scalar dt_c = 1.0 / steps;
    const auto ms = split_square(rs * nc, dt_c / rt, nc, dt_c);
    const auto m = mesh::SpaceTimeMesh::build(ms);

    // partition of the space-time domain
    CHECK(m.total_spacetime_measure() ==
          doctest::Approx(m.domain_spacetime_measure()).epsilon(1e-12));

    REQUIRE(m.patches().size() == 1);
    const auto& p = m.patches()[0];
    CHECK(p.time_ratio == rt);

    // interface partition: sub-face measures sum to the trace intersection measure
    Scalar sum = 0;
    for (const auto& v : m.subfaces(0)) sum += v.measure;
    CHECK(sum == doctest::Approx(p.intersection_area * 1.0).epsilon(1e-12));

    // shared DOFs: the coarse-side lookups cover every interface DOF exactly once
    const auto dofs = mesh::DofMap::enumerate(m, 1);
    std::vector<int> coarse_faces;
    for (const auto& spf : p.spatial)
      if (std::find(coarse_faces.begin(), coarse_faces.end(), spf.coarse_face) ==
          coarse_faces.end())
        coarse_faces.push_back(spf.coarse_face);
    std::vector<std::int64_t> seen;
    const auto& coarse = m.subdomain(p.coarse_sub);
    for (int level = 0; level < coarse.n_levels(); ++level)
      for (int cf : coarse_faces)
        for (auto d : dofs.covered_face_dofs(m, 0, level, cf)) seen.push_back(d);
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
    CHECK(static_cast<std::int64_t>(seen.size()) == dofs.n_flux_interface());
  }
}
