#include <chrono>

#include "doctest.h"
#include "helpers.hpp"
#include "model_sizes.hpp"
#include "oracles.hpp"

using namespace rdao;
using rdao::test::kOrder;
using rdao::test::kPatients;
using rdao::test::kTable;

TEST_CASE("size reports reproduce the published model sizes") {
  const auto t0 = std::chrono::steady_clock::now();
  for (int p = 0; p < 5; ++p) {
    const auto& d = kPatients[p];
    for (int v = 0; v < 6; ++v) {
      PlanningConfig cfg;
      cfg.variant = kOrder[v];
      const SizeReport s = size_report(kOrder[v], {2, d.rows, d.cols, 6}, d.targets, 5, cfg);
      INFO("patient " << d.id << " " << to_string(kOrder[v]));
      CHECK(s.rows == kTable[p][v][0]);
      CHECK(s.variables == kTable[p][v][1]);
      CHECK(s.binaries == kTable[p][v][2]);
    }
  }
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 1.0);
}

TEST_CASE("structure-only sizes match fully assembled models") {
  auto in = test::make_instance(test::small_spec(2, 4, 3, 4, 5, 6));
  for (Variant v : kOrder)
    for (Symmetry s : {Symmetry::none, Symmetry::global_sort, Symmetry::two_angle_sort}) {
      PlanningConfig cfg = test::config_for(v);
      cfg.symmetry = s;
      const ModelInstance mi = assemble(v, in.problem, cfg);
      CHECK(mi.size == size_report(v, in.problem.geometry, 5, 5, cfg));
      CHECK(mi.size == mi.model.size());
      CHECK_NOTHROW(mi.model.validate());
    }
}

TEST_CASE("preallocated models drop the angle-choice variables") {
  auto in = test::make_instance(test::small_spec(2, 3, 3, 4, 4, 4));
  PlanningConfig cfg = test::config_for(Variant::dao);
  cfg.allocation = Allocation::preallocated;
  cfg.symmetry = Symmetry::per_angle_sort;
  const ModelInstance pre = assemble(Variant::dao, in.problem, cfg);
  const ModelInstance dec = assemble(Variant::dao, in.problem, test::config_for(Variant::dao));
  CHECK(pre.size.binaries == dec.size.binaries - 4 * 2);
  cfg.symmetry = Symmetry::global_sort;
  CHECK_THROWS_AS(assemble(Variant::dao, in.problem, cfg), ConfigError);
}

TEST_CASE("default big-M formula") {
  auto in = test::make_instance(test::small_spec(2, 3, 3, 2, 4, 4));
  const double maxd = in.data->dose.values().maxCoeff();
  CHECK(default_big_m(in.problem) == doctest::Approx(42.4 * 5 / maxd * 10));
}

TEST_CASE("MIP optimum equals exhaustive enumeration on two-aperture instances") {
  for (std::uint64_t seed : {3, 4}) {
    auto in = test::make_instance(test::small_spec(seed, 3, 3, 2, 4, 2));
    for (Variant v : {Variant::dao, Variant::dao_c, Variant::rdao, Variant::rdao_c}) {
      PlanningConfig cfg = test::config_for(v);
      cfg.big_m = 2000.0;
      const ModelInstance mi = assemble(v, in.problem, cfg);
      SolveOptions so;
      so.time_limit = 120;
      so.branch_priority = branch_priorities(mi);
      const SolveResult r = solve_mip(mi.model, so);
      REQUIRE(r.report.status == SolveStatus::optimal);
      const auto& u = in.problem.uncertainty;
      const auto verts = is_robust(v) ? oracle::simplex_box_vertices(u.lower(), u.upper())
                                      : std::vector<VectorXd>{u.nominal()};
      const auto bf = oracle::dao_bruteforce(in.data->dose, in.problem.structures,
                                             in.problem.geometry, u.nominal(), verts, 0.7, 0.3,
                                             2000.0, has_continuity(v));
      INFO(to_string(v) << " seed " << seed);
      CHECK(r.report.objective == doctest::Approx(bf.objective).epsilon(1e-7));
      // The decoded optimum is deliverable.
      const DecodedPlan dp = decode_plan(mi, r.assignment);
      CHECK(check_deliverability(dp.plan, has_continuity(v)).empty());
      CHECK(check_intensity_maps(aperture_maps(mi, r.assignment), in.problem.geometry,
                                 has_continuity(v), 1e-6)
                .empty());
    }
  }
}

TEST_CASE("oracle shape enumeration counts") {
  const BeamGeometry g{1, 3, 3, 1};
  CHECK(oracle::enumerate_shapes(g, 0, false).size() == 343);
  // Continuity: empty + one block [q1, q2] of overlapping intervals.
  const auto cont = oracle::enumerate_shapes(g, 0, true);
  CHECK(cont.size() < 343);
  CHECK(cont.size() > 6 * 3);
}
