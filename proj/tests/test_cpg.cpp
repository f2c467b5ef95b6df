#include "doctest.h"
#include "helpers.hpp"

using namespace rdao;

namespace {

// Surrogate on one angle with one aperture; `active` lists 0-based
// (row, col) cells carrying intensity.
CpgSurrogateResult hand_surrogate(int rows, int cols,
                                  const std::vector<std::pair<int, int>>& active,
                                  double level = 3.0) {
  CpgSurrogateResult s;
  s.geometry = {1, rows, cols, 1};
  s.w_lower = MatrixXd::Zero(rows * cols, 1);
  for (auto [q, k] : active) s.w_lower(s.geometry.beamlet(q, k, 0), 0) = level;
  s.m = MatrixXd::Constant(1, 1, active.empty() ? 0.0 : level);
  return s;
}

std::pair<int, int> window(const FluencePlan& p, int row) {
  REQUIRE(p.apertures[0].rows[row].has_value());
  return *p.apertures[0].rows[row];
}

const Variant kMip[] = {Variant::dao, Variant::dao_c, Variant::rdao, Variant::rdao_c};

}  // namespace

TEST_CASE("gap filling examples") {
  PlanningConfig cfg;
  cfg.symmetry = Symmetry::none;
  SUBCASE("all-zero surrogate gives empty apertures") {
    const FluencePlan p = gap_fill(hand_surrogate(3, 4, {}), cfg, true);
    CHECK(p.apertures[0].empty());
    CHECK(p.aggregate_fluence().isZero());
  }
  SUBCASE("interior gap of a row is filled") {
    const FluencePlan p = gap_fill(hand_surrogate(1, 6, {{0, 1}, {0, 4}}), cfg, false);
    CHECK(window(p, 0) == std::make_pair(1, 4));
    CHECK(p.apertures[0].intensity == 3.0);
    CHECK(check_deliverability(p, false).empty());
  }
  SUBCASE("disconnected rows are bridged and overlapped under continuity") {
    // Rows 1: cols 1-2 and 3: cols 5-6 (1-based), row 2 closed.
    const auto sur = hand_surrogate(3, 6, {{0, 0}, {0, 1}, {2, 4}, {2, 5}});
    const FluencePlan off = gap_fill(sur, cfg, false);
    CHECK_FALSE(off.apertures[0].rows[1].has_value());
    CHECK(check_deliverability(off, false).empty());
    CHECK_FALSE(check_deliverability(off, true).empty());

    const FluencePlan on = gap_fill(sur, cfg, true);
    CHECK(window(on, 0) == std::make_pair(0, 1));
    CHECK(window(on, 1) == std::make_pair(1, 1));
    CHECK(window(on, 2) == std::make_pair(1, 5));
    CHECK(check_deliverability(on, true).empty());
  }
  SUBCASE("indivisible budgets are rejected") {
    auto sur = hand_surrogate(2, 2, {{0, 0}});
    sur.geometry = {2, 2, 2, 3};
    CHECK_THROWS_AS(gap_fill(sur, cfg, false), ConfigError);
  }
}

TEST_CASE("surrogate properties") {
  auto in = test::make_instance(test::small_spec(5, 4, 4, 4, 6, 8));
  SUBCASE("alpha range and budget divisibility") {
    PlanningConfig cfg;
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(cpg_step2(in.problem, cfg), ConfigError);
    cfg.alpha = -0.1;
    CHECK_THROWS_AS(cpg_step2(in.problem, cfg), ConfigError);
    cfg.alpha = 0.4;
    Problem odd = in.problem;
    odd.geometry.num_apertures = 3;
    CHECK_THROWS_AS(cpg_step2(odd, cfg), ConfigError);
  }
  SUBCASE("m bounds every beamlet of its angle and aperture") {
    const auto sur = cpg_step2(in.problem, PlanningConfig{});
    const auto& g = sur.geometry;
    CHECK(sur.w_lower.minCoeff() >= 0.0);
    for (int th = 0; th < g.num_angles; ++th)
      for (int a = 0; a < g.apertures_per_angle(); ++a)
        for (int k = 0; k < g.beamlets_per_angle(); ++k)
          CHECK(sur.m(th, a) >= sur.w_lower(th * g.beamlets_per_angle() + k, a));
  }
  SUBCASE("alpha = 0 collapses to the fluence map problem") {
    for (Variant v : {Variant::dao, Variant::rdao}) {
      PlanningConfig cfg = test::config_for(v);
      cfg.alpha = 0.0;
      const auto sur = cpg_step2(in.problem, cfg);
      const auto bound = cpg_step1(in.problem, cfg);
      CHECK(sur.objective == doctest::Approx(bound.z_lower).epsilon(1e-9));
    }
  }
  SUBCASE("alpha sweep stays feasible and bounded below") {
    for (double alpha : {0.2, 0.4, 0.6, 0.8, 1.0}) {
      PlanningConfig cfg;
      cfg.alpha = alpha;
      const auto res = run_cpg(in.problem, cfg);
      CHECK(res.z_cpg >= res.z_lower - 1e-9);
      CHECK(res.gap() >= 0.0);
      CHECK(check_deliverability(res.plan, true).empty());
    }
  }
}

TEST_CASE("step one bounds") {
  auto in = test::make_instance(test::small_spec(8, 4, 3, 2, 5, 6));
  const double fmo = solve_lp(build_fmo(in.problem, PlanningConfig{})).report.objective;
  const double rfmo = solve_lp(build_rfmo(in.problem, PlanningConfig{})).report.objective;
  CHECK(cpg_step1(in.problem, test::config_for(Variant::dao)).z_lower ==
        doctest::Approx(fmo).epsilon(1e-12));
  CHECK(cpg_step1(in.problem, test::config_for(Variant::rdao_c)).z_lower ==
        doctest::Approx(rfmo).epsilon(1e-12));
  // Deterministic re-solve.
  CHECK(cpg_step1(in.problem, PlanningConfig{}).z_lower ==
        cpg_step1(in.problem, PlanningConfig{}).z_lower);
}

TEST_CASE("CPG plans are valid warm starts for every MIP variant") {
  int cases = 0;
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const int rows = 3 + static_cast<int>(seed % 4);
    const int cols = 3 + static_cast<int>(seed % 3);
    auto in = test::make_instance(test::small_spec(seed, rows, cols, seed % 2 ? 2 : 4, 6, 8));
    for (Variant v : kMip)
      for (Symmetry s : {Symmetry::none, Symmetry::global_sort, Symmetry::two_angle_sort}) {
        PlanningConfig cfg = test::config_for(v);
        cfg.symmetry = s;
        INFO("seed " << seed << " " << to_string(v) << " " << to_string(s));
        const CpgResult res = run_cpg(in.problem, cfg);
        CHECK(res.z_cpg >= res.z_lower - 1e-9);
        CHECK(check_deliverability(res.plan, has_continuity(v)).empty());
        // Gap filling only ever raises intensities.
        const VectorXd lower = res.surrogate.fluence();
        const VectorXd filled = res.plan.aggregate_fluence();
        CHECK(((filled - lower).array() >= -1e-9).all());

        cfg.big_m = covering_big_m(in.problem, res.plan);
        const ModelInstance mi = assemble(v, in.problem, cfg);
        const VectorXd x = generate_warm_start(res.plan, mi, in.problem);
        CHECK(validate_assignment(mi.model, x).empty());
        CHECK(mi.model.objective().dot(x) == doctest::Approx(res.z_cpg).epsilon(1e-9));
        const auto& L = mi.layout;
        for (int a = 0; a < L.geometry.num_apertures; ++a)
          for (int b = 0; b < L.num_beamlets(); ++b)
            CHECK(x[L.x_col(b, a)] == x[L.l_col(b, a)] + x[L.r_col(b, a)] - 1.0);
        ++cases;
      }
  }
  CHECK(cases == 12 * 4 * 3);
}

TEST_CASE("two-angle ordering of gap-filled apertures") {
  auto in = test::make_instance(test::small_spec(11, 5, 4, 6, 6, 8));
  PlanningConfig cfg;
  cfg.symmetry = Symmetry::two_angle_sort;
  const FluencePlan p = run_cpg(in.problem, cfg).plan;
  std::vector<double> first, second;
  for (int a = 0; a < 6; ++a)
    (p.apertures[a].angle == 0 ? first : second).push_back(p.aperture_total(a));
  REQUIRE(first.size() == 3);
  REQUIRE(second.size() == 3);
  CHECK(std::is_sorted(first.rbegin(), first.rend()));
  CHECK(std::is_sorted(second.begin(), second.end()));
}

TEST_CASE("warm starts reject mismatched plans") {
  auto in = test::make_instance(test::small_spec(3, 4, 4, 2, 6, 8));
  PlanningConfig cfg = test::config_for(Variant::dao_c);
  const ModelInstance mi = assemble(Variant::dao_c, in.problem, cfg);

  FluencePlan island = FluencePlan::empty(in.problem.geometry);
  island.apertures[0].intensity = 1.0;
  island.apertures[0].rows[0] = std::make_pair(0, 1);
  island.apertures[0].rows[2] = std::make_pair(0, 1);
  CHECK_THROWS_AS(generate_warm_start(island, mi, in.problem), ConfigError);

  FluencePlan other = FluencePlan::empty({2, 3, 4, 2});
  CHECK_THROWS_AS(generate_warm_start(other, mi, in.problem), ConfigError);

  FluencePlan hot = FluencePlan::empty(in.problem.geometry);
  hot.apertures[0].intensity = *mi.config.big_m * 2;
  hot.apertures[0].rows[0] = std::make_pair(0, 0);
  CHECK_THROWS_AS(generate_warm_start(hot, mi, in.problem), ConfigError);
}

TEST_CASE("empty plan on a fluence model") {
  auto in = test::make_instance(test::small_spec(3, 3, 3, 2, 4, 4));
  const ModelInstance mi = assemble(Variant::fmo, in.problem, test::config_for(Variant::fmo));
  const VectorXd x = generate_warm_start(FluencePlan::empty(in.problem.geometry), mi, in.problem);
  CHECK(x.isZero());
  CHECK_FALSE(validate_assignment(mi.model, x).empty());
}
