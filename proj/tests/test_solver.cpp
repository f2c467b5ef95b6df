#include <cstdlib>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace rdao;

namespace {

// min c'x s.t. A x <= b, 0 <= x, as a LinearModel.
LinearModel inequality_lp(const MatrixXd& A, const VectorXd& b, const VectorXd& c,
                          VarKind kind = VarKind::continuous) {
  LinearModel m;
  for (Index j = 0; j < c.size(); ++j) {
    m.add_variable("x" + std::to_string(j), kind, 0.0, kInf);
    m.add_objective(static_cast<int>(j), c[j]);
  }
  for (Index r = 0; r < A.rows(); ++r) {
    std::vector<Term> t;
    for (Index j = 0; j < A.cols(); ++j)
      if (A(r, j) != 0.0) t.push_back({static_cast<int>(j), A(r, j)});
    m.add_constraint(t, Sense::less_equal, b[r], "r");
  }
  return m;
}

std::string external_cmd() {
  return std::string("python3 ") + RDAO_SOURCE_DIR + "/tools/scipy_lp_solver.py";
}

}  // namespace

TEST_CASE("single-constraint LP") {
  LinearModel m;
  const int x = m.add_variable("x", VarKind::continuous, 0.0, kInf);
  m.add_objective(x, 1.0);
  m.add_constraint({{x, 1.0}}, Sense::greater_equal, 42.4, "dose");
  const SolveResult r = solve_lp(m);
  REQUIRE(r.report.status == SolveStatus::optimal);
  CHECK(r.report.objective == doctest::Approx(42.4));
  CHECK(r.assignment[0] == doctest::Approx(42.4));
  REQUIRE(r.duals.size() == 1);
  CHECK(r.duals[0] == doctest::Approx(1.0));
  CHECK(validate_assignment(m, r.assignment).empty());
}

TEST_CASE("random LPs agree with vertex enumeration") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 3, m = 2 + trial % 4;
    MatrixXd A(m + n, n);
    VectorXd b(m + n), c(n);
    for (int r = 0; r < m; ++r) {
      for (int j = 0; j < n; ++j) A(r, j) = U(rng);
      b[r] = U(rng) + 0.3;
    }
    // Box rows keep every instance bounded.
    A.bottomRows(n) = MatrixXd::Identity(n, n);
    b.tail(n).setConstant(5.0);
    for (int j = 0; j < n; ++j) c[j] = U(rng);
    const auto want = oracle::lp_vertex_enum(A, b, c);
    const SolveResult got = solve_lp(inequality_lp(A, b, c));
    if (!want) {
      CHECK(got.report.status == SolveStatus::infeasible);
      continue;
    }
    REQUIRE(got.report.status == SolveStatus::optimal);
    CHECK(got.report.objective == doctest::Approx(*want).epsilon(1e-9).scale(1.0));
    ++solved;
  }
  CHECK(solved > 100);
}

TEST_CASE("infeasible and unbounded LPs") {
  LinearModel m;
  const int x = m.add_variable("x", VarKind::continuous, 0.0, 1.0);
  m.add_constraint({{x, 1.0}}, Sense::greater_equal, 2.0, "r");
  CHECK(solve_lp(m).report.status == SolveStatus::infeasible);
  CHECK_FALSE(solve_lp(m).report.has_solution());

  LinearModel u;
  const int y = u.add_variable("y", VarKind::continuous, -kInf, kInf);
  u.add_objective(y, 1.0);
  u.add_constraint({{y, 1.0}}, Sense::less_equal, 3.0, "r");
  CHECK(solve_lp(u).report.status == SolveStatus::unbounded);
}

TEST_CASE("degenerate equality system matches the external path") {
  // Redundant equalities and a degenerate vertex.
  LinearModel m;
  for (int j = 0; j < 4; ++j) m.add_variable("x", VarKind::continuous, 0.0, kInf);
  m.add_objective(0, 1.0);
  m.add_objective(1, 2.0);
  m.add_objective(2, 0.5);
  m.add_objective(3, 1.5);
  m.add_constraint({{0, 1}, {1, 1}, {2, 1}, {3, 1}}, Sense::equal, 4.0, "sum");
  m.add_constraint({{0, 2}, {1, 2}, {2, 2}, {3, 2}}, Sense::equal, 8.0, "sum2");
  m.add_constraint({{0, 1}, {2, -1}}, Sense::equal, 0.0, "tie");
  m.add_constraint({{1, 1}, {3, 1}}, Sense::greater_equal, 0.0, "deg");
  const SolveResult r = solve_lp(m);
  REQUIRE(r.report.status == SolveStatus::optimal);
  CHECK(r.report.objective == doctest::Approx(3.0));
  CHECK(validate_assignment(m, r.assignment).empty());
  if (std::system("python3 -c 'import scipy' > /dev/null 2>&1") == 0) {
    const SolveResult e = solve_external(m, external_cmd(), {});
    REQUIRE(e.report.status == SolveStatus::optimal);
    CHECK(e.report.objective == doctest::Approx(r.report.objective).epsilon(1e-9));
  }
}

TEST_CASE("phantom FMO and RFMO agree with the external solver") {
  if (std::system("python3 -c 'import scipy' > /dev/null 2>&1") != 0) return;
  auto in = test::make_instance(test::small_spec(4, 4, 4, 2, 6, 8));
  for (bool robust : {false, true}) {
    PlanningConfig cfg;
    const LinearModel m = robust ? build_rfmo(in.problem, cfg) : build_fmo(in.problem, cfg);
    const SolveResult a = solve_lp(m);
    const SolveResult b = solve_external(m, external_cmd(), {});
    REQUIRE(a.report.status == SolveStatus::optimal);
    REQUIRE(b.report.status == SolveStatus::optimal);
    CHECK(a.report.objective == doctest::Approx(b.report.objective).epsilon(1e-7));
  }
}

TEST_CASE("small binary programs agree with exhaustive enumeration") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 6 + trial % 5;
    LinearModel m;
    VectorXd c(n), w(n);
    for (int j = 0; j < n; ++j) {
      m.add_variable("b", VarKind::binary, 0, 1);
      c[j] = -U(rng) - 0.1;
      w[j] = U(rng) + 0.1;
      m.add_objective(j, c[j]);
    }
    // A continuous slack variable couples in as well.
    const int s = m.add_variable("s", VarKind::continuous, 0.0, 1.0);
    m.add_objective(s, -0.3);
    std::vector<Term> knap, cover;
    for (int j = 0; j < n; ++j) knap.push_back({j, w[j]});
    knap.push_back({s, 1.0});
    m.add_constraint(knap, Sense::less_equal, 0.4 * w.sum(), "cap");
    cover.push_back({0, 1.0});
    cover.push_back({1, 1.0});
    m.add_constraint(cover, Sense::less_equal, 1.0, "pair");
    double best = kInf;
    for (long mask = 0; mask < (1L << n); ++mask) {
      double load = 0, val = 0;
      for (int j = 0; j < n; ++j)
        if ((mask >> j) & 1) {
          load += w[j];
          val += c[j];
        }
      if ((mask & 3) == 3) continue;
      const double room = 0.4 * w.sum() - load;
      if (room < 0) continue;
      val += -0.3 * std::min(1.0, room);
      best = std::min(best, val);
    }
    const SolveResult r = solve_mip(m);
    REQUIRE(r.report.status == SolveStatus::optimal);
    CHECK(r.report.objective == doctest::Approx(best).epsilon(1e-9));
    CHECK(r.report.gap <= 1e-9);
    CHECK(validate_assignment(m, r.assignment).empty());
  }
}

TEST_CASE("pure LP through solve_mip matches solve_lp") {
  auto in = test::make_instance(test::small_spec(4, 3, 3, 2, 4, 4));
  const LinearModel m = build_fmo(in.problem, PlanningConfig{});
  CHECK(solve_mip(m).report.objective == doctest::Approx(solve_lp(m).report.objective));
  CHECK_THROWS_AS(solve_lp(assemble(Variant::dao, in.problem, PlanningConfig{}).model),
                  ConfigError);
}

TEST_CASE("warm starts, limits and the incumbent log") {
  auto in = test::make_instance(test::small_spec(6, 5, 4, 4, 8, 8));
  PlanningConfig cfg = test::config_for(Variant::dao);
  const CpgResult cpg = run_cpg(in.problem, cfg);
  cfg.big_m = covering_big_m(in.problem, cpg.plan);
  const ModelInstance mi = assemble(Variant::dao, in.problem, cfg);
  const VectorXd ws = generate_warm_start(cpg.plan, mi, in.problem);

  SUBCASE("time limit keeps the best-so-far incumbent") {
    SolveOptions o;
    o.warm_start = ws;
    o.time_limit = 0.5;
    std::ostringstream log;
    o.log_incumbents = true;
    o.incumbent_log = &log;
    const SolveResult r = solve_mip(mi.model, o);
    CHECK(r.report.status == SolveStatus::limit);
    CHECK(r.report.has_solution());
    REQUIRE(!r.report.incumbents.empty());
    CHECK(r.report.incumbents[0].objective == doctest::Approx(cpg.z_cpg).epsilon(1e-9));
    CHECK(r.report.objective <= cpg.z_cpg + 1e-9);
    CHECK(r.report.best_bound <= r.report.objective + 1e-9);
    CHECK(validate_assignment(mi.model, r.assignment).empty());
    std::istringstream lines(log.str());
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
      ++count;
      CHECK(std::count(line.begin(), line.end(), '\t') == 3);
    }
    CHECK(count == static_cast<int>(r.report.incumbents.size()));
  }
  SUBCASE("node limit") {
    SolveOptions o;
    o.node_limit = 3;
    const SolveResult r = solve_mip(mi.model, o);
    CHECK(r.report.status == SolveStatus::limit);
    CHECK(r.report.nodes <= 3);
  }
  SUBCASE("infeasible warm start is rejected") {
    VectorXd bad = ws;
    bad[mi.layout.f_col(0)] = -1.0;
    SolveOptions o;
    o.warm_start = bad;
    try {
      solve_mip(mi.model, o);
      FAIL("expected rejection");
    } catch (const WarmStartRejected& e) {
      CHECK(!e.violations().empty());
    }
  }
  SUBCASE("invalid options") {
    SolveOptions o;
    o.time_limit = 0;
    CHECK_THROWS_AS(solve_mip(mi.model, o), ConfigError);
    o = SolveOptions{};
    o.rel_gap_target = -1;
    CHECK_THROWS_AS(solve_mip(mi.model, o), ConfigError);
    o = SolveOptions{};
    o.branch_priority = {1, 2};
    CHECK_THROWS_AS(solve_mip(mi.model, o), ConfigError);
  }
}

TEST_CASE("a single uniformity violation is reported exactly once") {
  auto in = test::make_instance(test::small_spec(6, 3, 3, 2, 4, 4));
  PlanningConfig cfg = test::config_for(Variant::rdao);
  cfg.symmetry = Symmetry::none;
  const CpgResult cpg = run_cpg(in.problem, cfg);
  cfg.big_m = covering_big_m(in.problem, cpg.plan);
  const ModelInstance mi = assemble(Variant::rdao, in.problem, cfg);
  VectorXd ws = generate_warm_start(cpg.plan, mi, in.problem);
  REQUIRE(validate_assignment(mi.model, ws).empty());
  const auto& L = mi.layout;
  int target = -1;
  for (int b = 0; b < L.num_beamlets() && target < 0; ++b)
    if (ws[L.x_col(b, 0)] < 0.5) target = b;
  REQUIRE(target >= 0);
  ws[L.w_col(target, 0)] = 1.0;
  const auto v = validate_assignment(mi.model, ws);
  REQUIRE(v.size() == 1);
  CHECK(v[0].row >= 0);
  CHECK(v[0].magnitude == doctest::Approx(1.0));
  CHECK(!v[0].describe().empty());
}

TEST_CASE("relative gap") {
  CHECK(relative_gap(10.0, 9.0) == doctest::Approx(0.1));
  CHECK(relative_gap(10.0, 10.0) == 0.0);
}
