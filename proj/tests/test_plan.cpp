#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

using namespace rdao;

namespace {

bool has_kind(const std::vector<DeliverabilityIssue>& v, IssueKind k) {
  return std::any_of(v.begin(), v.end(), [&](const auto& i) { return i.kind == k; });
}

FluencePlan random_plan(std::mt19937_64& rng, const BeamGeometry& g) {
  FluencePlan p = FluencePlan::empty(g);
  std::uniform_int_distribution<int> angle(0, g.num_angles - 1), col(0, g.num_cols - 1);
  std::uniform_real_distribution<double> inten(0.1, 10.0);
  for (auto& ap : p.apertures) {
    ap.angle = angle(rng);
    ap.intensity = inten(rng);
    for (auto& row : ap.rows) {
      if (rng() % 3 == 0) continue;
      int a = col(rng), b = col(rng);
      row = std::make_pair(std::min(a, b), std::max(a, b));
    }
  }
  return p;
}

}  // namespace

TEST_CASE("plan text round trip") {
  std::mt19937_64 rng(9);
  const BeamGeometry g{2, 4, 5, 4};
  for (int k = 0; k < 20; ++k) {
    const FluencePlan p = random_plan(rng, g);
    std::stringstream ss;
    write_plan(ss, p);
    const FluencePlan q = read_plan(ss);
    CHECK(q.geometry == g);
    REQUIRE(q.apertures.size() == p.apertures.size());
    for (std::size_t a = 0; a < p.apertures.size(); ++a) {
      CHECK(q.apertures[a].angle == p.apertures[a].angle);
      CHECK(q.apertures[a].intensity == p.apertures[a].intensity);
      CHECK(q.apertures[a].rows == p.apertures[a].rows);
    }
  }
}

TEST_CASE("plan text format is 1-based") {
  FluencePlan p = FluencePlan::empty({1, 2, 3, 1});
  p.apertures[0].intensity = 2.5;
  p.apertures[0].rows[1] = std::make_pair(0, 2);
  std::stringstream ss;
  write_plan(ss, p);
  CHECK(ss.str() == "1 2 3 1\n1 2.5\n- -\n1 3\n");
}

TEST_CASE("malformed plan files") {
  for (const char* text : {"1 2 3\n", "1 1 3 1\n2 1.0\n1 1\n", "1 1 3 1\n1 x\n1 1\n",
                           "1 1 3 1\n1 1.0\n3 1\n", "1 1 3 1\n1 1.0\n1 4\n",
                           "1 1 3 1\n1 1.0\n", "1 1 3 1\n1 1.0\n1 1\nextra\n"}) {
    std::stringstream ss(text);
    INFO(text);
    CHECK_THROWS_AS(read_plan(ss), FormatError);
  }
  CHECK_THROWS_AS(load_plan("/nonexistent/plan.txt"), NotFoundError);
}

TEST_CASE("checker examples on intensity maps") {
  const BeamGeometry g{1, 2, 8, 1};
  auto map_of = [&](std::vector<std::pair<int, int>> cells) {
    VectorXd w = VectorXd::Zero(g.num_beamlets());
    for (auto [q, k] : cells) w[g.beamlet(q, k, 0)] = 1.0;
    return w;
  };
  SUBCASE("island inside a row") {
    const auto issues = check_intensity_maps({map_of({{0, 1}, {0, 2}, {0, 5}})}, g, false);
    CHECK(has_kind(issues, IssueKind::island));
  }
  SUBCASE("rows sharing no column") {
    // Row windows [1,3] and [5,7] (1-based).
    std::vector<std::pair<int, int>> cells;
    for (int k = 0; k < 3; ++k) cells.push_back({0, k});
    for (int k = 4; k < 7; ++k) cells.push_back({1, k});
    CHECK(check_intensity_maps({map_of(cells)}, g, false).empty());
    CHECK(has_kind(check_intensity_maps({map_of(cells)}, g, true), IssueKind::horizontal));
  }
  SUBCASE("rows touching at one column") {
    // [1,3] and [3,7]
    std::vector<std::pair<int, int>> cells;
    for (int k = 0; k < 3; ++k) cells.push_back({0, k});
    for (int k = 2; k < 7; ++k) cells.push_back({1, k});
    CHECK(check_intensity_maps({map_of(cells)}, g, true).empty());
  }
  SUBCASE("unequal intensity and two angles") {
    const BeamGeometry g2{2, 1, 2, 1};
    VectorXd w(4);
    w << 1.0, 2.0, 0.0, 0.0;
    CHECK(has_kind(check_intensity_maps({w}, g2, false), IssueKind::uniformity));
    w << 1.0, 0.0, 0.0, 1.0;
    CHECK(has_kind(check_intensity_maps({w}, g2, false), IssueKind::angle));
  }
}

TEST_CASE("checker on plans") {
  FluencePlan p = FluencePlan::empty({1, 4, 6, 2});
  p.apertures[0].intensity = 1.0;
  p.apertures[0].rows[0] = std::make_pair(0, 2);
  p.apertures[0].rows[2] = std::make_pair(1, 3);
  CHECK(check_deliverability(p, false).empty());
  CHECK(has_kind(check_deliverability(p, true), IssueKind::vertical));
  p.apertures[0].rows[1] = std::make_pair(2, 2);
  CHECK(check_deliverability(p, true).empty());
  p.apertures[1].rows[0] = std::make_pair(4, 9);
  CHECK(has_kind(check_deliverability(p, false), IssueKind::shape));
  p.apertures[1].rows[0] = std::make_pair(0, 0);
  p.apertures[1].intensity = -1.0;
  CHECK(has_kind(check_deliverability(p, false), IssueKind::shape));
  p.apertures.pop_back();
  CHECK(has_kind(check_deliverability(p, false), IssueKind::shape));
}

TEST_CASE("plan fluence and scaling") {
  FluencePlan p = FluencePlan::empty({2, 2, 3, 2});
  p.apertures[0] = {0, 2.0, {std::make_pair(0, 1), std::nullopt}};
  p.apertures[1] = {1, 3.0, {std::make_pair(1, 1), std::make_pair(0, 2)}};
  const VectorXd w = p.aggregate_fluence();
  VectorXd want(12);
  want << 2, 2, 0, 0, 0, 0, 0, 3, 0, 3, 3, 3;
  CHECK(w == want);
  CHECK(p.aperture_total(1) == 12.0);
  CHECK(p.apertures_used() == 2);
  CHECK(p.scaled(0.5).aggregate_fluence() == want * 0.5);
  CHECK_THROWS_AS(p.scaled(0.0), RangeError);

  std::ostringstream csv;
  write_fluence_csv(csv, w, p.geometry, 1);
  CHECK(csv.str() == "0,3,0\n3,3,3\n");
  std::ostringstream pgm;
  write_fluence_pgm(pgm, w, p.geometry, 0, false);
  CHECK(pgm.str().rfind("P5\n3 2\n255\n", 0) == 0);
  CHECK(pgm.str().size() == std::string("P5\n3 2\n255\n").size() + 6);
}
