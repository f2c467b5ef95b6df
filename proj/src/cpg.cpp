#include <fmt/format.h>

#include "rdao/cpg.hpp"

#include <algorithm>
#include <numeric>

namespace rdao {

namespace {

SolveResult solve_checked(const LinearModel& model, const SolveOptions& options,
                          const char* what) {
  SolveResult res = solve_lp(model, options);
  switch (res.report.status) {
    case SolveStatus::optimal:
      return res;
    case SolveStatus::infeasible:
      throw ModelInfeasibleError(fmt::format("{} is infeasible", what));
    case SolveStatus::unbounded:
      throw StateError(fmt::format("{} is unbounded", what));
    default:
      throw StateError(fmt::format("{} hit its limit before optimality", what));
  }
}

}  // namespace

CpgBound cpg_step1(const Problem& problem, const PlanningConfig& config,
                   const SolveOptions& options) {
  const bool robust = is_robust(config.variant);
  ModelLayout layout;
  const LinearModel model = robust ? build_rfmo(problem, config, &layout)
                                   : build_fmo(problem, config, &layout);
  const SolveResult res = solve_checked(model, options, robust ? "RFMO" : "FMO");
  return {res.report.objective,
          extract_fluence(layout, res.report.status, res.assignment)};
}

CpgSurrogateResult cpg_step2(const Problem& problem, const PlanningConfig& config,
                             const SolveOptions& options) {
  problem.validate();
  config.validate(problem.geometry);
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0))
    throw ConfigError(fmt::format("alpha {} outside [0, 1]", config.alpha));
  const BeamGeometry& g = problem.geometry;
  const int nb = g.num_beamlets();
  const int per_angle = g.apertures_per_angle();
  const int per = g.beamlets_per_angle();
  if (per_angle * g.num_angles != g.num_apertures)
    throw ConfigError(fmt::format(
        "CPG needs the aperture budget {} to be divisible by the number of angles {}",
        g.num_apertures, g.num_angles));

  LinearModel model;
  ModelLayout layout;
  layout.geometry = g;
  layout.variant = config.variant;
  for (int a = 0; a < per_angle; ++a)
    for (int b = 0; b < nb; ++b) {
      const int c = model.add_variable(fmt::format("wl_b{}_a{}", b + 1, a + 1),
                                       VarKind::continuous, 0.0, kInf);
      if (a == 0 && b == 0) layout.w = c;
    }
  const int m0 = model.num_variables();
  for (int th = 0; th < g.num_angles; ++th)
    for (int a = 0; a < per_angle; ++a)
      model.add_variable(fmt::format("m_t{}_a{}", th + 1, a + 1),
                         VarKind::continuous, 0.0, kInf);
  auto m_col = [&](int th, int a) { return m0 + th * per_angle + a; };

  FluenceColumns fluence(static_cast<std::size_t>(nb));
  for (int b = 0; b < nb; ++b)
    for (int a = 0; a < per_angle; ++a) fluence[b].push_back(layout.w_col(b, a));
  add_target_rows(model, problem, is_robust(config.variant), fluence, layout);
  add_dose_objective(model, problem, config, fluence, 1.0 - config.alpha);
  for (int th = 0; th < g.num_angles; ++th)
    for (int a = 0; a < per_angle; ++a) {
      model.add_objective(m_col(th, a), config.alpha);
      for (int k = 0; k < per; ++k) {
        const int b = th * per + k;
        model.add_constraint({{m_col(th, a), 1.0}, {layout.w_col(b, a), -1.0}},
                             Sense::greater_equal, 0.0,
                             fmt::format("minmax_b{}_a{}", b + 1, a + 1));
      }
    }

  const SolveResult res = solve_checked(model, options, "CPG surrogate");
  CpgSurrogateResult out;
  out.geometry = g;
  out.objective = res.report.objective;
  out.w_lower.resize(nb, per_angle);
  out.m.resize(g.num_angles, per_angle);
  for (int a = 0; a < per_angle; ++a)
    for (int b = 0; b < nb; ++b)
      out.w_lower(b, a) = std::max(0.0, res.assignment[layout.w_col(b, a)]);
  for (int th = 0; th < g.num_angles; ++th)
    for (int a = 0; a < per_angle; ++a) {
      double mx = 0.0;
      for (int k = 0; k < per; ++k) mx = std::max(mx, out.w_lower(th * per + k, a));
      // m is optimal at the row maximum whenever alpha > 0; take the maximum
      // so the bound is exact for alpha = 0 as well.
      out.m(th, a) = mx;
    }
  return out;
}

namespace {

// Row windows of one (angle, local aperture) from the active beamlets.
std::vector<RowWindow> active_windows(const CpgSurrogateResult& sur, int th, int a) {
  const BeamGeometry& g = sur.geometry;
  std::vector<RowWindow> rows(static_cast<std::size_t>(g.num_rows));
  for (int q = 0; q < g.num_rows; ++q) {
    int first = -1, last = -1;
    for (int k = 0; k < g.num_cols; ++k)
      if (sur.w_lower(g.beamlet(q, k, th), a) > kActiveThreshold) {
        if (first < 0) first = k;
        last = k;
      }
    if (first >= 0) rows[q] = std::make_pair(first, last);
  }
  return rows;
}

// Overlap adjustment and single-column bridging between active rows.
void repair_continuity(std::vector<RowWindow>& rows) {
  int prev = -1;  // last active row
  int prev_lo = 0, prev_hi = 0;
  bool first = true;
  for (int q = 0; q < static_cast<int>(rows.size()); ++q) {
    if (!rows[q]) continue;
    auto& [lo, hi] = *rows[q];
    if (!first) {
      if (lo > prev_hi) lo = prev_hi;
      if (hi < prev_lo) hi = prev_lo;
      if (q - prev > 1) {
        const int bridge = std::max(prev_lo, lo);
        for (int t = prev + 1; t < q; ++t) rows[t] = std::make_pair(bridge, bridge);
      }
    }
    first = false;
    prev = q;
    prev_lo = lo;
    prev_hi = hi;
  }
}

}  // namespace

FluencePlan gap_fill(const CpgSurrogateResult& sur, const PlanningConfig& config,
                     bool continuity) {
  const BeamGeometry& g = sur.geometry;
  const int per_angle = g.apertures_per_angle();
  if (per_angle * g.num_angles != g.num_apertures)
    throw ConfigError("apertures must divide equally among angles");

  struct Candidate {
    int angle, index;
    Aperture aperture;
    double total;
  };
  std::vector<Candidate> cands;
  for (int th = 0; th < g.num_angles; ++th)
    for (int a = 0; a < per_angle; ++a) {
      Candidate c{th, a, {}, 0.0};
      c.aperture.angle = th;
      c.aperture.rows = active_windows(sur, th, a);
      if (continuity) repair_continuity(c.aperture.rows);
      c.aperture.intensity = c.aperture.empty() ? 0.0 : sur.m(th, a);
      c.total = c.aperture.intensity * c.aperture.open_beamlets();
      cands.push_back(std::move(c));
    }

  auto by_key = [](const Candidate& x, const Candidate& y) {
    return std::tie(x.angle, x.index) < std::tie(y.angle, y.index);
  };
  auto decreasing = [&](const Candidate& x, const Candidate& y) {
    if (x.total != y.total) return x.total > y.total;
    return by_key(x, y);
  };
  auto increasing = [&](const Candidate& x, const Candidate& y) {
    if (x.total != y.total) return x.total < y.total;
    return by_key(x, y);
  };

  // Order of the apertures within each angle.
  std::vector<std::vector<Candidate>> per(static_cast<std::size_t>(g.num_angles));
  for (auto& c : cands) per[c.angle].push_back(c);
  for (int th = 0; th < g.num_angles; ++th) {
    auto& v = per[th];
    switch (config.symmetry) {
      case Symmetry::none: std::sort(v.begin(), v.end(), by_key); break;
      case Symmetry::two_angle_sort:
        if (th == 0)
          std::sort(v.begin(), v.end(), decreasing);
        else
          std::sort(v.begin(), v.end(), increasing);
        break;
      default: std::sort(v.begin(), v.end(), decreasing); break;
    }
  }

  FluencePlan plan;
  plan.geometry = g;
  if (config.allocation == Allocation::preallocated) {
    if (config.symmetry == Symmetry::global_sort)
      throw ConfigError("global sort is not available with preallocated apertures");
    const auto alloc = config.allocation_matrix(g);
    plan.apertures.resize(static_cast<std::size_t>(g.num_apertures));
    std::vector<std::size_t> used(static_cast<std::size_t>(g.num_angles), 0);
    for (int a = 0; a < g.num_apertures; ++a) {
      const int th = static_cast<int>(
          std::find(alloc[a].begin(), alloc[a].end(), 1) - alloc[a].begin());
      if (used[th] >= per[th].size())
        throw ConfigError("preallocation must give every angle |A|/|Theta| apertures");
      plan.apertures[a] = per[th][used[th]++].aperture;
    }
    return plan;
  }
  std::vector<Candidate> order;
  if (config.symmetry == Symmetry::global_sort) {
    order = cands;
    std::sort(order.begin(), order.end(), decreasing);
  } else {
    for (auto& v : per) order.insert(order.end(), v.begin(), v.end());
  }
  for (auto& c : order) plan.apertures.push_back(std::move(c.aperture));
  return plan;
}

CpgResult run_cpg(const Problem& problem, const PlanningConfig& config,
                  const SolveOptions& options) {
  CpgResult out;
  const CpgBound bound = cpg_step1(problem, config, options);
  out.z_lower = bound.z_lower;
  out.surrogate = cpg_step2(problem, config, options);
  out.plan = gap_fill(out.surrogate, config, has_continuity(config.variant));
  out.z_cpg = fluence_objective(problem, config, out.plan.aggregate_fluence());
  return out;
}

double covering_big_m(const Problem& problem, const FluencePlan& plan) {
  double top = 0.0;
  for (const auto& a : plan.apertures) top = std::max(top, a.intensity);
  return std::max(default_big_m(problem), 1.5 * top);
}

VectorXd generate_warm_start(const FluencePlan& plan, const ModelInstance& inst,
                             const Problem& problem) {
  const ModelLayout& L = inst.layout;
  const BeamGeometry& g = L.geometry;
  if (!(plan.geometry == g))
    throw ConfigError("plan geometry does not match the model");
  const auto issues = check_deliverability(plan, has_continuity(inst.variant));
  if (!issues.empty())
    throw ConfigError(fmt::format("plan is not deliverable for {}: {}",
                                  to_string(inst.variant), issues.front().message));

  VectorXd x = VectorXd::Zero(inst.model.num_variables());
  const VectorXd omega = plan.aggregate_fluence();
  if (!is_dao(inst.variant)) {
    x.segment(L.omega, g.num_beamlets()) = omega;
  } else {
    const double big_m = *inst.config.big_m;
    const auto alloc = inst.config.allocation_matrix(g);
    const int nk = g.num_cols;
    for (int a = 0; a < g.num_apertures; ++a) {
      const Aperture& ap = plan.apertures[a];
      if (L.u < 0 && alloc[a][ap.angle] != 1)
        throw ConfigError(fmt::format(
            "aperture {} uses angle {} but is preallocated elsewhere", a + 1, ap.angle + 1));
      // Leaves and jaws start closed from the left / top.
      for (int b = 0; b < g.num_beamlets(); ++b) x[L.r_col(b, a)] = 1.0;
      if (L.j >= 0)
        for (int th = 0; th < g.num_angles; ++th)
          for (int q = 0; q < g.num_rows; ++q) x[L.row_col(L.j_lower, q, th, a)] = 1.0;
      const double f = ap.empty() ? 0.0 : ap.intensity;
      if (f > big_m)
        throw ConfigError(fmt::format(
            "aperture {} intensity {} exceeds big-M {}; raise big_m", a + 1, f, big_m));
      x[L.f_col(a)] = f;
      if (L.u >= 0) x[L.u_col(a, ap.angle)] = 1.0;
      // Leaf and jaw indicators from the row windows.
      const int th = ap.angle;
      bool beam_on = false, beam_off = false;
      for (int q = 0; q < g.num_rows; ++q) {
        bool row_on = false, row_off = false;
        for (int k = 0; k < nk; ++k) {
          const int b = g.beamlet(q, k, th);
          const bool open = ap.rows[q] && k >= ap.rows[q]->first && k <= ap.rows[q]->second;
          if (open && f > 0.0) {
            x[L.x_col(b, a)] = 1.0;
            x[L.w_col(b, a)] = f;
            row_on = true;
          } else if (row_on) {
            row_off = true;
          }
          if (row_on) x[L.l_col(b, a)] = 1.0;
          if (row_on && row_off) x[L.r_col(b, a)] = 0.0;
        }
        if (L.j < 0) continue;
        if (row_on) {
          x[L.row_col(L.j, q, th, a)] = 1.0;
          beam_on = true;
        } else if (beam_on) {
          beam_off = true;
        }
        if (beam_on) x[L.row_col(L.j_upper, q, th, a)] = 1.0;
        if (beam_on && beam_off) x[L.row_col(L.j_lower, q, th, a)] = 0.0;
      }
    }
  }

  // Counterpart multipliers for the fixed fluence.
  if (is_robust(inst.variant)) {
    const auto& targets = problem.structures.target_voxels;
    for (int t = 0; t < static_cast<int>(targets.size()); ++t) {
      const VectorXd d = phase_doses(*problem.dose, targets[t], omega);
      const VectorXd y = counterpart_multipliers(d, problem.uncertainty);
      x[L.y0_col(t)] = y[0];
      for (int i = 0; i < L.num_phases; ++i) x[L.y_col(t, i)] = y[i + 1];
    }
  }
  return x;
}

}  // namespace rdao
