#include "rdao/dao.hpp"

#include <algorithm>
#include <numeric>

namespace rdao {

double default_big_m(const Problem& problem) {
  const double max_d = problem.dose->values().maxCoeff();
  const double max_l = problem.structures.prescription.size() > 0
                           ? problem.structures.prescription.maxCoeff()
                           : 1.0;
  if (!(max_d > 0.0)) return 10.0 * max_l * static_cast<double>(problem.uncertainty.num_phases());
  return max_l * static_cast<double>(problem.uncertainty.num_phases()) / max_d * 10.0;
}

void declare_dao_variables(LinearModel& model, ModelLayout& layout,
                           const PlanningConfig& config, bool continuity) {
  const BeamGeometry& g = layout.geometry;
  const int nb = g.num_beamlets();
  const int na = g.num_apertures;

  auto family = [&](VarKind kind, double hi, int count, auto&& name) {
    int first = -1;
    for (int i = 0; i < count; ++i) {
      const int c = model.add_variable(name(i), kind, 0.0, hi);
      if (i == 0) first = c;
    }
    return first;
  };
  auto beam_name = [&](const char* tag) {
    return [&model, &g, nb, tag](int i) {
      const int a = i / nb, b = i % nb;
      return model.label("{}_b{}_a{}", tag, b + 1, a + 1);
    };
  };
  auto row_name = [&](const char* tag) {
    return [&model, &g, tag](int i) {
      const int q = i % g.num_rows;
      const int rest = i / g.num_rows;
      return model.label("{}_q{}_t{}_a{}", tag, q + 1, rest % g.num_angles + 1,
                         rest / g.num_angles + 1);
    };
  };

  layout.w = family(VarKind::continuous, kInf, nb * na, beam_name("w"));
  layout.f = family(VarKind::continuous, kInf, na,
                    [&](int a) { return model.label("f_a{}", a + 1); });
  layout.x = family(VarKind::binary, 1.0, nb * na, beam_name("x"));
  if (config.allocation == Allocation::decision_based) {
    layout.u = family(VarKind::binary, 1.0, na * g.num_angles, [&](int i) {
      return model.label("u_a{}_t{}", i / g.num_angles + 1, i % g.num_angles + 1);
    });
  }
  layout.l = family(VarKind::binary, 1.0, nb * na, beam_name("l"));
  layout.r = family(VarKind::binary, 1.0, nb * na, beam_name("r"));
  if (continuity) {
    const int nrow = g.num_rows * g.num_angles * na;
    layout.j = family(VarKind::binary, 1.0, nrow, row_name("j"));
    layout.j_upper = family(VarKind::binary, 1.0, nrow, row_name("ju"));
    layout.j_lower = family(VarKind::binary, 1.0, nrow, row_name("jl"));
  }
}

void add_uniformity(LinearModel& model, const ModelLayout& layout,
                    double big_m) {
  if (!(big_m > 0.0)) throw ConfigError("big-M must be positive");
  const int nb = layout.num_beamlets();
  const int na = layout.geometry.num_apertures;
  const bool t = model.stores_terms();
  for (int a = 0; a < na; ++a)
    for (int b = 0; b < nb; ++b) {
      const int w = layout.w_col(b, a), x = layout.x_col(b, a),
                f = layout.f_col(a);
      using V = std::vector<Term>;
      model.add_constraint(t ? V{{w, 1.0}, {x, -big_m}} : V{},
                           Sense::less_equal, 0.0,
                           model.label("open_b{}_a{}", b + 1, a + 1));
      model.add_constraint(t ? V{{w, 1.0}, {f, -1.0}, {x, big_m}} : V{},
                           Sense::less_equal, big_m,
                           model.label("upper_b{}_a{}", b + 1, a + 1));
      model.add_constraint(t ? V{{w, 1.0}, {f, -1.0}, {x, -big_m}} : V{},
                           Sense::greater_equal, -big_m,
                           model.label("lower_b{}_a{}", b + 1, a + 1));
    }
}

void add_aperture_selection(LinearModel& model, const ModelLayout& layout,
                            const PlanningConfig& config) {
  const BeamGeometry& g = layout.geometry;
  const int per = g.beamlets_per_angle();
  const bool t = model.stores_terms();
  const bool decide = config.allocation == Allocation::decision_based;
  std::vector<std::vector<int>> alloc;
  if (!decide) {
    config.validate(g);
    alloc = config.allocation_matrix(g);
  }
  for (int a = 0; a < g.num_apertures; ++a) {
    for (int th = 0; th < g.num_angles; ++th) {
      std::vector<Term> row;
      if (t) {
        row.reserve(static_cast<std::size_t>(per) + 1);
        for (int k = 0; k < per; ++k)
          row.push_back({layout.x_col(th * per + k, a), 1.0});
        if (decide) row.push_back({layout.u_col(a, th), -double(per)});
      }
      const double rhs = decide ? 0.0 : per * alloc[a][th];
      model.add_constraint(std::move(row), Sense::less_equal, rhs,
                           model.label("angle_a{}_t{}", a + 1, th + 1));
    }
  }
  if (!decide) return;
  for (int a = 0; a < g.num_apertures; ++a) {
    std::vector<Term> row;
    if (t)
      for (int th = 0; th < g.num_angles; ++th)
        row.push_back({layout.u_col(a, th), 1.0});
    model.add_constraint(std::move(row), Sense::equal, 1.0,
                         model.label("one_angle_a{}", a + 1));
  }
}

namespace {

// sum_{b in angles} w_{b,a} - sum_{b in angles} w_{b,a2}
std::vector<Term> aperture_difference(const ModelLayout& layout, int a, int a2,
                                      int first_angle, int last_angle) {
  const int per = layout.geometry.beamlets_per_angle();
  std::vector<Term> row;
  for (int th = first_angle; th <= last_angle; ++th)
    for (int k = 0; k < per; ++k) {
      row.push_back({layout.w_col(th * per + k, a), 1.0});
      row.push_back({layout.w_col(th * per + k, a2), -1.0});
    }
  return row;
}

}  // namespace

void add_symmetry(LinearModel& model, const ModelLayout& layout,
                  const PlanningConfig& config) {
  const BeamGeometry& g = layout.geometry;
  const bool t = model.stores_terms();
  const int na = g.num_apertures;
  switch (config.symmetry) {
    case Symmetry::none:
      return;
    case Symmetry::global_sort:
      if (config.allocation == Allocation::preallocated)
        throw ConfigError(
            "global sort can cut off optimal plans under preallocation; use "
            "per-angle or two-angle sort");
      for (int a = 0; a + 1 < na; ++a)
        model.add_constraint(
            t ? aperture_difference(layout, a, a + 1, 0, g.num_angles - 1)
              : std::vector<Term>{},
            Sense::greater_equal, 0.0, model.label("sort_a{}", a + 1));
      return;
    case Symmetry::per_angle_sort: {
      if (config.allocation != Allocation::preallocated)
        throw ConfigError(
            "per-angle sort is incompatible with decision-based allocation");
      const auto alloc = config.allocation_matrix(g);
      for (int th = 0; th < g.num_angles; ++th) {
        int prev = -1;
        for (int a = 0; a < na; ++a) {
          if (alloc[a][th] != 1) continue;
          if (prev >= 0)
            model.add_constraint(
                t ? aperture_difference(layout, prev, a, th, th)
                  : std::vector<Term>{},
                Sense::greater_equal, 0.0,
                model.label("sort_t{}_a{}", th + 1, prev + 1));
          prev = a;
        }
      }
      return;
    }
    case Symmetry::two_angle_sort:
      if (g.num_angles != 2)
        throw ConfigError("two-angle sort requires exactly two beam angles");
      for (int a = 0; a + 1 < na; ++a)
        model.add_constraint(
            t ? aperture_difference(layout, a, a + 1, 0, 0) : std::vector<Term>{},
            Sense::greater_equal, 0.0, model.label("sort1_a{}", a + 1));
      for (int a = 0; a + 1 < na; ++a)
        model.add_constraint(
            t ? aperture_difference(layout, a, a + 1, 1, 1) : std::vector<Term>{},
            Sense::less_equal, 0.0, model.label("sort2_a{}", a + 1));
      return;
  }
}

void add_island_removal(LinearModel& model, const ModelLayout& layout) {
  const BeamGeometry& g = layout.geometry;
  const bool t = model.stores_terms();
  using V = std::vector<Term>;
  for (int a = 0; a < g.num_apertures; ++a)
    for (int th = 0; th < g.num_angles; ++th)
      for (int q = 0; q < g.num_rows; ++q) {
        for (int k = 0; k + 1 < g.num_cols; ++k) {
          const int b = g.beamlet(q, k, th), b1 = g.beamlet(q, k + 1, th);
          model.add_constraint(
              t ? V{{layout.l_col(b1, a), 1.0}, {layout.l_col(b, a), -1.0}} : V{},
              Sense::greater_equal, 0.0,
              model.label("left_q{}_k{}_t{}_a{}", q + 1, k + 1, th + 1, a + 1));
          model.add_constraint(
              t ? V{{layout.r_col(b, a), 1.0}, {layout.r_col(b1, a), -1.0}} : V{},
              Sense::greater_equal, 0.0,
              model.label("right_q{}_k{}_t{}_a{}", q + 1, k + 1, th + 1, a + 1));
        }
        for (int k = 0; k < g.num_cols; ++k) {
          const int b = g.beamlet(q, k, th);
          model.add_constraint(
              t ? V{{layout.x_col(b, a), 1.0},
                    {layout.l_col(b, a), -1.0},
                    {layout.r_col(b, a), -1.0}}
                : V{},
              Sense::equal, -1.0,
              model.label("leaves_q{}_k{}_t{}_a{}", q + 1, k + 1, th + 1, a + 1));
        }
      }
}

void add_vertical_continuity(LinearModel& model, const ModelLayout& layout) {
  const BeamGeometry& g = layout.geometry;
  const bool t = model.stores_terms();
  using V = std::vector<Term>;
  for (int a = 0; a < g.num_apertures; ++a)
    for (int th = 0; th < g.num_angles; ++th)
      for (int q = 0; q < g.num_rows; ++q) {
        const int j = layout.row_col(layout.j, q, th, a);
        const int ju = layout.row_col(layout.j_upper, q, th, a);
        const int jl = layout.row_col(layout.j_lower, q, th, a);
        model.add_constraint(t ? V{{j, 1.0}, {ju, -1.0}, {jl, -1.0}} : V{},
                             Sense::equal, -1.0,
                             model.label("jaws_q{}_t{}_a{}", q + 1, th + 1, a + 1));
        V le, ge;
        if (t) {
          le.push_back({j, 1.0});
          ge.push_back({j, double(g.num_cols)});
          for (int k = 0; k < g.num_cols; ++k) {
            le.push_back({layout.x_col(g.beamlet(q, k, th), a), -1.0});
            ge.push_back({layout.x_col(g.beamlet(q, k, th), a), -1.0});
          }
        }
        model.add_constraint(std::move(le), Sense::less_equal, 0.0,
                             model.label("rowon_q{}_t{}_a{}", q + 1, th + 1, a + 1));
        model.add_constraint(std::move(ge), Sense::greater_equal, 0.0,
                             model.label("rowall_q{}_t{}_a{}", q + 1, th + 1, a + 1));
      }
  for (int a = 0; a < g.num_apertures; ++a)
    for (int th = 0; th < g.num_angles; ++th)
      for (int q = 0; q + 1 < g.num_rows; ++q) {
        model.add_constraint(
            t ? V{{layout.row_col(layout.j_upper, q, th, a), 1.0},
                  {layout.row_col(layout.j_upper, q + 1, th, a), -1.0}}
              : V{},
            Sense::less_equal, 0.0,
            model.label("upperjaw_q{}_t{}_a{}", q + 1, th + 1, a + 1));
        model.add_constraint(
            t ? V{{layout.row_col(layout.j_lower, q + 1, th, a), 1.0},
                  {layout.row_col(layout.j_lower, q, th, a), -1.0}}
              : V{},
            Sense::less_equal, 0.0,
            model.label("lowerjaw_q{}_t{}_a{}", q + 1, th + 1, a + 1));
      }
}

void add_horizontal_continuity(LinearModel& model, const ModelLayout& layout) {
  const BeamGeometry& g = layout.geometry;
  const bool t = model.stores_terms();
  const int nk = g.num_cols;
  for (int a = 0; a < g.num_apertures; ++a)
    for (int th = 0; th < g.num_angles; ++th)
      for (int q = 1; q < g.num_rows; ++q) {
        auto x = [&](int row, int k1) {  // 1-based column
          return layout.x_col(g.beamlet(row, k1 - 1, th), a);
        };
        for (int k = 1; k <= nk; ++k) {
          std::vector<Term> left, right;
          if (t) {
            for (auto* row : {&left, &right}) {
              row->push_back({layout.row_col(layout.j, q, th, a), 1.0});
              row->push_back({layout.row_col(layout.j, q - 1, th, a), 1.0});
            }
            for (int d = k + 1; d <= nk; ++d) left.push_back({x(q, d), -1.0});
            for (int d = 1; d <= k; ++d) left.push_back({x(q - 1, d), -1.0});
            for (int d = 1; d <= nk - k; ++d) right.push_back({x(q, d), -1.0});
            for (int d = nk - k + 1; d <= nk; ++d)
              right.push_back({x(q - 1, d), -1.0});
          }
          model.add_constraint(
              std::move(left), Sense::less_equal, 1.0,
              model.label("hleft_q{}_k{}_t{}_a{}", q + 1, k, th + 1, a + 1));
          model.add_constraint(
              std::move(right), Sense::less_equal, 1.0,
              model.label("hright_q{}_k{}_t{}_a{}", q + 1, k, th + 1, a + 1));
        }
      }
}

namespace {

ModelInstance build(Variant variant, const Problem& problem,
                    const PlanningConfig& config, bool structure_only) {
  ModelInstance inst;
  inst.variant = variant;
  inst.config = config;
  inst.config.variant = variant;
  inst.model = LinearModel(structure_only);
  ModelLayout& layout = inst.layout;
  layout.variant = variant;
  layout.geometry = problem.geometry;
  LinearModel& model = inst.model;

  if (!is_dao(variant)) {
    declare_fluence(model, layout);
  } else {
    config.validate(problem.geometry);
    if (!inst.config.big_m)
      inst.config.big_m = structure_only ? 1.0 : default_big_m(problem);
    declare_dao_variables(model, layout, inst.config, has_continuity(variant));
  }
  const auto fluence = layout.fluence_columns();
  add_target_rows(model, problem, is_robust(variant), fluence, layout);
  if (!structure_only) add_dose_objective(model, problem, inst.config, fluence);
  if (is_dao(variant)) {
    add_uniformity(model, layout, *inst.config.big_m);
    add_aperture_selection(model, layout, inst.config);
    add_symmetry(model, layout, inst.config);
    add_island_removal(model, layout);
    if (has_continuity(variant)) {
      add_vertical_continuity(model, layout);
      add_horizontal_continuity(model, layout);
    }
  }
  inst.size = model.size();
  return inst;
}

}  // namespace

ModelInstance assemble(Variant variant, const Problem& problem,
                       const PlanningConfig& config) {
  problem.validate();
  if (is_robust(variant) && (problem.uncertainty.lower().sum() > 1.0 + 1e-12 ||
                             problem.uncertainty.upper().sum() < 1.0 - 1e-12))
    throw InfeasibleSetError("uncertainty set is empty");
  return build(variant, problem, config, false);
}

SizeReport size_report(Variant variant, const BeamGeometry& geom,
                       int num_targets, int num_phases,
                       const PlanningConfig& config) {
  geom.validate();
  if (num_targets < 1 || num_phases < 1)
    throw ConfigError("size report needs at least one target voxel and phase");
  Problem p;
  p.geometry = geom;
  p.structures.target_voxels.resize(static_cast<std::size_t>(num_targets));
  std::iota(p.structures.target_voxels.begin(), p.structures.target_voxels.end(), 0);
  p.uncertainty = UncertaintySet::singleton(
      VectorXd::Constant(num_phases, 1.0 / num_phases));
  return build(variant, p, config, true).size;
}

DecodedPlan decode_plan(const ModelInstance& inst, const VectorXd& assignment) {
  if (!is_dao(inst.variant))
    throw ConfigError("only DAO variants carry aperture shapes");
  const ModelLayout& L = inst.layout;
  const BeamGeometry& g = L.geometry;
  if (assignment.size() != inst.model.num_variables())
    throw ShapeError("assignment length does not match the model");
  const auto alloc = inst.config.allocation_matrix(g);
  DecodedPlan out;
  out.plan.geometry = g;
  for (int a = 0; a < g.num_apertures; ++a) {
    Aperture ap;
    if (L.u >= 0) {
      int best = 0;
      for (int th = 1; th < g.num_angles; ++th)
        if (assignment[L.u_col(a, th)] > assignment[L.u_col(a, best)]) best = th;
      ap.angle = best;
    } else {
      ap.angle = static_cast<int>(
          std::find(alloc[a].begin(), alloc[a].end(), 1) - alloc[a].begin());
    }
    ap.intensity = std::max(0.0, assignment[L.f_col(a)]);
    ap.rows.resize(static_cast<std::size_t>(g.num_rows));
    for (int q = 0; q < g.num_rows; ++q) {
      int first = -1, last = -1;
      for (int k = 0; k < g.num_cols; ++k)
        if (assignment[L.x_col(g.beamlet(q, k, ap.angle), a)] > 0.5) {
          if (first < 0) first = k;
          last = k;
        }
      if (first >= 0) ap.rows[q] = std::make_pair(first, last);
    }
    if (ap.empty() && ap.intensity > 1e-9) out.empty_with_intensity.push_back(a);
    out.plan.apertures.push_back(std::move(ap));
  }
  return out;
}

std::vector<int> branch_priorities(const ModelInstance& inst) {
  const ModelLayout& L = inst.layout;
  std::vector<int> prio(static_cast<std::size_t>(inst.model.num_variables()), 0);
  if (!is_dao(inst.variant)) return prio;
  const int nb = L.num_beamlets(), na = L.geometry.num_apertures;
  for (int a = 0; a < na; ++a) {
    for (int b = 0; b < nb; ++b) prio[L.x_col(b, a)] = 1;
    if (L.u >= 0)
      for (int t = 0; t < L.geometry.num_angles; ++t) prio[L.u_col(a, t)] = 2;
  }
  return prio;
}

std::vector<VectorXd> aperture_maps(const ModelInstance& inst,
                                    const VectorXd& assignment) {
  if (!is_dao(inst.variant))
    throw ConfigError("only DAO variants carry aperture intensities");
  const int nb = inst.layout.num_beamlets();
  std::vector<VectorXd> maps;
  for (int a = 0; a < inst.layout.geometry.num_apertures; ++a)
    maps.push_back(assignment.segment(inst.layout.w_col(0, a), nb));
  return maps;
}

}  // namespace rdao
