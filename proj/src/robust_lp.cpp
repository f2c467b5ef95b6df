#include "rdao/robust_lp.hpp"

#include <algorithm>
#include <limits>

namespace rdao {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::feasible: return "feasible";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::limit: return "limit";
  }
  return "?";
}

std::vector<std::vector<int>> ModelLayout::fluence_columns() const {
  const int nb = num_beamlets();
  std::vector<std::vector<int>> cols(static_cast<std::size_t>(nb));
  for (int b = 0; b < nb; ++b) {
    if (omega >= 0) {
      cols[b].push_back(omega_col(b));
    } else {
      for (int a = 0; a < geometry.num_apertures; ++a)
        cols[b].push_back(w_col(b, a));
    }
  }
  return cols;
}

void declare_fluence(LinearModel& model, ModelLayout& layout) {
  const int nb = layout.num_beamlets();
  for (int b = 0; b < nb; ++b) {
    const int c = model.add_variable(model.label("omega_b{}", b + 1),
                                     VarKind::continuous, 0.0, kInf);
    if (b == 0) layout.omega = c;
  }
}

void add_target_rows(LinearModel& model, const Problem& problem, bool robust,
                     const FluenceColumns& fluence, ModelLayout& layout) {
  const auto& targets = problem.structures.target_voxels;
  const int nt = static_cast<int>(targets.size());
  const int ni = static_cast<int>(problem.uncertainty.num_phases());
  const int nb = static_cast<int>(fluence.size());
  layout.num_targets = nt;
  layout.num_phases = ni;
  const bool terms = model.stores_terms();
  const VectorXd& p = problem.uncertainty.nominal();

  if (!robust) {
    for (int t = 0; t < nt; ++t) {
      std::vector<Term> row;
      if (terms) {
        const auto block = problem.dose->voxel(targets[t]);
        const VectorXd coef = block * p;
        for (int b = 0; b < nb; ++b)
          if (coef[b] != 0.0)
            for (int c : fluence[b]) row.push_back({c, coef[b]});
      }
      model.add_constraint(std::move(row), Sense::greater_equal,
                           terms ? problem.structures.prescription[t] : 0.0,
                           model.label("dose_v{}", targets[t] + 1));
    }
    return;
  }

  for (int t = 0; t < nt; ++t) {
    const int c = model.add_variable(model.label("y0_v{}", targets[t] + 1),
                                     VarKind::continuous, -kInf, kInf);
    if (t == 0) layout.y0 = c;
  }
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < ni; ++i) {
      const int c =
          model.add_variable(model.label("y_v{}_i{}", targets[t] + 1, i + 1),
                             VarKind::continuous, 0.0, kInf);
      if (t == 0 && i == 0) layout.y = c;
    }

  VectorXd under, over, lo;
  if (terms) {
    under = problem.uncertainty.effective_lower_dev();
    over = problem.uncertainty.effective_upper_dev();
    lo = problem.uncertainty.lower();
  }
  for (int t = 0; t < nt; ++t) {
    std::vector<Term> row;
    if (terms) {
      const auto block = problem.dose->voxel(targets[t]);
      const VectorXd coef = block * lo;
      for (int b = 0; b < nb; ++b)
        if (coef[b] != 0.0)
          for (int c : fluence[b]) row.push_back({c, coef[b]});
      row.push_back({layout.y0_col(t), under.sum()});
      for (int i = 0; i < ni; ++i)
        row.push_back({layout.y_col(t, i), -(under[i] + over[i])});
    }
    model.add_constraint(std::move(row), Sense::greater_equal,
                         terms ? problem.structures.prescription[t] : 0.0,
                         model.label("robust_v{}", targets[t] + 1));
  }
  for (int t = 0; t < nt; ++t) {
    for (int i = 0; i < ni; ++i) {
      std::vector<Term> row;
      if (terms) {
        const auto block = problem.dose->voxel(targets[t]);
        for (int b = 0; b < nb; ++b) {
          const double d = block(b, i);
          if (d != 0.0)
            for (int c : fluence[b]) row.push_back({c, d});
        }
        row.push_back({layout.y0_col(t), -1.0});
        row.push_back({layout.y_col(t, i), 1.0});
      }
      model.add_constraint(std::move(row), Sense::greater_equal, 0.0,
                           model.label("phase_v{}_i{}", targets[t] + 1, i + 1));
    }
  }
}

VectorXd beamlet_objective(const Problem& problem,
                           const PlanningConfig& config) {
  const DoseTensord& dose = *problem.dose;
  const VectorXd weights =
      objective_weights(problem.structures, dose.num_voxels(), config);
  const VectorXd& p = problem.uncertainty.nominal();
  VectorXd g = VectorXd::Zero(dose.num_beamlets());
  for (Index v = 0; v < dose.num_voxels(); ++v)
    if (weights[v] != 0.0) g.noalias() += weights[v] * (dose.voxel(v) * p);
  return g;
}

void add_dose_objective(LinearModel& model, const Problem& problem,
                        const PlanningConfig& config,
                        const FluenceColumns& fluence, double scale) {
  if (!model.stores_terms() || scale == 0.0) return;
  const VectorXd g = beamlet_objective(problem, config);
  for (std::size_t b = 0; b < fluence.size(); ++b)
    for (int c : fluence[b]) model.add_objective(c, scale * g[static_cast<Index>(b)]);
}

double fluence_objective(const Problem& problem, const PlanningConfig& config,
                         const VectorXd& fluence) {
  if (fluence.size() != problem.dose->num_beamlets())
    throw ShapeError("fluence length does not match the dose tensor");
  return beamlet_objective(problem, config).dot(fluence);
}

namespace {

LinearModel build_base(const Problem& problem, const PlanningConfig& config,
                       bool robust, ModelLayout* out) {
  problem.validate();
  ModelLayout layout;
  layout.variant = robust ? Variant::rfmo : Variant::fmo;
  layout.geometry = problem.geometry;
  LinearModel model;
  declare_fluence(model, layout);
  const auto fluence = layout.fluence_columns();
  add_target_rows(model, problem, robust, fluence, layout);
  add_dose_objective(model, problem, config, fluence);
  if (out) *out = layout;
  return model;
}

}  // namespace

LinearModel build_fmo(const Problem& problem, const PlanningConfig& config,
                      ModelLayout* layout) {
  return build_base(problem, config, false, layout);
}

LinearModel build_rfmo(const Problem& problem, const PlanningConfig& config,
                       ModelLayout* layout) {
  if (problem.uncertainty.lower().sum() > 1.0 + 1e-12 ||
      problem.uncertainty.upper().sum() < 1.0 - 1e-12)
    throw InfeasibleSetError("uncertainty set is empty");
  return build_base(problem, config, true, layout);
}

VectorXd extract_fluence(const ModelLayout& layout, SolveStatus status,
                         const VectorXd& solution) {
  if (status != SolveStatus::optimal && status != SolveStatus::feasible)
    throw StateError("model has no feasible solution to extract fluence from (" +
                     to_string(status) + ")");
  const auto cols = layout.fluence_columns();
  VectorXd omega = VectorXd::Zero(static_cast<Index>(cols.size()));
  for (std::size_t b = 0; b < cols.size(); ++b) {
    for (int c : cols[b]) {
      if (c >= solution.size())
        throw ShapeError("solution shorter than the model layout");
      omega[static_cast<Index>(b)] += solution[c];
    }
  }
  return omega.cwiseMax(0.0);
}

VectorXd counterpart_multipliers(const VectorXd& phase_dose,
                                 const UncertaintySet& u) {
  const Index n = u.num_phases();
  if (phase_dose.size() != n)
    throw ShapeError("phase dose length does not match uncertainty set");
  const VectorXd under = u.effective_lower_dev();
  const VectorXd over = u.effective_upper_dev();
  // The multiplier problem is concave piecewise linear in y0 with breakpoints
  // at the per-phase doses; one of them is optimal.
  double best_val = -std::numeric_limits<double>::infinity();
  double best_y0 = phase_dose.minCoeff();
  for (Index k = 0; k < n; ++k) {
    const double y0 = phase_dose[k];
    double val = under.sum() * y0;
    for (Index i = 0; i < n; ++i)
      val -= (under[i] + over[i]) * std::max(0.0, y0 - phase_dose[i]);
    if (val > best_val) {
      best_val = val;
      best_y0 = y0;
    }
  }
  VectorXd out(n + 1);
  out[0] = best_y0;
  for (Index i = 0; i < n; ++i)
    out[i + 1] = std::max(0.0, best_y0 - phase_dose[i]);
  return out;
}

}  // namespace rdao
