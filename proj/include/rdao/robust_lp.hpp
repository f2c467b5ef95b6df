#pragma once

// Fluence map optimization (FMO) and its robust counterpart (RFMO) under the
// polyhedral phase-proportion uncertainty set.

#include <vector>

#include "rdao/linear_model.hpp"

namespace rdao {

enum class SolveStatus { optimal, feasible, infeasible, unbounded, limit };
std::string to_string(SolveStatus s);

/// Column offsets of every variable family in an assembled model; -1 marks an
/// absent family. Beamlet-indexed families (w, x, l, r) share the layout
/// base + a * |B| + b; row families (j, j_upper, j_lower) use
/// base + (a * |Theta| + theta) * |Q| + q.
struct ModelLayout {
  Variant variant = Variant::fmo;
  BeamGeometry geometry;
  int num_targets = 0;
  int num_phases = 0;

  int omega = -1;
  int w = -1;
  int f = -1;
  int x = -1;
  int u = -1;
  int l = -1;
  int r = -1;
  int j = -1;
  int j_upper = -1;
  int j_lower = -1;
  int y0 = -1;
  int y = -1;

  int num_beamlets() const { return geometry.num_beamlets(); }
  int omega_col(int b) const { return omega + b; }
  int w_col(int b, int a) const { return w + a * num_beamlets() + b; }
  int x_col(int b, int a) const { return x + a * num_beamlets() + b; }
  int l_col(int b, int a) const { return l + a * num_beamlets() + b; }
  int r_col(int b, int a) const { return r + a * num_beamlets() + b; }
  int f_col(int a) const { return f + a; }
  int u_col(int a, int theta) const { return u + a * geometry.num_angles + theta; }
  int row_col(int base, int q, int theta, int a) const {
    return base + (a * geometry.num_angles + theta) * geometry.num_rows + q;
  }
  int y0_col(int t) const { return y0 + t; }
  int y_col(int t, int i) const { return y + t * num_phases + i; }

  /// For each beamlet, the columns whose sum is the delivered fluence
  /// omega_b (omega_b itself, or w_{b,a} over apertures).
  std::vector<std::vector<int>> fluence_columns() const;
};

/// Columns summing to omega_b, one list per beamlet.
using FluenceColumns = std::vector<std::vector<int>>;

/// Declares omega_b >= 0 for every beamlet.
void declare_fluence(LinearModel& model, ModelLayout& layout);

/// Target dose rows over the fluence expression. Nominal: one row per target
/// voxel at the nominal proportions. Robust: declares y0 (free) and y >= 0 per
/// target voxel and adds the counterpart rows (one aggregate row per voxel and
/// one row per voxel and phase).
void add_target_rows(LinearModel& model, const Problem& problem, bool robust,
                     const FluenceColumns& fluence, ModelLayout& layout);

/// Adds scale * sum_s c_s/|V_s| sum_v sum_b sum_i p_i D w to the objective.
void add_dose_objective(LinearModel& model, const Problem& problem,
                        const PlanningConfig& config,
                        const FluenceColumns& fluence, double scale = 1.0);

/// Expected-dose objective coefficient per beamlet (nominal proportions).
VectorXd beamlet_objective(const Problem& problem, const PlanningConfig& config);

/// Objective value of an aggregate fluence vector.
double fluence_objective(const Problem& problem, const PlanningConfig& config,
                         const VectorXd& fluence);

LinearModel build_fmo(const Problem& problem, const PlanningConfig& config,
                      ModelLayout* layout = nullptr);
/// Throws InfeasibleSetError for an empty uncertainty set.
LinearModel build_rfmo(const Problem& problem, const PlanningConfig& config,
                       ModelLayout* layout = nullptr);

/// Aggregate fluence omega_b (summing apertures for DAO layouts). Throws
/// StateError unless the status is optimal or feasible.
VectorXd extract_fluence(const ModelLayout& layout, SolveStatus status,
                         const VectorXd& solution);

/// Optimal counterpart multipliers (y0, y_1..y_|I|) for one voxel given its
/// per-phase doses; the counterpart objective then equals the worst-case dose.
VectorXd counterpart_multipliers(const VectorXd& phase_dose,
                                 const UncertaintySet& u);

}  // namespace rdao
