#pragma once

// Direct aperture optimization: the DAO constraint families layered onto the
// (robust) fluence model, and assembly of the six model variants.

#include "rdao/plan.hpp"
#include "rdao/robust_lp.hpp"

namespace rdao {

struct ModelInstance {
  Variant variant = Variant::fmo;
  PlanningConfig config;  // resolved: big_m always set for DAO variants
  ModelLayout layout;
  LinearModel model;
  SizeReport size;
};

/// prescription_max * |I| / max D * 10.
double default_big_m(const Problem& problem);

/// Declares w, f, x (and u, l, r; j, j_upper, j_lower for continuity) and
/// records their offsets in `layout`.
void declare_dao_variables(LinearModel& model, ModelLayout& layout,
                           const PlanningConfig& config, bool continuity);

/// Big-M rows tying w_{b,a} to f_a and x_{b,a}, per (beamlet, aperture).
void add_uniformity(LinearModel& model, const ModelLayout& layout, double big_m);
/// Shape-on-chosen-angle rows per (aperture, angle); one angle per aperture
/// in decision-based mode.
void add_aperture_selection(LinearModel& model, const ModelLayout& layout,
                            const PlanningConfig& config);
/// Ordering rows over aperture-sum expressions for the configured mode.
void add_symmetry(LinearModel& model, const ModelLayout& layout,
                  const PlanningConfig& config);
/// Leaf rows: monotone l and r per row, x = l + r - 1.
void add_island_removal(LinearModel& model, const ModelLayout& layout);
/// Jaw rows: active rows form one block per aperture and angle.
void add_vertical_continuity(LinearModel& model, const ModelLayout& layout);
/// Adjacent active rows share at least one open column.
void add_horizontal_continuity(LinearModel& model, const ModelLayout& layout);

/// Builds any of the six variants on `problem`.
ModelInstance assemble(Variant variant, const Problem& problem,
                       const PlanningConfig& config);

/// Row/variable/binary counts from dimensions alone (no dose data needed).
SizeReport size_report(Variant variant, const BeamGeometry& geom,
                       int num_targets, int num_phases,
                       const PlanningConfig& config);

struct DecodedPlan {
  FluencePlan plan;
  /// Apertures with f > 0 but no open beamlet; they deliver nothing.
  std::vector<int> empty_with_intensity;
};

/// Reads the aperture shapes and intensities out of a DAO assignment.
DecodedPlan decode_plan(const ModelInstance& instance, const VectorXd& assignment);

/// Branching priorities for solve_mip: aperture angles and shapes (u, x)
/// ahead of the leaf, jaw and row indicators they largely determine.
std::vector<int> branch_priorities(const ModelInstance& instance);

/// The w columns of a DAO assignment as one intensity map per aperture.
std::vector<VectorXd> aperture_maps(const ModelInstance& instance,
                                    const VectorXd& assignment);

}  // namespace rdao
