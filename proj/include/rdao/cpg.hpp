#pragma once

// Candidate plan generation: a fluence-map lower bound, the min-max surrogate
// LP, gap filling into deliverable apertures, and conversion of a plan into a
// complete MIP warm start.

#include "rdao/dao.hpp"
#include "rdao/solver.hpp"

namespace rdao {

struct CpgBound {
  double z_lower = 0.0;
  VectorXd fluence;
};

/// Optimal RFMO objective for robust variants, FMO otherwise.
CpgBound cpg_step1(const Problem& problem, const PlanningConfig& config,
                   const SolveOptions& options = {});

struct CpgSurrogateResult {
  BeamGeometry geometry;
  /// |B| x |A'|; column a holds the angle-local aperture a of every angle.
  MatrixXd w_lower;
  /// |Theta| x |A'| maximum intensity per (angle, aperture).
  MatrixXd m;
  double objective = 0.0;
  VectorXd fluence() const { return w_lower.rowwise().sum(); }
};

/// Solves the surrogate with |A'| = |A| / |Theta| apertures per angle.
/// Throws ConfigError for alpha outside [0, 1].
CpgSurrogateResult cpg_step2(const Problem& problem, const PlanningConfig& config,
                             const SolveOptions& options = {});

/// Beamlets at or below this intensity count as closed when gap filling.
inline constexpr double kActiveThreshold = 1e-9;

/// Deliverable plan from the surrogate: row windows from the active beamlets,
/// optional continuity repair, uniform intensity m per aperture, and aperture
/// order consistent with config.symmetry.
FluencePlan gap_fill(const CpgSurrogateResult& sur, const PlanningConfig& config,
                     bool continuity);

struct CpgResult {
  FluencePlan plan;
  double z_cpg = 0.0;
  double z_lower = 0.0;
  CpgSurrogateResult surrogate;
  /// (z_cpg - z_lower) / z_cpg.
  double gap() const { return z_cpg > 0.0 ? (z_cpg - z_lower) / z_cpg : 0.0; }
};

/// The three steps for config.variant (robust or nominal, with or without
/// continuity).
CpgResult run_cpg(const Problem& problem, const PlanningConfig& config,
                  const SolveOptions& options = {});

/// Smallest big-M accepted for a warm start from `plan`: the data-driven
/// default, raised to 1.5 times the largest plan intensity when needed.
double covering_big_m(const Problem& problem, const FluencePlan& plan);

/// Complete assignment for `instance` built from a deliverable plan. Throws
/// ConfigError when the plan does not fit the instance (geometry, aperture
/// count, preallocation, continuity, or an intensity above big-M).
VectorXd generate_warm_start(const FluencePlan& plan, const ModelInstance& instance,
                             const Problem& problem);

}  // namespace rdao
