#pragma once

// Clinical scoring of plans: dose statistics, dose-volume histograms, 95/95
// normalization and robustness under realized breathing proportions.

#include <iosfwd>
#include <string>
#include <vector>

#include "rdao/plan.hpp"

namespace rdao {

/// A target voxel counts as underdosed below L_v minus this.
inline constexpr double kUnderdoseTol = 1e-6;

struct StructureStats {
  std::string name;
  double ave = 0.0;
  double max = 0.0;
};

struct EvaluationReport {
  double t_min = 0.0, t_ave = 0.0, t_max = 0.0;
  std::vector<StructureStats> healthy;
  double h_ave = 0.0, h_max = 0.0;  // over all healthy voxels
  VectorXd realized_p;
  double normalization_factor = 1.0;
  int apertures_used = 0;
  bool underdose = false;
  int underdosed_voxels = 0;
  /// Vertices of P with an underdosed target voxel (robust checks only; -1
  /// when not evaluated).
  int vertex_underdose = -1;
};

/// Dose per voxel of the whole tensor for an aggregate fluence.
VectorXd voxel_doses(const VectorXd& fluence, const VectorXd& p,
                     const DoseTensord& dose);

EvaluationReport evaluate_plan(const FluencePlan& plan, const DoseTensord& dose,
                               const StructureSet& structures, const VectorXd& p_real);

/// Number of vertices of `u` at which some target voxel is underdosed.
int count_vertex_underdose(const FluencePlan& plan, const DoseTensord& dose,
                           const StructureSet& structures, const UncertaintySet& u);

struct Normalization {
  FluencePlan plan;
  double factor = 1.0;
  double reference = 0.0;  // dose level whose 95 % must reach 95 % of targets
};

/// Scales the plan so the lower 5th-percentile target dose equals
/// 0.95 * reference. The reference is the prescription for nominal plans and
/// the plan's own minimum target dose (at `p`) for robust plans. Throws
/// StateError for a plan that delivers no target dose.
Normalization normalize_plan(const FluencePlan& plan, const DoseTensord& dose,
                             const StructureSet& structures, const VectorXd& p,
                             bool robust);

class DvhCurve {
 public:
  DvhCurve(std::string structure, std::vector<double> doses);
  const std::string& structure() const { return structure_; }
  const std::vector<double>& doses() const { return doses_; }  // ascending
  /// Fraction of voxels with dose >= threshold.
  double volume_fraction(double threshold) const;
  /// `dose,fraction` rows at every distinct sample (plus dose 0).
  void write_csv(std::ostream& out) const;

 private:
  std::string structure_;
  std::vector<double> doses_;
};

/// One curve per structure: "target" first, then the healthy structures.
std::vector<DvhCurve> dvh(const FluencePlan& plan, const DoseTensord& dose,
                          const StructureSet& structures, const VectorXd& p_real);

/// key = value lines, 6 significant digits.
void write_report(std::ostream& out, const EvaluationReport& r);

}  // namespace rdao
