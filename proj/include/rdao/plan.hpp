#pragma once

// Deliverable step-and-shoot plan: per aperture an angle, one uniform
// intensity and a closed column window per row. Angles, rows and columns are
// 0-based in memory; the text file format is 1-based.

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdao/core.hpp"

namespace rdao {

using RowWindow = std::optional<std::pair<int, int>>;  // [first, last]

struct Aperture {
  int angle = 0;
  double intensity = 0.0;
  std::vector<RowWindow> rows;  // one entry per beam row

  bool empty() const;
  int open_beamlets() const;
};

struct FluencePlan {
  BeamGeometry geometry;
  std::vector<Aperture> apertures;

  /// |A| empty apertures at angle 0.
  static FluencePlan empty(const BeamGeometry& geom);

  /// w_{b,a}: intensity of aperture a at beamlet b (0 outside its windows).
  VectorXd aperture_fluence(int a) const;
  /// omega_b = sum_a w_{b,a}.
  VectorXd aggregate_fluence() const;
  /// Sum of w over the beamlets of one aperture.
  double aperture_total(int a) const;
  /// Multiplies every intensity by `factor` (> 0).
  FluencePlan scaled(double factor) const;
  int apertures_used() const;
};

enum class IssueKind {
  shape,       // malformed record (counts, ranges, negative intensity)
  angle,       // intensity on more than one angle
  uniformity,  // unequal nonzero intensities inside one aperture
  island,      // a row with a gap between open beamlets
  vertical,    // active rows do not form one block
  horizontal,  // adjacent active rows share no column
};
std::string to_string(IssueKind k);

struct DeliverabilityIssue {
  IssueKind kind;
  int aperture = -1;
  int row = -1;  // -1 when not row-specific
  std::string message;
};

/// Checks a plan against the MLC rules. Continuity rules (vertical block,
/// horizontal overlap) apply only when `continuity` is set.
std::vector<DeliverabilityIssue> check_deliverability(const FluencePlan& plan,
                                                      bool continuity);
/// Same rules on raw intensity maps: maps[a] is w_{., a} over all beamlets.
std::vector<DeliverabilityIssue> check_intensity_maps(
    const std::vector<VectorXd>& maps, const BeamGeometry& geom,
    bool continuity, double tol = 1e-9);

/// Header `angles rows cols apertures`, then per aperture `angle intensity`
/// followed by one `first last` or `- -` line per row (all 1-based).
void write_plan(std::ostream& out, const FluencePlan& plan);
/// Throws FormatError on malformed input.
FluencePlan read_plan(std::istream& in);
void save_plan(const std::string& path, const FluencePlan& plan);
FluencePlan load_plan(const std::string& path);

/// Per-angle |Q| x |K| matrix of aggregate fluence as CSV.
void write_fluence_csv(std::ostream& out, const VectorXd& fluence,
                       const BeamGeometry& geom, int angle);
/// Binary PGM (P5) of one angle's fluence map scaled to 0..255, optionally on
/// a log10 scale.
void write_fluence_pgm(std::ostream& out, const VectorXd& fluence,
                       const BeamGeometry& geom, int angle, bool log_scale);

}  // namespace rdao
