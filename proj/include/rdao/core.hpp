#pragma once

// Shared domain types of the planning library: beam geometry, structures,
// the phase-resolved dose influence tensor and the polyhedral uncertainty set
// over breathing-phase proportions.
//
// Index convention: the public coordinate API (`beamlet_index`,
// `beamlet_coord`) is 1-based. Everything else (voxel ids, beamlet ids used as
// array offsets, aperture and angle indices in containers) is 0-based.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rdao/errors.hpp"

namespace rdao {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct BeamletCoord {
  int row = 1;    // q, 1-based
  int col = 1;    // k, 1-based
  int angle = 1;  // theta, 1-based

  friend bool operator==(const BeamletCoord&, const BeamletCoord&) = default;
};

/// Identical |Q| x |K| beam grid at each of |Theta| angles plus the aperture
/// budget |A|.
struct BeamGeometry {
  int num_angles = 1;
  int num_rows = 1;
  int num_cols = 1;
  int num_apertures = 1;

  /// Throws ConfigError if a count is < 1. CPG additionally needs |A| to be
  /// a multiple of |Theta|; the MIP models do not.
  void validate() const;

  int beamlets_per_angle() const { return num_rows * num_cols; }
  int num_beamlets() const { return num_angles * beamlets_per_angle(); }
  int apertures_per_angle() const { return num_apertures / num_angles; }

  /// 0-based beamlet offset of 0-based (row, col, angle).
  int beamlet(int row, int col, int angle) const {
    return angle * beamlets_per_angle() + row * num_cols + col;
  }
  int angle_of(int beamlet) const { return beamlet / beamlets_per_angle(); }

  friend bool operator==(const BeamGeometry&, const BeamGeometry&) = default;
};

/// 1-based beamlet id b = sum_{t < theta} |B_t| + |K| (q - 1) + k.
/// Throws RangeError naming the offending axis.
int beamlet_index(const BeamletCoord& c, const BeamGeometry& geom);
/// Inverse of beamlet_index for a 1-based id.
BeamletCoord beamlet_coord(int id, const BeamGeometry& geom);

struct HealthyStructure {
  std::string name;
  std::vector<int> voxels;
};

/// Target voxels with their prescriptions plus named healthy structures.
/// Voxel ids are 0-based rows of the dose tensor.
struct StructureSet {
  std::vector<int> target_voxels;
  std::vector<HealthyStructure> healthy;
  VectorXd prescription;  // per target voxel, aligned with target_voxels

  /// Uniform prescription convenience constructor.
  static StructureSet uniform(std::vector<int> targets,
                              std::vector<HealthyStructure> healthy,
                              double dose_gy);

  std::size_t num_healthy_voxels() const;
  /// Throws ConfigError on overlapping ids or non-positive prescriptions, and
  /// RangeError when an id is outside [0, num_voxels).
  void validate(Index num_voxels) const;
};

/// Dense D[v][b][i]: dose in Gy per unit intensity. Stored row-major with one
/// row per voxel and columns ordered (beamlet, phase), matching the on-disk
/// layout.
template <typename Scalar>
class DoseTensor {
 public:
  using Storage =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using PhaseBlock =
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>;

  DoseTensor() = default;
  DoseTensor(Index voxels, Index beamlets, Index phases)
      : beamlets_(beamlets),
        phases_(phases),
        values_(Storage::Zero(voxels, beamlets * phases)) {}

  Index num_voxels() const { return values_.rows(); }
  Index num_beamlets() const { return beamlets_; }
  Index num_phases() const { return phases_; }

  Scalar& operator()(Index v, Index b, Index i) {
    return values_(v, b * phases_ + i);
  }
  Scalar operator()(Index v, Index b, Index i) const {
    return values_(v, b * phases_ + i);
  }

  /// |B| x |I| view of one voxel's coefficients.
  PhaseBlock voxel(Index v) const {
    return PhaseBlock(values_.row(v).data(), beamlets_, phases_);
  }

  /// |V| x |B| matrix sum_i p_i D[., ., i].
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> expected(
      const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& p)
      const {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(num_voxels(),
                                                              beamlets_);
    for (Index v = 0; v < num_voxels(); ++v)
      out.row(v) = (voxel(v) * p).transpose();
    return out;
  }

  const Storage& values() const { return values_; }
  Storage& values() { return values_; }
  const Scalar* data() const { return values_.data(); }
  Scalar* data() { return values_.data(); }

  /// Throws ShapeError/RangeError for negative or non-finite entries.
  void validate() const {
    if (!values_.allFinite())
      throw RangeError("dose tensor contains non-finite entries");
    if (values_.size() > 0 && values_.minCoeff() < Scalar(0))
      throw RangeError("dose tensor contains negative entries");
  }

  friend bool operator==(const DoseTensor& a, const DoseTensor& b) {
    return a.beamlets_ == b.beamlets_ && a.phases_ == b.phases_ &&
           a.values_.rows() == b.values_.rows() &&
           a.values_.cols() == b.values_.cols() && a.values_ == b.values_;
  }

 private:
  Index beamlets_ = 0;
  Index phases_ = 0;
  Storage values_;
};

using DoseTensord = DoseTensor<double>;

/// P = { p~ : lo <= p~ <= hi, sum p~ = 1 } with lo = max(0, p - lower_dev)
/// and hi = min(1, p + upper_dev).
class UncertaintySet {
 public:
  UncertaintySet() = default;
  /// Throws ConfigError for an invalid nominal vector or negative deviation,
  /// InfeasibleSetError when the clamped box misses the simplex.
  UncertaintySet(VectorXd nominal, VectorXd lower_dev, VectorXd upper_dev);

  static UncertaintySet singleton(VectorXd nominal);
  static UncertaintySet symmetric(VectorXd nominal, double dev);

  Index num_phases() const { return nominal_.size(); }
  const VectorXd& nominal() const { return nominal_; }
  const VectorXd& lower_dev() const { return lower_dev_; }
  const VectorXd& upper_dev() const { return upper_dev_; }
  VectorXd lower() const;
  VectorXd upper() const;
  /// p - lo and hi - p: the deviations after clamping to [0, 1].
  VectorXd effective_lower_dev() const { return nominal_ - lower(); }
  VectorXd effective_upper_dev() const { return upper() - nominal_; }

  bool is_singleton() const;
  bool contains(const VectorXd& p, double tol = 1e-12) const;
  /// All vertices of P, deduplicated. Exponential in |I|.
  std::vector<VectorXd> vertices() const;

 private:
  VectorXd nominal_;
  VectorXd lower_dev_;
  VectorXd upper_dev_;
};

enum class Variant { fmo, rfmo, dao, dao_c, rdao, rdao_c };
enum class Allocation { decision_based, preallocated };
enum class Symmetry { none, global_sort, per_angle_sort, two_angle_sort };

bool is_robust(Variant v);
bool is_dao(Variant v);
bool has_continuity(Variant v);
std::string to_string(Variant v);
std::string to_string(Allocation a);
std::string to_string(Symmetry s);
/// Accepts the names produced by to_string (case-insensitive, '_' or '-').
Variant parse_variant(const std::string& s);
Allocation parse_allocation(const std::string& s);
Symmetry parse_symmetry(const std::string& s);

struct PlanningConfig {
  double weight_target = 0.7;
  double weight_healthy = 0.3;
  /// Big-M for the uniformity rows; unset means data-driven default.
  std::optional<double> big_m;
  double alpha = 0.4;
  Variant variant = Variant::rdao;
  Allocation allocation = Allocation::decision_based;
  Symmetry symmetry = Symmetry::two_angle_sort;
  /// Preallocated mode: preallocation[a][theta] in {0,1}. Empty means the
  /// block layout (first |A|/|Theta| apertures to angle 1, ...).
  std::vector<std::vector<int>> preallocation;

  /// Throws ConfigError for out-of-range values or incompatible modes.
  void validate(const BeamGeometry& geom) const;
  /// Explicit or default preallocation matrix (|A| x |Theta|).
  std::vector<std::vector<int>> allocation_matrix(
      const BeamGeometry& geom) const;
};

/// Two-angle sort when |Theta| = 2, global sort otherwise (decision-based
/// allocation).
Symmetry default_symmetry(const BeamGeometry& geom, Allocation allocation);

/// Everything a model builder needs about one planning instance.
struct Problem {
  const DoseTensord* dose = nullptr;
  StructureSet structures;
  BeamGeometry geometry;
  UncertaintySet uncertainty;

  /// Throws ShapeError when tensor, structures and geometry disagree.
  void validate() const;
};

/// Per-voxel objective weight c_s / |V_s| (zero for voxels outside all
/// structures).
VectorXd objective_weights(const StructureSet& s, Index num_voxels,
                           const PlanningConfig& config);

/// Per-phase dose sum_b D[v, b, i] w_b for one voxel.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> phase_doses(
    const DoseTensor<Scalar>& dose, Index v,
    const Eigen::MatrixBase<Derived>& fluence) {
  return dose.voxel(v).transpose() * fluence;
}

/// Realized dose sum_b sum_i p_i D[v, b, i] w_b. Throws ShapeError on
/// mismatched dimensions.
double dose_to_voxel(Index v, const VectorXd& fluence, const VectorXd& p,
                     const DoseTensord& dose);

/// min over p~ in P of dose_to_voxel. Vertex enumeration for |I| <= 6,
/// exact greedy LP otherwise.
double worst_case_dose(Index v, const VectorXd& fluence,
                       const UncertaintySet& u, const DoseTensord& dose);

/// Minimizer of p . d over P (used by worst_case_dose and the evaluator).
VectorXd worst_case_proportions(const VectorXd& phase_dose,
                                const UncertaintySet& u);

}  // namespace rdao
